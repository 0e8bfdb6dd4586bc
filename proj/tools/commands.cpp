#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgd/dataset.hpp"
#include "dgd/error.hpp"
#include "dgd/gradcheck.hpp"
#include "dgd/image.hpp"
#include "dgd/io.hpp"
#include "dgd/rasterizer.hpp"
#include "dgd/semantics.hpp"
#include "dgd/service.hpp"
#include "dgd/synth.hpp"
#include "dgd/trainer.hpp"
#include "dgd/view.hpp"

namespace dgd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct SynthArgs {
  std::string out;
  std::string preset = "two-blob";
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data;
  std::string out;
  long iters = 40000;
  long warmup = 3000;
  std::size_t feature_dim = 0;
  double lambda_f = 1.0;
  std::uint64_t seed = 0;
  std::string precision = "f32";
  long snapshot_every = 0;
  long ast_end = -1;
  long log_every = 100;
  int depth = 8;
  int width = 256;
  int position_bands = 10;
  int time_bands = 6;
  std::size_t init_count = 2000;
  bool no_densify = false;
};

struct ViewArgs {
  std::string data;
  int camera_index = -1;
  std::vector<double> orbit;  // azimuth elevation radius
  int width = 512;
  int height = 512;
  double fov = 50.0;
};

struct RenderArgs {
  std::string ckpt;
  ViewArgs view;
  double time = 0.0;
  std::string out = "render.png";
  std::string channels = "color";
};

struct SegmentArgs {
  std::string ckpt;
  std::string data;
  std::string query_embedding;
  std::vector<int> click;
  int camera_index = 0;
  double time = 0.0;
  double theta = kDefaultTheta;
  std::string out_masks;
  std::vector<double> times;
};

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string masks;
  std::string query_embedding;
  std::vector<int> click;
  int camera_index = 0;
  double time = 0.0;
  double theta = kDefaultTheta;
  std::string scene = "scene";
};

struct GradcheckArgs {
  std::string size = "tiny";
  std::string precision = "f64";
  std::uint64_t seed = 7;
};

struct BenchArgs {
  std::string ckpt;
  ViewArgs view;
  int frames = 100;
  double time = 0.5;
  bool brute = false;
};

struct ServeArgs {
  std::string ckpt;
  std::string data;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t workers = 0;
};

std::vector<NamedCamera> manifest_cameras(const std::string& data) {
  std::vector<NamedCamera> cams;
  if (data.empty()) return cams;
  const DatasetManifest m = read_manifest(data);
  for (const FrameRecord& r : m.frames) cams.push_back({r.image, r.camera, r.time});
  return cams;
}

Camera resolve_view(const ViewArgs& v) {
  if (v.camera_index >= 0) {
    if (v.data.empty()) throw Error(Errc::InvalidArgument, "--camera-index needs --data <manifest>");
    const auto cams = manifest_cameras(v.data);
    if (static_cast<std::size_t>(v.camera_index) >= cams.size()) {
      throw Error(Errc::InvalidArgument, "camera index " + std::to_string(v.camera_index) + " out of range (" +
                                             std::to_string(cams.size()) + " cameras)");
    }
    return cams[static_cast<std::size_t>(v.camera_index)].camera;
  }
  OrbitView o;
  if (!v.orbit.empty()) {
    if (v.orbit.size() != 3) throw Error(Errc::InvalidArgument, "--orbit takes azimuth elevation radius");
    o.azimuth_deg = v.orbit[0];
    o.elevation_deg = v.orbit[1];
    o.radius = v.orbit[2];
  }
  o.width = v.width;
  o.height = v.height;
  o.fov_deg = v.fov;
  if (o.width < 1 || o.height < 1) throw Error(Errc::InvalidArgument, "image size must be positive");
  return orbit_camera(o);
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::TimeOutOfRange, "time " + std::to_string(t) + " outside [0, 1]");
}

void add_view_options(CLI::App* cmd, ViewArgs& v) {
  cmd->add_option("--data", v.data, "Dataset manifest supplying cameras");
  cmd->add_option("--camera-index", v.camera_index, "Use camera i of --data");
  cmd->add_option("--orbit", v.orbit, "Orbit pose: azimuth elevation radius (degrees, world units)")->expected(3);
  cmd->add_option("--width", v.width, "Orbit image width");
  cmd->add_option("--height", v.height, "Orbit image height");
  cmd->add_option("--fov", v.fov, "Orbit horizontal field of view (degrees)");
}

// synth ----------------------------------------------------------------------

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.preset != "two-blob") throw Error(Errc::InvalidArgument, "unknown preset '" + a.preset + "'");
  SynthConfig cfg;
  cfg.seed = a.seed;
  const SynthTruth truth = make_two_blob(cfg);
  write_synth_dataset(a.out, truth);
  out << "synth: " << truth.scene.size() << " Gaussians, " << truth.train.size() << " train + " << truth.test.size()
      << " test frames, C=" << truth.scene.feature_dim << " -> " << a.out << '\n';
  return 0;
}

// train ----------------------------------------------------------------------

template <typename T>
int train_impl(const TrainArgs& a, const Dataset& ds, std::size_t feature_dim, double lambda_f, std::ostream& out) {
  GaussianSet<T> scene;
  if (ds.pointcloud) {
    scene = init_from_pointcloud<T>(*ds.pointcloud, feature_dim, a.seed);
  } else {
    Box box{Eigen::Vector3d::Constant(-1.0), Eigen::Vector3d::Constant(1.0)};
    scene = init_random<T>(a.init_count, box, feature_dim, a.seed);
  }
  DeformationConfig dcfg;
  dcfg.depth = a.depth;
  dcfg.width = a.width;
  dcfg.position.num_bands = a.position_bands;
  dcfg.time.num_bands = a.time_bands;
  DeformationField<T> field(dcfg, a.seed + 1);

  TrainConfig cfg;
  cfg.total_iterations = a.iters;
  cfg.warmup_iterations = a.warmup;
  cfg.feature_loss_weight = lambda_f;
  cfg.deformation_lr.total_steps = std::max(1L, a.iters - a.warmup);
  cfg.seed = a.seed;
  cfg.snapshot_every = a.snapshot_every;
  // The default anneal ends halfway through a 40K run; shorter runs keep that ratio.
  cfg.ast.anneal_end_iteration = a.ast_end >= 0 ? a.ast_end : std::max(1L, a.iters / 2);
  cfg.densify.enabled = !a.no_densify;
  cfg.validate();

  fs::create_directories(a.out);
  Trainer<T> trainer(std::move(scene), std::move(field), cfg, scene_extent(ds.frames));
  const auto start = std::chrono::steady_clock::now();
  std::vector<json> log;
  const auto on_step = [&](const StepRecord& r) {
    if (r.iteration % a.log_every != 0 && r.iteration != a.iters) return;
    std::ostringstream line;
    line << "iter " << r.iteration << " loss " << r.loss << " color " << r.color_loss << " feature " << r.feature_loss
         << " N " << r.gaussians << " lr " << r.position_lr << " dlr " << r.deformation_lr;
    out << line.str() << '\n' << std::flush;
    log.push_back({{"iteration", r.iteration}, {"loss", r.loss}, {"color", r.color_loss}, {"feature", r.feature_loss},
                   {"gaussians", r.gaussians}, {"position_lr", r.position_lr}, {"deformation_lr", r.deformation_lr}});
  };
  const auto on_snapshot = [&](const Trainer<T>& t) {
    char name[48];
    std::snprintf(name, sizeof name, "iter_%06ld.dgdc", t.iteration());
    fs::create_directories(fs::path(a.out) / "snapshots");
    save_checkpoint(fs::path(a.out) / "snapshots" / name, t.scene(), t.field(), static_cast<std::uint64_t>(t.iteration()));
  };
  const TrainReport rep = trainer.run(ds.frames, on_step, on_snapshot);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path ckpt = fs::path(a.out) / "checkpoint.dgdc";
  save_checkpoint(ckpt, trainer.scene(), trainer.field(), static_cast<std::uint64_t>(trainer.iteration()));
  json report{{"iterations", a.iters},
              {"warmup", a.warmup},
              {"precision", a.precision},
              {"lambda_f", lambda_f},
              {"feature_dim", feature_dim},
              {"seed", a.seed},
              {"seconds", seconds},
              {"warmup_seconds", rep.warmup_seconds},
              {"joint_seconds", rep.joint_seconds},
              {"densify_seconds", rep.densify_seconds},
              {"final_gaussians", trainer.scene().size()},
              {"log", log}};
  std::ofstream(fs::path(a.out) / "report.json") << report.dump(1) << '\n';
  out << "train: " << a.iters << " iterations in " << std::fixed << std::setprecision(1) << seconds << " s, "
      << trainer.scene().size() << " Gaussians -> " << ckpt.string() << '\n';
  out.unsetf(std::ios::fixed);
  return 0;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Dataset ds = load_dataset(a.data);
  std::size_t dim = ds.feature_dim;
  double lambda_f = a.lambda_f;
  if (dim == 0) {
    dim = a.feature_dim > 0 ? a.feature_dim : 32;
    lambda_f = 0.0;  // nothing to supervise the features with
  } else if (a.feature_dim > 0 && a.feature_dim != dim) {
    throw Error(Errc::DimensionMismatch, "--feature-dim " + std::to_string(a.feature_dim) + " but dataset has C=" +
                                             std::to_string(dim));
  }
  if (a.precision == "f32") return train_impl<float>(a, ds, dim, lambda_f, out);
  if (a.precision == "f64") return train_impl<double>(a, ds, dim, lambda_f, out);
  throw Error(Errc::InvalidArgument, "--precision must be f32 or f64");
}

// render ---------------------------------------------------------------------

int cmd_render(const RenderArgs& a, std::ostream& out) {
  check_time(a.time);
  const auto channels = parse_channels(a.channels);
  if (!channels) throw Error(Errc::InvalidArgument, "--channels must be color, feature-pca or alpha");
  const Checkpoint<float> ck = load_checkpoint<float>(a.ckpt);
  const Camera cam = resolve_view(a.view);
  write_png(a.out, render_view<float>(ck.scene, &ck.field, cam, a.time, *channels));
  out << "render: " << cam.width << "x" << cam.height << " " << a.channels << " t=" << a.time << " -> " << a.out << '\n';
  return 0;
}

// segment / eval -------------------------------------------------------------

SelectionResult<float> run_query(const Checkpoint<float>& ck, const std::string& embedding_path,
                                 const std::vector<int>& click, const Camera* click_camera, double time,
                                 double theta) {
  if (!embedding_path.empty() == !click.empty()) {
    throw Error(Errc::InvalidArgument, "give exactly one of --query-embedding or --click");
  }
  if (!embedding_path.empty()) {
    const auto q = read_query_embedding(embedding_path);
    if (q.size() != ck.scene.feature_dim) {
      throw Error(Errc::DimensionMismatch, "query has C=" + std::to_string(q.size()) + ", scene has C=" +
                                               std::to_string(ck.scene.feature_dim));
    }
    return select_by_embedding<float>(ck.scene, q, theta);
  }
  if (click.size() != 2) throw Error(Errc::InvalidArgument, "--click takes x y");
  check_time(time);
  return select_by_click<float>(ck.scene, &ck.field, *click_camera, time, click[0], click[1], theta);
}

std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t_%.4f.png", t);
  return buf;
}

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  const Checkpoint<float> ck = load_checkpoint<float>(a.ckpt);
  ViewArgs v;
  v.data = a.data;
  v.camera_index = a.camera_index;
  const Camera cam = resolve_view(v);
  const SelectionResult<float> sel = run_query(ck, a.query_embedding, a.click, &cam, a.time, a.theta);
  out << "segment: " << sel.gaussian_ids.size() << " Gaussians selected (theta " << a.theta << "), token "
      << selection_token(sel.gaussian_ids) << '\n';
  std::vector<double> times = a.times;
  if (times.empty()) times.push_back(a.time);
  if (!a.out_masks.empty()) fs::create_directories(a.out_masks);
  for (double t : times) {
    check_time(t);
    const Mask m = render_segmentation_mask<float>(ck.scene, &ck.field, sel.gaussian_ids, cam, t);
    if (!a.out_masks.empty()) write_mask(fs::path(a.out_masks) / time_label(t), m);
    out << "  t=" << t << " mask pixels " << m.count() << '\n';
  }
  return 0;
}

int cmd_eval_miou(const EvalArgs& a, std::ostream& out) {
  const Checkpoint<float> ck = load_checkpoint<float>(a.ckpt);
  const DatasetManifest m = read_manifest(a.data);
  std::optional<Camera> click_cam;
  if (!a.click.empty()) {
    if (a.camera_index < 0 || static_cast<std::size_t>(a.camera_index) >= m.frames.size()) {
      throw Error(Errc::InvalidArgument, "camera index out of range");
    }
    click_cam = m.frames[static_cast<std::size_t>(a.camera_index)].camera;
  }
  const SelectionResult<float> sel =
      run_query(ck, a.query_embedding, a.click, click_cam ? &*click_cam : nullptr, a.time, a.theta);
  std::vector<Mask> pred;
  std::vector<Mask> truth;
  for (const FrameRecord& r : m.frames) {
    const fs::path mask_path = fs::path(a.masks) / fs::path(r.image).filename();
    truth.push_back(read_mask(mask_path));
    pred.push_back(render_segmentation_mask<float>(ck.scene, &ck.field, sel.gaussian_ids, r.camera, r.time));
  }
  const double score = miou(pred, truth);
  out << "| Method | " << a.scene << " |\n|---|---|\n| DGD | " << std::fixed << std::setprecision(3) << score
      << " |\n";
  out.unsetf(std::ios::fixed);
  out << "frames " << m.frames.size() << ", selected " << sel.gaussian_ids.size() << " Gaussians, mIoU " << score
      << '\n';
  return 0;
}

// gradcheck ------------------------------------------------------------------

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (a.precision != "f64") throw Error(Errc::InvalidArgument, "gradcheck runs in f64 only");
  const GradcheckProblem p = make_gradcheck_problem(a.size, a.seed);
  bool ok = true;
  for (const bool deformed : {false, true}) {
    const double t = 0.5;
    const auto start = std::chrono::steady_clock::now();
    const GradcheckReport rep = gradcheck(p.scene, deformed ? &p.field : nullptr, p.frame, t);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << (deformed ? "deformed (t=0.5)" : "static") << " [" << a.size << ", " << secs << " s]\n";
    for (const GroupError& g : rep.groups) {
      out << "  " << std::left << std::setw(16) << g.group << std::right << " n=" << std::setw(5) << g.checked
          << "  max rel err " << std::scientific << std::setprecision(3) << g.max_relative_error
          << std::defaultfloat << "  " << (g.passed ? "ok" : "FAIL") << '\n';
    }
    ok = ok && rep.passed();
  }
  out << "gradcheck: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

// bench ----------------------------------------------------------------------

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  check_time(a.time);
  if (a.frames < 1) throw Error(Errc::InvalidArgument, "--frames must be >= 1");
  const Checkpoint<float> ck = load_checkpoint<float>(a.ckpt);
  const Camera cam = resolve_view(a.view);
  const GaussianSet<float> deformed = apply_deformation(ck.scene, ck.field, static_cast<float>(a.time));
  const auto time_frames = [&](auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < a.frames; ++i) fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() / a.frames;
  };
  const double ms = time_frames([&] { (void)render(deformed, cam); });
  const double ms_deform = time_frames([&] { (void)apply_deformation(ck.scene, ck.field, static_cast<float>(a.time)); });
  const std::size_t n = ck.scene.size();
  const std::size_t per_gaussian = 3 + 4 + 3 + 1 + 3 + ck.scene.feature_dim;
  const double scene_mb = static_cast<double>(n * per_gaussian * sizeof(float)) / (1024.0 * 1024.0);
  const double mlp_mb = static_cast<double>(ck.field.parameter_count() * sizeof(float)) / (1024.0 * 1024.0);
  const double buffers_mb =
      static_cast<double>(cam.pixel_count() * (4 + ck.scene.feature_dim) * sizeof(float)) / (1024.0 * 1024.0);
  out << std::fixed << std::setprecision(2);
  out << "| Gaussians | Resolution | Render ms/frame | FPS | Deform+render FPS | Memory (MB) |\n";
  out << "|---|---|---|---|---|---|\n";
  out << "| " << n << " | " << cam.width << "x" << cam.height << " | " << ms << " | " << 1000.0 / ms << " | "
      << 1000.0 / (ms + ms_deform) << " | " << scene_mb + mlp_mb + buffers_mb << " |\n";
  if (a.brute) {
    const double brute = time_frames([&] { (void)render_brute_force(deformed, cam); });
    out << "brute-force oracle: " << brute << " ms/frame (" << brute / ms << "x slower)\n";
  }
  out.unsetf(std::ios::fixed);
  return 0;
}

// serve ----------------------------------------------------------------------

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  ServiceConfig cfg;
  cfg.host = a.host;
  cfg.workers = a.workers;
  cfg.cameras = manifest_cameras(a.data);
  Service service(load_checkpoint<float>(a.ckpt), cfg);
  const int port = service.bind(a.port);
  if (port < 0) throw Error(Errc::IoError, "cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "serve: listening on http://" << a.host << ":" << port << '\n' << std::flush;
  return service.serve() ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic semantic Gaussian splatting"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  c_synth->add_option("out_dir", synth.out)->required();
  c_synth->add_option("--preset", synth.preset, "Scene preset")->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Optimise Gaussians and the deformation network");
  c_train->add_option("data", train.data, "Dataset manifest")->required();
  c_train->add_option("out", train.out, "Output directory")->required();
  c_train->add_option("--iters", train.iters)->capture_default_str();
  c_train->add_option("--warmup", train.warmup)->capture_default_str();
  c_train->add_option("--feature-dim", train.feature_dim, "Must match the dataset when it has features (default 32 without)");
  c_train->add_option("--lambda-f", train.lambda_f)->capture_default_str();
  c_train->add_option("--seed", train.seed)->capture_default_str();
  c_train->add_option("--precision", train.precision, "f32 or f64")->capture_default_str();
  c_train->add_option("--snapshot-every", train.snapshot_every)->capture_default_str();
  c_train->add_option("--ast-end", train.ast_end, "Iteration where the time jitter reaches zero");
  c_train->add_option("--log-every", train.log_every)->capture_default_str();
  c_train->add_option("--mlp-depth", train.depth)->capture_default_str();
  c_train->add_option("--mlp-width", train.width)->capture_default_str();
  c_train->add_option("--position-bands", train.position_bands)->capture_default_str();
  c_train->add_option("--time-bands", train.time_bands)->capture_default_str();
  c_train->add_option("--init-count", train.init_count, "Random init size without a point cloud")
      ->capture_default_str();
  c_train->add_flag("--no-densify", train.no_densify);

  RenderArgs rnd;
  auto* c_render = app.add_subcommand("render", "Render a checkpoint");
  c_render->add_option("ckpt", rnd.ckpt)->required();
  add_view_options(c_render, rnd.view);
  c_render->add_option("--time", rnd.time)->capture_default_str();
  c_render->add_option("--out", rnd.out)->capture_default_str();
  c_render->add_option("--channels", rnd.channels, "color, feature-pca or alpha")->capture_default_str();

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Select Gaussians and render object masks");
  c_seg->add_option("ckpt", seg.ckpt)->required();
  c_seg->add_option("--data", seg.data, "Dataset manifest supplying cameras")->required();
  c_seg->add_option("--query-embedding", seg.query_embedding, "DGDQ file");
  c_seg->add_option("--click", seg.click, "Pixel x y")->expected(2);
  c_seg->add_option("--camera-index", seg.camera_index)->capture_default_str();
  c_seg->add_option("--time", seg.time, "Time of the click")->capture_default_str();
  c_seg->add_option("--theta", seg.theta)->capture_default_str();
  c_seg->add_option("--out-masks", seg.out_masks);
  c_seg->add_option("--times", seg.times, "Mask times")->delimiter(',');

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval-miou", "Mean IoU of selection masks against reference masks");
  c_eval->add_option("ckpt", ev.ckpt)->required();
  c_eval->add_option("--data", ev.data, "Manifest whose frames are evaluated")->required();
  c_eval->add_option("--masks", ev.masks, "Directory with one mask per frame image name")->required();
  c_eval->add_option("--query-embedding", ev.query_embedding);
  c_eval->add_option("--click", ev.click)->expected(2);
  c_eval->add_option("--camera-index", ev.camera_index)->capture_default_str();
  c_eval->add_option("--time", ev.time)->capture_default_str();
  c_eval->add_option("--theta", ev.theta)->capture_default_str();
  c_eval->add_option("--scene", ev.scene, "Column label")->capture_default_str();

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  c_gc->add_option("--size", gc.size, "tiny or small")->capture_default_str();
  c_gc->add_option("--precision", gc.precision)->capture_default_str();
  c_gc->add_option("--seed", gc.seed)->capture_default_str();

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Render throughput");
  c_bench->add_option("ckpt", bench.ckpt)->required();
  add_view_options(c_bench, bench.view);
  c_bench->add_option("--frames", bench.frames)->capture_default_str();
  c_bench->add_option("--time", bench.time)->capture_default_str();
  c_bench->add_flag("--brute", bench.brute, "Also time the brute-force oracle");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "HTTP render and selection service");
  c_serve->add_option("ckpt", serve.ckpt)->required();
  c_serve->add_option("--data", serve.data, "Manifest supplying the camera list");
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port)->capture_default_str();
  c_serve->add_option("--workers", serve.workers, "Render worker threads (0: hardware)")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "dgd-error: InvalidArgument: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*c_synth) return cmd_synth(synth, out);
    if (*c_train) return cmd_train(train, out);
    if (*c_render) return cmd_render(rnd, out);
    if (*c_seg) return cmd_segment(seg, out);
    if (*c_eval) return cmd_eval_miou(ev, out);
    if (*c_gc) return cmd_gradcheck(gc, out);
    if (*c_bench) return cmd_bench(bench, out);
    if (*c_serve) return cmd_serve(serve, out);
  } catch (const Error& e) {
    err << "dgd-error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "dgd-error: IoError: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "dgd-error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace dgd::cli
