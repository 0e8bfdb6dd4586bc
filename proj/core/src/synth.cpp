#include "dgd/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "dgd/dataset.hpp"
#include "dgd/error.hpp"
#include "dgd/image.hpp"
#include "dgd/io.hpp"
#include "dgd/rasterizer.hpp"

namespace dgd {

namespace {

using nlohmann::json;

constexpr std::array<std::array<double, 3>, 2> kBaseColor{{{0.85, 0.25, 0.2}, {0.2, 0.35, 0.85}}};

std::string frame_name(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", split, i);
  return buf;
}

std::vector<double> vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d to_vec3(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw Error(Errc::ParseError, "expected 3 numbers");
  return {v[0], v[1], v[2]};
}

}  // namespace

Eigen::Vector3d SynthTruth::motion(double t) const { return t * (config.moving_end - config.moving_start); }

GaussianSet<double> SynthTruth::at(double t) const {
  GaussianSet<double> s = scene;
  const Eigen::Vector3d d = motion(t);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (cluster[i] != 0) continue;
    for (int k = 0; k < 3; ++k) s.positions[3 * i + k] += d[k];
  }
  return s;
}

std::vector<std::size_t> SynthTruth::members(int cluster_id) const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    if (cluster[i] == cluster_id) ids.push_back(i);
  }
  return ids;
}

std::vector<double> SynthTruth::mean_feature(int cluster_id) const {
  std::vector<double> mean(scene.feature_dim, 0.0);
  const auto ids = members(cluster_id);
  for (std::size_t i : ids) {
    for (std::size_t c = 0; c < scene.feature_dim; ++c) mean[c] += scene.feature(i)[c];
  }
  for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(ids.size(), 1));
  return mean;
}

Camera synth_camera(const SynthConfig& config, double azimuth_deg) {
  const double deg = std::acos(-1.0) / 180.0;
  const double az = azimuth_deg * deg;
  const double el = config.elevation_deg * deg;
  const Eigen::Vector3d eye =
      config.orbit_radius * Eigen::Vector3d(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  return look_at(eye, Eigen::Vector3d::Zero(), config.focal, config.focal, config.width, config.height);
}

SynthTruth make_two_blob(const SynthConfig& config) {
  if (config.gaussians_per_cluster == 0 || config.train_frames < 2 || config.feature_dim < 2) {
    throw Error(Errc::InvalidArgument, "two-blob needs >= 1 Gaussian per cluster, >= 2 frames and C >= 2");
  }
  SynthTruth truth;
  truth.config = config;
  const std::size_t n = 2 * config.gaussians_per_cluster;
  const std::size_t dim = config.feature_dim;
  GaussianSet<double>& s = truth.scene;
  s = GaussianSet<double>(n, dim);
  truth.cluster.resize(n);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double log_scale = std::log(config.gaussian_scale);
  const double opacity_logit = logit(config.opacity);

  for (std::size_t i = 0; i < n; ++i) {
    const int c = i < config.gaussians_per_cluster ? 0 : 1;
    truth.cluster[i] = c;
    const Eigen::Vector3d center = c == 0 ? config.moving_start : config.static_center;
    Eigen::Vector3d p;
    do {
      p = {sym(rng), sym(rng), sym(rng)};
    } while (p.squaredNorm() > 1.0);
    p = center + config.cluster_radius * p;
    Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
    q.normalize();
    for (int k = 0; k < 3; ++k) {
      s.positions[3 * i + k] = p[k];
      s.log_scales[3 * i + k] = log_scale;
      const double col = std::clamp(kBaseColor[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] +
                                        0.05 * sym(rng), 0.01, 0.99);
      s.color_logits[3 * i + k] = logit(col);
    }
    for (int k = 0; k < 4; ++k) s.rotations[4 * i + k] = q[k];
    s.opacity_logits[i] = opacity_logit;
    auto f = s.feature(i);
    for (std::size_t k = 0; k < dim; ++k) {
      f[k] = (k == static_cast<std::size_t>(c) ? 1.0 : 0.0) + config.feature_noise * normal(rng);
    }
  }

  // Azimuths follow a golden-ratio sequence instead of the time order. With a
  // monotone sweep a static point can explain the moving blob in every frame.
  const double range = config.azimuth_range_deg;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  const auto azimuth = [&](double offset, std::size_t k) {
    const double v = offset + golden * static_cast<double>(k);
    return -range + 2.0 * range * (v - std::floor(v));
  };
  const std::size_t nt = config.train_frames;
  for (std::size_t i = 0; i < nt; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(nt - 1);
    truth.train.push_back({frame_name("train", i), synth_camera(config, azimuth(0.5, i)), u});
  }
  for (std::size_t j = 0; j < config.test_frames; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(config.test_frames);
    truth.test.push_back({frame_name("test", j), synth_camera(config, azimuth(0.25, j)), u});
  }
  return truth;
}

Mask truth_mask(const SynthTruth& truth, int cluster_id, const Camera& camera, double t,
                double mask_alpha_threshold) {
  const auto ids = truth.members(cluster_id);
  return render_segmentation_mask<double>(truth.at(t), nullptr, ids, camera, 0.0, mask_alpha_threshold);
}

void write_synth_dataset(const std::filesystem::path& dir, const SynthTruth& truth) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"images", "features", "masks/A", "masks/B"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + (dir / sub).string() + ": " + ec.message());
  }
  const std::size_t dim = truth.scene.feature_dim;
  RenderOptions opts;

  const auto write_split = [&](const std::vector<SynthFrame>& frames, const char* manifest_name) {
    DatasetManifest manifest;
    manifest.pointcloud = "points.ply";
    for (const SynthFrame& f : frames) {
      const GaussianSet<double> scene = truth.at(f.time);
      const RenderOutput<double> out = render(scene, f.camera, opts);
      const int w = f.camera.width;
      const int h = f.camera.height;
      write_png(dir / "images" / (f.name + ".png"), to_image<double>(out.color, w, h, 3));
      FeatureMap fm{h, w, dim, std::vector<float>(out.feature.begin(), out.feature.end())};
      write_feature_map(dir / "features" / (f.name + ".dgdf"), fm);
      write_mask(dir / "masks" / "A" / (f.name + ".png"), truth_mask(truth, 0, f.camera, f.time));
      write_mask(dir / "masks" / "B" / (f.name + ".png"), truth_mask(truth, 1, f.camera, f.time));
      manifest.frames.push_back({"images/" + f.name + ".png", "features/" + f.name + ".dgdf", f.time, f.camera});
    }
    write_manifest(dir / manifest_name, manifest);
  };
  write_split(truth.train, "train.json");
  write_split(truth.test, "test.json");

  std::mt19937_64 rng(truth.config.seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> noise(0.0, truth.config.pointcloud_noise);
  PointCloud cloud;
  for (std::size_t i = 0; i < truth.scene.size(); ++i) {
    const Eigen::Vector3d p = truth.scene.position(i);
    const Eigen::Vector3d c = truth.scene.color(i);
    for (int k = 0; k < 3; ++k) {
      cloud.points.push_back(p[k] + noise(rng));
      cloud.colors.push_back(c[k]);
    }
  }
  write_pointcloud_ply(dir / "points.ply", cloud);

  for (int c = 0; c < 2; ++c) {
    const auto mean = truth.mean_feature(c);
    const std::vector<float> q(mean.begin(), mean.end());
    write_query_embedding(dir / (c == 0 ? "query_A.dgdq" : "query_B.dgdq"), q);
  }

  const SynthConfig& cfg = truth.config;
  json doc;
  doc["preset"] = "two-blob";
  doc["seed"] = cfg.seed;
  doc["gaussians"] = truth.scene.size();
  doc["feature_dim"] = dim;
  doc["config"] = {{"gaussians_per_cluster", cfg.gaussians_per_cluster},
                   {"train_frames", cfg.train_frames},
                   {"test_frames", cfg.test_frames},
                   {"width", cfg.width},
                   {"height", cfg.height},
                   {"focal", cfg.focal},
                   {"orbit_radius", cfg.orbit_radius},
                   {"azimuth_range_deg", cfg.azimuth_range_deg},
                   {"elevation_deg", cfg.elevation_deg},
                   {"feature_dim", cfg.feature_dim},
                   {"cluster_radius", cfg.cluster_radius},
                   {"gaussian_scale", cfg.gaussian_scale},
                   {"opacity", cfg.opacity},
                   {"feature_noise", cfg.feature_noise},
                   {"pointcloud_noise", cfg.pointcloud_noise},
                   {"moving_start", vec(cfg.moving_start)},
                   {"moving_end", vec(cfg.moving_end)},
                   {"static_center", vec(cfg.static_center)}};
  doc["clusters"] = json::array();
  for (int c = 0; c < 2; ++c) {
    json cl;
    cl["name"] = c == 0 ? "A" : "B";
    cl["moving"] = c == 0;
    cl["path_start"] = vec(c == 0 ? cfg.moving_start : cfg.static_center);
    cl["path_end"] = vec(c == 0 ? cfg.moving_end : cfg.static_center);
    cl["ids"] = truth.members(c);
    cl["mean_feature"] = truth.mean_feature(c);
    doc["clusters"].push_back(cl);
  }
  doc["membership"] = truth.cluster;
  doc["positions_t0"] = truth.scene.positions;

  std::ofstream out(dir / "truth.json");
  if (!out) throw Error(Errc::IoError, "cannot write " + (dir / "truth.json").string());
  out << doc.dump(1) << '\n';
  if (!out) throw Error(Errc::IoError, "failed writing truth.json");
}

SynthTruth read_synth_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  try {
    const json doc = json::parse(in);
    const json& c = doc.at("config");
    SynthConfig cfg;
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.gaussians_per_cluster = c.at("gaussians_per_cluster").get<std::size_t>();
    cfg.train_frames = c.at("train_frames").get<std::size_t>();
    cfg.test_frames = c.at("test_frames").get<std::size_t>();
    cfg.width = c.at("width").get<int>();
    cfg.height = c.at("height").get<int>();
    cfg.focal = c.at("focal").get<double>();
    cfg.orbit_radius = c.at("orbit_radius").get<double>();
    cfg.azimuth_range_deg = c.at("azimuth_range_deg").get<double>();
    cfg.elevation_deg = c.at("elevation_deg").get<double>();
    cfg.feature_dim = c.at("feature_dim").get<std::size_t>();
    cfg.cluster_radius = c.at("cluster_radius").get<double>();
    cfg.gaussian_scale = c.at("gaussian_scale").get<double>();
    cfg.opacity = c.at("opacity").get<double>();
    cfg.feature_noise = c.at("feature_noise").get<double>();
    cfg.pointcloud_noise = c.at("pointcloud_noise").get<double>();
    cfg.moving_start = to_vec3(c.at("moving_start"));
    cfg.moving_end = to_vec3(c.at("moving_end"));
    cfg.static_center = to_vec3(c.at("static_center"));
    SynthTruth truth = make_two_blob(cfg);
    if (doc.at("membership").get<std::vector<int>>() != truth.cluster ||
        doc.at("positions_t0").get<std::vector<double>>() != truth.scene.positions) {
      throw Error(Errc::ParseError, path.string() + ": truth does not match its generator settings");
    }
    return truth;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace dgd
