#include <doctest.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "dgd/dataset.hpp"
#include "dgd/image.hpp"
#include "dgd/io.hpp"
#include "dgd/synth.hpp"
#include "dgd/view.hpp"
#include "synth_fixture.hpp"
#include "test_util.hpp"

using namespace dgd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run dgd_run(std::vector<std::string> args) {
  args.insert(args.begin(), "dgd");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synth default preset") {
  test::TempDir dir("cli");
  const auto r = dgd_run({"synth", (dir / "a").string(), "--seed", "4"});
  REQUIRE(r.code == 0);
  const auto m = read_manifest(dir / "a/train.json");
  CHECK(m.frames.size() == 24);
  CHECK(read_manifest(dir / "a/test.json").frames.size() == 6);
  const auto truth = read_synth_truth(dir / "a/truth.json");
  CHECK(truth.scene.size() == 512);
  CHECK(truth.members(0).size() == 256);
  const auto ds = load_dataset(dir / "a/train.json");
  CHECK(ds.feature_dim == 8);
  REQUIRE(ds.pointcloud.has_value());
  CHECK(ds.pointcloud->size() == 512);
  CHECK(read_query_embedding(dir / "a/query_A.dgdq").size() == 8);
  CHECK(m.frames.front().time == 0.0);
  CHECK(m.frames.back().time == 1.0);
}

TEST_CASE("synth is deterministic per seed") {
  test::TempDir dir("cli");
  REQUIRE(dgd_run({"synth", (dir / "a").string(), "--seed", "9"}).code == 0);
  REQUIRE(dgd_run({"synth", (dir / "b").string(), "--seed", "9"}).code == 0);
  REQUIRE(dgd_run({"synth", (dir / "c").string(), "--seed", "10"}).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "a");
    CHECK(slurp(e.path()) == slurp(dir / "b" / rel));
    ++files;
  }
  CHECK(files > 30);
  CHECK(slurp(dir / "a/points.ply") != slurp(dir / "c/points.ply"));
}

TEST_CASE("synth masks follow the moving cluster only") {
  SynthConfig cfg;
  cfg.gaussians_per_cluster = 64;
  const auto truth = make_two_blob(cfg);
  const Camera cam = synth_camera(cfg, 0.0);
  const Mask a0 = truth_mask(truth, 0, cam, 0.0), a1 = truth_mask(truth, 0, cam, 1.0);
  const Mask b0 = truth_mask(truth, 1, cam, 0.0), b1 = truth_mask(truth, 1, cam, 1.0);
  CHECK(a0.count() > 50);
  CHECK(a0 != a1);
  CHECK(b0 == b1);
  CHECK(b0.count() > 50);
}

TEST_CASE("written masks equal the generator oracle") {
  test::TempDir dir("cli");
  const test::SynthFixture fx(dir.path());
  const auto m = read_manifest(fx.data / "train.json");
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const auto stem = fs::path(m.frames[i].image).stem().string();
    CHECK(read_mask(fx.data / "masks/A" / (stem + ".png")) ==
          truth_mask(fx.truth, 0, m.frames[i].camera, m.frames[i].time));
  }
}

TEST_CASE("errors carry the dgd-error prefix") {
  test::TempDir dir("cli");
  const auto missing = dgd_run({"render", (dir / "none.dgdc").string(), "--out", (dir / "x.png").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("dgd-error: MissingFile", 0) == 0);
  const auto bad = dgd_run({"render"});
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("dgd-error: InvalidArgument", 0) == 0);
  const auto unknown = dgd_run({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(dgd_run({"synth", (dir / "s").string(), "--preset", "three-blob"}).code == 1);
}

TEST_CASE("render writes the shared view image") {
  test::TempDir dir("cli");
  const test::SynthFixture fx(dir.path());
  const auto png = dir / "alpha.png";
  const auto r = dgd_run({"render", fx.ckpt.string(), "--orbit", "10", "5", "3", "--width", "48", "--height", "40",
                          "--time", "0.5", "--channels", "alpha", "--out", png.string()});
  REQUIRE(r.code == 0);
  const auto ck = load_checkpoint<float>(fx.ckpt);
  OrbitView v;
  v.azimuth_deg = 10;
  v.elevation_deg = 5;
  v.radius = 3;
  v.width = 48;
  v.height = 40;
  const Image expect = render_view<float>(ck.scene, &ck.field, orbit_camera(v), 0.5, Channels::Alpha);
  CHECK(read_png(png) == expect);
  CHECK(slurp(png) == encode_png(expect));

  const auto late = dgd_run({"render", fx.ckpt.string(), "--time", "1.2", "--out", png.string()});
  CHECK(late.code == 1);
  CHECK(late.err.find("TimeOutOfRange") != std::string::npos);
}

TEST_CASE("segment and eval-miou on the generator checkpoint") {
  test::TempDir dir("cli");
  const test::SynthFixture fx(dir.path());
  const auto seg = dgd_run({"segment", fx.ckpt.string(), "--data", (fx.data / "train.json").string(),
                            "--query-embedding", (fx.data / "query_A.dgdq").string(), "--out-masks",
                            (dir / "masks").string(), "--times", "0,0.5,1", "--camera-index", "2"});
  REQUIRE(seg.code == 0);
  CHECK(seg.out.find("segment: 64 Gaussians") != std::string::npos);
  CHECK(fs::exists(dir / "masks/t_0.0000.png"));
  CHECK(fs::exists(dir / "masks/t_0.5000.png"));
  CHECK(fs::exists(dir / "masks/t_1.0000.png"));
  // The checkpoint's network is the identity, so every time shows the t = 0 scene.
  CHECK(read_mask(dir / "masks/t_0.0000.png") == read_mask(dir / "masks/t_1.0000.png"));

  const auto ev = dgd_run({"eval-miou", fx.ckpt.string(), "--data", (fx.data / "train.json").string(), "--masks",
                           (fx.data / "masks/B").string(), "--query-embedding", (fx.data / "query_B.dgdq").string(),
                           "--scene", "two-blob"});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("| Method | two-blob |") != std::string::npos);
  CHECK(ev.out.find("| DGD | ") != std::string::npos);
  const auto at = ev.out.find("mIoU ");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(ev.out.substr(at + 5)) > 0.98);

  const auto both = dgd_run({"segment", fx.ckpt.string(), "--data", (fx.data / "train.json").string(),
                             "--query-embedding", (fx.data / "query_A.dgdq").string(), "--click", "3", "4"});
  CHECK(both.code == 1);
}

TEST_CASE("train writes a checkpoint and report") {
  test::TempDir dir("cli");
  const test::SynthFixture fx(dir.path(), 16, 32);
  const auto r = dgd_run({"train", (fx.data / "train.json").string(), (dir / "run").string(), "--iters", "12",
                          "--warmup", "6", "--mlp-depth", "2", "--mlp-width", "16", "--log-every", "4",
                          "--snapshot-every", "6", "--precision", "f64"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("iter 4 loss") != std::string::npos);
  const auto ck = load_checkpoint<float>(dir / "run/checkpoint.dgdc");
  CHECK(ck.iteration == 12);
  CHECK(ck.field.config().depth == 2);
  CHECK(fs::exists(dir / "run/report.json"));
  CHECK(fs::exists(dir / "run/snapshots/iter_000006.dgdc"));

  const auto mismatch = dgd_run({"train", (fx.data / "train.json").string(), (dir / "run2").string(), "--iters", "2",
                                 "--warmup", "1", "--feature-dim", "5"});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("DimensionMismatch") != std::string::npos);
}

TEST_CASE("gradcheck command") {
  const auto r = dgd_run({"gradcheck", "--size", "tiny"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gradcheck: PASS") != std::string::npos);
}
