#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>

#include "dgd/error.hpp"
#include "dgd/rasterizer.hpp"
#include "dgd/semantics.hpp"
#include "dgd/synth.hpp"
#include "test_util.hpp"

using namespace dgd;

namespace {

Camera square_camera(int px) {
  Camera c;
  c.fx = c.fy = 1.2 * px;
  c.cx = c.cy = 0.5 * (px - 1);
  c.width = c.height = px;
  return c;
}

GaussianSet<double> opaque_at(std::initializer_list<Eigen::Vector3d> centers, double scale) {
  GaussianSet<double> s(centers.size(), 3);
  std::size_t i = 0;
  for (const auto& p : centers) {
    for (int k = 0; k < 3; ++k) {
      s.positions[3 * i + k] = p[k];
      s.log_scales[3 * i + k] = std::log(scale);
    }
    s.rotations[4 * i] = 1.0;
    s.opacity_logits[i] = logit(0.999);
    s.features[3 * i + i % 3] = 1.0;
    ++i;
  }
  return s;
}

std::vector<std::size_t> brute_embedding(const GaussianSet<double>& s, const std::vector<double>& q, double theta) {
  std::vector<std::size_t> ids;
  double qn = 0;
  for (double v : q) qn += v * v;
  qn = std::sqrt(qn);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double dot = 0, fn = 0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      dot += s.feature(i)[k] * q[k];
      fn += s.feature(i)[k] * s.feature(i)[k];
    }
    fn = std::sqrt(fn);
    if (fn > 1e-12 && dot / (fn * qn) >= theta) ids.push_back(i);
  }
  return ids;
}

Mask from_fn(int w, int h, const std::function<bool(int, int)>& on) {
  Mask m{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h), 0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.data[static_cast<std::size_t>(y * w + x)] = on(x, y) ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("select_by_embedding: theta = -1 takes every non-zero feature") {
  std::mt19937_64 rng(1);
  auto s = test::random_scene<double>(40, 5, rng);
  std::fill(s.feature(3).begin(), s.feature(3).end(), 0.0);
  std::fill(s.feature(17).begin(), s.feature(17).end(), 0.0);
  const std::vector<double> q{1, -2, 0.5, 0, 3};
  const auto r = select_by_embedding<double>(s, q, -1.0);
  CHECK(r.gaussian_ids.size() == 38);
  CHECK(std::find(r.gaussian_ids.begin(), r.gaussian_ids.end(), 3U) == r.gaussian_ids.end());
  CHECK(std::is_sorted(r.gaussian_ids.begin(), r.gaussian_ids.end()));
  CHECK(r.scores.size() == r.gaussian_ids.size());
  CHECK(r.query_feature == q);
}

TEST_CASE("select_by_embedding: self query near 1") {
  std::mt19937_64 rng(2);
  const auto s = test::random_scene<double>(30, 6, rng);
  for (std::size_t k : {0U, 11U, 29U}) {
    const std::vector<double> q(s.feature(k).begin(), s.feature(k).end());
    const auto r = select_by_embedding<double>(s, q, 1.0 - 1e-9);
    CHECK(std::find(r.gaussian_ids.begin(), r.gaussian_ids.end(), k) != r.gaussian_ids.end());
  }
}

TEST_CASE("select_by_embedding matches brute-force cosine on random scenes") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = test::random_scene<double>(200, 4, rng);
    std::normal_distribution<double> g;
    std::vector<double> q(4);
    for (double& v : q) v = g(rng);
    for (double theta : {-0.5, 0.0, 0.3, 0.8}) {
      const auto r = select_by_embedding<double>(s, q, theta);
      CHECK(r.gaussian_ids == brute_embedding(s, q, theta));
      for (double sc : r.scores) CHECK(sc >= theta);
    }
  }
}

TEST_CASE("select_by_embedding: two-blob cluster A mean picks exactly cluster A") {
  SynthConfig cfg;
  cfg.gaussians_per_cluster = 64;
  const auto truth = make_two_blob(cfg);
  const auto q = truth.mean_feature(0);
  const auto r = select_by_embedding<double>(truth.scene, q, 0.7);
  CHECK(r.gaussian_ids == truth.members(0));
  CHECK(r.gaussian_ids == brute_embedding(truth.scene, q, 0.7));
}

TEST_CASE("select_by_embedding errors") {
  std::mt19937_64 rng(4);
  const auto s = test::random_scene<double>(5, 3, rng);
  const std::vector<double> zero(3, 0.0), two(2, 1.0), q{1, 0, 0};
  CHECK_THROWS_AS((void)select_by_embedding<double>(s, zero, 0.5), Error);
  try {
    (void)select_by_embedding<double>(s, zero, 0.5);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroQuery);
  }
  try {
    (void)select_by_embedding<double>(s, two, 0.5);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
  CHECK_THROWS_AS((void)select_by_embedding<double>(s, q, 1.5), Error);
  CHECK_THROWS_AS((void)select_by_embedding<double>(s, q, std::numeric_limits<double>::quiet_NaN()), Error);
}

TEST_CASE("selection is scale invariant and monotone in theta") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    auto s = test::random_scene<double>(150, 6, rng);
    std::vector<double> q(6);
    for (double& v : q) v = g(rng);
    const double theta = -1.0 + 2.0 * (trial / 19.0);
    const auto base = select_by_embedding<double>(s, q, theta).gaussian_ids;

    auto scaled = s;
    const double a = u(rng);
    for (double& f : scaled.features) f *= a;
    std::vector<double> qs = q;
    const double b = u(rng);
    for (double& v : qs) v *= b;
    CHECK(select_by_embedding<double>(scaled, q, theta).gaussian_ids == base);
    CHECK(select_by_embedding<double>(s, qs, theta).gaussian_ids == base);

    std::vector<std::size_t> prev = select_by_embedding<double>(s, q, -1.0).gaussian_ids;
    for (double t2 = -0.9; t2 <= 1.0; t2 += 0.1) {
      const auto cur = select_by_embedding<double>(s, q, t2).gaussian_ids;
      CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST_CASE("select_by_click: single Gaussian, background and bounds") {
  const Camera cam = square_camera(21);
  const auto s = opaque_at({Eigen::Vector3d(0, 0, 3)}, 0.2);
  const auto r = select_by_click<double>(s, nullptr, cam, 0.0, 10, 10, 1.0);
  CHECK(r.gaussian_ids == std::vector<std::size_t>{0});
  CHECK(r.query_feature == std::vector<double>{1, 0, 0});

  const auto off = opaque_at({Eigen::Vector3d(0.8, 0, 3)}, 0.02);
  try {
    (void)select_by_click<double>(off, nullptr, cam, 0.0, 0, 0, 0.5);
    FAIL("expected EmptyPixel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyPixel);
  }
  try {
    (void)select_by_click<double>(s, nullptr, cam, 0.0, 21, 3, 0.5);
    FAIL("expected PixelOutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PixelOutOfBounds);
  }
}

TEST_CASE("select_by_click uses the front Gaussian's canonical feature") {
  const Camera cam = square_camera(21);
  auto s = opaque_at({Eigen::Vector3d(0, 0, 5), Eigen::Vector3d(0, 0, 3), Eigen::Vector3d(0.5, 0, 3)}, 0.2);
  // Gaussian 1 is in front at the centre pixel; Gaussian 2 shares its feature direction.
  s.feature(2)[0] = 0.0;
  s.feature(2)[1] = 3.0;
  s.feature(2)[2] = 0.0;
  const auto r = select_by_click<double>(s, nullptr, cam, 0.0, 10, 10, 0.9);
  CHECK(r.gaussian_ids == std::vector<std::size_t>{1, 2});

  // An untrained field has a zero head, so the static and deformed clicks agree.
  DeformationConfig dc;
  dc.depth = 2;
  dc.width = 8;
  const DeformationField<double> field(dc, 3);
  const auto rd = select_by_click<double>(s, &field, cam, 0.7, 10, 10, 0.9);
  CHECK(rd.gaussian_ids == r.gaussian_ids);
}

TEST_CASE("select_by_pixels: examples and oracle") {
  const Camera cam = square_camera(21);
  const auto one = opaque_at({Eigen::Vector3d(0, 0, 3)}, 0.2);
  const std::vector<std::pair<int, int>> centre{{10, 10}};
  CHECK(select_by_pixels<double>(one, nullptr, cam, 0.0, centre, 0.9).gaussian_ids == std::vector<std::size_t>{0});

  const auto small = opaque_at({Eigen::Vector3d(0, 0, 3)}, 0.02);
  const std::vector<std::pair<int, int>> corner{{0, 0}};
  CHECK(select_by_pixels<double>(small, nullptr, cam, 0.0, corner, 0.99).gaussian_ids.empty());

  std::mt19937_64 rng(6);
  const auto s = test::random_scene<double>(10, 3, rng, 0.1, 0.4);
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < 21; y += 4)
    for (int x = 0; x < 21; x += 3) pixels.emplace_back(x, y);
  for (double thr : {0.01, 0.1, 0.3}) {
    std::set<std::size_t> oracle;
    for (const auto& [x, y] : pixels)
      for (const auto& c : contribution_weights(s, cam, x, y))
        if (c.weight >= thr) oracle.insert(c.gaussian_id);
    const auto r = select_by_pixels<double>(s, nullptr, cam, 0.0, pixels, thr);
    CHECK(r.gaussian_ids == std::vector<std::size_t>(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("render_segmentation_mask examples") {
  const Camera cam = square_camera(32);
  std::mt19937_64 rng(7);
  auto s = test::random_scene<double>(25, 3, rng, 0.1, 0.3);
  for (double& o : s.opacity_logits) o = logit(0.99);

  const std::vector<std::size_t> none;
  const auto empty = render_segmentation_mask<double>(s, nullptr, none, cam, 0.0);
  CHECK(empty.count() == 0);
  CHECK(empty.width == 32);

  std::vector<std::size_t> all(s.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto full = render_segmentation_mask<double>(s, nullptr, all, cam, 0.0, 0.5);
  const auto out = render(s, cam);
  for (std::size_t p = 0; p < full.data.size(); ++p) CHECK(full.data[p] == (out.alpha[p] >= 0.5 ? 1 : 0));
}

TEST_CASE("masks of disjoint footprints compose by OR") {
  const Camera cam = square_camera(40);
  const auto s = opaque_at({Eigen::Vector3d(-0.7, -0.7, 4), Eigen::Vector3d(0.7, 0.7, 4), Eigen::Vector3d(0.7, -0.7, 4)},
                           0.12);
  const std::vector<std::size_t> a{0}, b{1, 2}, ab{0, 1, 2};
  const auto ma = render_segmentation_mask<double>(s, nullptr, a, cam, 0.0);
  const auto mb = render_segmentation_mask<double>(s, nullptr, b, cam, 0.0);
  const auto mab = render_segmentation_mask<double>(s, nullptr, ab, cam, 0.0);
  REQUIRE(ma.count() > 0);
  REQUIRE(mb.count() > 0);
  for (std::size_t p = 0; p < mab.data.size(); ++p) CHECK(mab.data[p] == (ma.data[p] | mb.data[p]));
}

TEST_CASE("iou and miou") {
  const auto full = from_fn(8, 8, [](int, int) { return true; });
  const auto top = from_fn(8, 8, [](int, int y) { return y < 4; });
  const auto bottom = from_fn(8, 8, [](int, int y) { return y >= 4; });
  const auto none = from_fn(8, 8, [](int, int) { return false; });
  CHECK(iou(full, full) == 1.0);
  CHECK(iou(top, bottom) == 0.0);
  CHECK(iou(top, full) == 0.5);
  CHECK(iou(none, none) == 1.0);
  const std::vector<Mask> pred{top, top, none}, gt{full, top, none};
  CHECK(miou(pred, gt) == doctest::Approx(2.5 / 3.0).epsilon(1e-15));
  const std::vector<Mask> short_gt{full};
  CHECK_THROWS_AS((void)miou(pred, short_gt), Error);
  CHECK_THROWS_AS((void)iou(full, from_fn(4, 8, [](int, int) { return true; })), Error);
}
