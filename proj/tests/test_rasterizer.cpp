#include <doctest.h>

#include <cmath>
#include <random>

#include "dgd/error.hpp"
#include "dgd/rasterizer.hpp"
#include "test_util.hpp"

using namespace dgd;

namespace {

Camera square_camera(int px) {
  Camera c;
  c.fx = c.fy = 1.2 * px;
  c.cx = c.cy = 0.5 * px;
  c.width = c.height = px;
  return c;
}

GaussianSet<double> single(const Eigen::Vector3d& p, double scale, double opacity, const Eigen::Vector3d& color,
                           std::size_t c = 3) {
  GaussianSet<double> s(1, c);
  for (int k = 0; k < 3; ++k) {
    s.positions[static_cast<std::size_t>(k)] = p[k];
    s.log_scales[static_cast<std::size_t>(k)] = std::log(scale);
    s.color_logits[static_cast<std::size_t>(k)] = logit(color[k]);
  }
  s.rotations = {1, 0, 0, 0};
  s.opacity_logits[0] = logit(opacity);
  for (std::size_t k = 0; k < c; ++k) s.features[k] = 0.5 + static_cast<double>(k);
  return s;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("project_gaussian examples") {
  Camera cam = square_camera(64);
  const auto on_axis = project_gaussian<double>({0, 0, 1}, 1e-6 * Eigen::Matrix3d::Identity(), cam);
  REQUIRE(on_axis);
  CHECK(on_axis->mean == Eigen::Vector2d(cam.cx, cam.cy));

  const double s = 0.1, z = 2.5;
  const auto iso = project_gaussian<double>({0, 0, z}, s * s * Eigen::Matrix3d::Identity(), cam);
  REQUIRE(iso);
  const double e = std::pow(cam.fx * s / z, 2) + raster::kLowPassDilation;
  CHECK(std::abs(iso->cov(0, 0) - e) < 1e-6);
  CHECK(std::abs(iso->cov(1, 1) - e) < 1e-6);
  CHECK(std::abs(iso->cov(0, 1)) < 1e-12);
  CHECK(iso->radius == doctest::Approx(3.0 * std::sqrt(e)).epsilon(1e-12));
  CHECK((iso->conic * iso->cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(iso->depth == z);

  CHECK_FALSE(project_gaussian<double>({0, 0, -1}, Eigen::Matrix3d::Identity(), cam));
  CHECK_FALSE(project_gaussian<double>({0, 0, 0.005}, Eigen::Matrix3d::Identity(), cam));
  CHECK_FALSE(project_gaussian<double>({50, 0, 1}, 1e-4 * Eigen::Matrix3d::Identity(), cam));
}

TEST_CASE("empty scene renders background") {
  const Camera cam = square_camera(16);
  GaussianSet<double> empty(0, 4);
  RenderOptions opt;
  auto out = render(empty, cam, opt);
  CHECK(out.alpha == std::vector<double>(256, 0.0));
  CHECK(out.color == std::vector<double>(768, 0.0));
  CHECK(out.feature == std::vector<double>(256 * 4, 0.0));
  opt.background = {0.2, 0.4, 0.6};
  out = render(empty, cam, opt);
  CHECK(out.color[3 * 17 + 2] == doctest::Approx(0.6));
  CHECK(contribution_weights(empty, cam, 3, 3).empty());
}

TEST_CASE("single opaque on-axis Gaussian") {
  Camera cam = square_camera(17);
  cam.cx = cam.cy = 8.0;
  const Eigen::Vector3d col(0.2, 0.5, 0.8);
  const auto s = single({0, 0, 2}, 0.2, 0.99, col);
  RenderOptions opt;
  opt.background = {1, 1, 1};
  const auto out = render(s, cam, opt);
  const std::size_t p = out.pixel(static_cast<int>(cam.cx), static_cast<int>(cam.cy));
  for (int k = 0; k < 3; ++k) CHECK(out.color[3 * p + k] == doctest::Approx(0.99 * col[k] + 0.01).epsilon(1e-9));
  for (std::size_t k = 0; k < 3; ++k) CHECK(out.feature[3 * p + k] == doctest::Approx(0.99 * (0.5 + k)).epsilon(1e-9));
  const auto w = contribution_weights(s, cam, static_cast<int>(cam.cx), static_cast<int>(cam.cy));
  REQUIRE(w.size() == 1);
  CHECK(w[0].gaussian_id == 0);
  CHECK(w[0].weight == doctest::Approx(0.99).epsilon(1e-9));
}

TEST_CASE("brute force matches hand-computed alpha") {
  const Camera cam = square_camera(32);
  const double z = 3.0, sc = 0.15, op = 0.7;
  const auto s = single({0, 0, z}, sc, op, {0.5, 0.5, 0.5});
  const auto a = render_brute_force(s, cam);
  const auto b = render_brute_force(s, cam);
  CHECK(a.color == b.color);
  CHECK(a.alpha == b.alpha);
  const double var = std::pow(cam.fx * sc / z, 2) + raster::kLowPassDilation;
  const double o = sigmoid(logit(op));
  for (auto [x, y] : {std::pair{16, 16}, {17, 16}, {18, 19}, {14, 13}, {20, 15}}) {
    const double dx = x - cam.cx, dy = y - cam.cy;
    const double alpha = o * std::exp(-0.5 * (dx * dx + dy * dy) / var);
    CHECK(std::abs(a.alpha[a.pixel(x, y)] - alpha) < 1e-10);
  }
}

TEST_CASE("tiled render matches brute force on random scenes") {
  std::mt19937_64 rng(2024);
  const Camera cam = square_camera(64);
  for (int scene = 0; scene < 20; ++scene) {
    const auto s = test::random_scene<double>(1 + rng() % 100, 8, rng);
    RenderOptions opt;
    opt.background = {0.1, 0.2, 0.3};
    const auto a = render(s, cam, opt);
    const auto b = render_brute_force(s, cam, opt);
    CHECK(max_abs_diff(a.color, b.color) < 1e-5);
    CHECK(max_abs_diff(a.feature, b.feature) < 1e-5);
    CHECK(max_abs_diff(a.alpha, b.alpha) < 1e-5);
  }
}

TEST_CASE("compositing invariants") {
  std::mt19937_64 rng(7);
  const Camera cam = square_camera(32);
  for (int scene = 0; scene < 10; ++scene) {
    auto s = test::random_scene<double>(60, 4, rng);
    const std::vector<double> f{0.3, -1.0, 2.0, 0.5};
    for (std::size_t i = 0; i < s.size(); ++i) std::copy(f.begin(), f.end(), s.feature(i).begin());
    const auto out = render(s, cam);
    for (std::size_t p = 0; p < cam.pixel_count(); ++p) {
      CHECK(out.alpha[p] >= 0.0);
      CHECK(out.alpha[p] <= 1.0);
      for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(out.feature[4 * p + k] - out.alpha[p] * f[k]) < 1e-6);
    }
    for (int probe = 0; probe < 20; ++probe) {
      const int x = static_cast<int>(rng() % 32), y = static_cast<int>(rng() % 32);
      double sum = 0;
      double prev = 2.0;
      for (const auto& c : contribution_weights(s, cam, x, y)) {
        sum += c.weight;
        CHECK(c.weight <= prev);
        prev = c.weight;
      }
      CHECK(std::abs(sum - out.alpha[out.pixel(x, y)]) < 1e-6);
    }
  }
}

TEST_CASE("storage order and thread count do not change the render") {
  std::mt19937_64 rng(8);
  const Camera cam = square_camera(48);
  const auto s = test::random_scene<double>(80, 3, rng);
  std::vector<std::size_t> perm(s.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
  const auto reversed = s.subset(perm);
  RenderOptions one;
  one.threads = 1;
  RenderOptions many;
  many.threads = 4;
  const auto a = render(s, cam, one);
  const auto b = render(reversed, cam, one);
  const auto c = render(s, cam, many);
  CHECK(a.alpha == c.alpha);
  CHECK(a.color == c.color);
  // Ids change under permutation, so equal depths could reorder; random depths make ties impossible.
  CHECK(a.color == b.color);
  CHECK(a.feature == b.feature);
}

TEST_CASE("recorded top-K contributions") {
  std::mt19937_64 rng(10);
  const Camera cam = square_camera(24);
  const auto s = test::random_scene<double>(40, 2, rng);
  RenderOptions opt;
  opt.record_contributions = true;
  opt.top_k = 3;
  const auto out = render(s, cam, opt);
  REQUIRE(out.contributions.size() == cam.pixel_count());
  for (int y = 0; y < 24; y += 5) {
    for (int x = 0; x < 24; x += 5) {
      const auto full = contribution_weights(s, cam, x, y);
      const auto& top = out.contributions[out.pixel(x, y)];
      REQUIRE(top.size() == std::min<std::size_t>(3, full.size()));
      for (std::size_t k = 0; k < top.size(); ++k) {
        CHECK(top[k].gaussian_id == full[k].gaussian_id);
        CHECK(top[k].weight == doctest::Approx(full[k].weight).epsilon(1e-12));
      }
    }
  }
  try {
    (void)contribution_weights(s, cam, 24, 0);
    FAIL("expected PixelOutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PixelOutOfBounds);
  }
}

TEST_CASE("backward: zero incoming gradients give zero") {
  std::mt19937_64 rng(12);
  const Camera cam = square_camera(16);
  const auto s = test::random_scene<double>(10, 3, rng);
  const std::vector<double> gc(3 * 256, 0.0), gf(3 * 256, 0.0), ga(256, 0.0);
  const auto g = render_backward<double>(s, cam, gc, gf, ga);
  for (const auto* v : {&g.params.positions, &g.params.rotations, &g.params.log_scales, &g.params.opacity_logits,
                        &g.params.color_logits, &g.params.features}) {
    for (double x : *v) CHECK(x == 0.0);
  }
}

TEST_CASE("backward: color gradient equals contribution weight") {
  std::mt19937_64 rng(13);
  const Camera cam = square_camera(16);
  const auto s = test::random_scene<double>(12, 2, rng, 0.2, 0.5);
  const int x = 8, y = 7;
  const auto weights = contribution_weights(s, cam, x, y);
  REQUIRE(!weights.empty());
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<double> gc(3 * 256, 0.0);
    gc[3 * static_cast<std::size_t>(y * 16 + x) + static_cast<std::size_t>(ch)] = 1.0;
    const auto g = render_backward<double>(s, cam, gc, {}, {});
    for (const auto& w : weights) {
      const double c = s.color(w.gaussian_id)[ch];
      CHECK(g.params.color_logits[3 * w.gaussian_id + static_cast<std::size_t>(ch)] ==
            doctest::Approx(w.weight * c * (1 - c)).epsilon(1e-10));
    }
  }
  std::vector<double> gf(2 * 256, 0.0);
  gf[2 * static_cast<std::size_t>(y * 16 + x) + 1] = 1.0;
  const std::vector<double> no_color(3 * 256, 0.0);
  const auto g = render_backward<double>(s, cam, no_color, gf, {});
  for (const auto& w : weights) {
    CHECK(g.params.features[2 * w.gaussian_id + 1] == doctest::Approx(w.weight).epsilon(1e-10));
  }
}

TEST_CASE("backward matches finite differences for color, feature and alpha") {
  std::mt19937_64 rng(14);
  const int px = 8;
  Camera cam = square_camera(px);
  cam.fx = cam.fy = px;
  // Wide splats with moderate opacity: no pixel near a cutoff.
  auto s = test::random_scene<double>(3, 2, rng, 1.2, 1.6);
  for (std::size_t i = 0; i < 3; ++i) {
    s.positions[3 * i] *= 0.5;
    s.positions[3 * i + 1] *= 0.5;
    s.opacity_logits[i] = logit(0.4 + 0.1 * static_cast<double>(i));
  }
  const std::size_t n_pix = cam.pixel_count();
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> wc(3 * n_pix), wf(2 * n_pix), wa(n_pix);
  for (double& v : wc) v = g(rng);
  for (double& v : wf) v = g(rng);
  for (double& v : wa) v = g(rng);
  RenderOptions opt;
  opt.threads = 1;
  const auto loss = [&](const GaussianSet<double>& set) {
    const auto out = render(set, cam, opt);
    double l = 0;
    for (std::size_t i = 0; i < wc.size(); ++i) l += wc[i] * out.color[i];
    for (std::size_t i = 0; i < wf.size(); ++i) l += wf[i] * out.feature[i];
    for (std::size_t i = 0; i < wa.size(); ++i) l += wa[i] * out.alpha[i];
    return l;
  };
  const auto grads = render_backward<double>(s, cam, wc, wf, wa, opt);
  const double h = 1e-4;
  const auto check_group = [&](std::vector<double> GaussianSet<double>::*member) {
    auto work = s;
    std::vector<double>& params = work.*member;
    const std::vector<double>& analytic = grads.params.*member;
    double scale = 0;
    std::vector<double> numeric(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      const auto at = [&](double d) {
        params[k] = saved + d;
        return loss(work);
      };
      numeric[k] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      params[k] = saved;
      scale = std::max(scale, std::abs(numeric[k]));
    }
    double worst = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      worst = std::max(worst, std::abs(analytic[k] - numeric[k]) /
                                  std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-3 * scale}));
    }
    return worst;
  };
  CHECK(check_group(&GaussianSet<double>::positions) < 1e-5);
  CHECK(check_group(&GaussianSet<double>::rotations) < 1e-5);
  CHECK(check_group(&GaussianSet<double>::log_scales) < 1e-5);
  CHECK(check_group(&GaussianSet<double>::opacity_logits) < 1e-5);
  CHECK(check_group(&GaussianSet<double>::color_logits) < 1e-5);
  CHECK(check_group(&GaussianSet<double>::features) < 1e-5);
}

TEST_CASE("backward is deterministic for a fixed thread count") {
  std::mt19937_64 rng(15);
  const Camera cam = square_camera(32);
  const auto s = test::random_scene<double>(50, 2, rng);
  std::vector<double> gc(3 * cam.pixel_count(), 0.01);
  RenderOptions opt;
  opt.threads = 3;
  const auto a = render_backward<double>(s, cam, gc, {}, {}, opt);
  const auto b = render_backward<double>(s, cam, gc, {}, {}, opt);
  CHECK(a.params == b.params);
  opt.threads = 1;
  const auto c = render_backward<double>(s, cam, gc, {}, {}, opt);
  for (std::size_t i = 0; i < a.params.positions.size(); ++i) {
    CHECK(a.params.positions[i] == doctest::Approx(c.params.positions[i]).epsilon(1e-9));
  }
}

TEST_CASE("float renderer agrees with double") {
  std::mt19937_64 rng(16);
  const Camera cam = square_camera(32);
  const auto s = test::random_scene<double>(40, 2, rng);
  const auto a = render(s, cam);
  const auto b = render(s.cast<float>(), cam);
  double m = 0;
  for (std::size_t i = 0; i < a.color.size(); ++i) m = std::max(m, std::abs(a.color[i] - static_cast<double>(b.color[i])));
  CHECK(m < 1e-4);
}
