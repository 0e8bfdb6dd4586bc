#include <doctest.h>

#include <cmath>
#include <random>

#include "dgd/deformation.hpp"
#include "dgd/error.hpp"
#include "test_util.hpp"

using namespace dgd;

namespace {

template <typename T>
DeformationField<T> small_field(std::uint64_t seed) {
  DeformationConfig cfg;
  cfg.depth = 2;
  cfg.width = 8;
  cfg.position = {3, true};
  cfg.time = {2, true};
  DeformationField<double> f(cfg, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> g(0.0, 0.3);
  auto& head = f.layers().back();
  for (Eigen::Index k = 0; k < head.weight.size(); ++k) head.weight.data()[k] = g(rng);
  for (Eigen::Index k = 0; k < head.bias.size(); ++k) head.bias.data()[k] = g(rng);
  return f.template cast<T>();
}

// Scalar probe loss: sum of the outputs weighted by fixed random coefficients.
template <typename T>
MatX<T> probe_weights(std::size_t n) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  MatX<T> w(kDeformOutputs, static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = static_cast<T>(g(rng));
  return w;
}

template <typename T>
double probe_loss(const DeformationField<T>& f, const std::vector<T>& x, T t, const MatX<T>& w) {
  const MatX<T> out = f.forward(x, t);
  return (out.template cast<double>().array() * w.template cast<double>().array()).sum();
}

double rel_err(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

template <typename T>
double max_param_error(double h) {
  auto f = small_field<T>(5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 6;
  std::vector<T> x(3 * n);
  for (T& v : x) v = static_cast<T>(u(rng));
  const T t = T(0.3);
  const MatX<T> w = probe_weights<T>(n);

  typename DeformationField<T>::Tape tape;
  (void)f.forward(x, t, &tape);
  auto grads = f.zero_gradients();
  f.backward(tape, w, grads, {});

  std::vector<double> analytic, numeric;
  for (std::size_t l = 0; l < f.layers().size(); ++l) {
    auto& layer = f.layers()[l];
    const auto visit = [&](T* p, const T* g, Eigen::Index count) {
      for (Eigen::Index k = 0; k < count; ++k) {
        const T saved = p[k];
        p[k] = static_cast<T>(saved + h);
        const double up = probe_loss(f, x, t, w);
        p[k] = static_cast<T>(saved - h);
        const double down = probe_loss(f, x, t, w);
        p[k] = saved;
        numeric.push_back((up - down) / (2 * h));
        analytic.push_back(static_cast<double>(g[k]));
      }
    };
    visit(layer.weight.data(), grads[l].weight.data(), layer.weight.size());
    visit(layer.bias.data(), grads[l].bias.data(), layer.bias.size());
  }
  double scale = 0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  double worst = 0;
  for (std::size_t i = 0; i < numeric.size(); ++i) worst = std::max(worst, rel_err(analytic[i], numeric[i], 1e-3 * scale));
  return worst;
}

// f32 analytic parameter gradients against the f64 ones (which are checked
// against finite differences) for the same network and inputs.
double float_vs_double_gradients() {
  const auto fd = small_field<double>(5);
  const auto ff = fd.cast<float>();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 6;
  std::vector<double> xd(3 * n);
  for (double& v : xd) v = static_cast<float>(u(rng));
  const std::vector<float> xf(xd.begin(), xd.end());
  const MatX<double> w = probe_weights<double>(n);

  DeformationField<double>::Tape td;
  (void)fd.forward(xd, 0.3, &td);
  auto gd = fd.zero_gradients();
  fd.backward(td, w, gd, {});
  DeformationField<float>::Tape tf;
  (void)ff.forward(xf, 0.3f, &tf);
  auto gf = ff.zero_gradients();
  ff.backward(tf, w.cast<float>(), gf, {});

  double scale = 0, worst = 0;
  for (const auto& l : gd) scale = std::max({scale, l.weight.cwiseAbs().maxCoeff(), l.bias.cwiseAbs().maxCoeff()});
  for (std::size_t l = 0; l < gd.size(); ++l) {
    worst = std::max(worst, (gd[l].weight - gf[l].weight.cast<double>()).cwiseAbs().maxCoeff() / scale);
    worst = std::max(worst, (gd[l].bias - gf[l].bias.cast<double>()).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("fourier_encode examples") {
  const std::vector<double> zero{0.0};
  CHECK(fourier_encode<double>(zero, {2, true}) == std::vector<double>{0, 0, 1, 0, 1});
  const double pi = std::acos(-1.0);
  const std::vector<double> half_pi{pi / 2};
  const auto e = fourier_encode<double>(half_pi, {2, true});
  REQUIRE(e.size() == 5);
  CHECK(e[0] == pi / 2);
  CHECK(e[1] == doctest::Approx(1.0));
  CHECK(std::abs(e[2]) < 1e-15);
  CHECK(std::abs(e[3]) < 1e-15);
  CHECK(e[4] == doctest::Approx(-1.0));
  const std::vector<double> three{0.1, 0.2, 0.3};
  CHECK(fourier_encode<double>(three, {10, true}).size() == 63);
  CHECK(fourier_encode<double>(three, {10, false}).size() == 60);
  CHECK(FourierEncodingConfig{10, true}.encoded_length(3) == 63);
}

TEST_CASE("fourier_encode layout is [v, per band sin block, cos block]") {
  const std::vector<double> v{0.3, -0.7};
  const auto e = fourier_encode<double>(v, {3, true});
  REQUIRE(e.size() == 2 * 7);
  for (int d = 0; d < 2; ++d) CHECK(e[static_cast<std::size_t>(d)] == v[static_cast<std::size_t>(d)]);
  for (int k = 0; k < 3; ++k) {
    for (int d = 0; d < 2; ++d) {
      const double arg = std::ldexp(1.0, k) * v[static_cast<std::size_t>(d)];
      CHECK(e[static_cast<std::size_t>(2 + 4 * k + d)] == doctest::Approx(std::sin(arg)).epsilon(1e-14));
      CHECK(e[static_cast<std::size_t>(2 + 4 * k + 2 + d)] == doctest::Approx(std::cos(arg)).epsilon(1e-14));
    }
  }
}

TEST_CASE("fresh field is the identity deformation") {
  DeformationConfig cfg;
  cfg.depth = 3;
  cfg.width = 16;
  const DeformationField<double> f(cfg, 1);
  f.validate();
  for (double t : {0.0, 0.4, 1.0}) {
    const auto d = f.deform({0.3, -1.2, 2.0}, t);
    CHECK(d.dx == Eigen::Vector3d::Zero());
    CHECK(d.dr == Eigen::Vector4d::Zero());
    CHECK(d.ds == Eigen::Vector3d::Zero());
  }
  std::mt19937_64 rng(2);
  const auto s = test::random_scene<double>(20, 4, rng);
  CHECK(apply_deformation(s, f, 0.7) == s);
}

TEST_CASE("deform is deterministic and pure; batched forward agrees") {
  const auto f = small_field<double>(3);
  const auto g = small_field<double>(3);
  const Eigen::Vector3d x(0.2, -0.4, 0.9);
  const auto a = f.deform(x, 0.25);
  const auto b = f.deform(x, 0.25);
  const auto c = g.deform(x, 0.25);
  CHECK(a.dx == b.dx);
  CHECK(a.dr == c.dr);
  const std::vector<double> xs{0.2, -0.4, 0.9, 1.0, 0.0, -1.0};
  const MatX<double> out = f.forward(xs, 0.25);
  for (int k = 0; k < 3; ++k) CHECK(out(k, 0) == doctest::Approx(a.dx[k]).epsilon(1e-14));
  for (int k = 0; k < 4; ++k) CHECK(out(3 + k, 0) == doctest::Approx(a.dr[k]).epsilon(1e-14));
  for (int k = 0; k < 3; ++k) CHECK(out(7 + k, 0) == doctest::Approx(a.ds[k]).epsilon(1e-14));
  CHECK(f == g);
}

TEST_CASE("apply_deformation with constant head shifts positions only") {
  DeformationConfig cfg;
  cfg.depth = 2;
  cfg.width = 4;
  DeformationField<double> f(cfg, 1);
  auto& head = f.layers().back();
  head.weight.setZero();
  head.bias.setZero();
  head.bias[0] = 1.0;
  std::mt19937_64 rng(4);
  const auto s = test::random_scene<double>(10, 5, rng);
  const auto d = apply_deformation(s, f, 0.5);
  REQUIRE(d.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(d.position(i) == s.position(i) + Eigen::Vector3d(1, 0, 0));
  }
  CHECK(d.rotations == s.rotations);
  CHECK(d.log_scales == s.log_scales);
  CHECK(d.features == s.features);
  CHECK(d.opacity_logits == s.opacity_logits);
  CHECK(d.color_logits == s.color_logits);
  CHECK(d.feature_dim == s.feature_dim);
}

TEST_CASE("apply_deformation adds dr and ds in the raw domains") {
  const auto f = small_field<double>(8);
  std::mt19937_64 rng(5);
  const auto s = test::random_scene<double>(4, 2, rng);
  const auto d = apply_deformation(s, f, 0.6);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto delta = f.deform(s.position(i), 0.6);
    CHECK((d.rotation(i) - (s.rotation(i) + delta.dr)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((d.log_scale(i) - (s.log_scale(i) + delta.ds)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("input Jacobian matches central differences (f64, h=1e-4)") {
  const auto f = small_field<double>(9);
  const Eigen::Vector3d x(0.31, -0.22, 0.57);
  const double t = 0.4;
  const std::vector<double> xs{x[0], x[1], x[2]};
  DeformationField<double>::Tape tape;
  (void)f.forward(xs, t, &tape);
  double worst = 0;
  for (int row = 0; row < kDeformOutputs; ++row) {
    MatX<double> seed = MatX<double>::Zero(kDeformOutputs, 1);
    seed(row, 0) = 1.0;
    auto grads = f.zero_gradients();
    std::vector<double> gx(3, 0.0);
    f.backward(tape, seed, grads, gx);
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d up = x, down = x;
      up[k] += 1e-4;
      down[k] -= 1e-4;
      const auto out_up = f.forward(std::vector<double>{up[0], up[1], up[2]}, t);
      const auto out_down = f.forward(std::vector<double>{down[0], down[1], down[2]}, t);
      const double num = (out_up(row, 0) - out_down(row, 0)) / 2e-4;
      worst = std::max(worst, rel_err(gx[static_cast<std::size_t>(k)], num, 1e-6));
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("parameter gradients match central differences") {
  CHECK(max_param_error<double>(1e-6) < 1e-6);
  CHECK(float_vs_double_gradients() < 1e-5);
}

TEST_CASE("ast_time schedule") {
  std::mt19937_64 rng(1);
  AstConfig cfg{0.1, 1000};
  CHECK(ast_time(0.3, 1000, cfg, rng) == 0.3);
  CHECK(ast_time(0.3, 5000, cfg, rng) == 0.3);
  CHECK(ast_time(0.3, 10, AstConfig{0.0, 1000}, rng) == 0.3);
  for (int i = 0; i < 1000; ++i) {
    const double v = ast_time(0.99, 0, cfg, rng);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("ast_time Monte Carlo std at half anneal") {
  std::mt19937_64 rng(12345);
  const AstConfig cfg{0.1, 2000};
  const int draws = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < draws; ++i) {
    const double e = ast_time(0.5, 1000, cfg, rng) - 0.5;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(sq / draws - mean * mean);
  CHECK(sd == doctest::Approx(0.05).epsilon(0.05));
  CHECK(std::abs(mean) < 0.001);
}

TEST_CASE("ast_time std scales with the frame interval") {
  std::mt19937_64 rng(99);
  const AstConfig cfg{0.1, 2000};
  const double interval = 1.0 / 24.0;
  const int draws = 100000;
  double sq = 0;
  for (int i = 0; i < draws; ++i) {
    const double e = ast_time(0.5, 0, cfg, rng, interval) - 0.5;
    sq += e * e;
  }
  CHECK(std::sqrt(sq / draws) == doctest::Approx(0.1 * interval).epsilon(0.05));
  CHECK_THROWS_AS((void)ast_time(0.5, 0, cfg, rng, -1.0), Error);
}

TEST_CASE("validate rejects broken shapes") {
  auto f = small_field<double>(1);
  f.layers()[0].bias.resize(3);
  CHECK_THROWS_AS(f.validate(), Error);
}
