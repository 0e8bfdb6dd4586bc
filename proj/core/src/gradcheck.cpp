#include "dgd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dgd/error.hpp"

namespace dgd {

bool GradcheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupError& g) { return g.passed; });
}

const GroupError* GradcheckReport::find(const std::string& group) const {
  for (const auto& g : groups) {
    if (g.group == group) return &g;
  }
  return nullptr;
}

namespace {

GroupError compare(const std::string& name, const std::vector<double>& analytic, const std::vector<double>& numeric,
                   double tolerance) {
  GroupError e;
  e.group = name;
  e.checked = numeric.size();
  double scale = 0.0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  const double floor = std::max(1e-3 * scale, 1e-8);
  double worst = -1.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    if (std::isnan(err)) err = INFINITY;
    if (err > worst) {
      worst = err;
      e.worst_index = i;
      e.analytic_at_worst = a;
      e.numeric_at_worst = n;
    }
  }
  e.max_relative_error = std::max(worst, 0.0);
  e.passed = e.max_relative_error < tolerance;
  return e;
}

}  // namespace

GradcheckReport gradcheck(const GaussianSet<double>& scene, const DeformationField<double>* field, const Frame& frame,
                          double t, const GradcheckOptions& options, const AnalyticGradientFn& analytic) {
  RenderOptions ro;
  ro.threads = 1;
  const double h = options.step;

  const SceneGradients<double> grads =
      analytic ? analytic(scene, field, frame, t, options.lambda_f)
               : evaluate(scene, field, frame, t, options.lambda_f, ro).grads;

  GaussianSet<double> work = scene;
  DeformationField<double> work_field = field != nullptr ? *field : DeformationField<double>{};
  const DeformationField<double>* fp = field != nullptr ? &work_field : nullptr;
  const auto loss = [&] { return static_cast<double>(evaluate(work, fp, frame, t, options.lambda_f, ro, false).loss.loss); };
  // Fourth-order central stencil: truncation O(h^4) lets h stay large enough
  // that roundoff in the loss does not swamp small gradient entries.
  const auto central = [&](double& x) {
    const double saved = x;
    const auto at = [&](double offset) {
      x = saved + offset;
      return loss();
    };
    const double d = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
    x = saved;
    return d;
  };

  GradcheckReport report;
  const auto check_vector = [&](const std::string& name, std::vector<double>& params, const std::vector<double>& a) {
    std::vector<double> numeric(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) numeric[k] = central(params[k]);
    std::vector<double> analytic_values = a;
    analytic_values.resize(params.size(), 0.0);
    report.groups.push_back(compare(name, analytic_values, numeric, options.tolerance));
  };
  check_vector("positions", work.positions, grads.params.positions);
  check_vector("rotations", work.rotations, grads.params.rotations);
  check_vector("log_scales", work.log_scales, grads.params.log_scales);
  check_vector("opacity_logits", work.opacity_logits, grads.params.opacity_logits);
  check_vector("colors", work.color_logits, grads.params.color_logits);
  check_vector("features", work.features, grads.params.features);

  if (field != nullptr) {
    std::vector<double> num_w, ana_w, num_b, ana_b;
    auto& layers = work_field.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const bool have = l < grads.field.size();
      for (Eigen::Index k = 0; k < layers[l].weight.size(); ++k) {
        num_w.push_back(central(layers[l].weight.data()[k]));
        ana_w.push_back(have ? grads.field[l].weight.data()[k] : 0.0);
      }
      for (Eigen::Index k = 0; k < layers[l].bias.size(); ++k) {
        num_b.push_back(central(layers[l].bias.data()[k]));
        ana_b.push_back(have ? grads.field[l].bias.data()[k] : 0.0);
      }
    }
    report.groups.push_back(compare("mlp_weights", ana_w, num_w, options.tolerance));
    report.groups.push_back(compare("mlp_biases", ana_b, num_b, options.tolerance));
  }
  return report;
}

GradcheckProblem make_gradcheck_problem(const std::string& size, std::uint64_t seed) {
  std::size_t n = 0;
  int pixels = 0;
  std::size_t c_dim = 0;
  double max_opacity = 0.0;
  if (size == "tiny") {
    n = 3;
    pixels = 8;
    c_dim = 4;
    max_opacity = 0.8;
  } else if (size == "small") {
    n = 12;
    pixels = 16;
    c_dim = 8;
    max_opacity = 0.45;
  } else {
    throw Error(Errc::InvalidArgument, "gradcheck size must be 'tiny' or 'small'");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);

  GradcheckProblem p;
  p.frame.name = "gradcheck-" + size;
  p.frame.camera.fx = p.frame.camera.fy = pixels;
  p.frame.camera.cx = p.frame.camera.cy = 0.5 * pixels;
  p.frame.camera.width = p.frame.camera.height = pixels;
  p.frame.time = 0.5;

  p.scene = GaussianSet<double>(n, c_dim);
  for (std::size_t i = 0; i < n; ++i) {
    p.scene.positions[3 * i] = uniform(-0.6, 0.6);
    p.scene.positions[3 * i + 1] = uniform(-0.6, 0.6);
    p.scene.positions[3 * i + 2] = uniform(2.5, 3.5);
    for (int k = 0; k < 4; ++k) p.scene.rotations[4 * i + k] = normal(rng);
    // Splats wider than the image keep every pixel inside the 3-sigma cutoff and
    // above the 1/255 alpha floor, and the opacities keep transmittance above
    // the early-termination bound, so finite differences never straddle a
    // compositing discontinuity.
    for (int k = 0; k < 3; ++k) p.scene.log_scales[3 * i + k] = std::log(uniform(1.2, 1.6));
    p.scene.opacity_logits[i] = logit(uniform(0.5 * max_opacity, max_opacity));
    for (int k = 0; k < 3; ++k) p.scene.color_logits[3 * i + k] = normal(rng);
    for (std::size_t k = 0; k < c_dim; ++k) p.scene.features[i * c_dim + k] = normal(rng);
  }

  const std::size_t pix = static_cast<std::size_t>(pixels) * static_cast<std::size_t>(pixels);
  p.frame.image.resize(3 * pix);
  for (auto& v : p.frame.image) v = static_cast<float>(unit(rng));
  p.frame.feature_dim = c_dim;
  p.frame.features.resize(pix * c_dim);
  for (auto& v : p.frame.features) v = static_cast<float>(normal(rng));

  DeformationConfig cfg;
  cfg.depth = 2;
  cfg.width = 8;
  cfg.position = {4, true};
  cfg.time = {2, true};
  p.field = DeformationField<double>(cfg, seed + 1);
  auto& head = p.field.layers().back();
  for (Eigen::Index k = 0; k < head.weight.size(); ++k) head.weight.data()[k] = 0.05 * normal(rng);
  for (Eigen::Index k = 0; k < head.bias.size(); ++k) head.bias.data()[k] = 0.02 * normal(rng);
  return p;
}

}  // namespace dgd
