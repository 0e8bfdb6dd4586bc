#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dgd/deformation.hpp"
#include "dgd/frame.hpp"
#include "dgd/gaussians.hpp"
#include "dgd/loss.hpp"

namespace dgd {

struct GradcheckOptions {
  double step = 1e-4;
  double tolerance = 1e-5;
  double lambda_f = 1.0;
};

struct GroupError {
  std::string group;
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<GroupError> groups;
  [[nodiscard]] bool passed() const;
  [[nodiscard]] const GroupError* find(const std::string& group) const;
};

using AnalyticGradientFn =
    std::function<SceneGradients<double>(const GaussianSet<double>&, const DeformationField<double>*, const Frame&,
                                         double t, double lambda_f)>;

/// Analytic gradients (evaluate() unless `analytic` is given) against central
/// finite differences of the full loss, per parameter group. Relative error is
/// |a - n| / max(|a|, |n|, 1e-3 * max|n| over the group, 1e-8).
/// Failures are reported, never thrown.
[[nodiscard]] GradcheckReport gradcheck(const GaussianSet<double>& scene, const DeformationField<double>* field,
                                        const Frame& frame, double t, const GradcheckOptions& options = {},
                                        const AnalyticGradientFn& analytic = {});

struct GradcheckProblem {
  GaussianSet<double> scene;
  DeformationField<double> field;
  Frame frame;
};

/// Fixed test problems: "tiny" is 3 Gaussians on an 8x8 image with C = 4;
/// "small" is 12 Gaussians on 16x16 with C = 8. The network is width 8,
/// depth 2 with a randomised head so every parameter receives gradient.
[[nodiscard]] GradcheckProblem make_gradcheck_problem(const std::string& size, std::uint64_t seed = 7);

}  // namespace dgd
