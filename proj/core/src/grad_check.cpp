#include "focovil/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "focovil/errors.hpp"

namespace focovil::ad {

GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> inputs,
                           const GradCheckOptions& opts) {
  for (auto& in : inputs) {
    if (!in.requires_grad() || !in.is_leaf()) {
      throw ShapeMismatch("grad_check inputs must be parameter leaves");
    }
    in.zero_grad();
  }
  const Tensor out = f();
  if (out.shape().size() != 1) throw ShapeMismatch("grad_check needs a scalar function");
  out.backward();

  std::vector<Matrix> analytic;
  analytic.reserve(inputs.size());
  for (auto& in : inputs) analytic.push_back(in.grad());

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix& x = inputs[k].mutable_value();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double saved = x(r, c);
        x(r, c) = saved + opts.h;
        const double up = f().item();
        x(r, c) = saved - opts.h;
        const double down = f().item();
        x(r, c) = saved;

        const double numeric = (up - down) / (2.0 * opts.h);
        const double a = analytic[k](r, c);
        const double abs_err = std::abs(a - numeric);
        const double rel =
            abs_err / std::max({std::abs(a), std::abs(numeric), opts.scale_floor});
        ++report.checked;
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel > opts.tol && report.failures.size() < opts.max_failures) {
          report.failures.push_back({k, r, c, a, numeric, rel});
        }
      }
    }
  }
  for (auto& in : inputs) in.zero_grad();
  return report;
}

}  // namespace focovil::ad
