#pragma once

// Central finite-difference verification of the backward kernels. Run it
// with T = double; float loses too many digits for the tolerances used.

#include <cmath>
#include <string>
#include <vector>

#include "mann/nn/tensor.hpp"

namespace mann::nn {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_parameter;
  double max_rel_err = 0.0;

  bool within(double tol) const { return max_rel_err < tol; }
};

// make_loss rebuilds the forward graph and returns the scalar loss; it is
// re-evaluated twice per parameter component. Relative error uses a small
// absolute floor so near-zero gradients do not blow up the ratio.
template <typename T, typename F>
GradCheckReport grad_check(const std::vector<Parameter<T>*>& params, F&& make_loss,
                           T h = static_cast<T>(1e-5)) {
  for (Parameter<T>* p : params) p->value.zero_grad();
  Tensor<T> loss = make_loss();
  loss.backward();

  GradCheckReport report;
  for (Parameter<T>* p : params) {
    std::vector<T> analytic = p->value.grad();
    GradCheckEntry entry{p->name, 0.0};
    auto& vals = p->value.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      T saved = vals[i];
      T plus, minus;
      {
        NoGradGuard ng;
        vals[i] = saved + h;
        plus = make_loss().item();
        vals[i] = saved - h;
        minus = make_loss().item();
        vals[i] = saved;
      }
      double numeric = (static_cast<double>(plus) - static_cast<double>(minus)) /
                       (2.0 * static_cast<double>(h));
      double a = static_cast<double>(analytic[i]);
      double denom = std::max(std::abs(a) + std::abs(numeric), 1e-4);
      double rel = std::abs(a - numeric) / denom;
      if (rel > entry.max_rel_err) entry.max_rel_err = rel;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_parameter.push_back(std::move(entry));
    p->value.zero_grad();
  }
  return report;
}

}  // namespace mann::nn
