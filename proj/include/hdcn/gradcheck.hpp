#pragma once

#include <functional>
#include <string>

#include "hdcn/autodiff.hpp"
#include "hdcn/params.hpp"

namespace hdcn::ad {

struct GradCheckResult {
  // max over entries of |g_ad - g_fd| / max(1, |g_ad|, |g_fd|)
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Builds a scalar loss with `loss_fn` on a fresh graph, backpropagates, then
// compares every parameter entry against central finite differences.
// loss_fn must be deterministic. epsilon must lie in [1e-5, 1e-3].
// Parameter gradients are left zeroed on return.
GradCheckResult grad_check(const std::function<Var(Graph&)>& loss_fn, ParamStore& params,
                           double epsilon = 1e-5);

}  // namespace hdcn::ad
