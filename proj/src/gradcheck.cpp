#include "hdcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdcn::ad {

namespace {

double eval_loss(const std::function<Var(Graph&)>& loss_fn) {
  Graph g(false);
  const double v = loss_fn(g).scalar();
  if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite loss value");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Graph&)>& loss_fn, ParamStore& params,
                           double epsilon) {
  if (!(epsilon >= 1e-5 && epsilon <= 1e-3)) {
    throw std::invalid_argument("grad_check: epsilon must lie in [1e-5, 1e-3]");
  }
  params.zero_grad();
  {
    Graph g(true);
    Var loss = loss_fn(g);
    if (!std::isfinite(loss.scalar())) throw std::runtime_error("grad_check: non-finite loss value");
    g.backward(loss);
  }

  GradCheckResult res;
  for (Parameter* p : params.all()) {
    const std::vector<double> analytic = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      if (!std::isfinite(analytic[i])) {
        throw std::runtime_error("grad_check: non-finite gradient in " + p->name);
      }
      const double orig = p->value[i];
      p->value[i] = orig + epsilon;
      const double up = eval_loss(loss_fn);
      p->value[i] = orig - epsilon;
      const double down = eval_loss(loss_fn);
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      const double err = std::abs(analytic[i] - numeric) / denom;
      ++res.entries_checked;
      if (err > res.max_rel_error || res.worst_param.empty()) {
        if (err >= res.max_rel_error) {
          res.max_rel_error = err;
          res.worst_param = p->name;
          res.worst_index = i;
        }
      }
    }
  }
  params.zero_grad();
  return res;
}

}  // namespace hdcn::ad
