#include "hdcn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace hdcn::ad {

ParamStore::ParamStore(const ParamStore& other)
    : params_(other.params_), index_(other.index_), step_(other.step_) {}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    params_ = other.params_;
    index_ = other.index_;
    step_ = other.step_;
  }
  return *this;
}

Parameter& ParamStore::add(const std::string& name, Shape shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.shape = shape;
  p.value.assign(shape.size(), 0.0);
  p.grad.assign(shape.size(), 0.0);
  p.m.assign(shape.size(), 0.0);
  p.v.assign(shape.size(), 0.0);
  params_.push_back(std::move(p));
  index_[name] = params_.size() - 1;
  return params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_)
    for (double g : p.grad) s += g * g;
  return std::sqrt(s);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& p : params_)
      for (double& g : p.grad) g *= f;
  }
  return norm;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  const std::int64_t t = store.step() + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (Parameter* p : store.all()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      p->m[i] = cfg.beta1 * p->m[i] + (1.0 - cfg.beta1) * g;
      p->v[i] = cfg.beta2 * p->v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p->m[i] / c1;
      const double vhat = p->v[i] / c2;
      p->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      p->grad[i] = 0.0;
    }
  }
  store.set_step(t);
}

void init_uniform(Parameter& p, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : p.value) v = dist(rng);
}

void init_fan_in(Parameter& p, std::mt19937_64& rng) {
  const std::size_t fan_in = p.shape.rank() == 2 ? p.shape.cols() : p.shape.rows();
  init_uniform(p, 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in)), rng);
}

}  // namespace hdcn::ad
