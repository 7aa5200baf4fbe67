#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hdcn/autodiff.hpp"

namespace hdcn::ad {

// Named parameters with Adam moment buffers. Parameter addresses are stable
// for the lifetime of the store (graphs hold raw pointers into it).
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  // Zero-initialized. Throws if the name is taken.
  Parameter& add(const std::string& name, Shape shape);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;

  void zero_grad();
  double grad_norm() const;
  // Rescales gradients so their global L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Bias-corrected Adam update over every parameter, then zeroes gradients and
// increments the step counter.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in is the column count of a
// matrix, or the length of a vector.
void init_fan_in(Parameter& p, std::mt19937_64& rng);
void init_uniform(Parameter& p, double bound, std::mt19937_64& rng);

}  // namespace hdcn::ad
