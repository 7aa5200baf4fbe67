#pragma once

// Dense tensors with tape-based reverse-mode differentiation.
//
// A Graph owns every node built during one forward pass. Ops are free
// functions taking Var handles; each op records a backward closure when the
// graph tracks gradients and at least one input depends on a parameter.
// Parameter leaves alias the ParamStore buffers, so backward accumulates
// directly into Parameter::grad.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdcn::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rank-1 (vector) or rank-2 (row-major matrix) shape.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::size_t n) : rows_(n), cols_(1), rank_(1) {}
  Shape(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), rank_(2) {}

  std::size_t rank() const { return rank_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rank_ == 0 ? 0 : rows_ * cols_; }
  std::vector<std::size_t> dims() const;
  std::string str() const;

  bool operator==(const Shape& o) const {
    return rank_ == o.rank_ && rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t rank_ = 0;
};

struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  // Adam moments.
  std::vector<double> m;
  std::vector<double> v;
};

class Graph;

class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const;
  int id() const { return id_; }
  const Shape& shape() const;
  std::size_t size() const { return shape().size(); }
  std::span<const double> value() const;
  double scalar() const;
  double at(std::size_t i) const { return value()[i]; }
  // Empty until backward reaches this node.
  std::span<const double> grad() const;

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using Backward = std::function<void(Graph&)>;

  explicit Graph(bool track_gradients = true, std::uint64_t seed = 0);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Shape shape, std::vector<double> values);
  Var scalar(double v) { return constant(Shape(1), {v}); }
  Var zeros(Shape shape) { return constant(shape, std::vector<double>(shape.size(), 0.0)); }
  Var param(Parameter& p);

  // Runs reverse accumulation from a scalar root. A graph can be
  // differentiated once; a second call throws std::logic_error.
  void backward(Var root, double seed = 1.0);

  bool tracking() const { return tracking_; }
  bool backward_done() const { return backward_done_; }
  std::size_t size() const { return nodes_.size(); }
  // Drops every node created after the graph had `mark` nodes. Vars pointing
  // past the mark become invalid. Only allowed before backward.
  void truncate(std::size_t mark);
  std::mt19937_64& rng() { return rng_; }

  // Low-level interface used by op implementations.
  Var make(Shape shape, std::vector<double> values, std::initializer_list<Var> inputs,
           Backward backward);
  Var make(Shape shape, std::vector<double> values, std::span<const Var> inputs,
           Backward backward);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Shape& shape(int id) const { return nodes_[id].shape; }
  const double* value_ptr(int id) const;
  std::span<const double> value(int id) const;
  // Gradient buffer of a node, allocated (zeroed) on first access.
  double* grad_ptr(int id);
  std::span<const double> grad(int id) const;
  Var handle(int id) { return Var(this, id); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  bool tracking_;
  bool backward_done_ = false;
  std::mt19937_64 rng_;
};

// ---- ops ----------------------------------------------------------------

// (m x k)(k x n), (m x k)(k), (k)(k x n). Rank-1 x rank-1 is rejected; use dot.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// a * factor + offset, elementwise.
Var affine(Var a, double factor, double offset);
// Vector times a size-1 Var.
Var mul_scalar(Var a, Var s);
Var dot(Var a, Var b);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var stack_rows(std::span<const Var> rows);
Var slice(Var a, std::size_t start, std::size_t length);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);
Var sum(Var a);
Var mean(Var a);
Var pick(Var a, std::size_t index);
Var embedding_lookup(Graph& g, Parameter& table, std::size_t row);
// Softmax over a rank-1 Var; masked entries get exactly zero probability and
// zero gradient. Throws if no entry is unmasked.
Var masked_softmax(Var logits, const std::vector<bool>& mask);
Var softmax(Var logits);
// Column-wise max over the rows whose mask entry is true (all rows if the
// mask is empty). Gradient flows to the first maximal row per column.
Var max_pool_rows(Var m, const std::vector<bool>& row_mask = {});
// Inverted dropout. Identity when train is false or rate is 0.
Var dropout(Var a, double rate, bool train, std::mt19937_64& rng);
Var dropout(Var a, double rate, bool train, std::uint64_t seed);
// out[index[i]] += a[i]
Var scatter_add(Var a, std::span<const int> index, std::size_t out_size);

}  // namespace hdcn::ad
