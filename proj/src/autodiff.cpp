#include "hdcn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hdcn::ad {

std::vector<std::size_t> Shape::dims() const {
  if (rank_ == 0) return {};
  if (rank_ == 1) return {rows_};
  return {rows_, cols_};
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  if (rank_ >= 1) os << rows_;
  if (rank_ == 2) os << 'x' << cols_;
  os << ']';
  return os.str();
}

Graph& Var::graph() const {
  if (!graph_) throw std::logic_error("use of an unbound Var");
  return *graph_;
}
const Shape& Var::shape() const { return graph().shape(id_); }
std::span<const double> Var::value() const { return graph().value(id_); }
double Var::scalar() const {
  auto v = value();
  if (v.size() != 1) throw ShapeError("scalar() on Var of shape " + shape().str());
  return v[0];
}
std::span<const double> Var::grad() const { return graph().grad(id_); }

Graph::Graph(bool track_gradients, std::uint64_t seed) : tracking_(track_gradients), rng_(seed) {
  nodes_.reserve(1024);
}

Var Graph::constant(Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) {
    throw ShapeError("constant: " + std::to_string(values.size()) + " values for shape " +
                     shape.str());
  }
  Node n;
  n.shape = shape;
  n.value = std::move(values);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::param(Parameter& p) {
  Node n;
  n.shape = p.shape;
  n.param = &p;
  n.requires_grad = tracking_;
  if (p.grad.size() != p.value.size()) p.grad.assign(p.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::make(Shape shape, std::vector<double> values, std::initializer_list<Var> inputs,
                Backward backward) {
  return make(shape, std::move(values), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Graph::make(Shape shape, std::vector<double> values, std::span<const Var> inputs,
                Backward backward) {
  Node n;
  n.shape = shape;
  n.value = std::move(values);
  if (tracking_) {
    for (const Var& in : inputs) {
      if (in.graph_ != this) throw std::logic_error("op mixes Vars from different graphs");
      if (nodes_[in.id_].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const double* Graph::value_ptr(int id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value.data() : n.value.data();
}

std::span<const double> Graph::value(int id) const {
  const Node& n = nodes_[id];
  return n.param ? std::span<const double>(n.param->value) : std::span<const double>(n.value);
}

double* Graph::grad_ptr(int id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad.data();
  if (n.grad.empty()) n.grad.assign(n.shape.size(), 0.0);
  return n.grad.data();
}

std::span<const double> Graph::grad(int id) const {
  const Node& n = nodes_[id];
  return n.param ? std::span<const double>(n.param->grad) : std::span<const double>(n.grad);
}

void Graph::truncate(std::size_t mark) {
  if (backward_done_) throw std::logic_error("truncate after backward");
  if (mark < nodes_.size()) nodes_.resize(mark);
}

void Graph::backward(Var root, double seed) {
  if (!tracking_) throw std::logic_error("backward on a graph built without gradient tracking");
  if (backward_done_) throw std::logic_error("backward already ran on this graph");
  if (root.graph_ != this) throw std::logic_error("backward root belongs to another graph");
  if (root.size() != 1) throw ShapeError("backward root must be scalar, got " + root.shape().str());
  backward_done_ = true;
  if (!nodes_[root.id_].requires_grad) return;
  grad_ptr(root.id_)[0] += seed;
  for (int id = root.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this);
  }
}

namespace {

void require_same(const char* op, Var a, Var b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

void require_vector(const char* op, Var a) {
  if (a.shape().rank() != 1) {
    throw ShapeError(std::string(op) + ": expected a vector, got " + a.shape().str());
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = a.graph();
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const int ia = a.id(), ib = b.id();
  if (sa.rank() == 2 && sb.rank() == 2) {
    const std::size_t m = sa.rows(), k = sa.cols(), n = sb.cols();
    if (sb.rows() != k) throw ShapeError("matmul: shape mismatch " + sa.str() + " x " + sb.str());
    const double* A = a.value().data();
    const double* B = b.value().data();
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        const double* brow = B + p * n;
        double* crow = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    const int io = static_cast<int>(g.size());
    return g.make(Shape(m, n), std::move(c), {a, b}, [=](Graph& gr) {
      const double* dc = gr.grad(io).data();
      const double* A = gr.value_ptr(ia);
      const double* B = gr.value_ptr(ib);
      if (gr.requires_grad(ia)) {
        double* dA = gr.grad_ptr(ia);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += dc[i * n + j] * B[p * n + j];
            dA[i * k + p] += s;
          }
      }
      if (gr.requires_grad(ib)) {
        double* dB = gr.grad_ptr(ib);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += av * dc[i * n + j];
          }
      }
    });
  }
  if (sa.rank() == 2 && sb.rank() == 1) {
    const std::size_t m = sa.rows(), k = sa.cols();
    if (sb.rows() != k) throw ShapeError("matmul: shape mismatch " + sa.str() + " x " + sb.str());
    const double* A = a.value().data();
    const double* x = b.value().data();
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = A + i * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += row[p] * x[p];
      y[i] = s;
    }
    const int io = static_cast<int>(g.size());
    return g.make(Shape(m), std::move(y), {a, b}, [=](Graph& gr) {
      const double* dy = gr.grad(io).data();
      const double* A = gr.value_ptr(ia);
      const double* x = gr.value_ptr(ib);
      if (gr.requires_grad(ia)) {
        double* dA = gr.grad_ptr(ia);
        for (std::size_t i = 0; i < m; ++i) {
          const double d = dy[i];
          double* row = dA + i * k;
          for (std::size_t p = 0; p < k; ++p) row[p] += d * x[p];
        }
      }
      if (gr.requires_grad(ib)) {
        double* dx = gr.grad_ptr(ib);
        for (std::size_t i = 0; i < m; ++i) {
          const double d = dy[i];
          const double* row = A + i * k;
          for (std::size_t p = 0; p < k; ++p) dx[p] += d * row[p];
        }
      }
    });
  }
  if (sa.rank() == 1 && sb.rank() == 2) {
    const std::size_t k = sb.rows(), n = sb.cols();
    if (sa.rows() != k) throw ShapeError("matmul: shape mismatch " + sa.str() + " x " + sb.str());
    const double* x = a.value().data();
    const double* B = b.value().data();
    std::vector<double> y(n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[p];
      const double* row = B + p * n;
      for (std::size_t j = 0; j < n; ++j) y[j] += xv * row[j];
    }
    const int io = static_cast<int>(g.size());
    return g.make(Shape(n), std::move(y), {a, b}, [=](Graph& gr) {
      const double* dy = gr.grad(io).data();
      const double* x = gr.value_ptr(ia);
      const double* B = gr.value_ptr(ib);
      if (gr.requires_grad(ia)) {
        double* dx = gr.grad_ptr(ia);
        for (std::size_t p = 0; p < k; ++p) {
          const double* row = B + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += row[j] * dy[j];
          dx[p] += s;
        }
      }
      if (gr.requires_grad(ib)) {
        double* dB = gr.grad_ptr(ib);
        for (std::size_t p = 0; p < k; ++p) {
          const double xv = x[p];
          double* row = dB + p * n;
          for (std::size_t j = 0; j < n; ++j) row[j] += xv * dy[j];
        }
      }
    });
  }
  throw ShapeError("matmul: unsupported ranks " + sa.str() + " x " + sb.str());
}

Var add(Var a, Var b) {
  require_same("add", a, b);
  Graph& g = a.graph();
  const auto x = a.value(), y = b.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  const int ia = a.id(), ib = b.id(), io = static_cast<int>(g.size());
  const std::size_t n = out.size();
  return g.make(a.shape(), std::move(out), {a, b}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    if (gr.requires_grad(ia)) {
      double* da = gr.grad_ptr(ia);
      for (std::size_t i = 0; i < n; ++i) da[i] += d[i];
    }
    if (gr.requires_grad(ib)) {
      double* db = gr.grad_ptr(ib);
      for (std::size_t i = 0; i < n; ++i) db[i] += d[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  Graph& g = a.graph();
  const auto x = a.value(), y = b.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  const int ia = a.id(), ib = b.id(), io = static_cast<int>(g.size());
  const std::size_t n = out.size();
  return g.make(a.shape(), std::move(out), {a, b}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    if (gr.requires_grad(ia)) {
      double* da = gr.grad_ptr(ia);
      for (std::size_t i = 0; i < n; ++i) da[i] += d[i];
    }
    if (gr.requires_grad(ib)) {
      double* db = gr.grad_ptr(ib);
      for (std::size_t i = 0; i < n; ++i) db[i] -= d[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  Graph& g = a.graph();
  const auto x = a.value(), y = b.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  const int ia = a.id(), ib = b.id(), io = static_cast<int>(g.size());
  const std::size_t n = out.size();
  return g.make(a.shape(), std::move(out), {a, b}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    const double* xa = gr.value_ptr(ia);
    const double* xb = gr.value_ptr(ib);
    if (gr.requires_grad(ia)) {
      double* da = gr.grad_ptr(ia);
      for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * xb[i];
    }
    if (gr.requires_grad(ib)) {
      double* db = gr.grad_ptr(ib);
      for (std::size_t i = 0; i < n; ++i) db[i] += d[i] * xa[i];
    }
  });
}

Var affine(Var a, double factor, double offset) {
  Graph& g = a.graph();
  const auto x = a.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor + offset;
  const int ia = a.id(), io = static_cast<int>(g.size());
  const std::size_t n = out.size();
  return g.make(a.shape(), std::move(out), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * factor;
  });
}

Var scale(Var a, double factor) { return affine(a, factor, 0.0); }

Var mul_scalar(Var a, Var s) {
  if (s.size() != 1) throw ShapeError("mul_scalar: scalar operand has shape " + s.shape().str());
  Graph& g = a.graph();
  const auto x = a.value();
  const double sv = s.value()[0];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * sv;
  const int ia = a.id(), is = s.id(), io = static_cast<int>(g.size());
  const std::size_t n = out.size();
  return g.make(a.shape(), std::move(out), {a, s}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    const double* xa = gr.value_ptr(ia);
    const double sv = gr.value_ptr(is)[0];
    if (gr.requires_grad(ia)) {
      double* da = gr.grad_ptr(ia);
      for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * sv;
    }
    if (gr.requires_grad(is)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += d[i] * xa[i];
      gr.grad_ptr(is)[0] += acc;
    }
  });
}

Var dot(Var a, Var b) {
  require_vector("dot", a);
  require_same("dot", a, b);
  Graph& g = a.graph();
  const auto x = a.value(), y = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  const int ia = a.id(), ib = b.id(), io = static_cast<int>(g.size());
  const std::size_t n = x.size();
  return g.make(Shape(1), {s}, {a, b}, [=](Graph& gr) {
    const double d = gr.grad(io)[0];
    const double* xa = gr.value_ptr(ia);
    const double* xb = gr.value_ptr(ib);
    if (gr.requires_grad(ia)) {
      double* da = gr.grad_ptr(ia);
      for (std::size_t i = 0; i < n; ++i) da[i] += d * xb[i];
    }
    if (gr.requires_grad(ib)) {
      double* db = gr.grad_ptr(ib);
      for (std::size_t i = 0; i < n; ++i) db[i] += d * xa[i];
    }
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Graph& g = parts[0].graph();
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::vector<double> out;
  for (const Var& p : parts) {
    require_vector("concat", p);
    ids.push_back(p.id());
    offsets.push_back(out.size());
    const auto v = p.value();
    out.insert(out.end(), v.begin(), v.end());
  }
  const int io = static_cast<int>(g.size());
  const std::size_t n = out.size();
  return g.make(Shape(n), std::move(out), parts, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!gr.requires_grad(ids[k])) continue;
      double* dp = gr.grad_ptr(ids[k]);
      const std::size_t len = gr.shape(ids[k]).size();
      for (std::size_t i = 0; i < len; ++i) dp[i] += d[offsets[k] + i];
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  Graph& g = rows[0].graph();
  const std::size_t width = rows[0].size();
  std::vector<int> ids;
  std::vector<double> out;
  out.reserve(rows.size() * width);
  for (const Var& r : rows) {
    require_vector("stack_rows", r);
    if (r.size() != width) {
      throw ShapeError("stack_rows: row widths differ " + rows[0].shape().str() + " vs " +
                       r.shape().str());
    }
    ids.push_back(r.id());
    const auto v = r.value();
    out.insert(out.end(), v.begin(), v.end());
  }
  const int io = static_cast<int>(g.size());
  return g.make(Shape(rows.size(), width), std::move(out), rows, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!gr.requires_grad(ids[k])) continue;
      double* dp = gr.grad_ptr(ids[k]);
      for (std::size_t i = 0; i < width; ++i) dp[i] += d[k * width + i];
    }
  });
}

Var slice(Var a, std::size_t start, std::size_t length) {
  require_vector("slice", a);
  if (start + length > a.size()) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") outside " + a.shape().str());
  }
  Graph& g = a.graph();
  const auto x = a.value();
  std::vector<double> out(x.begin() + start, x.begin() + start + length);
  const int ia = a.id(), io = static_cast<int>(g.size());
  return g.make(Shape(length), std::move(out), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    double* da = gr.grad_ptr(ia) + start;
    for (std::size_t i = 0; i < length; ++i) da[i] += d[i];
  });
}

Var sigmoid(Var a) {
  Graph& g = a.graph();
  const auto x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i])) : std::exp(x[i]) / (1.0 + std::exp(x[i]));
  }
  const int ia = a.id(), io = static_cast<int>(g.size());
  const std::size_t n = y.size();
  return g.make(a.shape(), std::move(y), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    const double* yv = gr.value_ptr(io);
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * yv[i] * (1.0 - yv[i]);
  });
}

Var tanh(Var a) {
  Graph& g = a.graph();
  const auto x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  const int ia = a.id(), io = static_cast<int>(g.size());
  const std::size_t n = y.size();
  return g.make(a.shape(), std::move(y), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    const double* yv = gr.value_ptr(io);
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * (1.0 - yv[i] * yv[i]);
  });
}

Var log(Var a) {
  Graph& g = a.graph();
  const auto x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::log(x[i]);
  const int ia = a.id(), io = static_cast<int>(g.size());
  const std::size_t n = y.size();
  return g.make(a.shape(), std::move(y), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    const double* xv = gr.value_ptr(ia);
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < n; ++i) da[i] += d[i] / xv[i];
  });
}

Var sum(Var a) {
  Graph& g = a.graph();
  double s = 0.0;
  for (double v : a.value()) s += v;
  const int ia = a.id(), io = static_cast<int>(g.size());
  const std::size_t n = a.size();
  return g.make(Shape(1), {s}, {a}, [=](Graph& gr) {
    const double d = gr.grad(io)[0];
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < n; ++i) da[i] += d;
  });
}

Var mean(Var a) {
  if (a.size() == 0) throw ShapeError("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var pick(Var a, std::size_t index) {
  if (index >= a.size()) {
    throw ShapeError("pick: index " + std::to_string(index) + " outside " + a.shape().str());
  }
  Graph& g = a.graph();
  const double v = a.value()[index];
  const int ia = a.id(), io = static_cast<int>(g.size());
  return g.make(Shape(1), {v}, {a}, [=](Graph& gr) {
    gr.grad_ptr(ia)[index] += gr.grad(io)[0];
  });
}

Var embedding_lookup(Graph& g, Parameter& table, std::size_t row) {
  if (table.shape.rank() != 2) {
    throw ShapeError("embedding_lookup: table " + table.name + " is not a matrix");
  }
  const std::size_t width = table.shape.cols();
  if (row >= table.shape.rows()) {
    throw ShapeError("embedding_lookup: row " + std::to_string(row) + " outside " +
                     table.shape.str());
  }
  std::vector<double> out(table.value.begin() + row * width,
                          table.value.begin() + (row + 1) * width);
  Var leaf = g.param(table);
  const int io = static_cast<int>(g.size());
  Parameter* tp = &table;
  return g.make(Shape(width), std::move(out), {leaf}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    double* dt = tp->grad.data() + row * width;
    for (std::size_t i = 0; i < width; ++i) dt[i] += d[i];
  });
}

Var masked_softmax(Var logits, const std::vector<bool>& mask) {
  require_vector("masked_softmax", logits);
  const std::size_t n = logits.size();
  if (!mask.empty() && mask.size() != n) {
    throw ShapeError("masked_softmax: mask length " + std::to_string(mask.size()) +
                     " vs logits " + logits.shape().str());
  }
  const auto x = logits.value();
  double mx = -INFINITY;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.empty() || mask[i]) {
      mx = std::max(mx, x[i]);
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("masked_softmax: every position is masked");
  std::vector<double> y(n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.empty() || mask[i]) {
      y[i] = std::exp(x[i] - mx);
      z += y[i];
    }
  }
  for (double& v : y) v /= z;
  Graph& g = logits.graph();
  const int ia = logits.id(), io = static_cast<int>(g.size());
  return g.make(logits.shape(), std::move(y), {logits}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    const double* yv = gr.value_ptr(io);
    double inner = 0.0;
    for (std::size_t i = 0; i < n; ++i) inner += d[i] * yv[i];
    double* da = gr.grad_ptr(ia);
    // Masked entries have y = 0 and therefore receive no gradient.
    for (std::size_t i = 0; i < n; ++i) da[i] += yv[i] * (d[i] - inner);
  });
}

Var softmax(Var logits) { return masked_softmax(logits, {}); }

Var max_pool_rows(Var m, const std::vector<bool>& row_mask) {
  if (m.shape().rank() != 2) throw ShapeError("max_pool_rows: expected a matrix, got " + m.shape().str());
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  if (!row_mask.empty() && row_mask.size() != r) {
    throw ShapeError("max_pool_rows: mask length " + std::to_string(row_mask.size()) +
                     " vs " + m.shape().str());
  }
  const auto x = m.value();
  std::vector<double> out(c, -INFINITY);
  std::vector<std::size_t> arg(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    if (!row_mask.empty() && !row_mask[i]) continue;
    for (std::size_t j = 0; j < c; ++j) {
      if (x[i * c + j] > out[j]) {
        out[j] = x[i * c + j];
        arg[j] = i;
      }
    }
  }
  if (c > 0 && arg[0] == r) throw std::invalid_argument("max_pool_rows: no unmasked rows");
  Graph& g = m.graph();
  const int ia = m.id(), io = static_cast<int>(g.size());
  return g.make(Shape(c), std::move(out), {m}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    double* da = gr.grad_ptr(ia);
    for (std::size_t j = 0; j < c; ++j) da[arg[j] * c + j] += d[j];
  });
}

Var dropout(Var a, double rate, bool train, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) return a;
  const std::size_t n = a.size();
  std::vector<double> keep(n);
  std::bernoulli_distribution bern(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i) keep[i] = bern(rng) ? s : 0.0;
  const auto x = a.value();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * keep[i];
  Graph& g = a.graph();
  const int ia = a.id(), io = static_cast<int>(g.size());
  return g.make(a.shape(), std::move(y), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * keep[i];
  });
}

Var dropout(Var a, double rate, bool train, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return dropout(a, rate, train, rng);
}

Var scatter_add(Var a, std::span<const int> index, std::size_t out_size) {
  require_vector("scatter_add", a);
  if (index.size() != a.size()) {
    throw ShapeError("scatter_add: " + std::to_string(index.size()) + " indices for " +
                     a.shape().str());
  }
  const auto x = a.value();
  std::vector<double> out(out_size, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= out_size) {
      throw ShapeError("scatter_add: index " + std::to_string(index[i]) + " outside [0, " +
                       std::to_string(out_size) + ")");
    }
    out[index[i]] += x[i];
  }
  Graph& g = a.graph();
  const int ia = a.id(), io = static_cast<int>(g.size());
  std::vector<int> idx(index.begin(), index.end());
  return g.make(Shape(out_size), std::move(out), {a}, [=](Graph& gr) {
    const double* d = gr.grad(io).data();
    double* da = gr.grad_ptr(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) da[i] += d[idx[i]];
  });
}

}  // namespace hdcn::ad
