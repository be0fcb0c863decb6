#include "gqpp/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "gqpp/data_model.hpp"
#include "gqpp/error.hpp"

namespace gqpp::ad {
namespace {

using NodePtr = std::shared_ptr<Node>;

void require_rank2(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (t.shape().size() != 2) throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_rank2(a, op);
  require_rank2(b, op);
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

bool needs(const NodePtr& n) { return n->requires_grad; }

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  return from_shape({rows, cols}, std::move(data), requires_grad);
}

Tensor Tensor::from_shape(Shape shape, std::vector<double> data, bool requires_grad) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
    n *= d;
  }
  if (n != data.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " + shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from(1, 1, {value}, requires_grad); }

std::size_t Tensor::rows() const { return node_->shape.size() == 2 ? node_->shape[0] : 1; }

std::size_t Tensor::cols() const { return node_->shape.empty() ? 1 : node_->shape.back(); }

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

void Tape::record(std::function<void()> backward) {
  if (recording_) closures_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& loss) {
  if (!recording_) throw ContractError("backward on a non-recording tape");
  if (consumed_) throw ContractError("backward already ran for this tape");
  if (loss.size() != 1) throw ContractError("backward needs a scalar loss, got " + shape_string(loss.shape()));
  consumed_ = true;
  if (!loss.requires_grad()) return;
  loss.node()->grad[0] += 1.0;
  for (auto it = closures_.rbegin(); it != closures_.rend(); ++it) (*it)();
  closures_.clear();
}

Tensor make_result(Tape& tape, Shape shape, std::initializer_list<const Tensor*> inputs) {
  bool rg = false;
  if (tape.recording())
    for (const Tensor* t : inputs) rg = rg || t->requires_grad();
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(n, 0.0);
  node->requires_grad = rg;
  if (rg) node->grad.assign(n, 0.0);
  return Tensor(std::move(node));
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ShapeError("matmul: shape mismatch " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  Tensor out = make_result(tape, {m, n}, {&a, &b});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = out.node()->value.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) C[i * n + j] += aip * B[p * n + j];
    }
  if (out.requires_grad()) {
    tape.record([an = a.node(), bn = b.node(), on = out.node(), m, k, n] {
      const double* G = on->grad.data();
      if (needs(an))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * bn->value[p * n + j];
            an->grad[i * k + p] += s;
          }
      if (needs(bn))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = an->value[i * k + p];
            for (std::size_t j = 0; j < n; ++j) bn->grad[p * n + j] += aip * G[i * n + j];
          }
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename DA, typename DB>
Tensor binary_elementwise(Tape& tape, const Tensor& a, const Tensor& b, const char* op, Fwd fwd, DA da, DB db) {
  require_same_shape(a, b, op);
  Tensor out = make_result(tape, a.shape(), {&a, &b});
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(a.data()[i], b.data()[i]);
  if (out.requires_grad()) {
    tape.record([an = a.node(), bn = b.node(), on = out.node(), da, db] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const double g = on->grad[i];
        if (needs(an)) an->grad[i] += g * da(an->value[i], bn->value[i]);
        if (needs(bn)) bn->grad[i] += g * db(an->value[i], bn->value[i]);
      }
    });
  }
  return out;
}

template <typename Fwd, typename Deriv>
Tensor unary_elementwise(Tape& tape, const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  require_rank2(a, op);
  Tensor out = make_result(tape, a.shape(), {&a});
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(a.data()[i]);
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), deriv] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i] * deriv(an->value[i]);
    });
  }
  return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary_elementwise(
      tape, a, "scale", [factor](double x) { return x * factor; }, [factor](double) { return factor; });
}

Tensor add_bias(Tape& tape, const Tensor& a, const Tensor& bias) {
  require_rank2(a, "add_bias");
  require_rank2(bias, "add_bias");
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeError("add_bias: shape mismatch " + shape_string(a.shape()) + " + " + shape_string(bias.shape()));
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = make_result(tape, a.shape(), {&a, &bias});
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = a.data()[i * n + j] + bias.data()[j];
  if (out.requires_grad()) {
    tape.record([an = a.node(), bn = bias.node(), on = out.node(), m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = on->grad[i * n + j];
          if (needs(an)) an->grad[i * n + j] += g;
          if (needs(bn)) bn->grad[j] += g;
        }
    });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = make_result(tape, {n, m}, {&a});
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = a.data()[i * n + j];
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += on->grad[j * m + i];
    });
  }
  return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& a, std::span<const std::uint8_t> key_mask) {
  require_rank2(a, "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (!key_mask.empty() && key_mask.size() != n)
    throw ShapeError("softmax_rows: key mask of length " + std::to_string(key_mask.size()) + " for " +
                     shape_string(a.shape()));
  std::vector<std::uint8_t> mask(key_mask.begin(), key_mask.end());
  if (mask.empty()) mask.assign(n, 1);
  Tensor out = make_result(tape, a.shape(), {&a});
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j)
      if (mask[j]) mx = std::max(mx, row[j]);
    if (mx == -INFINITY) continue;  // no valid key: row stays zero
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = mask[j] ? std::exp(row[j] - mx) : 0.0;
      y[i * n + j] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] /= sum;
  }
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        const double* yr = on->value.data() + i * n;
        const double* gr = on->grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
        for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank2(a, "layer_norm");
  require_rank2(gain, "layer_norm");
  require_rank2(bias, "layer_norm");
  const std::size_t m = a.rows(), n = a.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
    throw ShapeError("layer_norm: gain/bias " + shape_string(gain.shape()) + "/" + shape_string(bias.shape()) +
                     " do not match " + shape_string(a.shape()));
  Tensor out = make_result(tape, a.shape(), {&a, &gain, &bias});
  std::vector<double> xhat(m * n), inv_sd(m);
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_sd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_sd[i];
      y[i * n + j] = xhat[i * n + j] * gain.data()[j] + bias.data()[j];
    }
  }
  if (out.requires_grad()) {
    tape.record([an = a.node(), gn = gain.node(), bn = bias.node(), on = out.node(), xhat = std::move(xhat),
                 inv_sd = std::move(inv_sd), m, n] {
      std::vector<double> dxhat(n);
      for (std::size_t i = 0; i < m; ++i) {
        const double* g = on->grad.data() + i * n;
        double mean_d = 0.0, mean_dx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (needs(gn)) gn->grad[j] += g[j] * xhat[i * n + j];
          if (needs(bn)) bn->grad[j] += g[j];
          dxhat[j] = g[j] * gn->value[j];
          mean_d += dxhat[j];
          mean_dx += dxhat[j] * xhat[i * n + j];
        }
        if (!needs(an)) continue;
        mean_d /= static_cast<double>(n);
        mean_dx /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j)
          an->grad[i * n + j] += inv_sd[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx);
      }
    });
  }
  return out;
}

Tensor gelu(Tape& tape, const Tensor& a) {
  static const double c = std::sqrt(2.0 / std::numbers::pi);
  return unary_elementwise(
      tape, a, "gelu",
      [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x))); },
      [](double x) {
        const double t = std::tanh(c * (x + 0.044715 * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x);
      });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor mean(Tape& tape, const Tensor& a) {
  Tensor out = make_result(tape, {1, 1}, {&a});
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double n = static_cast<double>(a.size());
  out.node()->value[0] = s / n;
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), n] {
      const double g = on->grad[0] / n;
      for (auto& v : an->grad) v += g;
    });
  }
  return out;
}

Tensor mean_rows(Tape& tape, const Tensor& a) {
  require_rank2(a, "mean_rows");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = make_result(tape, {1, n}, {&a});
  auto& y = out.node()->value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j] += a.data()[i * n + j];
  for (auto& v : y) v /= static_cast<double>(m);
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += on->grad[j] / static_cast<double>(m);
    });
  }
  return out;
}

Tensor weighted_sum(Tape& tape, const Tensor& a, std::span<const double> weights) {
  if (weights.size() != a.size())
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for " + shape_string(a.shape()));
  Tensor out = make_result(tape, {1, 1}, {&a});
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * weights[i];
  out.node()->value[0] = s;
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), w = std::vector<double>(weights.begin(), weights.end())] {
      for (std::size_t i = 0; i < w.size(); ++i) an->grad[i] += on->grad[0] * w[i];
    });
  }
  return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != m)
      throw ShapeError("concat_cols: row mismatch " + shape_string(parts[0].shape()) + " vs " + shape_string(p.shape()));
    n += p.cols();
  }
  bool rg = false;
  if (tape.recording())
    for (const auto& p : parts) rg = rg || p.requires_grad();
  Tensor out = make_result(tape, {m, n}, {});
  if (rg) {
    out.node()->requires_grad = true;
    out.node()->grad.assign(m * n, 0.0);
  }
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p.data().data() + i * c, c, out.node()->value.data() + i * n + off);
    off += c;
  }
  if (rg) {
    std::vector<NodePtr> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    tape.record([nodes = std::move(nodes), on = out.node(), m, n] {
      std::size_t off = 0;
      for (const auto& pn : nodes) {
        const std::size_t c = pn->shape[1];
        if (needs(pn))
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < c; ++j) pn->grad[i * c + j] += on->grad[i * n + off + j];
        off += c;
      }
    });
  }
  return out;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != n)
      throw ShapeError("concat_rows: column mismatch " + shape_string(parts[0].shape()) + " vs " + shape_string(p.shape()));
    m += p.rows();
    rg = rg || p.requires_grad();
  }
  rg = rg && tape.recording();
  Tensor out = make_result(tape, {m, n}, {});
  if (rg) {
    out.node()->requires_grad = true;
    out.node()->grad.assign(m * n, 0.0);
  }
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.node()->value.begin() + static_cast<std::ptrdiff_t>(off));
    off += p.size();
  }
  if (rg) {
    std::vector<NodePtr> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    tape.record([nodes = std::move(nodes), on = out.node()] {
      std::size_t off = 0;
      for (const auto& pn : nodes) {
        if (needs(pn))
          for (std::size_t i = 0; i < pn->value.size(); ++i) pn->grad[i] += on->grad[off + i];
        off += pn->value.size();
      }
    });
  }
  return out;
}

Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t start, std::size_t len) {
  require_rank2(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (len == 0 || start + len > n)
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + len) +
                     ") out of range for " + shape_string(a.shape()));
  Tensor out = make_result(tape, {m, len}, {&a});
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(a.data().data() + i * n + start, len, out.node()->value.data() + i * len);
  if (out.requires_grad()) {
    tape.record([an = a.node(), on = out.node(), m, n, start, len] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < len; ++j) an->grad[i * n + start + j] += on->grad[i * len + j];
    });
  }
  return out;
}

Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2(table, "gather_rows");
  if (ids.empty()) throw ShapeError("gather_rows: no ids");
  const std::size_t v = table.rows(), n = table.cols();
  for (auto id : ids)
    if (id >= v) throw ShapeError("gather_rows: id " + std::to_string(id) + " out of range for " + shape_string(table.shape()));
  Tensor out = make_result(tape, {ids.size(), n}, {&table});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.data().data() + ids[i] * n, n, out.node()->value.data() + i * n);
  if (out.requires_grad()) {
    tape.record([tn = table.node(), on = out.node(), ids = std::vector<std::size_t>(ids.begin(), ids.end()), n] {
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) tn->grad[ids[i] * n + j] += on->grad[i * n + j];
    });
  }
  return out;
}

Tensor& ParameterSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(tensor));
  return entries_.back().second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw InputError("no parameter named '" + name + "'");
}

Tensor& ParameterSet::get(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).get(name));
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParameterSet::extend(const ParameterSet& other) {
  for (const auto& [n, t] : other.entries_) add(n, t);
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [n, t] : entries_)
    out.add(n, Tensor::from_shape(t.shape(), std::vector<double>(t.data().begin(), t.data().end()), t.requires_grad()));
  return out;
}

bool ParameterSet::values_equal(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [na, ta] = entries_[i];
    const auto& [nb, tb] = other.entries_[i];
    if (na != nb || ta.shape() != tb.shape() || !std::equal(ta.data().begin(), ta.data().end(), tb.data().begin()))
      return false;
  }
  return true;
}

namespace {

constexpr char kCheckpointMagic[4] = {'Q', 'P', 'P', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  const char* take(std::size_t n) {
    if (bytes.size() - pos < n) throw FormatError("truncated checkpoint");
    const char* p = bytes.data() + pos;
    pos += n;
    return p;
  }
  std::uint64_t uint(int width) {
    auto p = reinterpret_cast<const unsigned char*>(take(static_cast<std::size_t>(width)));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
};

}  // namespace

std::string encode_checkpoint(const ParameterSet& params) {
  std::string out(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& [name, t] : params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

ParameterSet decode_checkpoint(const std::string& bytes) {
  ByteReader in{bytes};
  if (std::memcmp(in.take(4), kCheckpointMagic, 4) != 0) throw FormatError("bad magic, expected QPPM");
  const auto version = in.uint(4);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = in.uint(4);
  ParameterSet params;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = in.uint(4);
    std::string name(in.take(len), len);
    const auto rank = in.uint(4);
    if (rank == 0 || rank > 8) throw FormatError("parameter '" + name + "' has invalid rank");
    Shape shape;
    std::size_t n = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      shape.push_back(in.uint(4));
      n *= shape.back();
    }
    if (n == 0 || n > bytes.size()) throw FormatError("parameter '" + name + "' has invalid shape");
    std::vector<double> data(n);
    for (auto& v : data) v = std::bit_cast<double>(in.uint(8));
    params.add(std::move(name), Tensor::from_shape(std::move(shape), std::move(data), true));
  }
  if (in.pos != bytes.size()) throw FormatError("trailing bytes after checkpoint");
  return params;
}

void save_checkpoint(const ParameterSet& params, const std::string& path) {
  write_text_file(path, encode_checkpoint(params));
}

ParameterSet load_checkpoint(const std::string& path) { return decode_checkpoint(read_text_file(path)); }

GradCheckResult grad_check(const std::function<Tensor(Tape&)>& f, ParameterSet& params, double h) {
  if (!(h > 0.0)) throw ContractError("grad_check: h must be positive");
  params.zero_grad();
  {
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    Tape tape(false);
    return f(tape).item();
  };
  GradCheckResult result;
  for (auto& [name, t] : params.entries()) {
    if (!t.requires_grad()) continue;
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = eval();
      values[i] = saved - h;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::fabs(analytic[i] - numeric) / std::max(1e-12, std::fabs(analytic[i]) + std::fabs(numeric));
      ++result.coordinates;
      if (err > result.max_rel_error || result.coordinates == 1) {
        if (err >= result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_param = name;
          result.worst_index = i;
          result.analytic = analytic[i];
          result.numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace gqpp::ad
