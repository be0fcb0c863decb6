#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gqpp::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated only when requires_grad
  bool requires_grad = false;
};

/// Dense row-major tensor handle. Copies share storage; operations return
/// new tensors. Operations work on rank-2 tensors (a scalar is 1x1).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);
  static Tensor from_shape(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  /// Value of a 1x1 tensor.
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Records backward closures in execution order. A non-recording tape
/// evaluates forward only.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return closures_.size(); }

  void record(std::function<void()> backward);

  /// Seeds d(loss)/d(loss) = 1 and runs the closures in reverse. The loss
  /// must be 1x1 and the tape may be replayed only once.
  void backward(const Tensor& loss);

 private:
  bool recording_;
  bool consumed_ = false;
  std::vector<std::function<void()>> closures_;
};

/// Allocates an op output; requires_grad when the tape records and any input
/// requires it.
Tensor make_result(Tape& tape, Shape shape, std::initializer_list<const Tensor*> inputs);

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
/// a (m x n) + bias (1 x n) broadcast over rows.
Tensor add_bias(Tape& tape, const Tensor& a, const Tensor& bias);
Tensor transpose(Tape& tape, const Tensor& a);
/// Row softmax. Columns with key_mask[j] == 0 get probability exactly 0;
/// an empty mask means every column is valid.
Tensor softmax_rows(Tape& tape, const Tensor& a, std::span<const std::uint8_t> key_mask = {});
/// Per-row normalisation to zero mean / unit variance, then gain and bias (1 x n).
Tensor layer_norm(Tape& tape, const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
/// tanh approximation of GELU.
Tensor gelu(Tape& tape, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);
/// Mean of all elements (1 x 1).
Tensor mean(Tape& tape, const Tensor& a);
/// Column means (1 x n).
Tensor mean_rows(Tape& tape, const Tensor& a);
/// sum_i a_i * w_i with constant weights (1 x 1).
Tensor weighted_sum(Tape& tape, const Tensor& a, std::span<const double> weights);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);
Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t start, std::size_t len);
/// Rows of `table` selected by ids (embedding lookup).
Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const std::size_t> ids);

/// Named, ordered parameters of a model.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor tensor);
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const;
  std::size_t num_values() const;
  void zero_grad();
  /// Appends every entry of `other` (names must not clash).
  void extend(const ParameterSet& other);
  /// Deep copy; the copy does not share storage.
  ParameterSet clone() const;
  bool values_equal(const ParameterSet& other) const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Binary checkpoint: "QPPM", u32 version, u32 count, then per parameter u32
/// name length + bytes, u32 rank, u32 dims, f64 values; little-endian.
std::string encode_checkpoint(const ParameterSet& params);
ParameterSet decode_checkpoint(const std::string& bytes);
void save_checkpoint(const ParameterSet& params, const std::string& path);
ParameterSet load_checkpoint(const std::string& path);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of f with central differences over every
/// coordinate of params: |a - n| / max(1e-12, |a| + |n|).
GradCheckResult grad_check(const std::function<Tensor(Tape&)>& f, ParameterSet& params, double h = 1e-5);

}  // namespace gqpp::ad
