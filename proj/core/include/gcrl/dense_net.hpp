#pragma once

#include <Eigen/Core>

#include <vector>

#include "gcrl/mdp.hpp"

namespace gcrl {

using Matrix = Eigen::MatrixXd;

enum class OutputActivation : int { kLinear = 0, kTanh = 1, kSoftmax = 2 };

/// Intermediate values of a batched forward pass, consumed by DenseNet::backward.
struct ForwardCache {
  std::vector<Matrix> pre;  ///< pre-activations z_l, one per layer
  std::vector<Matrix> act;  ///< act[0] is the input, act[l+1] = f(pre[l])
};

/// Fully connected ReLU network whose parameters live in one flat vector.
///
/// Layer l owns a (sizes[l+1] x sizes[l]) weight block followed by a bias block.
/// Batched calls take one sample per column.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> sizes, OutputActivation output);
  DenseNet(std::vector<int> sizes, OutputActivation output, Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& sizes() const { return sizes_; }
  OutputActivation output_activation() const { return output_; }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<Vector> bias(int layer);
  Eigen::Map<const Vector> bias(int layer) const;

  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs, ForwardCache& cache) const;

  /// Reverse pass. out_adjoint holds dL/d(output) per column; returns dL/d(params).
  /// If input_adjoint is non-null it receives dL/d(input).
  Vector backward(const ForwardCache& cache, const Matrix& out_adjoint, Matrix* input_adjoint = nullptr) const;

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;
  void layout();

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  OutputActivation output_ = OutputActivation::kLinear;
  Vector params_;
};

/// Column-wise softmax.
Matrix softmax_columns(const Matrix& logits);
Vector softmax(const Vector& logits);

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Vector& values);

}  // namespace gcrl
