#include "gcrl/dense_net.hpp"

#include <cmath>

namespace gcrl {

DenseNet::DenseNet(std::vector<int> sizes, OutputActivation output) : sizes_(std::move(sizes)), output_(output) {
  layout();
}

DenseNet::DenseNet(std::vector<int> sizes, OutputActivation output, Rng& rng)
    : DenseNet(std::move(sizes), output) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> init(-bound, bound);
    auto w = weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = init(rng);
    }
    auto b = bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = init(rng);
  }
}

void DenseNet::layout() {
  require(sizes_.size() >= 2, "network needs at least an input and an output layer");
  for (int s : sizes_) require(s >= 1, "layer sizes must be positive");
  offsets_.clear();
  std::size_t offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
}

std::size_t DenseNet::bias_offset(int layer) const {
  return offsets_[layer] + static_cast<std::size_t>(sizes_[layer + 1]) * sizes_[layer];
}

Eigen::Map<Matrix> DenseNet::weight(int layer) {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Matrix> DenseNet::weight(int layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<Vector> DenseNet::bias(int layer) { return {params_.data() + bias_offset(layer), sizes_[layer + 1]}; }

Eigen::Map<const Vector> DenseNet::bias(int layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double top = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - top).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Vector softmax(const Vector& logits) { return softmax_columns(logits); }

int argmax(const Vector& values) {
  require(values.size() > 0, "argmax of an empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

Vector DenseNet::forward(const Vector& input) const {
  Matrix out = forward(Matrix(input));
  return out.col(0);
}

Matrix DenseNet::forward(const Matrix& inputs) const {
  require(inputs.rows() == input_dim(), "network input dimension mismatch");
  Matrix x = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix z = weight(l) * x;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      x = z.cwiseMax(0.0);
    } else {
      x = std::move(z);
    }
  }
  switch (output_) {
    case OutputActivation::kLinear: return x;
    case OutputActivation::kTanh: return x.array().tanh().matrix();
    case OutputActivation::kSoftmax: return softmax_columns(x);
  }
  return x;
}

Matrix DenseNet::forward(const Matrix& inputs, ForwardCache& cache) const {
  require(inputs.rows() == input_dim(), "network input dimension mismatch");
  const int layers = num_layers();
  cache.pre.resize(layers);
  cache.act.resize(layers + 1);
  cache.act[0] = inputs;
  for (int l = 0; l < layers; ++l) {
    cache.pre[l].noalias() = weight(l) * cache.act[l];
    cache.pre[l].colwise() += bias(l);
    if (l + 1 < layers) {
      cache.act[l + 1] = cache.pre[l].cwiseMax(0.0);
    } else {
      switch (output_) {
        case OutputActivation::kLinear: cache.act[l + 1] = cache.pre[l]; break;
        case OutputActivation::kTanh: cache.act[l + 1] = cache.pre[l].array().tanh().matrix(); break;
        case OutputActivation::kSoftmax: cache.act[l + 1] = softmax_columns(cache.pre[l]); break;
      }
    }
  }
  return cache.act.back();
}

Vector DenseNet::backward(const ForwardCache& cache, const Matrix& out_adjoint, Matrix* input_adjoint) const {
  const int layers = num_layers();
  require(static_cast<int>(cache.pre.size()) == layers, "forward cache does not match network");
  require(out_adjoint.rows() == output_dim() && out_adjoint.cols() == cache.act[0].cols(),
          "output adjoint shape mismatch");
  Vector grad = Vector::Zero(params_.size());

  const Matrix& y = cache.act.back();
  Matrix dz;
  switch (output_) {
    case OutputActivation::kLinear: dz = out_adjoint; break;
    case OutputActivation::kTanh: dz = out_adjoint.cwiseProduct((1.0 - y.array().square()).matrix()); break;
    case OutputActivation::kSoftmax: {
      const Eigen::RowVectorXd inner = out_adjoint.cwiseProduct(y).colwise().sum();
      dz = y.cwiseProduct(out_adjoint - Matrix::Ones(y.rows(), 1) * inner);
      break;
    }
  }

  for (int l = layers - 1; l >= 0; --l) {
    Eigen::Map<Matrix> dw(grad.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Eigen::Map<Vector> db(grad.data() + bias_offset(l), sizes_[l + 1]);
    dw.noalias() = dz * cache.act[l].transpose();
    db = dz.rowwise().sum();
    if (l == 0 && input_adjoint == nullptr) break;
    Matrix da = weight(l).transpose() * dz;
    if (l == 0) {
      *input_adjoint = std::move(da);
    } else {
      dz = da.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

}  // namespace gcrl
