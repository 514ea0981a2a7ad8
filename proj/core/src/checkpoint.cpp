#include "gcrl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace gcrl {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr std::array<char, 8> kNetMagic = {'G', 'C', 'R', 'L', 'N', 'E', 'T', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return value;
}

}  // namespace

void write_net(std::ostream& out, const DenseNet& net) {
  out.write(kNetMagic.data(), kNetMagic.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.output_activation()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.sizes().size()));
  for (int s : net.sizes()) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) put<double>(out, w(i, j));
    }
    const auto b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) put<double>(out, b[i]);
  }
  if (!out) throw std::runtime_error("failed writing network checkpoint");
}

DenseNet read_net(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kNetMagic) throw std::runtime_error("not a network checkpoint");
  const auto activation = get<std::uint32_t>(in);
  if (activation > 2) throw std::runtime_error("unknown output activation in checkpoint");
  const auto count = get<std::uint32_t>(in);
  if (count < 2 || count > 64) throw std::runtime_error("implausible layer count in checkpoint");
  std::vector<int> sizes(count);
  for (auto& s : sizes) s = static_cast<int>(get<std::uint32_t>(in));
  DenseNet net(sizes, static_cast<OutputActivation>(activation));
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = get<double>(in);
    }
    auto b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = get<double>(in);
  }
  return net;
}

void write_normalizer(std::ostream& out, const Normalizer& norm) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(norm.dim()));
  put<double>(out, norm.count());
  for (int i = 0; i < norm.dim(); ++i) put<double>(out, norm.sum()[i]);
  for (int i = 0; i < norm.dim(); ++i) put<double>(out, norm.sum_sq()[i]);
}

Normalizer read_normalizer(std::istream& in) {
  const int dim = static_cast<int>(get<std::uint32_t>(in));
  if (dim < 1 || dim > 4096) throw std::runtime_error("implausible normalizer dimension");
  const double count = get<double>(in);
  Vector sum(dim);
  Vector sum_sq(dim);
  for (int i = 0; i < dim; ++i) sum[i] = get<double>(in);
  for (int i = 0; i < dim; ++i) sum_sq[i] = get<double>(in);
  Normalizer norm(dim);
  norm.set_state(count, std::move(sum), std::move(sum_sq));
  return norm;
}

}  // namespace gcrl
