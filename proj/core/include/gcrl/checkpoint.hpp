#pragma once

#include <iosfwd>

#include "gcrl/dense_net.hpp"
#include "gcrl/normalizer.hpp"

namespace gcrl {

/// Network layout (little-endian):
///   char[8] "GCRLNET1"
///   u32     output activation (0 linear, 1 tanh, 2 softmax)
///   u32     number of layer sizes L+1, then L+1 x u32 sizes
///   per layer: f64 weights (out x in, row-major), then f64 bias (out)
void write_net(std::ostream& out, const DenseNet& net);
DenseNet read_net(std::istream& in);

/// Normalizer layout: u32 dim, f64 count, f64 sum[dim], f64 sum_sq[dim].
void write_normalizer(std::ostream& out, const Normalizer& norm);
Normalizer read_normalizer(std::istream& in);

}  // namespace gcrl
