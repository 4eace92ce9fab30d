#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gazenet/array_io.hpp"
#include "gazenet/preprocess/pupil.hpp"

namespace gazenet::preprocess {

// Row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> v;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size, double fill = 0) : n(size), v(size * size, fill) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

// Box-filter resampling weights: output i averages the input interval
// [i*in/out, (i+1)*in/out) with fractional coverage at the ends.
struct AreaWeights {
  struct Row {
    std::size_t first = 0;
    std::vector<double> w;  // sums to 1
  };
  std::vector<Row> rows;
};
AreaWeights area_weights(std::size_t in_len, std::size_t out_len);

// Piecewise aggregate approximation (segment means) to `segments` points.
std::vector<double> paa(std::span<const double> series, std::size_t segments);

// Min-max rescaling to [-1, 1]; a constant series maps to 0.
std::vector<double> rescale_symmetric(std::span<const double> series);

// Gramian angular summation field: cos(phi_i + phi_j), phi = arccos(rescaled).
SquareMatrix gaf(std::span<const double> window);

// Quantile bin index (0..bins-1) of every sample, edges computed per window.
std::vector<std::size_t> quantile_bins(std::span<const double> window, std::size_t bins);

// Row-normalized first-order transition matrix of a bin sequence; rows with
// no outgoing transition are uniform.
SquareMatrix transition_matrix(std::span<const std::size_t> bins, std::size_t num_bins);

// M_ij = W[q_i][q_j].
SquareMatrix mtf_from_bins(std::span<const std::size_t> bins, std::size_t num_bins);
SquareMatrix mtf(std::span<const double> window, std::size_t num_bins = 8);

struct PupilImagingConfig {
  std::size_t image_size = 32;
  std::size_t mtf_bins = 8;
  double window_s = 1.0;
};

// T x 2 x S x S; channel 0 = GASF, channel 1 = MTF, one image per window.
struct PupilImageSequence {
  FloatArray images;
  double window_seconds = 1.0;

  std::size_t steps() const { return images.shape.empty() ? 0 : images.shape[0]; }
};

PupilImageSequence pupil_image_sequence(const CleanPupilTrace& trace,
                                        const PupilImagingConfig& config = {});

}  // namespace gazenet::preprocess
