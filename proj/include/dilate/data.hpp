#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dilate/matrix.hpp"

namespace dilate {

/// A supervised forecasting split: row i of `inputs` is the conditioning
/// window, row i of `targets` the future trajectory to predict.
struct Dataset {
    Matrix inputs;  ///< N x input_len
    Matrix targets; ///< N x horizon
    std::string split;                   ///< "train" / "valid" / "test"
    std::uint64_t seed = 0;              ///< generator seed (synthetic data)
    std::string source;                  ///< source file (loaded data)
    std::vector<std::size_t> step_index; ///< synthetic only: 1-based true step per series

    std::size_t size() const { return inputs.rows(); }
    std::size_t input_len() const { return inputs.cols(); }
    std::size_t horizon() const { return targets.cols(); }
};

/// Two-peak impulse inputs, a delayed two-level step target, additive
/// Gaussian noise on the full series.
struct SyntheticSpec {
    std::size_t n_series = 500;   ///< per split
    std::size_t series_len = 40;  ///< input_len + horizon
    std::size_t input_len = 20;
    std::size_t horizon = 20;
    double noise_variance = 0.01;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Deterministic per seed. Each series places impulses of amplitude
/// j1, j2 ~ U(0,1) at positions i1 < i2 of the input window; the target
/// holds level j1 and steps to j2 at index i2 + (i2 - i1) + randint(-3, 3),
/// with (i1, i2, offset) resampled jointly until the step lands strictly
/// inside the target window. Throws std::invalid_argument when the spec
/// cannot satisfy those constraints.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes train/valid/test CSVs (one full series per row) plus a meta.json
/// sidecar holding the seed, the spec and the true step indices.
void save_synthetic(const std::string& dir, const SyntheticData& data,
                    const SyntheticSpec& spec);

/// CSV matrix loader: one series per row, or a single-column long form when
/// `long_form` is set (yielding a 1 x L matrix). Throws data_error with the
/// 1-based row/column position of the first malformed cell.
Matrix load_csv(const std::string& path, bool has_header, bool long_form);

/// Sliding windows over one series. Window count is
/// (L - input_len - horizon) / stride + 1; throws data_error when the
/// series is too short for a single window.
Dataset window_series(std::span<const double> series, std::size_t input_len,
                      std::size_t horizon, std::size_t stride);

struct SplitSeries {
    std::vector<double> train;
    std::vector<double> valid;
    std::vector<double> test;
};

/// Contiguous chronological segments with boundaries at the floor of the
/// cumulative fractions. Fractions must sum to 1; every segment must reach
/// `min_len` samples.
SplitSeries chronological_split(std::span<const double> series,
                                std::array<double, 3> fractions,
                                std::size_t min_len = 1);

/// In-place min-max scaling to [0, 1]; constant series are left unchanged.
void minmax_scale(std::span<double> series);

} // namespace dilate
