#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace dilate {

/// Dense row-major matrix of doubles. Small and unchecked on the hot path;
/// bounds are asserted in debug builds only.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<double> row(std::size_t i) {
        assert(i < rows_);
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> row(std::size_t i) const {
        assert(i < rows_);
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Frobenius inner product <a, b>. Shapes must match.
double dot(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

/// A d x k real trajectory: one row per dimension, one column per time step.
/// Forecasts and targets both live here; d = 1 for every bundled dataset.
struct TimeSeries {
    Matrix values;

    TimeSeries() = default;
    explicit TimeSeries(Matrix m) : values(std::move(m)) {}

    /// Univariate series from a plain vector (d = 1).
    static TimeSeries from_vector(std::span<const double> v);

    std::size_t dims() const { return values.rows(); }
    std::size_t steps() const { return values.cols(); }
};

/// Throws std::invalid_argument unless `s` has d >= 1, k >= 1 and finite entries.
void validate_series(const TimeSeries& s);

} // namespace dilate
