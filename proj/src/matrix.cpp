#include "dilate/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace dilate {

double dot(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("dot: shape mismatch");
    }
    double acc = 0.0;
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        acc += av[i] * bv[i];
    }
    return acc;
}

bool all_finite(const Matrix& m) {
    return all_finite(std::span<const double>(m.values()));
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

TimeSeries TimeSeries::from_vector(std::span<const double> v) {
    Matrix m(1, v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(0, i) = v[i];
    }
    return TimeSeries(std::move(m));
}

void validate_series(const TimeSeries& s) {
    if (s.dims() < 1 || s.steps() < 1) {
        throw std::invalid_argument("time series must have d >= 1 and k >= 1");
    }
    if (!all_finite(s.values)) {
        throw std::invalid_argument("time series contains non-finite entries");
    }
}

} // namespace dilate
