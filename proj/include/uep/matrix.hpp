#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace uep {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.data); }

inline double squared_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace uep
