#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lorapre {

// Shape mismatch between operands (wrong dimensions for an operation).
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A scalar argument outside its documented range.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation produced non-finite values or failed to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense 2-D array of doubles, row-major. The universal value type for
// parameters, gradients and moments. Plain value semantics: copy/move
// freely, share across threads once constructed.
class Matrix {
public:
    Matrix() = default;

    Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows <= 0 || cols <= 0)
            throw ArgumentError("Matrix: dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
        entries_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    }

    Matrix(int rows, int cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (rows <= 0 || cols <= 0)
            throw ArgumentError("Matrix: dimensions must be positive");
        if (entries_.size() != static_cast<std::size_t>(rows) * cols)
            throw ShapeError("Matrix: entry count " + std::to_string(entries_.size()) +
                             " does not equal rows*cols = " +
                             std::to_string(static_cast<std::size_t>(rows) * cols));
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return entries_.size(); }

    double& operator()(int i, int j) {
        return entries_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double operator()(int i, int j) const {
        return entries_[static_cast<std::size_t>(i) * cols_ + j];
    }

    double* data() { return entries_.data(); }
    const double* data() const { return entries_.data(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool is_finite() const {
        for (double v : entries_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_string() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> entries_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
}

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.is_finite())
        throw NumericError(std::string(what) + ": non-finite entries");
}

} // namespace lorapre
