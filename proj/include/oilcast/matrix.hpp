#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace oilcast {

// Dense row-major matrix of doubles. Just enough linear algebra for the
// LSTM forward/backward passes; rows are contiguous so the hot loops
// vectorize.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// y += A x
void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y);

// y += A^T x
void matvec_transpose_add(const Matrix& a, std::span<const double> x, std::span<double> y);

// G += a b^T
void outer_add(std::span<const double> a, std::span<const double> b, Matrix& g);

} // namespace oilcast
