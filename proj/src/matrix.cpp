#include "oilcast/matrix.hpp"

namespace oilcast {

void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto row = a.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            acc += row[j] * x[j];
        }
        y[i] += acc;
    }
}

void matvec_transpose_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto row = a.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < row.size(); ++j) {
            y[j] += row[j] * xi;
        }
    }
}

void outer_add(std::span<const double> a, std::span<const double> b, Matrix& g) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        auto row = g.row(i);
        for (std::size_t j = 0; j < b.size(); ++j) {
            row[j] += ai * b[j];
        }
    }
}

} // namespace oilcast
