#include "cfkd/numcore/tensor.hpp"

#include "cfkd/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace cfkd::numcore {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor2D& t) {
    return ConstMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

MutMap view(Tensor2D& t) {
    return MutMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

std::string shape(const Tensor2D& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

} // namespace

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    require(values_.size() == rows_ * cols_,
            "Tensor2D: value count " + std::to_string(values_.size()) + " does not match " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
}

Tensor2D Tensor2D::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) {
        return {};
    }
    const std::size_t cols = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        require(r.size() == cols, "Tensor2D::from_rows: ragged rows");
        values.insert(values.end(), r.begin(), r.end());
    }
    return {rows.size(), cols, std::move(values)};
}

Tensor2D Tensor2D::column(std::span<const double> values) {
    return {values.size(), 1, std::vector<double>(values.begin(), values.end())};
}

Tensor2D Tensor2D::identity(std::size_t n) {
    Tensor2D t(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        t(i, i) = 1.0;
    }
    return t;
}

std::vector<double> Tensor2D::column_values(std::size_t c) const {
    require(c < cols_, "Tensor2D::column_values: column out of range");
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

bool Tensor2D::all_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    require(a.cols() == b.rows(), "matmul: shape mismatch " + shape(a) + " * " + shape(b));
    Tensor2D out(a.rows(), b.cols());
    if (!out.empty() && a.cols() > 0) {
        view(out).noalias() = view(a) * view(b);
    }
    return out;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
    require(a.rows() == b.rows(), "matmul_tn: shape mismatch " + shape(a) + "^T * " + shape(b));
    Tensor2D out(a.cols(), b.cols());
    if (!out.empty() && a.rows() > 0) {
        view(out).noalias() = view(a).transpose() * view(b);
    }
    return out;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
    require(a.cols() == b.cols(), "matmul_nt: shape mismatch " + shape(a) + " * " + shape(b) + "^T");
    Tensor2D out(a.rows(), b.rows());
    if (!out.empty() && a.cols() > 0) {
        view(out).noalias() = view(a) * view(b).transpose();
    }
    return out;
}

void add_row_vector(Tensor2D& m, std::span<const double> bias) {
    require(bias.size() == m.cols(), "add_row_vector: bias length mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += bias[c];
        }
    }
}

std::vector<double> column_sums(const Tensor2D& m) {
    std::vector<double> sums(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            sums[c] += row[c];
        }
    }
    return sums;
}

Tensor2D hconcat(std::span<const Tensor2D> blocks) {
    if (blocks.empty()) {
        return {};
    }
    const std::size_t rows = blocks.front().rows();
    std::size_t cols = 0;
    for (const auto& b : blocks) {
        require(b.rows() == rows, "hconcat: row count mismatch");
        cols += b.cols();
    }
    Tensor2D out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto dst = out.row(r);
        std::size_t offset = 0;
        for (const auto& b : blocks) {
            const auto src = b.row(r);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += b.cols();
        }
    }
    return out;
}

Tensor2D slice_cols(const Tensor2D& m, std::size_t begin, std::size_t count) {
    require(begin + count <= m.cols(), "slice_cols: range out of bounds");
    Tensor2D out(m.rows(), count);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto src = m.row(r);
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(begin), count, out.row(r).begin());
    }
    return out;
}

Tensor2D select_rows(const Tensor2D& m, std::span<const std::size_t> indices) {
    Tensor2D out(indices.size(), m.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] < m.rows(), "select_rows: index out of range");
        const auto src = m.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

} // namespace cfkd::numcore
