#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cfkd::numcore {

/// Dense row-major matrix of doubles. Rows are samples, columns are features.
class Tensor2D {
public:
    Tensor2D() = default;
    Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Tensor2D from_rows(const std::vector<std::vector<double>>& rows);
    static Tensor2D column(std::span<const double> values);
    static Tensor2D identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    /// Copies column `c` out as a vector.
    std::vector<double> column_values(std::size_t c) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor2D&, const Tensor2D&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// a · b
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
/// aᵀ · b
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);
/// a · bᵀ
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);

/// Adds `bias` to every row in place.
void add_row_vector(Tensor2D& m, std::span<const double> bias);
/// Column sums.
std::vector<double> column_sums(const Tensor2D& m);

/// Horizontal concatenation; all blocks must share the row count.
Tensor2D hconcat(std::span<const Tensor2D> blocks);
/// Columns [begin, begin + count) as a new tensor.
Tensor2D slice_cols(const Tensor2D& m, std::size_t begin, std::size_t count);
Tensor2D select_rows(const Tensor2D& m, std::span<const std::size_t> indices);

} // namespace cfkd::numcore
