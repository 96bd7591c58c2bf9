#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace tdb {

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  DenseMatrix transpose() const;
  double frobenius_norm() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);

using Shape3 = std::array<std::size_t, 3>;

// Third-order tensor, row-major: mode 1 slowest, mode 3 fastest.
class DenseTensor3 {
 public:
  DenseTensor3() = default;
  explicit DenseTensor3(Shape3 shape);
  DenseTensor3(Shape3 shape, std::vector<double> values);

  const Shape3& shape() const { return shape_; }
  // mode is 1, 2 or 3.
  std::size_t dim(int mode) const;
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double frobenius_norm() const;
  bool all_finite() const;

  friend bool operator==(const DenseTensor3&, const DenseTensor3&) = default;

 private:
  Shape3 shape_{0, 0, 0};
  std::vector<double> values_;
};

// Contracts `t` along `mode` with `m`: the mode's extent becomes m.rows().
DenseTensor3 mode_n_product(const DenseTensor3& t, const DenseMatrix& m, int mode);

// Mode-n unfolding. Columns run over the two remaining modes in their original
// order, the later mode varying fastest.
DenseMatrix unfold(const DenseTensor3& t, int mode);
DenseTensor3 fold(const DenseMatrix& m, int mode, Shape3 shape);

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b);

// Relative threshold used by numerical_rank.
inline constexpr double kRankTolerance = 1e-10;

// Singular values in non-increasing order. Throws SvdError on non-convergence.
std::vector<double> singular_values(const DenseMatrix& m);

struct CompactSvd {
  DenseMatrix u;              // rows x r
  std::vector<double> sigma;  // r values, non-increasing
  DenseMatrix v;              // cols x r
  std::size_t rank() const { return sigma.size(); }
};

// Thin SVD keeping singular values above rel_cutoff * sigma_max.
CompactSvd compact_svd(const DenseMatrix& m, double rel_cutoff = 1e-12);

// Full right-singular basis (cols x cols) with the singular values padded by zeros.
struct FullRightSvd {
  std::vector<double> sigma;  // length cols
  DenseMatrix v;              // cols x cols
};
FullRightSvd right_singular_basis(const DenseMatrix& m);

double trace_norm(const DenseMatrix& m);
std::size_t numerical_rank(const DenseMatrix& m, double tol = kRankTolerance);

}  // namespace tdb
