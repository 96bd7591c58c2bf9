#include "tdb/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tdb/error.hpp"

namespace tdb {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorMatrix> as_eigen(const DenseMatrix& m) {
  return {m.values().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
  DenseMatrix out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index r = 0; r < e.rows(); ++r)
    for (Eigen::Index c = 0; c < e.cols(); ++c) out(r, c) = e(r, c);
  return out;
}

void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw ShapeError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

// Strides of (i, j, k) viewed as (selected mode, first remaining, second remaining).
struct ModeLayout {
  std::size_t rows;
  std::size_t outer;  // extent of the slower remaining mode
  std::size_t inner;  // extent of the faster remaining mode
  std::size_t row_stride;
  std::size_t outer_stride;
  std::size_t inner_stride;
};

ModeLayout layout_for(const Shape3& s, int mode) {
  const std::size_t stride[3] = {s[1] * s[2], s[2], 1};
  switch (mode) {
    case 1:
      return {s[0], s[1], s[2], stride[0], stride[1], stride[2]};
    case 2:
      return {s[1], s[0], s[2], stride[1], stride[0], stride[2]};
    default:
      return {s[2], s[0], s[1], stride[2], stride[0], stride[1]};
  }
}

template <typename Svd>
void check_svd(const Svd& svd) {
  if (svd.info() != Eigen::Success) throw SvdError("singular value decomposition did not converge");
}

void check_finite(const DenseMatrix& m) {
  for (double v : m.values())
    if (!std::isfinite(v)) throw SvdError("matrix has non-finite entries; SVD undefined");
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols)
    throw ShapeError("matrix value count " + std::to_string(values_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double DenseMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("multiply: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("hconcat: row counts differ");
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
  }
  return out;
}

DenseTensor3::DenseTensor3(Shape3 shape)
    : shape_(shape), values_(shape[0] * shape[1] * shape[2], 0.0) {}

DenseTensor3::DenseTensor3(Shape3 shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape[0] * shape[1] * shape[2])
    throw ShapeError("tensor value count " + std::to_string(values_.size()) +
                     " does not match shape");
}

std::size_t DenseTensor3::dim(int mode) const {
  check_mode(mode);
  return shape_[static_cast<std::size_t>(mode - 1)];
}

double DenseTensor3::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

bool DenseTensor3::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DenseTensor3 mode_n_product(const DenseTensor3& t, const DenseMatrix& m, int mode) {
  check_mode(mode);
  const std::size_t extent = t.dim(mode);
  if (m.cols() != extent)
    throw ShapeError("mode-" + std::to_string(mode) + " product: matrix has " +
                     std::to_string(m.cols()) + " columns, tensor mode has extent " +
                     std::to_string(extent));
  Shape3 out_shape = t.shape();
  out_shape[static_cast<std::size_t>(mode - 1)] = m.rows();
  DenseTensor3 out(out_shape);

  const ModeLayout in = layout_for(t.shape(), mode);
  const ModeLayout ot = layout_for(out_shape, mode);
  const auto src = t.values();
  auto dst = out.values();
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = 0; b < extent; ++b) {
      const double coef = m(a, b);
      if (coef == 0.0) continue;
      for (std::size_t p = 0; p < in.outer; ++p)
        for (std::size_t q = 0; q < in.inner; ++q)
          dst[a * ot.row_stride + p * ot.outer_stride + q * ot.inner_stride] +=
              coef * src[b * in.row_stride + p * in.outer_stride + q * in.inner_stride];
    }
  return out;
}

DenseMatrix unfold(const DenseTensor3& t, int mode) {
  check_mode(mode);
  const ModeLayout l = layout_for(t.shape(), mode);
  DenseMatrix out(l.rows, l.outer * l.inner);
  const auto src = t.values();
  for (std::size_t r = 0; r < l.rows; ++r)
    for (std::size_t p = 0; p < l.outer; ++p)
      for (std::size_t q = 0; q < l.inner; ++q)
        out(r, p * l.inner + q) = src[r * l.row_stride + p * l.outer_stride + q * l.inner_stride];
  return out;
}

DenseTensor3 fold(const DenseMatrix& m, int mode, Shape3 shape) {
  check_mode(mode);
  const ModeLayout l = layout_for(shape, mode);
  if (m.rows() != l.rows || m.cols() != l.outer * l.inner)
    throw ShapeError("fold: matrix shape does not match target tensor shape");
  DenseTensor3 out(shape);
  auto dst = out.values();
  for (std::size_t r = 0; r < l.rows; ++r)
    for (std::size_t p = 0; p < l.outer; ++p)
      for (std::size_t q = 0; q < l.inner; ++q)
        dst[r * l.row_stride + p * l.outer_stride + q * l.inner_stride] = m(r, p * l.inner + q);
  return out;
}

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

std::vector<double> singular_values(const DenseMatrix& m) {
  if (m.size() == 0) return {};
  check_finite(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(as_eigen(m));
  check_svd(svd);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

CompactSvd compact_svd(const DenseMatrix& m, double rel_cutoff) {
  CompactSvd out;
  if (m.size() == 0) {
    out.u = DenseMatrix(m.rows(), 0);
    out.v = DenseMatrix(m.cols(), 0);
    return out;
  }
  check_finite(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(as_eigen(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_svd(svd);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index r = 0;
  while (r < s.size() && smax > 0.0 && s(r) > rel_cutoff * smax) ++r;
  out.u = from_eigen(svd.matrixU().leftCols(r));
  out.v = from_eigen(svd.matrixV().leftCols(r));
  out.sigma.assign(s.data(), s.data() + r);
  return out;
}

FullRightSvd right_singular_basis(const DenseMatrix& m) {
  check_finite(m);
  FullRightSvd out;
  out.sigma.assign(m.cols(), 0.0);
  if (m.rows() == 0) {
    out.v = DenseMatrix::identity(m.cols());
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(as_eigen(m), Eigen::ComputeFullV);
  check_svd(svd);
  const auto& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) out.sigma[static_cast<std::size_t>(i)] = s(i);
  out.v = from_eigen(svd.matrixV());
  return out;
}

double trace_norm(const DenseMatrix& m) {
  const auto s = singular_values(m);
  return std::accumulate(s.begin(), s.end(), 0.0);
}

std::size_t numerical_rank(const DenseMatrix& m, double tol) {
  const auto s = singular_values(m);
  if (s.empty() || s.front() == 0.0) return 0;
  const double threshold =
      tol * s.front() * static_cast<double>(std::max(m.rows(), m.cols()));
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](double v) { return v > threshold; }));
}

}  // namespace tdb
