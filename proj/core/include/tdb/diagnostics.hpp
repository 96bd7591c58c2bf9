#pragma once

#include <algorithm>
#include <array>
#include <string>

#include "tdb/model.hpp"
#include "tdb/regularizer.hpp"
#include "tdb/tensor.hpp"

namespace tdb {

// Trace norms of the three unfoldings.
std::array<double, 3> mode_trace_norms(const DenseTensor3& x);
// L(X; alpha) = sum over modes of ||X_(n)||_*^(alpha/2).
double overlapped_trace_norm(const DenseTensor3& x, double alpha);
double overlapped_trace_norm(const std::array<double, 3>& trace_norms, double alpha);

// Upper bound built from slice norms and double contractions (lambda1, lambda4 terms).
double norm_bound_rhs(const TdbModel& model, double lambda1, double lambda4, double alpha);
// Upper bound built from slice-norm products and single contractions (lambda2, lambda3 terms).
double product_bound_rhs(const TdbModel& model, double lambda2, double lambda3, double alpha);

struct BoundReport {
  double alpha = 2.0;
  double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0, lambda4 = 0.0;
  std::array<double, 3> trace_norms{};
  double L = 0.0;
  double lhs_norm = 0.0, rhs_norm = 0.0, gap_norm = 0.0;
  double lhs_product = 0.0, rhs_product = 0.0, gap_product = 0.0;
  bool holds_norm = true, holds_product = true;
  // True when the inequalities are provable for this model: alpha <= 2 or a single block.
  // With alpha > 2 and several blocks, the alpha/2 power of the block sum is superadditive
  // and the bounds can fail for valid decompositions.
  bool guaranteed = true;
  std::size_t parts = 0, blocks = 0;

  static double tolerance(double rhs) { return 1e-8 * std::max(1.0, rhs); }
  std::string to_json() const;
};

// Computes the report without judging it.
BoundReport bound_report(const TdbModel& model, const RegConfig& cfg,
                         std::size_t budget_bytes = kDefaultMaterializeBudget);
// As bound_report, but throws BoundViolation when a guaranteed inequality fails beyond tolerance.
BoundReport check_bounds(const TdbModel& model, const RegConfig& cfg,
                         std::size_t budget_bytes = kDefaultMaterializeBudget);

struct SplitFactors {
  DenseMatrix u;
  DenseMatrix v;
};
// z = U V^T with 1/2 (lambda |U|^(2 alpha) + |V|^(2 alpha) / lambda) = |z|_*^alpha.
SplitFactors balanced_split(const DenseMatrix& z, double lambda, double alpha);
// 1/2 (lambda |U|_F^(2 alpha) + |V|_F^(2 alpha) / lambda)
double balanced_split_objective(const DenseMatrix& u, const DenseMatrix& v, double lambda, double alpha);

// Single-block Tucker decomposition of x (untied, P = largest unfolding rank, zero-padded)
// whose norm_bound_rhs equals 2 sqrt(lambda1 lambda4) L(x; alpha). A zero x yields a zero model.
TdbModel tight_tucker_decomposition(const DenseTensor3& x, double lambda1, double lambda4,
                                      double alpha);

}  // namespace tdb
