#include "tdb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tdb/error.hpp"

namespace tdb {

namespace {

double half_power(double v, double alpha) {
  if (v == 0.0) return 0.0;
  if (alpha == 2.0) return v;
  return std::pow(v, 0.5 * alpha);
}

}  // namespace

std::array<double, 3> mode_trace_norms(const DenseTensor3& x) {
  return {trace_norm(unfold(x, 1)), trace_norm(unfold(x, 2)), trace_norm(unfold(x, 3))};
}

double overlapped_trace_norm(const std::array<double, 3>& trace_norms, double alpha) {
  return half_power(trace_norms[0], alpha) + half_power(trace_norms[1], alpha) +
         half_power(trace_norms[2], alpha);
}

double overlapped_trace_norm(const DenseTensor3& x, double alpha) {
  return overlapped_trace_norm(mode_trace_norms(x), alpha);
}

double norm_bound_rhs(const TdbModel& model, double lambda1, double lambda4, double alpha) {
  return ivr_full_terms(model, alpha).weighted(lambda1, 0.0, 0.0, lambda4);
}

double product_bound_rhs(const TdbModel& model, double lambda2, double lambda3, double alpha) {
  return ivr_full_terms(model, alpha).weighted(0.0, lambda2, lambda3, 0.0);
}

std::string BoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["alpha"] = alpha;
  j["lambda1"] = lambda1;
  j["lambda2"] = lambda2;
  j["lambda3"] = lambda3;
  j["lambda4"] = lambda4;
  j["parts"] = parts;
  j["blocks"] = blocks;
  j["trace_norm_mode1"] = trace_norms[0];
  j["trace_norm_mode2"] = trace_norms[1];
  j["trace_norm_mode3"] = trace_norms[2];
  j["L"] = L;
  j["L_rounded"] = std::llround(L);
  j["lhs_norm"] = lhs_norm;
  j["rhs_norm"] = rhs_norm;
  j["gap_norm"] = gap_norm;
  j["lhs_product"] = lhs_product;
  j["rhs_product"] = rhs_product;
  j["gap_product"] = gap_product;
  j["holds_norm"] = holds_norm;
  j["holds_product"] = holds_product;
  j["guaranteed"] = guaranteed;
  return j.dump();
}

BoundReport bound_report(const TdbModel& model, const RegConfig& cfg, std::size_t budget_bytes) {
  if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
  BoundReport r;
  r.alpha = cfg.alpha;
  r.lambda1 = cfg.lambda1;
  r.lambda2 = cfg.lambda2;
  r.lambda3 = cfg.lambda3;
  r.lambda4 = cfg.lambda4;
  r.parts = model.parts();
  r.blocks = model.blocks();
  r.guaranteed = cfg.alpha <= 2.0 || model.blocks() == 1;

  const DenseTensor3 x = materialize_tensor(model, budget_bytes);
  r.trace_norms = mode_trace_norms(x);
  r.L = overlapped_trace_norm(r.trace_norms, cfg.alpha);
  const IvrTerms terms = ivr_full_terms(model, cfg.alpha);
  r.lhs_norm = 2.0 * std::sqrt(cfg.lambda1 * cfg.lambda4) * r.L;
  r.rhs_norm = terms.weighted(cfg.lambda1, 0.0, 0.0, cfg.lambda4);
  r.lhs_product = 2.0 * std::sqrt(cfg.lambda2 * cfg.lambda3) * r.L;
  r.rhs_product = terms.weighted(0.0, cfg.lambda2, cfg.lambda3, 0.0);
  r.gap_norm = r.rhs_norm - r.lhs_norm;
  r.gap_product = r.rhs_product - r.lhs_product;
  r.holds_norm = r.gap_norm >= -BoundReport::tolerance(r.rhs_norm);
  r.holds_product = r.gap_product >= -BoundReport::tolerance(r.rhs_product);
  return r;
}

BoundReport check_bounds(const TdbModel& model, const RegConfig& cfg, std::size_t budget_bytes) {
  BoundReport r = bound_report(model, cfg, budget_bytes);
  if (r.guaranteed && (!r.holds_norm || !r.holds_product)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "trace-norm bound violated: gap_norm = " << r.gap_norm << ", gap_product = " << r.gap_product
        << " (alpha = " << r.alpha << ")";
    throw BoundViolation(msg.str());
  }
  return r;
}

SplitFactors balanced_split(const DenseMatrix& z, double lambda, double alpha) {
  if (!(lambda > 0.0)) throw ConfigError("balanced_split needs lambda > 0");
  if (!(alpha > 0.0)) throw ConfigError("balanced_split needs alpha > 0");
  const CompactSvd svd = compact_svd(z);
  const double su = std::pow(lambda, -1.0 / (2.0 * alpha));
  const double sv = std::pow(lambda, 1.0 / (2.0 * alpha));
  SplitFactors out{DenseMatrix(z.rows(), svd.rank()), DenseMatrix(z.cols(), svd.rank())};
  for (std::size_t c = 0; c < svd.rank(); ++c) {
    const double root = std::sqrt(svd.sigma[c]);
    for (std::size_t r = 0; r < z.rows(); ++r) out.u(r, c) = su * svd.u(r, c) * root;
    for (std::size_t r = 0; r < z.cols(); ++r) out.v(r, c) = sv * svd.v(r, c) * root;
  }
  return out;
}

double balanced_split_objective(const DenseMatrix& u, const DenseMatrix& v, double lambda, double alpha) {
  const double nu = u.frobenius_norm(), nv = v.frobenius_norm();
  return 0.5 * (lambda * std::pow(nu, 2.0 * alpha) + std::pow(nv, 2.0 * alpha) / lambda);
}

TdbModel tight_tucker_decomposition(const DenseTensor3& x, double lambda1, double lambda4,
                                      double alpha) {
  if (!(lambda1 > 0.0) || !(lambda4 > 0.0))
    throw ConfigError("the equality construction needs lambda1 > 0 and lambda4 > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!x.all_finite()) throw SvdError("tensor has non-finite entries");
  const auto shape = x.shape();

  const CompactSvd s1 = compact_svd(unfold(x, 1));
  const CompactSvd s2 = compact_svd(unfold(x, 2));
  const CompactSvd s3 = compact_svd(unfold(x, 3));
  const std::size_t p = std::max({s1.rank(), s2.rank(), s3.rank(), std::size_t{1}});

  auto make_core = [&] {
    CoreTensor core;
    core.parts = p;
    core.trainable = true;
    core.values = DenseTensor3({p, p, p});
    return core;
  };
  EmbeddingTable head(shape[0], 1, p), rel(shape[1], 1, p), tail(shape[2], 1, p);
  CoreTensor core = make_core();
  if (s1.rank() == 0 || s2.rank() == 0 || s3.rank() == 0)
    return TdbModel("tucker", std::move(core), std::move(head), std::move(rel), std::move(tail));

  const double c = std::sqrt(lambda1 / lambda4);
  const double factor_scale = std::pow(c, -1.0 / alpha);
  const double core_scale = std::pow(c, 3.0 / alpha);

  auto fill_factor = [&](const CompactSvd& s, EmbeddingTable& e) {
    auto vals = e.values();
    for (std::size_t row = 0; row < s.u.rows(); ++row)
      for (std::size_t q = 0; q < s.rank(); ++q)
        vals[row * p + q] = factor_scale * s.u(row, q) * std::sqrt(s.sigma[q]);
  };
  fill_factor(s1, head);
  fill_factor(s2, rel);
  fill_factor(s3, tail);

  // Projection sqrt(Sigma^-1) U^T, zero-padded to p rows.
  auto projection = [&](const CompactSvd& s) {
    DenseMatrix m(p, s.u.rows());
    for (std::size_t q = 0; q < s.rank(); ++q) {
      const double inv = 1.0 / std::sqrt(s.sigma[q]);
      for (std::size_t row = 0; row < s.u.rows(); ++row) m(q, row) = inv * s.u(row, q);
    }
    return m;
  };
  DenseTensor3 w = mode_n_product(x, projection(s1), 1);
  w = mode_n_product(w, projection(s2), 2);
  w = mode_n_product(w, projection(s3), 3);
  for (double& v : w.values()) v *= core_scale;
  core.values = std::move(w);
  return TdbModel("tucker", std::move(core), std::move(head), std::move(rel), std::move(tail));
}

}  // namespace tdb
