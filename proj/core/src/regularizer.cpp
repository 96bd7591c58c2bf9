#include "tdb/regularizer.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "tdb/error.hpp"

namespace tdb {

namespace {

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double power_from_squared(double sq, double alpha) {
  if (sq == 0.0) return 0.0;
  if (alpha == 2.0) return sq;
  return std::pow(sq, 0.5 * alpha);
}

// alpha * ||x||^(alpha - 2), the scalar in front of x in the gradient of ||x||^alpha.
double grad_coef_from_squared(double sq, double alpha) {
  if (sq == 0.0) return 0.0;
  if (alpha == 2.0) return 2.0;
  return alpha * std::pow(sq, 0.5 * alpha - 1.0);
}

bool has_rows(const TdbModel& model, const Triplet& x) {
  return x.head < model.num_heads() && x.rel < model.num_relations() &&
         x.tail < model.num_tails();
}

void check_rows(const TdbModel& model, const Triplet& x) {
  if (!has_rows(model, x))
    throw ConfigError("triplet (" + std::to_string(x.head) + ", " + std::to_string(x.rel) + ", " +
                      std::to_string(x.tail) + ") out of range for the model");
}

struct BlockScratch {
  std::vector<double> a, b, c;  // W x1 h (m,n), W x2 r (l,n), W x3 t (l,m)
  std::vector<double> u, v, w;  // W x2 r x3 t, W x1 h x3 t, W x1 h x2 r
  std::vector<double> gu, gv, gw;

  void resize(std::size_t p) {
    a.assign(p * p, 0.0);
    b.assign(p * p, 0.0);
    c.assign(p * p, 0.0);
    u.assign(p, 0.0);
    v.assign(p, 0.0);
    w.assign(p, 0.0);
    gu.assign(p, 0.0);
    gv.assign(p, 0.0);
    gw.assign(p, 0.0);
  }
};

}  // namespace

std::string_view reg_kind_name(RegKind kind) {
  switch (kind) {
    case RegKind::none:
      return "none";
    case RegKind::f2:
      return "f2";
    case RegKind::n3:
      return "n3";
    case RegKind::ivr:
      return "ivr";
  }
  return "none";
}

RegKind reg_kind_from_name(std::string_view name) {
  if (name == "none") return RegKind::none;
  if (name == "f2") return RegKind::f2;
  if (name == "n3") return RegKind::n3;
  if (name == "ivr") return RegKind::ivr;
  if (name == "dura")
    throw ConfigError("regularizer 'dura' is not implemented (formula not specified in paper)");
  throw ConfigError("unknown regularizer '" + std::string(name) +
                    "' (expected none, f2, n3 or ivr)");
}

RegConfig RegConfig::ivr_tied(double lambda1, double lambda2, double alpha) {
  return {RegKind::ivr, lambda1, lambda2, lambda1, lambda2, alpha};
}

void RegConfig::validate() const {
  const double ls[] = {lambda1, lambda2, lambda3, lambda4};
  for (double l : ls)
    if (!(l >= 0.0) || !std::isfinite(l))
      throw ConfigError("regularization coefficients must be finite and non-negative");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a positive number");
  if (kind == RegKind::ivr && lambda1 == 0.0 && lambda2 == 0.0 && lambda3 == 0.0 && lambda4 == 0.0)
    throw ConfigError("ivr needs at least one positive lambda");
}

double norm_power(std::span<const double> x, double alpha) {
  return power_from_squared(squared_norm(x), alpha);
}

void add_norm_power_grad(std::span<const double> x, double alpha, double scale,
                         std::span<double> out) {
  const double coef = scale * grad_coef_from_squared(squared_norm(x), alpha);
  if (coef == 0.0) return;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += coef * x[i];
}

double ivr_triplet(const TdbModel& model, const Triplet& x, const RegConfig& cfg,
                   const TripletGrad* grad) {
  check_rows(model, x);
  const double alpha = cfg.alpha;
  const double l1 = cfg.lambda1, l2 = cfg.lambda2, l3 = cfg.lambda3, l4 = cfg.lambda4;
  const std::size_t p = model.parts();
  const bool need_core = l3 != 0.0 || l4 != 0.0;
  const bool core_grad = grad != nullptr && !grad->core.empty() && need_core;
  const auto wv = model.core().values.values();

  thread_local BlockScratch s;
  if (need_core) s.resize(p);

  double total = 0.0;
  for (std::size_t d = 0; d < model.blocks(); ++d) {
    const auto h = model.head().block(x.head, d);
    const auto r = model.rel().block(x.rel, d);
    const auto t = model.tail().block(x.tail, d);
    const double sh = squared_norm(h), sr = squared_norm(r), st = squared_norm(t);
    const double ph = power_from_squared(sh, alpha);
    const double pr = power_from_squared(sr, alpha);
    const double pt = power_from_squared(st, alpha);
    total += l1 * (ph + pr + pt) + l2 * (pt * pr + pt * ph + pr * ph);

    std::span<double> gh, gr, gt;
    if (grad) {
      gh = grad->head.subspan(d * p, p);
      gr = grad->rel.subspan(d * p, p);
      gt = grad->tail.subspan(d * p, p);
      add_norm_power_grad(h, alpha, l1 + l2 * (pt + pr), gh);
      add_norm_power_grad(r, alpha, l1 + l2 * (pt + ph), gr);
      add_norm_power_grad(t, alpha, l1 + l2 * (pr + ph), gt);
    }
    if (!need_core) continue;

    std::fill(s.a.begin(), s.a.end(), 0.0);
    std::fill(s.b.begin(), s.b.end(), 0.0);
    std::fill(s.c.begin(), s.c.end(), 0.0);
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t m = 0; m < p; ++m) {
        const double* row = wv.data() + (l * p + m) * p;
        double cm = 0.0;
        for (std::size_t n = 0; n < p; ++n) {
          s.a[m * p + n] += row[n] * h[l];
          s.b[l * p + n] += row[n] * r[m];
          cm += row[n] * t[n];
        }
        s.c[l * p + m] = cm;
      }
    std::fill(s.u.begin(), s.u.end(), 0.0);
    std::fill(s.v.begin(), s.v.end(), 0.0);
    std::fill(s.w.begin(), s.w.end(), 0.0);
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t m = 0; m < p; ++m) {
        s.u[l] += s.c[l * p + m] * r[m];
        s.v[m] += s.c[l * p + m] * h[l];
      }
    for (std::size_t m = 0; m < p; ++m)
      for (std::size_t n = 0; n < p; ++n) s.w[n] += s.a[m * p + n] * r[m];

    const double sa = squared_norm(s.a), sb = squared_norm(s.b), sc = squared_norm(s.c);
    const double su = squared_norm(s.u), sv = squared_norm(s.v), sw = squared_norm(s.w);
    total += l3 * (power_from_squared(sa, alpha) + power_from_squared(sb, alpha) +
                   power_from_squared(sc, alpha));
    total += l4 * (power_from_squared(su, alpha) + power_from_squared(sv, alpha) +
                   power_from_squared(sw, alpha));
    if (!grad) continue;

    const double ga = l3 * grad_coef_from_squared(sa, alpha);
    const double gb = l3 * grad_coef_from_squared(sb, alpha);
    const double gc = l3 * grad_coef_from_squared(sc, alpha);
    const double cu = l4 * grad_coef_from_squared(su, alpha);
    const double cv = l4 * grad_coef_from_squared(sv, alpha);
    const double cw = l4 * grad_coef_from_squared(sw, alpha);
    for (std::size_t q = 0; q < p; ++q) {
      s.gu[q] = cu * s.u[q];
      s.gv[q] = cv * s.v[q];
      s.gw[q] = cw * s.w[q];
    }

    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t m = 0; m < p; ++m) {
        const double* row = wv.data() + (l * p + m) * p;
        const double clm = s.c[l * p + m];
        // |C|: dt_n += gc C_lm W_lmn.
        // |u|: dr_m += Gu_l C_lm.  |v|: dh_l += Gv_m C_lm.
        gr[m] += s.gu[l] * clm;
        gh[l] += s.gv[m] * clm;
        double dh = 0.0, dr = 0.0;
        for (std::size_t n = 0; n < p; ++n) {
          dh += ga * row[n] * s.a[m * p + n];
          dr += gb * row[n] * s.b[l * p + n];
          gt[n] += gc * row[n] * clm;
        }
        gh[l] += dh;
        gr[m] += dr;
      }
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t n = 0; n < p; ++n) {
        const double bln = s.b[l * p + n];
        gt[n] += s.gu[l] * bln;
        gh[l] += s.gw[n] * bln;
      }
    for (std::size_t m = 0; m < p; ++m)
      for (std::size_t n = 0; n < p; ++n) {
        const double amn = s.a[m * p + n];
        gt[n] += s.gv[m] * amn;
        gr[m] += s.gw[n] * amn;
      }

    if (!core_grad) continue;
    auto gcore = grad->core;
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t m = 0; m < p; ++m) {
        double* out = gcore.data() + (l * p + m) * p;
        const double clm = gc * s.c[l * p + m];
        const double rt = s.gu[l] * r[m];
        const double hv = h[l] * s.gv[m];
        const double hr = h[l] * r[m];
        for (std::size_t n = 0; n < p; ++n)
          out[n] += ga * s.a[m * p + n] * h[l] + gb * s.b[l * p + n] * r[m] + clm * t[n] +
                    rt * t[n] + hv * t[n] + hr * s.gw[n];
      }
  }
  return total;
}

double f2_triplet(const TdbModel& model, const Triplet& x, double lambda,
                  const TripletGrad* grad) {
  check_rows(model, x);
  const auto h = model.head().row(x.head);
  const auto r = model.rel().row(x.rel);
  const auto t = model.tail().row(x.tail);
  if (grad) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      grad->head[i] += 2.0 * lambda * h[i];
      grad->rel[i] += 2.0 * lambda * r[i];
      grad->tail[i] += 2.0 * lambda * t[i];
    }
  }
  return lambda * (squared_norm(h) + squared_norm(r) + squared_norm(t));
}

double n3_triplet(const TdbModel& model, const Triplet& x, double lambda,
                  const TripletGrad* grad) {
  check_rows(model, x);
  const auto h = model.head().row(x.head);
  const auto r = model.rel().row(x.rel);
  const auto t = model.tail().row(x.tail);
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sum += std::abs(h[i]) * h[i] * h[i] + std::abs(r[i]) * r[i] * r[i] +
           std::abs(t[i]) * t[i] * t[i];
    if (grad) {
      grad->head[i] += 3.0 * lambda * std::abs(h[i]) * h[i];
      grad->rel[i] += 3.0 * lambda * std::abs(r[i]) * r[i];
      grad->tail[i] += 3.0 * lambda * std::abs(t[i]) * t[i];
    }
  }
  return lambda * sum;
}

double penalty_triplet(const TdbModel& model, const Triplet& x, const RegConfig& cfg,
                       const TripletGrad* grad) {
  switch (cfg.kind) {
    case RegKind::none:
      return 0.0;
    case RegKind::f2:
      return f2_triplet(model, x, cfg.lambda1, grad);
    case RegKind::n3:
      return n3_triplet(model, x, cfg.lambda1, grad);
    case RegKind::ivr:
      return ivr_triplet(model, x, cfg, grad);
  }
  return 0.0;
}

double IvrTerms::weighted(double lambda1, double lambda2, double lambda3, double lambda4) const {
  double out = 0.0;
  for (int i = 0; i < 3; ++i)
    out += lambda1 * l1[i] + lambda2 * l2[i] + lambda3 * l3[i] + lambda4 * l4[i];
  return out;
}

IvrTerms ivr_full_terms(const TdbModel& model, double alpha) {
  IvrTerms out;
  const std::size_t p = model.parts();
  const auto wv = model.core().values.values();
  const auto& hs = model.head();
  const auto& rs = model.rel();
  const auto& ts = model.tail();
  const std::size_t ne = hs.count(), nr = rs.count(), nt = ts.count();

  auto slice_sq = [](const EmbeddingTable& e, std::size_t d) {
    double s = 0.0;
    for (std::size_t id = 0; id < e.count(); ++id) s += squared_norm(e.block(id, d));
    return s;
  };

  // Per-row contractions of W with one vector, laid out row after row.
  std::vector<double> a(ne * p * p), b(nr * p * p), c(nt * p * p);
  for (std::size_t d = 0; d < model.blocks(); ++d) {
    const double sh = slice_sq(hs, d), sr = slice_sq(rs, d), st = slice_sq(ts, d);
    const double ph = power_from_squared(sh, alpha);
    const double pr = power_from_squared(sr, alpha);
    const double pt = power_from_squared(st, alpha);
    out.l1[0] += ph;
    out.l1[1] += pr;
    out.l1[2] += pt;
    out.l2[0] += pt * pr;
    out.l2[1] += pt * ph;
    out.l2[2] += pr * ph;

    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t m = 0; m < p; ++m) {
        const double* row = wv.data() + (l * p + m) * p;
        for (std::size_t i = 0; i < ne; ++i) {
          const double hl = hs.block(i, d)[l];
          double* ai = a.data() + i * p * p + m * p;
          for (std::size_t n = 0; n < p; ++n) ai[n] += row[n] * hl;
        }
        for (std::size_t j = 0; j < nr; ++j) {
          const double rm = rs.block(j, d)[m];
          double* bj = b.data() + j * p * p + l * p;
          for (std::size_t n = 0; n < p; ++n) bj[n] += row[n] * rm;
        }
        for (std::size_t k = 0; k < nt; ++k) {
          const auto t = ts.block(k, d);
          double cm = 0.0;
          for (std::size_t n = 0; n < p; ++n) cm += row[n] * t[n];
          c[k * p * p + l * p + m] = cm;
        }
      }
    out.l3[0] += power_from_squared(squared_norm(a), alpha);
    out.l3[1] += power_from_squared(squared_norm(b), alpha);
    out.l3[2] += power_from_squared(squared_norm(c), alpha);

    // u(j,k)_l = sum_n B_j[l,n] t_k[n]
    double su = 0.0;
    for (std::size_t j = 0; j < nr; ++j)
      for (std::size_t k = 0; k < nt; ++k) {
        const auto t = ts.block(k, d);
        for (std::size_t l = 0; l < p; ++l) {
          const double* bl = b.data() + j * p * p + l * p;
          double ul = 0.0;
          for (std::size_t n = 0; n < p; ++n) ul += bl[n] * t[n];
          su += ul * ul;
        }
      }
    // v(i,k)_m = sum_l C_k[l,m] h_i[l]
    double sv = 0.0;
    std::vector<double> acc(p);
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t i = 0; i < ne; ++i) {
        const auto h = hs.block(i, d);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t l = 0; l < p; ++l) {
          const double* cl = c.data() + k * p * p + l * p;
          for (std::size_t m = 0; m < p; ++m) acc[m] += cl[m] * h[l];
        }
        sv += squared_norm(acc);
      }
    // w(i,j)_n = sum_m A_i[m,n] r_j[m]
    double sw = 0.0;
    for (std::size_t i = 0; i < ne; ++i)
      for (std::size_t j = 0; j < nr; ++j) {
        const auto r = rs.block(j, d);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t m = 0; m < p; ++m) {
          const double* am = a.data() + i * p * p + m * p;
          for (std::size_t n = 0; n < p; ++n) acc[n] += am[n] * r[m];
        }
        sw += squared_norm(acc);
      }
    out.l4[0] += power_from_squared(su, alpha);
    out.l4[1] += power_from_squared(sv, alpha);
    out.l4[2] += power_from_squared(sw, alpha);
  }
  return out;
}

double ivr_full(const TdbModel& model, const RegConfig& cfg) {
  return ivr_full_terms(model, cfg.alpha)
      .weighted(cfg.lambda1, cfg.lambda2, cfg.lambda3, cfg.lambda4);
}

}  // namespace tdb
