#pragma once

#include <array>
#include <span>
#include <string_view>

#include "tdb/model.hpp"

namespace tdb {

enum class RegKind { none, f2, n3, ivr };

std::string_view reg_kind_name(RegKind kind);
// Accepts none, f2, n3, ivr. "dura" is recognized and rejected as not implemented.
RegKind reg_kind_from_name(std::string_view name);

// f2 and n3 use lambda1 as their single weight.
struct RegConfig {
  RegKind kind = RegKind::none;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  double alpha = 2.0;

  // lambda3 := lambda1 and lambda4 := lambda2.
  static RegConfig ivr_tied(double lambda1, double lambda2, double alpha);
  void validate() const;
};

// Gradient sinks for one sampled triplet. Values are added, never overwritten.
// Row spans have length dim; core has length P^3 or is empty to skip it.
struct TripletGrad {
  std::span<double> head;
  std::span<double> rel;
  std::span<double> tail;
  std::span<double> core;
};

// ||x||^alpha and its gradient alpha ||x||^(alpha-2) x (zero at x = 0).
double norm_power(std::span<const double> x, double alpha);
void add_norm_power_grad(std::span<const double> x, double alpha, double scale,
                         std::span<double> out);

// Weighted IVR over the rows of one sampled triplet; cost O(D P^2).
double ivr_triplet(const TdbModel& model, const Triplet& x, const RegConfig& cfg,
                   const TripletGrad* grad = nullptr);

double f2_triplet(const TdbModel& model, const Triplet& x, double lambda,
                  const TripletGrad* grad = nullptr);
double n3_triplet(const TdbModel& model, const Triplet& x, double lambda,
                  const TripletGrad* grad = nullptr);

// Dispatches on cfg.kind; none yields 0.
double penalty_triplet(const TdbModel& model, const Triplet& x, const RegConfig& cfg,
                       const TripletGrad* grad = nullptr);

// Unweighted sums over blocks of the twelve full-slice norms, grouped by coefficient:
// lambda1: |H|^a, |R|^a, |T|^a
// lambda2: |T|^a|R|^a, |T|^a|H|^a, |R|^a|H|^a
// lambda3: |W x1 H|^a, |W x2 R|^a, |W x3 T|^a
// lambda4: |W x2 R x3 T|^a, |W x3 T x1 H|^a, |W x1 H x2 R|^a
struct IvrTerms {
  std::array<double, 3> l1{};
  std::array<double, 3> l2{};
  std::array<double, 3> l3{};
  std::array<double, 3> l4{};

  double weighted(double lambda1, double lambda2, double lambda3, double lambda4) const;
};

IvrTerms ivr_full_terms(const TdbModel& model, double alpha);
double ivr_full(const TdbModel& model, const RegConfig& cfg);

}  // namespace tdb
