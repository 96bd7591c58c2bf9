#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdb/dataset.hpp"
#include "tdb/model.hpp"

namespace tdb {

enum class TieMode {
  optimistic,  // count strictly greater competitors only
  average,     // tied competitors contribute half a position each
};

// 1 + number of competitors outside `filter` (sorted ids; the true tail is always kept)
// that outscore the true tail.
double filtered_rank(std::span<const double> scores, std::size_t true_k,
                     std::span<const std::size_t> filter, TieMode tie = TieMode::optimistic);

inline constexpr int kHitsCutoffs[] = {1, 3, 10};

struct RankingMetrics {
  double mrr = 0.0;
  double mr = 0.0;
  std::map<int, double> hits;
  std::size_t count = 0;

  double hits_at(int cutoff) const;
  // {split, mrr, mr, hits1, hits3, hits10, count}
  std::string to_json(std::string_view split) const;
  // Header line plus one tab-separated row.
  std::string to_tsv(std::string_view split) const;
};

RankingMetrics metrics_from_ranks(std::span<const double> ranks);

struct EvalOptions {
  TieMode tie = TieMode::optimistic;
  std::size_t threads = 0;  // 0: thread_count()
};

// Filtered tail ranks of every triplet in `queries`, in input order.
std::vector<double> rank_queries(const TdbModel& model, std::span<const Triplet> queries,
                                 const FilterIndex& filter, const EvalOptions& opts = {});

RankingMetrics evaluate(const TdbModel& model, const Dataset& ds, Split split,
                        const EvalOptions& opts = {});

}  // namespace tdb
