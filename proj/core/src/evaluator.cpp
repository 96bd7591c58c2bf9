#include "tdb/evaluator.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "tdb/error.hpp"
#include "tdb/parallel.hpp"

namespace tdb {

double filtered_rank(std::span<const double> scores, std::size_t true_k,
                     std::span<const std::size_t> filter, TieMode tie) {
  if (true_k >= scores.size()) throw ConfigError("true tail id out of range");
  const double target = scores[true_k];
  std::size_t greater = 0;
  std::size_t equal = 0;
  auto f = filter.begin();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    while (f != filter.end() && *f < k) ++f;
    if (k == true_k) continue;
    if (f != filter.end() && *f == k) continue;
    if (scores[k] > target)
      ++greater;
    else if (scores[k] == target)
      ++equal;
  }
  double rank = 1.0 + static_cast<double>(greater);
  if (tie == TieMode::average) rank += 0.5 * static_cast<double>(equal);
  return rank;
}

double RankingMetrics::hits_at(int cutoff) const {
  const auto it = hits.find(cutoff);
  return it == hits.end() ? 0.0 : it->second;
}

std::string RankingMetrics::to_json(std::string_view split) const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["mrr"] = mrr;
  j["mr"] = mr;
  j["hits1"] = hits_at(1);
  j["hits3"] = hits_at(3);
  j["hits10"] = hits_at(10);
  j["count"] = count;
  return j.dump();
}

std::string RankingMetrics::to_tsv(std::string_view split) const {
  std::ostringstream out;
  out.precision(17);
  out << "split\tmrr\tmr\thits1\thits3\thits10\tcount\n"
      << split << '\t' << mrr << '\t' << mr << '\t' << hits_at(1) << '\t' << hits_at(3) << '\t'
      << hits_at(10) << '\t' << count << '\n';
  return out.str();
}

RankingMetrics metrics_from_ranks(std::span<const double> ranks) {
  RankingMetrics m;
  m.count = ranks.size();
  for (int c : kHitsCutoffs) m.hits[c] = 0.0;
  if (ranks.empty()) return m;
  for (double r : ranks) {
    m.mrr += 1.0 / r;
    m.mr += r;
    for (int c : kHitsCutoffs)
      if (r <= c) m.hits[c] += 1.0;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.mr /= n;
  for (auto& [c, v] : m.hits) v /= n;
  return m;
}

std::vector<double> rank_queries(const TdbModel& model, std::span<const Triplet> queries,
                                 const FilterIndex& filter, const EvalOptions& opts) {
  std::vector<double> ranks(queries.size());
  const std::size_t threads = opts.threads == 0 ? thread_count() : opts.threads;
  parallel_chunks(queries.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> scores(model.num_tails());
    for (std::size_t q = begin; q < end; ++q) {
      const auto& x = queries[q];
      score_all_tails(model, x.head, x.rel, scores);
      ranks[q] = filtered_rank(scores, x.tail, filter.tails(x.head, x.rel), opts.tie);
    }
  });
  return ranks;
}

RankingMetrics evaluate(const TdbModel& model, const Dataset& ds, Split split,
                        const EvalOptions& opts) {
  const auto& queries = ds.split(split);
  if (queries.empty())
    throw ConfigError("cannot evaluate an empty '" + std::string(split_name(split)) + "' split");
  const auto ranks = rank_queries(model, queries, ds.filter, opts);
  return metrics_from_ranks(ranks);
}

}  // namespace tdb
