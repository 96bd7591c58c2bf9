#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdb/model.hpp"
#include "tdb/tensor.hpp"

namespace tdb {

// P^2 x P^2 permutation with S(iP + j, jP + i) = 1 (zero-based).
DenseMatrix swap_matrix(std::size_t parts);

struct LearnabilityReport {
  std::size_t parts = 0;
  std::size_t rank_sym = 0;     // rank(W2^T - S W2^T)
  std::size_t rank_anti = 0;    // rank(W2^T + S W2^T)
  std::size_t rank_w2 = 0;      // rank(W2^T)
  std::size_t rank_concat = 0;  // rank([W2^T, S W2^T])
  bool symmetry = false;
  bool antisymmetry = false;
  bool inverse = false;
  std::string caveat;  // non-empty for untied models

  std::string to_json() const;
  std::string to_text() const;
};

// Rank tests on the transposed mode-2 unfolding of the core. `tied` only affects the caveat.
LearnabilityReport learnability_report(const CoreTensor& core, bool tied = true);

// Orthonormal null-space basis (each of length P) of W2^T - S W2^T, resp. W2^T + S W2^T.
// A relation block r from this space makes the score symmetric (antisymmetric) in head and tail.
std::vector<std::vector<double>> symmetry_witnesses(const CoreTensor& core);
std::vector<std::vector<double>> antisymmetry_witnesses(const CoreTensor& core);

// Least-squares r' with S W2^T r' = W2^T r, i.e. score(h, r, t) = score(t, r', h) when the
// inverse rule is learnable.
std::vector<double> inverse_witness(const CoreTensor& core, std::span<const double> r);

// Core file: JSON {"parts": P, "values": [P^3 numbers, row-major (l, m, n)]}.
CoreTensor parse_core_json(std::string_view text);
CoreTensor load_core_file(const std::filesystem::path& path);

}  // namespace tdb
