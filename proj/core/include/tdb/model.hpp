#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdb/tensor.hpp"

namespace tdb {

struct Triplet {
  std::size_t head = 0;
  std::size_t rel = 0;
  std::size_t tail = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

enum class PresetKind { cp, distmult, complex, simple, analogy, quate, tucker };

struct ModelPreset {
  PresetKind kind = PresetKind::cp;
  std::size_t parts = 1;
  bool tied = false;
};

std::string_view preset_name(PresetKind kind);
PresetKind preset_kind_from_name(std::string_view name);

// Preset with its default part count and tying. TuckER takes parts = dim.
ModelPreset make_preset(PresetKind kind, std::size_t dim);

// P x P x P coefficient tensor shared by every block of the embedding.
struct CoreTensor {
  std::size_t parts = 0;
  DenseTensor3 values;
  bool trainable = false;

  double at(std::size_t l, std::size_t m, std::size_t n) const { return values(l, m, n); }
};

// Signed entries (l, m, n) of a constant core, zero-based.
struct CoreEntry {
  std::size_t l, m, n;
  double sign;
};
std::vector<CoreEntry> preset_core_entries(PresetKind kind);

CoreTensor build_preset_core(const ModelPreset& preset, std::size_t dim);

// count x (dim / parts) x parts array; entry (id, d, p) lives at id*dim + d*parts + p.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t count, std::size_t blocks, std::size_t parts);

  std::size_t count() const { return count_; }
  std::size_t blocks() const { return blocks_; }
  std::size_t parts() const { return parts_; }
  std::size_t dim() const { return blocks_ * parts_; }

  std::span<double> row(std::size_t id) { return {values_.data() + id * dim(), dim()}; }
  std::span<const double> row(std::size_t id) const { return {values_.data() + id * dim(), dim()}; }
  // The length-P vector E[id, d, :].
  std::span<const double> block(std::size_t id, std::size_t d) const {
    return {values_.data() + id * dim() + d * parts_, parts_};
  }
  // The count x P slice E[:, d, :] as a matrix.
  DenseMatrix slice(std::size_t d) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t blocks_ = 0;
  std::size_t parts_ = 0;
  std::vector<double> values_;
};

// Block-term model X = sum_d W x1 H[:,d,:] x2 R[:,d,:] x3 T[:,d,:].
// When tied, the tail table is the head table (same storage).
class TdbModel {
 public:
  TdbModel() = default;
  TdbModel(std::string preset, CoreTensor core, EmbeddingTable head, EmbeddingTable rel);
  TdbModel(std::string preset, CoreTensor core, EmbeddingTable head, EmbeddingTable rel,
           EmbeddingTable tail);

  const std::string& preset() const { return preset_; }
  bool tied() const { return tied_; }
  std::size_t parts() const { return core_.parts; }
  std::size_t blocks() const { return head_.blocks(); }
  std::size_t dim() const { return head_.dim(); }
  std::size_t num_heads() const { return head_.count(); }
  std::size_t num_relations() const { return rel_.count(); }
  std::size_t num_tails() const { return tail().count(); }

  const CoreTensor& core() const { return core_; }
  CoreTensor& core() { return core_; }
  const EmbeddingTable& head() const { return head_; }
  EmbeddingTable& head() { return head_; }
  const EmbeddingTable& rel() const { return rel_; }
  EmbeddingTable& rel() { return rel_; }
  const EmbeddingTable& tail() const { return tied_ ? head_ : tail_; }
  EmbeddingTable& tail() { return tied_ ? head_ : tail_; }

  bool operator==(const TdbModel& o) const;

 private:
  void validate() const;

  std::string preset_;
  CoreTensor core_;
  EmbeddingTable head_;
  EmbeddingTable rel_;
  EmbeddingTable tail_;  // empty when tied
  bool tied_ = true;
};

// Zero-initialized model for a KG with the given vocabulary sizes.
TdbModel make_model(const ModelPreset& preset, std::size_t dim, std::size_t num_entities,
                    std::size_t num_relations);

struct InitConfig {
  double embedding_std = 1e-3;
  double core_range = 1.0;  // trainable cores are drawn uniform on [-range, range]
};
void initialize(TdbModel& model, std::uint64_t seed, const InitConfig& cfg = {});

// Sum over blocks of W contracted with the three part-vectors.
double score_triplet(const TdbModel& model, std::size_t i, std::size_t j, std::size_t k);

// Scores of (i, j, k) for every tail k. `w_out`, if non-empty, receives the
// per-block vectors W x1 h_d x2 r_d (blocks * parts values) used for scoring.
void score_all_tails(const TdbModel& model, std::size_t i, std::size_t j, std::span<double> out,
                     std::span<double> w_out = {});
std::vector<double> score_all_tails(const TdbModel& model, std::size_t i, std::size_t j);

inline constexpr std::size_t kDefaultMaterializeBudget = std::size_t{1} << 30;  // bytes

// Dense |heads| x |relations| x |tails| tensor built from mode products.
// Throws BudgetError when the tensor would exceed `budget_bytes`.
DenseTensor3 materialize_tensor(const TdbModel& model,
                                std::size_t budget_bytes = kDefaultMaterializeBudget);

// P^3 (trainable core only) + embedding parameters (|E|D + |R|D tied, 2|E|D + |R|D untied).
std::size_t parameter_count(const TdbModel& model);

namespace kernels {

// Contractions of the core with single part-vectors; W is P x P x P row-major.
// out[n] = sum_{l,m} W[l,m,n] h[l] r[m]
void contract_hr(const DenseTensor3& w, std::span<const double> h, std::span<const double> r,
                 std::span<double> out);
// out[l] = sum_{m,n} W[l,m,n] r[m] t[n]
void contract_rt(const DenseTensor3& w, std::span<const double> r, std::span<const double> t,
                 std::span<double> out);
// out[m] = sum_{l,n} W[l,m,n] h[l] t[n]
void contract_ht(const DenseTensor3& w, std::span<const double> h, std::span<const double> t,
                 std::span<double> out);

}  // namespace kernels

}  // namespace tdb
