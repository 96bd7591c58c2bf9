#include "tdb/model.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "tdb/error.hpp"

namespace tdb {

namespace {

struct PresetInfo {
  PresetKind kind;
  std::string_view name;
  std::size_t parts;  // 0 means "equal to dim"
  bool tied;
};

constexpr PresetInfo kPresets[] = {
    {PresetKind::cp, "cp", 1, false},
    {PresetKind::distmult, "distmult", 1, true},
    {PresetKind::complex, "complex", 2, true},
    {PresetKind::simple, "simple", 2, true},
    {PresetKind::analogy, "analogy", 4, true},
    {PresetKind::quate, "quate", 4, true},
    {PresetKind::tucker, "tucker", 0, true},
};

const PresetInfo& info(PresetKind kind) {
  for (const auto& p : kPresets)
    if (p.kind == kind) return p;
  throw ConfigError("unknown preset kind");
}

}  // namespace

std::string_view preset_name(PresetKind kind) { return info(kind).name; }

PresetKind preset_kind_from_name(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p.kind;
  throw ConfigError("unknown model preset '" + std::string(name) +
                    "' (expected cp, distmult, complex, simple, analogy, quate or tucker)");
}

ModelPreset make_preset(PresetKind kind, std::size_t dim) {
  const auto& p = info(kind);
  return {kind, p.parts == 0 ? dim : p.parts, p.tied};
}

std::vector<CoreEntry> preset_core_entries(PresetKind kind) {
  switch (kind) {
    case PresetKind::cp:
    case PresetKind::distmult:
      return {{0, 0, 0, 1.0}};
    case PresetKind::complex:
      return {{0, 0, 0, 1.0}, {1, 0, 1, 1.0}, {0, 1, 1, 1.0}, {1, 1, 0, -1.0}};
    case PresetKind::simple:
      return {{0, 0, 1, 1.0}, {1, 1, 0, 1.0}};
    case PresetKind::analogy:
      return {{0, 0, 0, 1.0}, {1, 1, 1, 1.0}, {2, 2, 2, 1.0},
              {2, 3, 3, 1.0}, {3, 2, 3, 1.0}, {3, 3, 2, -1.0}};
    case PresetKind::quate:
      return {
          // tail part 1
          {0, 0, 0, 1.0}, {1, 1, 0, -1.0}, {2, 2, 0, -1.0}, {3, 3, 0, -1.0},
          // tail part 2
          {0, 1, 1, 1.0}, {1, 0, 1, 1.0}, {2, 3, 1, 1.0}, {3, 2, 1, -1.0},
          // tail part 3
          {0, 2, 2, 1.0}, {1, 3, 2, -1.0}, {2, 0, 2, 1.0}, {3, 1, 2, 1.0},
          // tail part 4
          {0, 3, 3, 1.0}, {1, 2, 3, 1.0}, {2, 1, 3, -1.0}, {3, 0, 3, 1.0},
      };
    case PresetKind::tucker:
      return {};
  }
  return {};
}

CoreTensor build_preset_core(const ModelPreset& preset, std::size_t dim) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (preset.parts == 0 || dim % preset.parts != 0)
    throw ConfigError("dimension " + std::to_string(dim) + " is not divisible by parts " +
                      std::to_string(preset.parts));
  CoreTensor core;
  core.parts = preset.parts;
  core.values = DenseTensor3({preset.parts, preset.parts, preset.parts});
  if (preset.kind == PresetKind::tucker) {
    core.trainable = true;
    return core;
  }
  if (preset.parts != info(preset.kind).parts)
    throw ConfigError(std::string(preset_name(preset.kind)) + " requires parts = " +
                      std::to_string(info(preset.kind).parts));
  for (const auto& e : preset_core_entries(preset.kind)) core.values(e.l, e.m, e.n) = e.sign;
  return core;
}

EmbeddingTable::EmbeddingTable(std::size_t count, std::size_t blocks, std::size_t parts)
    : count_(count), blocks_(blocks), parts_(parts), values_(count * blocks * parts, 0.0) {}

DenseMatrix EmbeddingTable::slice(std::size_t d) const {
  DenseMatrix m(count_, parts_);
  for (std::size_t id = 0; id < count_; ++id) {
    const auto b = block(id, d);
    for (std::size_t p = 0; p < parts_; ++p) m(id, p) = b[p];
  }
  return m;
}

TdbModel::TdbModel(std::string preset, CoreTensor core, EmbeddingTable head, EmbeddingTable rel)
    : preset_(std::move(preset)),
      core_(std::move(core)),
      head_(std::move(head)),
      rel_(std::move(rel)),
      tied_(true) {
  validate();
}

TdbModel::TdbModel(std::string preset, CoreTensor core, EmbeddingTable head, EmbeddingTable rel,
                   EmbeddingTable tail)
    : preset_(std::move(preset)),
      core_(std::move(core)),
      head_(std::move(head)),
      rel_(std::move(rel)),
      tail_(std::move(tail)),
      tied_(false) {
  validate();
}

void TdbModel::validate() const {
  const std::size_t p = core_.parts;
  if (core_.values.shape() != Shape3{p, p, p}) throw ShapeError("core tensor must be P x P x P");
  for (const EmbeddingTable* t : {&head_, &rel_, &tail()}) {
    if (t->parts() != p) throw ShapeError("embedding parts do not match the core");
    if (t->blocks() != head_.blocks()) throw ShapeError("embedding tables disagree on D/P");
  }
}

bool TdbModel::operator==(const TdbModel& o) const {
  return preset_ == o.preset_ && tied_ == o.tied_ && core_.parts == o.core_.parts &&
         core_.trainable == o.core_.trainable && core_.values == o.core_.values &&
         head_ == o.head_ && rel_ == o.rel_ && (tied_ || tail_ == o.tail_);
}

TdbModel make_model(const ModelPreset& preset, std::size_t dim, std::size_t num_entities,
                    std::size_t num_relations) {
  CoreTensor core = build_preset_core(preset, dim);
  const std::size_t blocks = dim / preset.parts;
  std::string name(preset_name(preset.kind));
  EmbeddingTable head(num_entities, blocks, preset.parts);
  EmbeddingTable rel(num_relations, blocks, preset.parts);
  if (preset.tied) return TdbModel(name, std::move(core), std::move(head), std::move(rel));
  EmbeddingTable tail(num_entities, blocks, preset.parts);
  return TdbModel(name, std::move(core), std::move(head), std::move(rel), std::move(tail));
}

void initialize(TdbModel& model, std::uint64_t seed, const InitConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, cfg.embedding_std);
  for (double& v : model.head().values()) v = normal(rng);
  for (double& v : model.rel().values()) v = normal(rng);
  if (!model.tied())
    for (double& v : model.tail().values()) v = normal(rng);
  if (model.core().trainable) {
    std::uniform_real_distribution<double> uniform(-cfg.core_range, cfg.core_range);
    for (double& v : model.core().values.values()) v = uniform(rng);
  }
}

namespace kernels {

void contract_hr(const DenseTensor3& w, std::span<const double> h, std::span<const double> r,
                 std::span<double> out) {
  const std::size_t p = h.size();
  const auto wv = w.values();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t l = 0; l < p; ++l) {
    if (h[l] == 0.0) continue;
    for (std::size_t m = 0; m < p; ++m) {
      const double c = h[l] * r[m];
      if (c == 0.0) continue;
      const double* row = wv.data() + (l * p + m) * p;
      for (std::size_t n = 0; n < p; ++n) out[n] += c * row[n];
    }
  }
}

void contract_rt(const DenseTensor3& w, std::span<const double> r, std::span<const double> t,
                 std::span<double> out) {
  const std::size_t p = r.size();
  const auto wv = w.values();
  for (std::size_t l = 0; l < p; ++l) {
    double acc = 0.0;
    for (std::size_t m = 0; m < p; ++m) {
      const double* row = wv.data() + (l * p + m) * p;
      double inner = 0.0;
      for (std::size_t n = 0; n < p; ++n) inner += row[n] * t[n];
      acc += r[m] * inner;
    }
    out[l] = acc;
  }
}

void contract_ht(const DenseTensor3& w, std::span<const double> h, std::span<const double> t,
                 std::span<double> out) {
  const std::size_t p = h.size();
  const auto wv = w.values();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t l = 0; l < p; ++l) {
    if (h[l] == 0.0) continue;
    for (std::size_t m = 0; m < p; ++m) {
      const double* row = wv.data() + (l * p + m) * p;
      double inner = 0.0;
      for (std::size_t n = 0; n < p; ++n) inner += row[n] * t[n];
      out[m] += h[l] * inner;
    }
  }
}

}  // namespace kernels

namespace {

void check_ids(const TdbModel& model, std::size_t i, std::size_t j) {
  if (i >= model.num_heads())
    throw ConfigError("head id " + std::to_string(i) + " out of range (" +
                      std::to_string(model.num_heads()) + " entities)");
  if (j >= model.num_relations())
    throw ConfigError("relation id " + std::to_string(j) + " out of range (" +
                      std::to_string(model.num_relations()) + " relations)");
}

}  // namespace

double score_triplet(const TdbModel& model, std::size_t i, std::size_t j, std::size_t k) {
  check_ids(model, i, j);
  if (k >= model.num_tails())
    throw ConfigError("tail id " + std::to_string(k) + " out of range");
  const std::size_t p = model.parts();
  std::vector<double> w(p);
  double score = 0.0;
  for (std::size_t d = 0; d < model.blocks(); ++d) {
    kernels::contract_hr(model.core().values, model.head().block(i, d), model.rel().block(j, d), w);
    const auto t = model.tail().block(k, d);
    for (std::size_t n = 0; n < p; ++n) score += w[n] * t[n];
  }
  return score;
}

void score_all_tails(const TdbModel& model, std::size_t i, std::size_t j, std::span<double> out,
                     std::span<double> w_out) {
  check_ids(model, i, j);
  if (out.size() != model.num_tails()) throw ShapeError("score buffer has the wrong length");
  const std::size_t p = model.parts();
  const std::size_t dim = model.dim();
  std::vector<double> local;
  if (w_out.empty()) {
    local.resize(dim);
    w_out = local;
  }
  for (std::size_t d = 0; d < model.blocks(); ++d)
    kernels::contract_hr(model.core().values, model.head().block(i, d), model.rel().block(j, d),
                         w_out.subspan(d * p, p));
  const auto tails = model.tail().values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* row = tails.data() + k * dim;
    double s = 0.0;
    for (std::size_t x = 0; x < dim; ++x) s += w_out[x] * row[x];
    out[k] = s;
  }
}

std::vector<double> score_all_tails(const TdbModel& model, std::size_t i, std::size_t j) {
  std::vector<double> out(model.num_tails());
  score_all_tails(model, i, j, out);
  return out;
}

DenseTensor3 materialize_tensor(const TdbModel& model, std::size_t budget_bytes) {
  const Shape3 shape{model.num_heads(), model.num_relations(), model.num_tails()};
  const double bytes = static_cast<double>(shape[0]) * static_cast<double>(shape[1]) *
                       static_cast<double>(shape[2]) * sizeof(double);
  if (bytes > static_cast<double>(budget_bytes))
    throw BudgetError("materializing a " + std::to_string(shape[0]) + " x " +
                      std::to_string(shape[1]) + " x " + std::to_string(shape[2]) +
                      " tensor needs " + std::to_string(static_cast<std::uint64_t>(bytes)) +
                      " bytes, budget is " + std::to_string(budget_bytes));
  DenseTensor3 x(shape);
  for (std::size_t d = 0; d < model.blocks(); ++d) {
    DenseTensor3 part = mode_n_product(model.core().values, model.head().slice(d), 1);
    part = mode_n_product(part, model.rel().slice(d), 2);
    part = mode_n_product(part, model.tail().slice(d), 3);
    auto dst = x.values();
    const auto src = part.values();
    for (std::size_t q = 0; q < dst.size(); ++q) dst[q] += src[q];
  }
  return x;
}

std::size_t parameter_count(const TdbModel& model) {
  const std::size_t p = model.parts();
  std::size_t n = model.core().trainable ? p * p * p : 0;
  n += model.head().values().size() + model.rel().values().size();
  if (!model.tied()) n += model.tail().values().size();
  return n;
}

}  // namespace tdb
