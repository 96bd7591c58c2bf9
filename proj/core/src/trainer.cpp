#include "tdb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "tdb/error.hpp"
#include "tdb/parallel.hpp"

namespace tdb {

namespace {

void add_into(std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void adagrad_step(std::span<double> theta, std::vector<double>& accum,
                  const std::vector<double>& g, double lr, double eps) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    accum[i] += gi * gi;
    theta[i] -= lr * gi / (std::sqrt(accum[i]) + eps);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(adagrad_eps > 0.0)) throw ConfigError("adagrad epsilon must be positive");
  reg.validate();
}

GradientSet GradientSet::zeros_like(const TdbModel& model) {
  GradientSet g;
  g.head.assign(model.head().values().size(), 0.0);
  g.rel.assign(model.rel().values().size(), 0.0);
  if (!model.tied()) g.tail.assign(model.tail().values().size(), 0.0);
  if (model.core().trainable) g.core.assign(model.core().values.size(), 0.0);
  return g;
}

void GradientSet::set_zero() {
  for (auto* v : {&head, &rel, &tail, &core}) std::fill(v->begin(), v->end(), 0.0);
}

void GradientSet::add(const GradientSet& other) {
  add_into(head, other.head);
  add_into(rel, other.rel);
  add_into(tail, other.tail);
  add_into(core, other.core);
}

double loss_triplet(std::span<const double> scores, std::size_t k, double penalty) {
  if (k >= scores.size()) throw ConfigError("true tail id out of range");
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  return -scores[k] + mx + std::log(sum) + penalty;
}

double accumulate_triplet_gradient(const TdbModel& model, const Triplet& x, const RegConfig& reg,
                                   GradientSet& grads) {
  const std::size_t dim = model.dim();
  const std::size_t p = model.parts();
  const std::size_t nt = model.num_tails();
  thread_local std::vector<double> scores, w, gw, tmp;
  scores.resize(nt);
  w.resize(dim);
  gw.assign(dim, 0.0);
  tmp.resize(p);

  score_all_tails(model, x.head, x.rel, scores, w);
  const double true_score = scores[x.tail];
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  const double loss = mx + std::log(sum) - true_score;

  // dL/ds = softmax - onehot; scores now holds that vector.
  for (double& s : scores) s /= sum;
  scores[x.tail] -= 1.0;

  auto& tail_grad = model.tied() ? grads.head : grads.tail;
  const auto tails = model.tail().values();
  for (std::size_t k = 0; k < nt; ++k) {
    const double c = scores[k];
    if (c == 0.0) continue;
    double* g = tail_grad.data() + k * dim;
    const double* t = tails.data() + k * dim;
    for (std::size_t q = 0; q < dim; ++q) {
      g[q] += c * w[q];
      gw[q] += c * t[q];
    }
  }

  const auto& core = model.core().values;
  double* gh = grads.head.data() + x.head * dim;
  double* gr = grads.rel.data() + x.rel * dim;
  for (std::size_t d = 0; d < model.blocks(); ++d) {
    const auto h = model.head().block(x.head, d);
    const auto r = model.rel().block(x.rel, d);
    const std::span<const double> gwd(gw.data() + d * p, p);
    kernels::contract_rt(core, r, gwd, tmp);
    for (std::size_t q = 0; q < p; ++q) gh[d * p + q] += tmp[q];
    kernels::contract_ht(core, h, gwd, tmp);
    for (std::size_t q = 0; q < p; ++q) gr[d * p + q] += tmp[q];
    if (!grads.core.empty())
      for (std::size_t l = 0; l < p; ++l)
        for (std::size_t m = 0; m < p; ++m) {
          const double hr = h[l] * r[m];
          double* out = grads.core.data() + (l * p + m) * p;
          for (std::size_t n = 0; n < p; ++n) out[n] += hr * gwd[n];
        }
  }

  double penalty = 0.0;
  if (reg.kind != RegKind::none) {
    auto& tg = model.tied() ? grads.head : grads.tail;
    const TripletGrad sink{std::span<double>(gh, dim), std::span<double>(gr, dim),
                           std::span<double>(tg.data() + x.tail * dim, dim),
                           std::span<double>(grads.core)};
    penalty = penalty_triplet(model, x, reg, &sink);
  }
  return loss + penalty;
}

double batch_gradients_into(const TdbModel& model, std::span<const Triplet> batch,
                            const TrainConfig& cfg, GradientSet& grads) {
  if (batch.empty()) throw ConfigError("empty batch");
  if (grads.head.size() != model.head().values().size()) grads = GradientSet::zeros_like(model);
  grads.set_zero();
  const std::size_t threads = cfg.threads == 0 ? thread_count() : cfg.threads;
  const std::size_t chunks = std::min(threads, batch.size());
  if (chunks <= 1) {
    double total = 0.0;
    for (const auto& x : batch) total += accumulate_triplet_gradient(model, x, cfg.reg, grads);
    return total;
  }
  std::vector<GradientSet> partial(chunks);
  std::vector<double> losses(chunks, 0.0);
  parallel_chunks(batch.size(), chunks, [&](std::size_t c, std::size_t begin, std::size_t end) {
    partial[c] = GradientSet::zeros_like(model);
    for (std::size_t i = begin; i < end; ++i)
      losses[c] += accumulate_triplet_gradient(model, batch[i], cfg.reg, partial[c]);
  });
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    grads.add(partial[c]);
    total += losses[c];
  }
  return total;
}

BatchResult batch_gradients(const TdbModel& model, std::span<const Triplet> batch,
                            const TrainConfig& cfg) {
  BatchResult out;
  out.grads = GradientSet::zeros_like(model);
  out.mean_loss = batch_gradients_into(model, batch, cfg, out.grads) /
                  static_cast<double>(batch.size());
  return out;
}

AdagradState AdagradState::for_model(const TdbModel& model, double eps) {
  AdagradState s;
  const GradientSet z = GradientSet::zeros_like(model);
  s.head = z.head;
  s.rel = z.rel;
  s.tail = z.tail;
  s.core = z.core;
  s.eps = eps;
  return s;
}

void adagrad_update(TdbModel& model, AdagradState& state, const GradientSet& grads, double lr) {
  if (grads.head.size() != model.head().values().size() ||
      grads.rel.size() != model.rel().values().size() || state.head.size() != grads.head.size() ||
      state.rel.size() != grads.rel.size() || state.tail.size() != grads.tail.size() ||
      state.core.size() != grads.core.size())
    throw ShapeError("optimizer state or gradients do not match the model");
  adagrad_step(model.head().values(), state.head, grads.head, lr, state.eps);
  adagrad_step(model.rel().values(), state.rel, grads.rel, lr, state.eps);
  if (!model.tied()) adagrad_step(model.tail().values(), state.tail, grads.tail, lr, state.eps);
  if (!grads.core.empty())
    adagrad_step(model.core().values.values(), state.core, grads.core, lr, state.eps);
}

FitResult fit(TdbModel& model, const Dataset& ds, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
  cfg.validate();
  FitResult result;
  if (cfg.epochs == 0) return result;
  if (ds.train.empty()) throw ConfigError("training split is empty");
  if (model.num_heads() != ds.entities.size() || model.num_relations() != ds.relations.size())
    throw ConfigError("model vocabulary sizes do not match the dataset");

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    const bool fresh = !std::filesystem::exists(cfg.log_path);
    log.open(cfg.log_path, std::ios::app);
    if (!log) throw IoError("cannot open training log '" + cfg.log_path.string() + "'");
    if (fresh) log << "epoch\tloss\tvalid_mrr\n";
    log.precision(17);
  }

  const bool validate = cfg.valid_interval > 0 && !ds.valid.empty();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Triplet> batch;
  batch.reserve(cfg.batch_size);
  GradientSet grads = GradientSet::zeros_like(model);
  AdagradState state = AdagradState::for_model(model, cfg.adagrad_eps);
  TdbModel best;
  const EvalOptions eval_opts{TieMode::optimistic, cfg.threads};

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(ds.train[order[i]]);
      const double loss = batch_gradients_into(model, batch, cfg, grads);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      epoch_loss += loss;
      adagrad_update(model, state, grads, cfg.learning_rate);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss / static_cast<double>(order.size());
    if (validate && (epoch % cfg.valid_interval == 0 || epoch == cfg.epochs)) {
      rec.valid_mrr = evaluate(model, ds, Split::valid, eval_opts).mrr;
      if (result.best_epoch == 0 || rec.valid_mrr > result.best_valid_mrr) {
        result.best_epoch = epoch;
        result.best_valid_mrr = rec.valid_mrr;
        best = model;
      }
    }
    result.trace.push_back(rec);
    if (log) {
      log << rec.epoch << '\t' << rec.loss << '\t';
      if (std::isnan(rec.valid_mrr))
        log << "nan";
      else
        log << rec.valid_mrr;
      log << '\n' << std::flush;
    }
    if (on_epoch) on_epoch(rec);
  }
  if (result.best_epoch != 0) model = std::move(best);
  return result;
}

}  // namespace tdb
