#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tdb/checkpoint.hpp"
#include "tdb/dataset.hpp"
#include "tdb/diagnostics.hpp"
#include "tdb/error.hpp"
#include "tdb/evaluator.hpp"
#include "tdb/model.hpp"
#include "tdb/regularizer.hpp"
#include "tdb/rules.hpp"
#include "tdb/trainer.hpp"

namespace fs = std::filesystem;
using namespace tdb;

namespace {

struct Options {
  std::string dataset;
  bool inverse = false;
  std::string model = "tucker";
  std::size_t dim = 16;
  std::size_t parts = 0;
  std::string reg = "none";
  double alpha = 2.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double lambda3 = std::nan(""), lambda4 = std::nan("");
  double lr = 0.1;
  std::size_t batch = 100;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  std::size_t valid_interval = 5;
  double init_std = 1e-3;
  std::string checkpoint;
  std::string log;
  std::string grid;
  std::string split = "test";
  std::string tie = "optimistic";
  std::string core_file;
  double budget_mb = 1024.0;
  bool json = false;
};

// A bare name such as "kinship" falls back to the bundled data directory.
fs::path resolve_dataset(const std::string& arg) {
  if (arg.empty()) throw ConfigError("--dataset is required");
  fs::path p(arg);
  if (fs::is_directory(p)) return p;
#ifdef TDB_DATA_DIR
  const fs::path bundled = fs::path(TDB_DATA_DIR) / arg;
  if (fs::is_directory(bundled)) return bundled;
#endif
  throw IoError("dataset directory not found: " + arg);
}

Dataset open_dataset(const Options& o) {
  Dataset ds = load_dataset(resolve_dataset(o.dataset));
  return o.inverse ? with_inverse_relations(ds) : ds;
}

RegConfig reg_config(const Options& o) {
  RegConfig cfg;
  cfg.kind = reg_kind_from_name(o.reg);
  cfg.alpha = o.alpha;
  cfg.lambda1 = o.lambda1;
  cfg.lambda2 = o.lambda2;
  cfg.lambda3 = std::isnan(o.lambda3) ? o.lambda1 : o.lambda3;
  cfg.lambda4 = std::isnan(o.lambda4) ? o.lambda2 : o.lambda4;
  cfg.validate();
  return cfg;
}

ModelPreset model_preset(const Options& o) {
  const PresetKind kind = preset_kind_from_name(o.model);
  ModelPreset preset = make_preset(kind, o.dim);
  if (o.parts != 0) {
    if (kind == PresetKind::tucker) {
      preset.parts = o.parts;
    } else if (o.parts != preset.parts) {
      throw ConfigError("--parts " + std::to_string(o.parts) + " conflicts with preset " + o.model +
                        " (P = " + std::to_string(preset.parts) + ")");
    }
  }
  if (o.dim == 0 || o.dim % preset.parts != 0)
    throw ConfigError("--dim " + std::to_string(o.dim) + " is not divisible by P = " +
                      std::to_string(preset.parts));
  return preset;
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.reg = reg_config(o);
  cfg.valid_interval = o.valid_interval;
  cfg.log_path = o.log;
  cfg.validate();
  return cfg;
}

TieMode tie_mode(const std::string& s) {
  if (s == "optimistic") return TieMode::optimistic;
  if (s == "average") return TieMode::average;
  throw ConfigError("unknown --tie mode '" + s + "' (optimistic, average)");
}

struct GridPoint {
  double alpha, lambda1, lambda2;
};

// "a:l1:l2,a:l1:l2,..."
std::vector<GridPoint> parse_grid(const std::string& text) {
  std::vector<GridPoint> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    GridPoint g{};
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    if (!(is >> g.alpha >> c1 >> g.lambda1 >> c2 >> g.lambda2) || c1 != ':' || c2 != ':' ||
        !(is >> std::ws).eof())
      throw ConfigError("malformed --grid entry '" + item + "' (expected alpha:lambda1:lambda2)");
    out.push_back(g);
  }
  if (out.empty()) throw ConfigError("--grid is empty");
  return out;
}

void print_metrics(const RankingMetrics& m, const std::string& split, bool json) {
  if (json) {
    std::cout << m.to_json(split) << "\n";
    return;
  }
  std::cout << std::fixed << std::setprecision(4) << split << ": MRR " << m.mrr << "  MR "
            << std::setprecision(2) << m.mr << std::setprecision(4) << "  Hits@1 " << m.hits_at(1)
            << "  Hits@3 " << m.hits_at(3) << "  Hits@10 " << m.hits_at(10) << "  (" << m.count
            << " queries)\n"
            << std::defaultfloat;
}

struct TrainOutcome {
  TdbModel model;
  FitResult fit;
};

TrainOutcome train_once(const Options& o, const Dataset& ds, const TrainConfig& cfg) {
  TdbModel model = make_model(model_preset(o), o.dim, ds.entities.size(), ds.relations.size());
  InitConfig init;
  init.embedding_std = o.init_std;
  initialize(model, o.seed, init);
  auto on_epoch = [&](const EpochRecord& r) {
    if (o.json) return;
    std::cerr << "epoch " << r.epoch << "  loss " << std::setprecision(8) << r.loss;
    if (!std::isnan(r.valid_mrr)) std::cerr << "  valid_mrr " << std::setprecision(4) << r.valid_mrr;
    std::cerr << std::defaultfloat << "\n";
  };
  FitResult res = fit(model, ds, cfg, on_epoch);
  return {std::move(model), std::move(res)};
}

int cmd_train(const Options& o) {
  const Dataset ds = open_dataset(o);
  const std::vector<GridPoint> grid = o.grid.empty() ? std::vector<GridPoint>{} : parse_grid(o.grid);
  Options first = o;
  if (!grid.empty()) {
    if (reg_kind_from_name(o.reg) != RegKind::ivr) throw ConfigError("--grid requires --reg ivr");
    first.alpha = grid.front().alpha;
    first.lambda1 = grid.front().lambda1;
    first.lambda2 = grid.front().lambda2;
  }
  TrainConfig cfg = train_config(first);
  model_preset(o);
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required for train");

  TrainOutcome best;
  if (!grid.empty()) {
    double best_mrr = -1.0;
    for (const auto& g : grid) {
      Options point = o;
      point.alpha = g.alpha;
      point.lambda1 = g.lambda1;
      point.lambda2 = g.lambda2;
      const TrainConfig pcfg = train_config(point);
      TrainOutcome out = train_once(point, ds, pcfg);
      // Average ties so a collapsed, all-tied model cannot win the selection.
      const double mrr = evaluate(out.model, ds, Split::valid, {TieMode::average}).mrr;
      if (o.json) {
        nlohmann::ordered_json j{{"grid_alpha", g.alpha}, {"grid_lambda1", g.lambda1},
                                 {"grid_lambda2", g.lambda2}, {"valid_mrr", mrr}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "grid alpha " << g.alpha << " lambda1 " << g.lambda1 << " lambda2 " << g.lambda2
                  << "  valid MRR " << std::setprecision(4) << mrr << std::defaultfloat << "\n";
      }
      if (mrr > best_mrr) {
        best_mrr = mrr;
        best = std::move(out);
      }
    }
  } else {
    best = train_once(o, ds, cfg);
  }

  save_checkpoint(o.checkpoint, best.model);
  if (!o.json) std::cout << "checkpoint written to " << o.checkpoint << "\n";
  if (!ds.valid.empty()) print_metrics(evaluate(best.model, ds, Split::valid), "valid", o.json);
  if (!ds.test.empty()) print_metrics(evaluate(best.model, ds, Split::test), "test", o.json);
  return 0;
}

TdbModel open_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  return load_checkpoint(o.checkpoint);
}

int cmd_eval(const Options& o) {
  const TdbModel model = open_checkpoint(o);
  const Dataset ds = open_dataset(o);
  if (model.num_heads() != ds.entities.size() || model.num_relations() != ds.relations.size())
    throw ConfigError("checkpoint vocabulary (" + std::to_string(model.num_heads()) + " entities, " +
                      std::to_string(model.num_relations()) + " relations) does not match dataset (" +
                      std::to_string(ds.entities.size()) + ", " + std::to_string(ds.relations.size()) +
                      ")");
  EvalOptions opts;
  opts.tie = tie_mode(o.tie);
  const Split split = split_from_name(o.split);
  print_metrics(evaluate(model, ds, split, opts), o.split, o.json);
  return 0;
}

int cmd_diagnose(const Options& o) {
  const TdbModel model = open_checkpoint(o);
  RegConfig cfg = reg_config(o);
  const auto budget = static_cast<std::size_t>(o.budget_mb * 1024.0 * 1024.0);
  const BoundReport r = bound_report(model, cfg, budget);
  if (o.json) {
    std::cout << r.to_json() << "\n";
  } else {
    std::cout << std::setprecision(10) << "trace norms: " << r.trace_norms[0] << " "
              << r.trace_norms[1] << " " << r.trace_norms[2] << "\n"
              << "L(X; " << r.alpha << ") = " << r.L << " (rounded " << std::llround(r.L) << ")\n"
              << "norm bound:    lhs " << r.lhs_norm << "  rhs " << r.rhs_norm << "  gap " << r.gap_norm
              << (r.holds_norm ? "  holds" : "  VIOLATED") << "\n"
              << "product bound: lhs " << r.lhs_product << "  rhs " << r.rhs_product << "  gap " << r.gap_product
              << (r.holds_product ? "  holds" : "  VIOLATED") << "\n";
    if (!r.guaranteed)
      std::cout << "note: alpha > 2 with several blocks, the bounds are not guaranteed here\n";
  }
  if (r.guaranteed && !(r.holds_norm && r.holds_product))
    throw BoundViolation("guaranteed upper bound violated beyond tolerance");
  return 0;
}

int cmd_rules(const Options& o) {
  CoreTensor core;
  bool tied = true;
  if (!o.core_file.empty()) {
    core = load_core_file(o.core_file);
  } else {
    const PresetKind kind = preset_kind_from_name(o.model);
    ModelPreset preset = model_preset(o);
    if (kind == PresetKind::tucker) throw ConfigError("tucker has a learned core; pass --core-file");
    core = build_preset_core(preset, o.dim);
    tied = preset.tied;
  }
  const LearnabilityReport r = learnability_report(core, tied);
  std::cout << (o.json ? r.to_json() + "\n" : r.to_text());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-term tensor decomposition models for knowledge graph completion"};
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "cp, distmult, complex, simple, analogy, quate, tucker")
        ->capture_default_str();
    sub->add_option("--dim", o.dim, "total embedding dimension D")->capture_default_str();
    sub->add_option("--parts", o.parts, "parts P (tucker only; other presets fix P)");
  };
  auto add_reg = [&](CLI::App* sub) {
    sub->add_option("--reg", o.reg, "none, f2, n3, ivr")->capture_default_str();
    sub->add_option("--alpha", o.alpha, "power alpha")->capture_default_str();
    sub->add_option("--lambda1", o.lambda1, "lambda1 (weight for f2/n3)")->capture_default_str();
    sub->add_option("--lambda2", o.lambda2, "lambda2")->capture_default_str();
    sub->add_option("--lambda3", o.lambda3, "lambda3 (default: lambda1)");
    sub->add_option("--lambda4", o.lambda4, "lambda4 (default: lambda2)");
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--dataset", o.dataset, "dataset directory or bundled name")->required();
    sub->add_flag("--inverse", o.inverse, "add inverse relations");
  };

  auto* train = app.add_subcommand("train", "train a model and write the best-validation checkpoint");
  add_data(train);
  add_model(train);
  add_reg(train);
  train->add_option("--lr", o.lr, "Adagrad learning rate")->capture_default_str();
  train->add_option("--batch", o.batch, "batch size")->capture_default_str();
  train->add_option("--epochs", o.epochs, "epochs")->capture_default_str();
  train->add_option("--seed", o.seed, "seed for initialization and shuffling")->capture_default_str();
  train->add_option("--valid-interval", o.valid_interval, "epochs between validations, 0 disables")
      ->capture_default_str();
  train->add_option("--init-std", o.init_std, "embedding init standard deviation")
      ->capture_default_str();
  train->add_option("--checkpoint", o.checkpoint, "output checkpoint path")->required();
  train->add_option("--log", o.log, "append the per-epoch TSV log here");
  train->add_option("--grid", o.grid, "alpha:lambda1:lambda2 list, comma separated; best validation MRR (average ties) wins");
  train->add_flag("--json", o.json, "JSON lines on stdout");

  auto* eval = app.add_subcommand("eval", "filtered tail-ranking metrics of a checkpoint");
  add_data(eval);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint path")->required();
  eval->add_option("--split", o.split, "train, valid or test")->capture_default_str();
  eval->add_option("--tie", o.tie, "optimistic or average")->capture_default_str();
  eval->add_flag("--json", o.json, "JSON output");

  auto* diagnose = app.add_subcommand("diagnose", "overlapped trace norm and upper-bound report");
  diagnose->add_option("--checkpoint", o.checkpoint, "checkpoint path")->required();
  add_reg(diagnose);
  diagnose->add_option("--budget-mb", o.budget_mb, "materialization budget in MiB")
      ->capture_default_str();
  diagnose->add_flag("--json", o.json, "JSON output");

  auto* rules = app.add_subcommand("rules", "symmetry / antisymmetry / inverse learnability");
  add_model(rules);
  rules->add_option("--core-file", o.core_file, "JSON core {\"parts\": P, \"values\": [...]}");
  rules->add_flag("--json", o.json, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_eval(o);
    if (diagnose->parsed()) return cmd_diagnose(o);
    if (rules->parsed()) return cmd_rules(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
