#include "elr/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "elr/error.h"
#include "elr/eval.h"
#include "io_util.h"
#include "serialization.h"

namespace elr {

namespace {

constexpr double kDivergenceLoss = 1e6;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!finite(learning_rate) || learning_rate < 1e-5 || learning_rate > 1e-1) {
    throw ValidationError("learning_rate must lie in [1e-5, 1e-1]");
  }
  if (!finite(mu) || mu < 0.6 || mu > 0.95) throw ValidationError("mu must lie in [0.6, 0.95]");
  if (!finite(alpha) || alpha < 0.5 || alpha >= 1.0) {
    throw ValidationError("alpha must lie in [0.5, 1)");
  }
  if (!finite(penalty_lambda) || penalty_lambda < 0.0) {
    throw ValidationError("penalty_lambda must be >= 0");
  }
}

std::string TrainConfig::to_text() const {
  using internal::format_double;
  return "epochs = " + std::to_string(epochs) + "\n" +
         "learning_rate = " + format_double(learning_rate) + "\n" +
         "mu = " + format_double(mu) + "\n" + "alpha = " + format_double(alpha) + "\n" +
         "penalty_lambda = " + format_double(penalty_lambda) + "\n" +
         "seed = " + std::to_string(seed) + "\n";
}

TrainConfig TrainConfig::from_text(const std::string &text) {
  TrainConfig c;
  int lineno = 0;
  for (const auto &raw : internal::split_lines(text)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "epochs") {
        c.epochs = std::stoi(value);
      } else if (key == "learning_rate") {
        c.learning_rate = internal::parse_double(value);
      } else if (key == "mu") {
        c.mu = internal::parse_double(value);
      } else if (key == "alpha") {
        c.alpha = internal::parse_double(value);
      } else if (key == "penalty_lambda") {
        c.penalty_lambda = internal::parse_double(value);
      } else if (key == "seed") {
        c.seed = std::stoull(value);
      } else {
        throw ValidationError("config line " + std::to_string(lineno) + ": unknown key " + key);
      }
    } catch (const std::logic_error &) {
      throw ValidationError("config line " + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  c.validate();
  return c;
}

namespace internal {

nlohmann::json catalog_to_json_value(const FeatureCatalog &catalog) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto &[name, spec] : catalog.entries()) {
    nlohmann::json e;
    e["kind"] = feature_kind_name(spec.kind);
    if (!spec.source.empty()) e["source"] = spec.source;
    if (spec.kind == FeatureKind::kBox) {
      e["box"] = nlohmann::json::parse(box_params_to_json(spec.box));
    }
    j[name] = std::move(e);
  }
  return j;
}

FeatureCatalog catalog_from_json_value(const nlohmann::json &j) {
  FeatureCatalog catalog;
  for (const auto &[name, e] : j.items()) {
    FeatureSpec spec;
    spec.kind = feature_kind_from_name(e.at("kind").get<std::string>());
    spec.source = e.value("source", "");
    if (e.contains("box")) spec.box = box_params_from_json(e.at("box").dump());
    catalog.add(name, std::move(spec));
  }
  return catalog;
}

}  // namespace internal

std::string model_to_json(const Model &model) {
  nlohmann::json j;
  j["format"] = "elr-model/1";
  const auto &c = model.config;
  j["config"] = {{"epochs", c.epochs},
                 {"learning_rate", c.learning_rate},
                 {"mu", c.mu},
                 {"alpha", c.alpha},
                 {"penalty_lambda", c.penalty_lambda},
                 {"seed", c.seed}};
  j["catalog"] = internal::catalog_to_json_value(model.catalog);
  j["graph"] = internal::graph_to_json_value(model.graph);
  nlohmann::json log = nlohmann::json::array();
  for (const auto &e : model.log) {
    log.push_back({{"epoch", e.epoch},
                   {"loss", internal::number_to_json(e.loss)},
                   {"ranking_loss", internal::number_to_json(e.ranking_loss)},
                   {"residual_sum", internal::number_to_json(e.residual_sum)}});
  }
  j["log"] = std::move(log);
  return j.dump(2);
}

Model model_from_json(const std::string &text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "elr-model/1") {
      throw ValidationError("not an elr model checkpoint");
    }
    Model m;
    const auto &c = j.at("config");
    m.config.epochs = c.at("epochs").get<int>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.mu = c.at("mu").get<double>();
    m.config.alpha = c.at("alpha").get<double>();
    m.config.penalty_lambda = c.at("penalty_lambda").get<double>();
    m.config.seed = c.at("seed").get<uint64_t>();
    m.catalog = internal::catalog_from_json_value(j.at("catalog"));
    m.graph = internal::graph_from_json_value(j.at("graph"));
    for (const auto &e : j.at("log")) {
      m.log.push_back({e.at("epoch").get<int>(), internal::number_from_json(e.at("loss")),
                       internal::number_from_json(e.at("ranking_loss")),
                       internal::number_from_json(e.at("residual_sum"))});
    }
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("bad model checkpoint: ") + e.what());
  }
}

void save_model(const Model &model, const std::string &path) {
  internal::write_file_atomic(path, model_to_json(model));
}

Model load_model(const std::string &path) { return model_from_json(internal::read_file(path)); }

double margin_loss(std::span<const double> scores, std::span<const int> labels, double mu) {
  if (scores.size() != labels.size()) throw ValidationError("scores/labels size mismatch");
  if (std::find(labels.begin(), labels.end(), 1) == labels.end()) {
    throw ValidationError("no positive label");
  }
  double loss = 0.0;
  for (size_t p = 0; p < scores.size(); ++p) {
    if (labels[p] != 1) continue;
    for (size_t n = 0; n < scores.size(); ++n) {
      if (labels[n] == 1) continue;
      loss += std::max(0.0, mu - (scores[p] - scores[n]));
    }
  }
  return loss;
}

std::vector<std::vector<size_t>> index_rows(const FeatureTable &table, const Dataset &ds) {
  std::map<std::pair<std::string, std::string>, size_t> pos;
  for (size_t r = 0; r < table.rows().size(); ++r) {
    const auto &row = table.rows()[r];
    pos.emplace(std::make_pair(row.mention_id, row.candidate_id), r);
  }
  std::vector<std::vector<size_t>> out;
  out.reserve(ds.instances.size());
  for (const auto &inst : ds.instances) {
    std::vector<size_t> rows;
    for (const auto &cand : inst.candidates) {
      auto it = pos.find({inst.mention.id, cand.id});
      if (it == pos.end()) {
        throw ValidationError("feature table has no row for mention " + inst.mention.id +
                              ", candidate " + cand.id);
      }
      rows.push_back(it->second);
    }
    out.push_back(std::move(rows));
  }
  return out;
}

namespace {

struct Objective {
  const ScoringGraph &graph;
  const FeatureTable &table;
  const Dataset &ds;
  const TrainConfig &config;
  std::vector<std::vector<size_t>> rows;
  GraphEvaluator ev;

  Objective(const ScoringGraph &g, const FeatureTable &t, const Dataset &d, const TrainConfig &c)
      : graph(g), table(t), ds(d), config(c), rows(index_rows(t, d)), ev(g, t.feature_names()) {}

  std::vector<double> scores(size_t i) {
    std::vector<double> s;
    s.reserve(rows[i].size());
    try {
      for (size_t r : rows[i]) s.push_back(ev.forward(table.rows()[r].values));
    } catch (const NumericError &e) {
      throw NumericError(std::string(e.what()) + " at mention " + ds.instances[i].mention.id);
    }
    return s;
  }

  // Ranking loss of instance i; accumulates its gradient into grad if given.
  double instance(size_t i, std::span<double> grad) {
    const auto &labels = ds.instances[i].labels;
    auto s = scores(i);
    double loss = margin_loss(s, labels, config.mu);
    if (!finite(loss)) {
      throw NumericError("non-finite loss at mention " + ds.instances[i].mention.id);
    }
    if (grad.empty() || loss == 0.0) return loss;
    std::vector<double> ds_(s.size(), 0.0);
    for (size_t p = 0; p < s.size(); ++p) {
      if (labels[p] != 1) continue;
      for (size_t n = 0; n < s.size(); ++n) {
        if (labels[n] == 1) continue;
        if (config.mu - (s[p] - s[n]) > 0.0) {
          ds_[p] -= 1.0;
          ds_[n] += 1.0;
        }
      }
    }
    for (size_t j = 0; j < s.size(); ++j) {
      if (ds_[j] == 0.0) continue;
      ev.forward(table.rows()[rows[i][j]].values);
      ev.backward(ds_[j], grad);
    }
    return loss;
  }

  double ranking_loss() {
    double sum = 0.0;
    for (size_t i = 0; i < ds.instances.size(); ++i) sum += instance(i, {});
    return sum;
  }
};

}  // namespace

double total_loss(const ScoringGraph &graph, const FeatureTable &table, const Dataset &ds,
                  const TrainConfig &config) {
  Objective obj(graph, table, ds, config);
  return obj.ranking_loss() + config.penalty_lambda * graph.residual_sum();
}

std::vector<double> gradients(const ScoringGraph &graph, const FeatureTable &table,
                              const Dataset &ds, const TrainConfig &config) {
  Objective obj(graph, table, ds, config);
  std::vector<double> grad(graph.params().size(), 0.0);
  for (size_t i = 0; i < ds.instances.size(); ++i) obj.instance(i, grad);
  if (graph.mode() == LogicMode::kLnn) residual_gradient(graph, config.penalty_lambda, grad);
  return grad;
}

std::map<std::string, double> gradient_map(const ScoringGraph &graph, const FeatureTable &table,
                                           const Dataset &ds, const TrainConfig &config) {
  auto grad = gradients(graph, table, ds, config);
  auto names = graph.param_names();
  std::map<std::string, double> out;
  for (size_t k = 0; k < grad.size(); ++k) out[names[k]] = grad[k];
  return out;
}

Model train(const Dataset &ds, const FeatureTable &table, const ScoringGraph &graph,
            const TrainConfig &config, const FeatureCatalog &catalog) {
  config.validate();
  if (ds.instances.empty()) throw ValidationError("training set is empty");
  Model model{graph, config, catalog, {}};
  ScoringGraph &g = model.graph;
  Objective obj(g, table, ds, config);
  const auto mask = g.trainable_mask();
  auto params = g.mutable_params();

  const bool lnn = g.mode() == LogicMode::kLnn;

  std::vector<size_t> order(ds.instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::vector<double> grad(params.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (size_t i : order) {
      std::fill(grad.begin(), grad.end(), 0.0);
      obj.instance(i, grad);
      if (lnn) residual_gradient(g, config.penalty_lambda, grad);
      for (size_t k = 0; k < params.size(); ++k) {
        if (mask[k]) params[k] -= config.learning_rate * grad[k];
      }
    }
    EpochLog entry{epoch, 0.0, obj.ranking_loss(), g.residual_sum()};
    entry.loss = entry.ranking_loss + config.penalty_lambda * entry.residual_sum;
    spdlog::debug("epoch {} loss {:.6g} ranking {:.6g} residual {:.3g}", epoch, entry.loss,
                  entry.ranking_loss, entry.residual_sum);
    if (!finite(entry.loss) || entry.loss > kDivergenceLoss) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                         internal::format_double(entry.loss) + ")");
    }
    for (double p : params) {
      if (std::isnan(p)) throw NumericError("NaN parameter at epoch " + std::to_string(epoch));
    }
    model.log.push_back(entry);
  }
  return model;
}

SearchResult hyperparameter_search(const ScoringGraph &graph, const Dataset &train_ds,
                                   const FeatureTable &train_table, const Dataset &dev_ds,
                                   const FeatureTable &dev_table, const TrainConfig &base,
                                   const std::vector<double> &mus,
                                   const std::vector<double> &learning_rates) {
  if (mus.empty() || learning_rates.empty()) throw ValidationError("empty search grid");
  std::vector<double> lrs = learning_rates, ms = mus;
  std::sort(lrs.begin(), lrs.end());
  std::sort(ms.begin(), ms.end());
  SearchResult result;
  double best_f1 = -1.0;
  for (double lr : lrs) {
    for (double mu : ms) {
      SearchCell cell;
      cell.config = base;
      cell.config.learning_rate = lr;
      cell.config.mu = mu;
      try {
        Model m = train(train_ds, train_table, graph, cell.config);
        cell.dev_f1 = evaluate(m, dev_ds, dev_table, {1}).f1;
      } catch (const Error &e) {
        cell.failed = true;
        cell.error = e.what();
        spdlog::warn("search cell lr={} mu={} failed: {}", lr, mu, e.what());
      }
      if (!cell.failed && cell.dev_f1 > best_f1) {
        best_f1 = cell.dev_f1;
        result.best = cell.config;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  if (best_f1 < 0.0) {
    std::string msg = "every hyperparameter setting failed:";
    for (const auto &cell : result.cells) {
      msg += " [lr=" + internal::format_double(cell.config.learning_rate) +
             " mu=" + internal::format_double(cell.config.mu) + ": " + cell.error + "]";
    }
    throw NumericError(msg);
  }
  return result;
}

}  // namespace elr
