#include "elr/eval.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "elr/error.h"
#include "io_util.h"
#include "json.hpp"

namespace elr {

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  nlohmann::json r = nlohmann::json::object();
  for (const auto &[k, v] : recall_at) r[std::to_string(k)] = v;
  j["recall_at"] = std::move(r);
  nlohmann::json pm = nlohmann::json::array();
  for (const auto &[id, ok] : per_mention) pm.push_back({{"mention", id}, {"correct", ok}});
  j["per_mention"] = std::move(pm);
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string &text) {
  try {
    auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    for (const auto &[k, v] : j.at("recall_at").items()) r.recall_at[std::stoi(k)] = v.get<double>();
    for (const auto &e : j.at("per_mention")) {
      r.per_mention.emplace_back(e.at("mention").get<std::string>(), e.at("correct").get<bool>());
    }
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("bad evaluation report: ") + e.what());
  }
}

std::string EvalReport::to_csv() const {
  using internal::format_double;
  std::string header = "precision,recall,f1";
  std::string row = format_double(precision) + "," + format_double(recall) + "," + format_double(f1);
  for (const auto &[k, v] : recall_at) {
    header += ",r@" + std::to_string(k);
    row += "," + format_double(v);
  }
  return header + "\n" + row + "\n";
}

std::vector<Prediction> link(const ScoringGraph &graph, const Dataset &ds,
                             const FeatureTable &table) {
  auto rows = index_rows(table, ds);
  GraphEvaluator ev(graph, table.feature_names());
  std::vector<Prediction> out;
  out.reserve(ds.instances.size());
  for (size_t i = 0; i < ds.instances.size(); ++i) {
    const auto &inst = ds.instances[i];
    Prediction p{inst.mention.id, {}};
    for (size_t j = 0; j < inst.candidates.size(); ++j) {
      p.ranked.emplace_back(inst.candidates[j].id, ev.forward(table.rows()[rows[i][j]].values));
    }
    std::stable_sort(p.ranked.begin(), p.ranked.end(),
                     [](const auto &a, const auto &b) { return a.second > b.second; });
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> link(const Model &model, const Dataset &ds, const FeatureTable &table) {
  return link(model.graph, ds, table);
}

namespace {

// Gold candidate ids per mention.
std::map<std::string, std::set<std::string>> gold_sets(const Dataset &ds) {
  std::map<std::string, std::set<std::string>> gold;
  for (const auto &inst : ds.instances) {
    auto &g = gold[inst.mention.id];
    for (size_t j = 0; j < inst.candidates.size(); ++j) {
      if (inst.labels[j] == 1) g.insert(inst.candidates[j].id);
    }
  }
  return gold;
}

}  // namespace

EvalReport prf1(const std::vector<Prediction> &preds, const Dataset &ds) {
  auto gold = gold_sets(ds);
  EvalReport r;
  size_t predicted = 0, correct = 0;
  for (const auto &p : preds) {
    if (p.ranked.empty()) continue;
    ++predicted;
    auto it = gold.find(p.mention_id);
    bool ok = it != gold.end() && it->second.count(p.ranked.front().first) > 0;
    correct += ok;
    r.per_mention.emplace_back(p.mention_id, ok);
  }
  r.precision = predicted ? static_cast<double>(correct) / predicted : 0.0;
  r.recall = ds.instances.empty() ? 0.0 : static_cast<double>(correct) / ds.instances.size();
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

std::map<int, double> recall_at_k(const std::vector<Prediction> &preds, const Dataset &ds,
                                  const std::vector<int> &ks) {
  auto gold = gold_sets(ds);
  std::map<int, double> out;
  for (int k : ks) {
    if (k <= 0) throw ValidationError("recall@k needs k >= 1");
    size_t hits = 0;
    for (const auto &p : preds) {
      auto it = gold.find(p.mention_id);
      if (it == gold.end()) continue;
      size_t limit = std::min<size_t>(k, p.ranked.size());
      for (size_t j = 0; j < limit; ++j) {
        if (it->second.count(p.ranked[j].first)) {
          ++hits;
          break;
        }
      }
    }
    out[k] = ds.instances.empty() ? 0.0 : static_cast<double>(hits) / ds.instances.size();
  }
  return out;
}

EvalReport evaluate(const Model &model, const Dataset &ds, const FeatureTable &table,
                    const std::vector<int> &ks) {
  auto preds = link(model, ds, table);
  EvalReport r = prf1(preds, ds);
  r.recall_at = recall_at_k(preds, ds, ks);
  return r;
}

EvalReport transfer_eval(const Model &model, const Dataset &ds, const FeatureTable &table,
                         const std::vector<int> &ks) {
  std::vector<std::string> missing;
  for (const auto &f : model.graph.leaf_features()) {
    if (table.column(f) < 0) missing.push_back(f);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto &f : missing) names += (names.empty() ? "" : ", ") + f;
    throw ValidationError("feature table lacks model features: " + names);
  }
  return evaluate(model, ds, table, ks);
}

std::string AblationTable::to_csv() const {
  using internal::format_double;
  std::string out = "templates,precision,recall,f1\n";
  for (const auto &row : rows) {
    std::string names;
    for (const auto &t : row.templates) names += (names.empty() ? "" : "+") + t;
    out += internal::csv_field(names) + "," + format_double(row.report.precision) + "," +
           format_double(row.report.recall) + "," + format_double(row.report.f1) + "\n";
  }
  return out;
}

std::string AblationTable::to_markdown() const {
  std::string out = "| Templates | Precision | Recall | F1 |\n|---|---|---|---|\n";
  char buf[64];
  for (const auto &row : rows) {
    std::string names;
    for (const auto &t : row.templates) names += (names.empty() ? "" : " + ") + t;
    std::snprintf(buf, sizeof buf, " | %.4f | %.4f | %.4f |\n", row.report.precision,
                  row.report.recall, row.report.f1);
    out += "| " + names + buf;
  }
  return out;
}

AblationTable ablation(const Dataset &train_ds, const FeatureTable &train_table,
                       const Dataset &test_ds, const FeatureTable &test_table,
                       const std::vector<std::vector<std::string>> &subsets,
                       const TrainConfig &config, const CompileOptions &compile_options,
                       const TemplateLibrary &library) {
  FeatureCatalog catalog = FeatureCatalog::defaults();
  for (const auto &name : train_table.feature_names()) {
    if (!catalog.contains(name)) catalog.add(name, FeatureSpec{FeatureKind::kExternal, name, {}});
  }
  AblationTable table;
  for (const auto &subset : subsets) {
    auto program = library.union_program(subset);
    CompileOptions opts = compile_options;
    opts.alpha = config.alpha;
    opts.root = program.back().name;
    ScoringGraph graph = compile(program, catalog, opts);
    Model model = train(train_ds, train_table, graph, config);
    table.rows.push_back({subset, evaluate(model, test_ds, test_table, {1})});
  }
  return table;
}

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string graph_to_dot(const ScoringGraph &graph) {
  std::string out = "digraph elr {\n  rankdir=BT;\n";
  for (size_t i = 0; i < graph.nodes().size(); ++i) {
    const auto &n = graph.nodes()[i];
    std::string label;
    switch (n.kind) {
      case NodeKind::kRaw:
        label = n.feature;
        break;
      case NodeKind::kThreshold:
        label = n.feature + (n.param_offset < 0 ? " >" : "?") + "\\ntheta=" +
                short_number(graph.theta(static_cast<int>(i)));
        break;
      case NodeKind::kNot:
        label = "NOT";
        break;
      case NodeKind::kAnd:
      case NodeKind::kOr:
        label = n.kind == NodeKind::kAnd ? "AND" : "OR";
        if (graph.mode() == LogicMode::kLnn) {
          label += "\\nbeta=" + short_number(graph.gate(static_cast<int>(i)).bias);
        }
        break;
    }
    if (!n.origin.empty()) label += "\\n[" + n.origin + "]";
    std::string shape = n.kind == NodeKind::kRaw || n.kind == NodeKind::kThreshold ? "box" : "ellipse";
    out += "  n" + std::to_string(i) + " [shape=" + shape + ", label=\"" + label + "\"" +
           (static_cast<int>(i) == graph.root() ? ", peripheries=2" : "") + "];\n";
  }
  for (size_t i = 0; i < graph.nodes().size(); ++i) {
    const auto &n = graph.nodes()[i];
    if (n.kind != NodeKind::kAnd && n.kind != NodeKind::kOr) {
      for (int c : n.children) out += "  n" + std::to_string(c) + " -> n" + std::to_string(i) + ";\n";
      continue;
    }
    std::vector<double> w = graph.mode() == LogicMode::kTnorm
                                ? std::vector<double>(n.children.size(), 1.0)
                                : graph.effective_weights(static_cast<int>(i));
    for (size_t k = 0; k < n.children.size(); ++k) {
      out += "  n" + std::to_string(n.children[k]) + " -> n" + std::to_string(i) +
             " [label=\"" + short_number(w[k]) + "\"];\n";
    }
  }
  out += "}\n";
  return out;
}

WeightExport export_weights(const Model &model) {
  return {graph_to_json(model.graph), graph_to_dot(model.graph)};
}

}  // namespace elr
