#include "elr/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <ostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "elr/corpus.h"
#include "elr/error.h"
#include "elr/eval.h"
#include "elr/ruledsl.h"
#include "elr/simfeatures.h"
#include "elr/training.h"
#include "io_util.h"
#include "json.hpp"

namespace elr {

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("elr");
    spdlog::set_default_logger(logger);
  });
  const char *env = std::getenv("ELR_LOG");
  std::string level = env ? internal::lowercase(env) : "warn";
  auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") parsed = spdlog::level::warn;
  spdlog::set_level(parsed);
}

namespace {

void require_file(const std::string &flag, const std::string &path) {
  if (path.empty()) throw ValidationError("missing required option " + flag);
  if (!std::filesystem::is_regular_file(path)) {
    throw ValidationError("no such file for " + flag + ": " + path);
  }
}

void require_output(const std::string &flag, const std::string &path) {
  if (path.empty()) throw ValidationError("missing required option " + flag);
}

struct RuleSource {
  std::string rules_path;
  std::string template_name;
  std::string root;
};

void add_rule_flags(CLI::App *cmd, RuleSource &src) {
  cmd->add_option("--rules", src.rules_path, "Rule program file");
  cmd->add_option("--template", src.template_name,
                  "Built-in template (Name, Context, Type, Blink, Box, Bert, LNN-EL, ...)");
  cmd->add_option("--root", src.root, "Rule to compile when the program has several roots");
}

// Parsed program plus the rule to compile.
std::pair<std::vector<RuleAST>, std::optional<std::string>> load_rules(const RuleSource &src) {
  if (!src.rules_path.empty() && !src.template_name.empty()) {
    throw ValidationError("--rules and --template are mutually exclusive");
  }
  std::optional<std::string> root;
  if (!src.root.empty()) root = src.root;
  if (!src.rules_path.empty()) {
    require_file("--rules", src.rules_path);
    auto program = parse(internal::read_file(src.rules_path));
    if (!root && root_rules(program).size() > 1) root = program.back().name;
    return {program, root};
  }
  const std::string name = src.template_name.empty() ? "LNN-EL" : src.template_name;
  auto program = builtin_templates().program_for(name);
  if (!root) root = program.back().name;
  return {program, root};
}

// Built-in features plus every external column seen in the data or table.
FeatureCatalog catalog_for(const std::vector<std::string> &extra_columns) {
  FeatureCatalog catalog = FeatureCatalog::defaults();
  for (const auto &name : extra_columns) {
    if (!catalog.contains(name)) catalog.add(name, FeatureSpec{FeatureKind::kExternal, name, {}});
  }
  return catalog;
}

std::vector<std::string> external_columns(const Dataset &ds) {
  std::set<std::string> cols;
  for (const auto &inst : ds.instances) {
    for (const auto &c : inst.candidates) {
      for (const auto &[k, v] : c.external_scores) cols.insert(k);
    }
  }
  return {cols.begin(), cols.end()};
}

Dataset load_checked(const std::string &flag, const std::string &path) {
  require_file(flag, path);
  LoadReport report;
  Dataset ds = load_dataset(path, &report);
  spdlog::info("{}: {}", path, report.summary());
  return ds;
}

struct TrainFlags {
  std::string config_path;
  std::optional<int> epochs;
  std::optional<double> mu, lr, alpha, lambda;
  std::optional<uint64_t> seed;
  std::string mode = "lnn";
  std::string manual_path;
};

void add_train_flags(CLI::App *cmd, TrainFlags &f) {
  cmd->add_option("--config", f.config_path, "key = value training config file");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--mu", f.mu, "Ranking margin");
  cmd->add_option("--lr", f.lr, "Learning rate");
  cmd->add_option("--alpha", f.alpha, "Truth threshold alpha");
  cmd->add_option("--lambda", f.lambda, "Constraint penalty weight");
  cmd->add_option("--seed", f.seed, "Shuffle seed");
  cmd->add_option("--mode", f.mode, "lnn | tnorm | manual")
      ->check(CLI::IsMember({"lnn", "tnorm", "manual"}));
  cmd->add_option("--manual", f.manual_path,
                  "Manual-mode weights: JSON {rule_weights, feature_weights, thresholds}");
}

TrainConfig train_config(const TrainFlags &f) {
  TrainConfig c;
  if (!f.config_path.empty()) {
    require_file("--config", f.config_path);
    c = TrainConfig::from_text(internal::read_file(f.config_path));
  }
  if (f.epochs) c.epochs = *f.epochs;
  if (f.mu) c.mu = *f.mu;
  if (f.lr) c.learning_rate = *f.lr;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.lambda) c.penalty_lambda = *f.lambda;
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return c;
}

CompileOptions compile_options(const TrainFlags &f, const TrainConfig &config) {
  CompileOptions opts;
  opts.mode = logic_mode_from_name(f.mode);
  opts.alpha = config.alpha;
  if (!f.manual_path.empty()) {
    require_file("--manual", f.manual_path);
    try {
      auto j = nlohmann::json::parse(internal::read_file(f.manual_path));
      opts.manual.rule_weights = j.value("rule_weights", std::vector<double>{});
      opts.manual.feature_weights = j.value("feature_weights", std::vector<double>{});
      opts.manual_thresholds = j.value("thresholds", std::vector<double>{});
    } catch (const nlohmann::json::exception &e) {
      throw ValidationError(std::string("bad --manual file: ") + e.what());
    }
  }
  return opts;
}

void write_predictions(const std::string &path, const std::vector<Prediction> &preds) {
  std::string out;
  for (const auto &p : preds) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto &[id, score] : p.ranked) ranked.push_back({id, score});
    out += nlohmann::json{{"mention", p.mention_id}, {"ranked", ranked}}.dump() + "\n";
  }
  internal::write_file_atomic(path, out);
}

std::vector<std::string> split_commas(const std::string &s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    std::string part = s.substr(start, end - start);
    if (!part.empty()) out.push_back(part);
    start = end + 1;
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Rule-based entity linking with learnable logic", "elr"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string data, features, output, model_path, dot_path, csv_path, embed_path, box_path;
  std::vector<std::string> scores;
  int jobs = 1;
  RuleSource rules;
  TrainFlags tflags;
  std::vector<int> ks{1, 5, 10, 64};

  auto *featurize = app.add_subcommand("featurize", "Compute the feature table of a dataset");
  featurize->add_option("--data", data, "Dataset JSONL");
  add_rule_flags(featurize, rules);
  featurize->add_option("--scores", scores, "External scores as NAME=scores.csv (repeatable)");
  featurize->add_option("--embeddings", embed_path, "Candidate embeddings JSONL");
  featurize->add_option("--box-params", box_path, "Trained box parameters JSON");
  featurize->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  featurize->add_option("--out", output, "Feature CSV to write");

  auto *train_cmd = app.add_subcommand("train", "Train rule weights and thresholds");
  train_cmd->add_option("--data", data, "Dataset JSONL");
  train_cmd->add_option("--features", features, "Feature CSV");
  add_rule_flags(train_cmd, rules);
  add_train_flags(train_cmd, tflags);
  train_cmd->add_option("--out", output, "Model checkpoint to write");

  auto *link_cmd = app.add_subcommand("link", "Rank candidates with a trained model");
  link_cmd->add_option("--model", model_path, "Model checkpoint");
  link_cmd->add_option("--data", data, "Dataset JSONL");
  link_cmd->add_option("--features", features, "Feature CSV");
  link_cmd->add_option("--out", output, "Predictions JSONL to write");

  auto *eval_cmd = app.add_subcommand("eval", "Precision, recall, F1 and recall@k");
  auto *transfer_cmd =
      app.add_subcommand("transfer", "Evaluate a frozen model on another dataset");
  for (auto *cmd : {eval_cmd, transfer_cmd}) {
    cmd->add_option("--model", model_path, "Model checkpoint");
    cmd->add_option("--data", data, "Dataset JSONL");
    cmd->add_option("--features", features, "Feature CSV");
    cmd->add_option("--k", ks, "Cutoffs for recall@k")->delimiter(',');
    cmd->add_option("--out", output, "Report JSON to write (stdout if absent)");
    cmd->add_option("--csv", csv_path, "Report CSV to write");
  }

  std::string test_data, test_features, markdown_path;
  std::vector<std::string> subsets;
  auto *ablate = app.add_subcommand("ablate", "Train and evaluate template subsets");
  ablate->add_option("--data", data, "Training dataset JSONL");
  ablate->add_option("--features", features, "Training feature CSV");
  ablate->add_option("--test-data", test_data, "Test dataset JSONL");
  ablate->add_option("--test-features", test_features, "Test feature CSV");
  ablate->add_option("--subset", subsets, "Comma-separated template names (repeatable)");
  add_train_flags(ablate, tflags);
  ablate->add_option("--out", output, "Ablation CSV to write");
  ablate->add_option("--markdown", markdown_path, "Ablation markdown table to write");

  auto *inspect = app.add_subcommand("inspect", "Export learned weights");
  inspect->add_option("--model", model_path, "Model checkpoint");
  inspect->add_option("--dot", dot_path, "DOT rendering to write");
  inspect->add_option("--out", output, "Weight tree JSON to write (stdout if absent)");

  std::string endpoint;
  std::vector<std::string> surfaces;
  int k = 100;
  auto *fetch = app.add_subcommand("fetch", "Query a lookup service for candidates");
  fetch->add_option("--endpoint", endpoint, "Lookup URL");
  fetch->add_option("--surface", surfaces, "Mention surface (repeatable)");
  fetch->add_option("--data", data, "Dataset JSONL whose mention surfaces are queried");
  fetch->add_option("--k", k, "Results per query");
  fetch->add_option("--jobs", jobs, "Requests in flight")->check(CLI::PositiveNumber);
  fetch->add_option("--out", output, "Candidates JSONL to write");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (featurize->parsed()) {
      require_file("--data", data);
      require_output("--out", output);
      Dataset ds = load_checked("--data", data);
      std::vector<std::string> extra = external_columns(ds);
      for (const auto &spec : scores) {
        auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw ValidationError("--scores expects NAME=path, got " + spec);
        }
        std::string name = spec.substr(0, eq), path = spec.substr(eq + 1);
        require_file("--scores", path);
        MergeReport mr;
        ds = merge_external_scores(ds, path, name, &mr);
        spdlog::info("merged {}: {} matched, {} defaulted", name, mr.matched,
                     mr.unmatched_candidates);
        extra.push_back(name);
      }
      if (!embed_path.empty()) {
        require_file("--embeddings", embed_path);
        ds = attach_embeddings(ds, load_embeddings(embed_path));
      }
      FeatureCatalog full = catalog_for(extra);
      auto [program, root] = load_rules(rules);
      CompileOptions opts;
      opts.root = root;
      ScoringGraph graph = compile(program, full, opts);
      FeatureCatalog catalog = full.restrict_to(graph.leaf_features());
      if (!box_path.empty()) {
        require_file("--box-params", box_path);
        BoxParams bp = box_params_from_json(internal::read_file(box_path));
        FeatureCatalog updated;
        for (auto [name, spec] : catalog.entries()) {
          if (spec.kind == FeatureKind::kBox) spec.box = bp;
          updated.add(name, spec);
        }
        catalog = std::move(updated);
      }
      std::vector<std::string> warnings;
      FeatureTable table =
          build_feature_table(ds, catalog, {jobs, &warnings, graph.leaf_features()});
      for (const auto &w : warnings) spdlog::warn("{}", w);
      save_feature_table(table, output);
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      require_file("--data", data);
      require_file("--features", features);
      require_output("--out", output);
      TrainConfig config = train_config(tflags);
      Dataset ds = load_checked("--data", data);
      FeatureTable table = load_feature_table(features);
      FeatureCatalog full = catalog_for(table.feature_names());
      auto [program, root] = load_rules(rules);
      CompileOptions opts = compile_options(tflags, config);
      opts.root = root;
      ScoringGraph graph = compile(program, full, opts);
      Model model = train(ds, table, graph, config, full.restrict_to(graph.leaf_features()));
      save_model(model, output);
      if (!model.log.empty()) {
        const auto &last = model.log.back();
        spdlog::info("final loss {} (ranking {}, residual {})", last.loss, last.ranking_loss,
                     last.residual_sum);
      }
      return kExitOk;
    }

    if (link_cmd->parsed()) {
      require_file("--model", model_path);
      require_file("--data", data);
      require_file("--features", features);
      require_output("--out", output);
      Model model = load_model(model_path);
      Dataset ds = load_checked("--data", data);
      write_predictions(output, link(model, ds, load_feature_table(features)));
      return kExitOk;
    }

    if (eval_cmd->parsed() || transfer_cmd->parsed()) {
      require_file("--model", model_path);
      require_file("--data", data);
      require_file("--features", features);
      Model model = load_model(model_path);
      Dataset ds = load_checked("--data", data);
      FeatureTable table = load_feature_table(features);
      EvalReport report = eval_cmd->parsed() ? evaluate(model, ds, table, ks)
                                             : transfer_eval(model, ds, table, ks);
      if (output.empty()) {
        out << report.to_json() << "\n";
      } else {
        internal::write_file_atomic(output, report.to_json());
      }
      if (!csv_path.empty()) internal::write_file_atomic(csv_path, report.to_csv());
      return kExitOk;
    }

    if (ablate->parsed()) {
      require_file("--data", data);
      require_file("--features", features);
      require_file("--test-data", test_data);
      require_file("--test-features", test_features);
      if (output.empty() && markdown_path.empty()) {
        throw ValidationError("missing required option --out or --markdown");
      }
      if (subsets.empty()) throw ValidationError("missing required option --subset");
      TrainConfig config = train_config(tflags);
      std::vector<std::vector<std::string>> groups;
      for (const auto &s : subsets) groups.push_back(split_commas(s));
      AblationTable table =
          ablation(load_checked("--data", data), load_feature_table(features),
                   load_checked("--test-data", test_data), load_feature_table(test_features),
                   groups, config, compile_options(tflags, config));
      if (!output.empty()) internal::write_file_atomic(output, table.to_csv());
      if (!markdown_path.empty()) internal::write_file_atomic(markdown_path, table.to_markdown());
      return kExitOk;
    }

    if (inspect->parsed()) {
      require_file("--model", model_path);
      WeightExport w = export_weights(load_model(model_path));
      if (!dot_path.empty()) internal::write_file_atomic(dot_path, w.dot);
      if (!output.empty()) {
        internal::write_file_atomic(output, w.json);
      } else if (dot_path.empty()) {
        out << w.json << "\n";
      }
      return kExitOk;
    }

    if (fetch->parsed()) {
      if (endpoint.empty()) throw ValidationError("missing required option --endpoint");
      require_output("--out", output);
      if (!data.empty()) {
        Dataset ds = load_checked("--data", data);
        for (const auto &inst : ds.instances) surfaces.push_back(inst.mention.surface);
      }
      if (surfaces.empty()) throw ValidationError("nothing to fetch: give --surface or --data");
      LookupConfig lc;
      lc.max_in_flight = jobs;
      auto results = fetch_candidates_batch(endpoint, surfaces, k, lc);
      std::string text;
      for (size_t i = 0; i < surfaces.size(); ++i) {
        nlohmann::json cands = nlohmann::json::array();
        for (const auto &c : results[i]) {
          cands.push_back({{"id", c.id}, {"name", c.name}, {"domains", c.domains}});
        }
        text += nlohmann::json{{"surface", surfaces[i]}, {"candidates", cands}}.dump() + "\n";
      }
      internal::write_file_atomic(output, text);
      return kExitOk;
    }
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace elr
