#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "elr/cli.h"
#include "elr/corpus.h"
#include "elr/error.h"
#include "elr/eval.h"
#include "elr/logic.h"
#include "elr/ruledsl.h"
#include "elr/simfeatures.h"
#include "elr/training.h"

namespace py = pybind11;
using namespace elr;

namespace {

std::vector<RuleAST> program_of(const std::string &rules, const std::string &template_name) {
  if (!rules.empty() && !template_name.empty()) {
    throw ValidationError("give either rules or template, not both");
  }
  if (!rules.empty()) return parse(rules);
  return builtin_templates().program_for(template_name.empty() ? "LNN-EL" : template_name);
}

ScoringGraph compile_program(const std::vector<RuleAST> &program, const FeatureCatalog &catalog,
                             const std::string &mode, double alpha) {
  CompileOptions opts;
  opts.mode = logic_mode_from_name(mode);
  opts.alpha = alpha;
  auto roots = root_rules(program);
  if (roots.size() > 1) opts.root = program.back().name;
  return compile(program, catalog, opts);
}

FeatureCatalog catalog_with(const std::vector<std::string> &extra) {
  FeatureCatalog catalog = FeatureCatalog::defaults();
  for (const auto &name : extra) {
    if (!catalog.contains(name)) catalog.add(name, FeatureSpec{FeatureKind::kExternal, name, {}});
  }
  return catalog;
}

py::dict report_dict(const EvalReport &r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["recall_at"] = r.recall_at;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rule-based entity linking with learnable logic";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<NetworkError>(m, "NetworkError", PyExc_OSError);

  m.def("char_jaccard", &char_jaccard, py::arg("a"), py::arg("b"));
  m.def("levenshtein", &levenshtein, py::arg("a"), py::arg("b"));
  m.def("lev_sim", &lev_sim, py::arg("a"), py::arg("b"));
  m.def("jaro_winkler", &jaro_winkler, py::arg("a"), py::arg("b"));
  m.def("partial_ratio", &partial_ratio, py::arg("a"), py::arg("b"));
  m.def("minmax_rescale",
        [](const std::vector<double> &v) { return minmax_rescale(v); }, py::arg("values"));

  m.def(
      "lnn_and",
      [](const std::vector<double> &x, std::optional<std::vector<double>> w, double beta) {
        auto weights = w.value_or(std::vector<double>(x.size(), 1.0));
        return lnn_and(x, GateParams::from_effective(weights, beta,
                                                     std::vector<double>(x.size(), 0.0), 0.0));
      },
      py::arg("inputs"), py::arg("weights") = py::none(), py::arg("beta") = 1.0);
  m.def(
      "lnn_or",
      [](const std::vector<double> &x, std::optional<std::vector<double>> w, double beta) {
        auto weights = w.value_or(std::vector<double>(x.size(), 1.0));
        return lnn_or(x, GateParams::from_effective(weights, beta,
                                                    std::vector<double>(x.size(), 0.0), 0.0));
      },
      py::arg("inputs"), py::arg("weights") = py::none(), py::arg("beta") = 1.0);
  m.def("tnorm_and", [](const std::vector<double> &x) { return tnorm_and(x); });
  m.def("tnorm_or", [](const std::vector<double> &x) { return tnorm_or(x); });

  m.def(
      "format_rules", [](const std::string &text) { return format_program(parse(text)); },
      py::arg("text"), "Parse a rule program and return its canonical text.");
  m.def("template_names", [] { return builtin_templates().names(); });
  m.def("template_source", &builtin_template_source);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("name", [](const Dataset &d) { return d.name; })
      .def("__len__", [](const Dataset &d) { return d.instances.size(); })
      .def("mention_ids",
           [](const Dataset &d) {
             std::vector<std::string> ids;
             for (const auto &inst : d.instances) ids.push_back(inst.mention.id);
             return ids;
           })
      .def("save", [](const Dataset &d, const std::string &path) { save_dataset(d, path); });
  m.def(
      "load_dataset",
      [](const std::string &path) {
        LoadReport report;
        Dataset ds = load_dataset(path, &report);
        return py::make_tuple(ds, report.summary());
      },
      py::arg("path"), "Returns (dataset, load summary).");
  m.def(
      "parse_dataset",
      [](const std::string &content, const std::string &name) {
        return parse_dataset(content, name, nullptr);
      },
      py::arg("content"), py::arg("name") = "dataset");

  py::class_<FeatureTable>(m, "FeatureTable")
      .def_property_readonly("feature_names", &FeatureTable::feature_names)
      .def("__len__", &FeatureTable::size)
      .def("value", &FeatureTable::value, py::arg("mention_id"), py::arg("candidate_id"),
           py::arg("feature"))
      .def("to_csv", [](const FeatureTable &t) { return feature_table_to_csv(t); })
      .def("save", [](const FeatureTable &t, const std::string &path) {
        save_feature_table(t, path);
      });
  m.def(
      "featurize",
      [](const Dataset &ds, const std::string &rules, const std::string &template_name,
         int jobs) {
        std::set<std::string> extra;
        for (const auto &inst : ds.instances) {
          for (const auto &c : inst.candidates) {
            for (const auto &[k, v] : c.external_scores) extra.insert(k);
          }
        }
        FeatureCatalog catalog = catalog_with({extra.begin(), extra.end()});
        ScoringGraph graph = compile_program(program_of(rules, template_name), catalog, "lnn", 0.7);
        std::vector<std::string> warnings;
        return build_feature_table(ds, catalog.restrict_to(graph.leaf_features()),
                                   {jobs, &warnings, graph.leaf_features()});
      },
      py::arg("dataset"), py::arg("rules") = "", py::arg("template") = "", py::arg("jobs") = 1);
  m.def("load_feature_table", &load_feature_table, py::arg("path"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("loss_log",
                             [](const Model &md) {
                               std::vector<double> out;
                               for (const auto &e : md.log) out.push_back(e.loss);
                               return out;
                             })
      .def_property_readonly("residual_sum",
                             [](const Model &md) { return md.graph.residual_sum(); })
      .def("parameters",
           [](const Model &md) {
             std::map<std::string, double> out;
             auto names = md.graph.param_names();
             for (size_t k = 0; k < names.size(); ++k) out[names[k]] = md.graph.params()[k];
             return out;
           })
      .def("to_json", [](const Model &md) { return model_to_json(md); })
      .def("save", [](const Model &md, const std::string &path) { save_model(md, path); });
  m.def("load_model", &load_model, py::arg("path"));
  m.def("model_from_json", &model_from_json, py::arg("text"));

  m.def(
      "train",
      [](const Dataset &ds, const FeatureTable &table, const std::string &rules,
         const std::string &template_name, const std::string &mode, int epochs, double lr,
         double mu, double alpha, double penalty_lambda, uint64_t seed) {
        TrainConfig config{epochs, lr, mu, alpha, penalty_lambda, seed};
        config.validate();
        FeatureCatalog catalog = catalog_with(table.feature_names());
        ScoringGraph graph =
            compile_program(program_of(rules, template_name), catalog, mode, alpha);
        py::gil_scoped_release release;
        return train(ds, table, graph, config, catalog.restrict_to(graph.leaf_features()));
      },
      py::arg("dataset"), py::arg("features"), py::arg("rules") = "", py::arg("template") = "",
      py::arg("mode") = "lnn", py::arg("epochs") = 30, py::arg("lr") = 1e-2, py::arg("mu") = 0.6,
      py::arg("alpha") = 0.7, py::arg("penalty_lambda") = 10.0, py::arg("seed") = 0);

  m.def(
      "link",
      [](const Model &md, const Dataset &ds, const FeatureTable &table) {
        std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> out;
        for (auto &p : link(md, ds, table)) out.emplace_back(p.mention_id, std::move(p.ranked));
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("features"));
  m.def(
      "evaluate",
      [](const Model &md, const Dataset &ds, const FeatureTable &table,
         const std::vector<int> &ks) { return report_dict(evaluate(md, ds, table, ks)); },
      py::arg("model"), py::arg("dataset"), py::arg("features"),
      py::arg("ks") = std::vector<int>{1, 5, 10, 64});
  m.def(
      "export_weights",
      [](const Model &md) {
        auto w = export_weights(md);
        return py::make_tuple(w.json, w.dot);
      },
      py::arg("model"), "Returns (weight tree JSON, DOT rendering).");

  m.def(
      "run_cli",
      [](const std::vector<std::string> &args) {
        std::ostringstream out, err;
        int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line front end; returns (exit code, stdout, stderr).");
}
