#ifndef ELR_RULEDSL_H_
#define ELR_RULEDSL_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elr/logic.h"
#include "elr/simfeatures.h"

namespace elr {

// Rule programs
//
//   program   := rule+
//   rule      := "rule" IDENT "=" expr ";"
//   expr      := term ("|" term)*
//   term      := factor ("&" factor)*
//   factor    := "!"? (IDENT threshold? | "(" expr ")")
//   threshold := "?" | ">" NUMBER
//
// "# ..." comments run to end of line. Identifiers that start with an
// uppercase letter name rules; all others name feature predicates. A `?`
// suffix makes the predicate's threshold learnable, `> 0.4` fixes it, and a
// bare predicate feeds the raw feature value.

struct SourceLoc {
  int line = 0;
  int column = 0;
};

struct RuleExpr {
  enum class Kind { kAnd, kOr, kNot, kPred, kRef };
  enum class Threshold { kNone, kLearnable, kFixed };

  Kind kind = Kind::kPred;
  std::vector<RuleExpr> children;
  std::string name;  // predicate feature or referenced rule
  Threshold threshold = Threshold::kNone;
  double fixed_theta = 0.0;
  SourceLoc loc;

  static RuleExpr pred(std::string feature, Threshold t = Threshold::kNone,
                       double theta = 0.0);
  static RuleExpr ref(std::string rule);
  static RuleExpr op(Kind kind, std::vector<RuleExpr> children);

  // Structural equality; source locations are ignored.
  bool operator==(const RuleExpr &other) const;
};

struct RuleAST {
  std::string name;
  RuleExpr body;
  SourceLoc loc;

  bool operator==(const RuleAST &other) const {
    return name == other.name && body == other.body;
  }
};

// Throws ParseError with line/column and the expected tokens, or
// ValidationError for undefined or cyclic rule references.
std::vector<RuleAST> parse(const std::string &text);

std::string format_expr(const RuleExpr &expr);
// "rule NAME = expr;"
std::string format(const RuleAST &ast);
std::string format_program(const std::vector<RuleAST> &asts);

struct CompileOptions {
  LogicMode mode = LogicMode::kLnn;
  double alpha = 0.7;
  // Rule to compile; defaults to the single rule no other rule references.
  std::optional<std::string> root;
  // Manual mode: weights consumed in depth-first order by disjunction
  // inputs (rule weights) and conjunction inputs (feature weights). Missing
  // entries default to 1.
  ManualWeights manual;
  // Manual mode: theta for learnable (`?`) predicates, consumed in leaf
  // order; missing entries default to manual_default_theta.
  std::vector<double> manual_thresholds;
  double manual_default_theta = 0.5;
};

// Inlines rule references and maps operators to gates with fresh default
// parameters. Throws ValidationError naming the predicate and rule for
// features missing from the catalog.
ScoringGraph compile(const std::vector<RuleAST> &asts, const FeatureCatalog &catalog,
                     const CompileOptions &options = {});

// Rule root with every reference inlined.
RuleExpr inline_rule(const std::vector<RuleAST> &asts, const std::string &root);

// Rules that no other rule in `asts` references.
std::vector<std::string> root_rules(const std::vector<RuleAST> &asts);

class TemplateLibrary {
 public:
  explicit TemplateLibrary(std::vector<RuleAST> rules);

  // Display names: Name, Context, Type, Blink, Box, Bert, LNN-EL,
  // LNN-EL+BLINK, LNN-EL_ens.
  std::vector<std::string> names() const;
  const RuleAST &at(const std::string &display_name) const;
  bool contains(const std::string &display_name) const;
  const std::vector<RuleAST> &rules() const { return rules_; }

  // Rule program defining `root` and everything it references, ending with
  // the root rule.
  std::vector<RuleAST> program_for(const std::string &display_name) const;
  // Program whose root, `Links`, is the disjunction of the given templates.
  std::vector<RuleAST> union_program(const std::vector<std::string> &display_names) const;

 private:
  std::vector<RuleAST> rules_;
  std::map<std::string, std::string> display_to_rule_;
};

// Template source text, and the parsed library.
const std::string &builtin_template_source();
const TemplateLibrary &builtin_templates();

}  // namespace elr

#endif  // ELR_RULEDSL_H_
