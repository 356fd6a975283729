#include "elr/ruledsl.h"

#include <cctype>
#include <functional>
#include <set>

#include "elr/error.h"
#include "io_util.h"

namespace elr {

RuleExpr RuleExpr::pred(std::string feature, Threshold t, double theta) {
  RuleExpr e;
  e.kind = Kind::kPred;
  e.name = std::move(feature);
  e.threshold = t;
  e.fixed_theta = t == Threshold::kFixed ? theta : 0.0;
  return e;
}

RuleExpr RuleExpr::ref(std::string rule) {
  RuleExpr e;
  e.kind = Kind::kRef;
  e.name = std::move(rule);
  return e;
}

RuleExpr RuleExpr::op(Kind kind, std::vector<RuleExpr> children) {
  RuleExpr e;
  e.kind = kind;
  e.children = std::move(children);
  return e;
}

bool RuleExpr::operator==(const RuleExpr &o) const {
  return kind == o.kind && name == o.name && threshold == o.threshold &&
         fixed_theta == o.fixed_theta && children == o.children;
}

namespace {

enum class Tok { kIdent, kNumber, kRule, kEq, kSemi, kBar, kAmp, kBang, kLParen, kRParen,
                 kQuestion, kGt, kEnd };

const char *tok_name(Tok t) {
  switch (t) {
    case Tok::kIdent: return "identifier";
    case Tok::kNumber: return "number";
    case Tok::kRule: return "'rule'";
    case Tok::kEq: return "'='";
    case Tok::kSemi: return "';'";
    case Tok::kBar: return "'|'";
    case Tok::kAmp: return "'&'";
    case Tok::kBang: return "'!'";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kQuestion: return "'?'";
    case Tok::kGt: return "'>'";
    case Tok::kEnd: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind;
  std::string text;
  SourceLoc loc;
};

std::vector<Token> lex(const std::string &text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    SourceLoc loc{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      std::string word = text.substr(i, j - i);
      out.push_back({word == "rule" ? Tok::kRule : Tok::kIdent, word, loc});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t j = i;
      while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        ++j;
        if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      }
      out.push_back({Tok::kNumber, text.substr(i, j - i), loc});
      advance(j - i);
      continue;
    }
    Tok kind;
    switch (c) {
      case '=': kind = Tok::kEq; break;
      case ';': kind = Tok::kSemi; break;
      case '|': kind = Tok::kBar; break;
      case '&': kind = Tok::kAmp; break;
      case '!': kind = Tok::kBang; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      case '?': kind = Tok::kQuestion; break;
      case '>': kind = Tok::kGt; break;
      default:
        throw ParseError(std::to_string(line) + ":" + std::to_string(col) +
                             ": unexpected character '" + std::string(1, c) + "'",
                         line, col);
    }
    out.push_back({kind, std::string(1, c), loc});
    advance(1);
  }
  out.push_back({Tok::kEnd, "", {line, col}});
  return out;
}

bool is_rule_name(const std::string &ident) {
  return !ident.empty() && std::isupper(static_cast<unsigned char>(ident[0]));
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  std::vector<RuleAST> program() {
    std::vector<RuleAST> rules;
    do {
      rules.push_back(rule());
    } while (peek().kind != Tok::kEnd);
    return rules;
  }

 private:
  const Token &peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const std::string &expected) const {
    const Token &t = peek();
    std::string found = t.kind == Tok::kEnd ? "end of input" : "'" + t.text + "'";
    throw ParseError(std::to_string(t.loc.line) + ":" + std::to_string(t.loc.column) +
                         ": expected " + expected + ", found " + found,
                     t.loc.line, t.loc.column);
  }

  Token expect(Tok kind) {
    if (peek().kind != kind) fail(tok_name(kind));
    return toks_[pos_++];
  }

  RuleAST rule() {
    if (peek().kind != Tok::kRule) fail("'rule'");
    SourceLoc loc = peek().loc;
    ++pos_;
    Token name = expect(Tok::kIdent);
    if (!is_rule_name(name.text)) {
      throw ParseError(std::to_string(name.loc.line) + ":" + std::to_string(name.loc.column) +
                           ": rule name " + name.text + " must start with an uppercase letter",
                       name.loc.line, name.loc.column);
    }
    expect(Tok::kEq);
    RuleExpr body = expr();
    expect(Tok::kSemi);
    return RuleAST{name.text, std::move(body), loc};
  }

  RuleExpr expr() {
    SourceLoc loc = peek().loc;
    std::vector<RuleExpr> terms{term()};
    while (peek().kind == Tok::kBar) {
      ++pos_;
      terms.push_back(term());
    }
    if (terms.size() == 1) return std::move(terms[0]);
    RuleExpr e = RuleExpr::op(RuleExpr::Kind::kOr, std::move(terms));
    e.loc = loc;
    return e;
  }

  RuleExpr term() {
    SourceLoc loc = peek().loc;
    std::vector<RuleExpr> factors{factor()};
    while (peek().kind == Tok::kAmp) {
      ++pos_;
      factors.push_back(factor());
    }
    if (factors.size() == 1) return std::move(factors[0]);
    RuleExpr e = RuleExpr::op(RuleExpr::Kind::kAnd, std::move(factors));
    e.loc = loc;
    return e;
  }

  RuleExpr factor() {
    SourceLoc loc = peek().loc;
    bool negate = false;
    if (peek().kind == Tok::kBang) {
      negate = true;
      ++pos_;
    }
    RuleExpr inner;
    if (peek().kind == Tok::kLParen) {
      ++pos_;
      inner = expr();
      expect(Tok::kRParen);
    } else if (peek().kind == Tok::kIdent) {
      Token id = toks_[pos_++];
      if (is_rule_name(id.text)) {
        if (peek().kind == Tok::kQuestion || peek().kind == Tok::kGt) {
          throw ParseError(std::to_string(peek().loc.line) + ":" +
                               std::to_string(peek().loc.column) + ": rule reference " +
                               id.text + " cannot take a threshold",
                           peek().loc.line, peek().loc.column);
        }
        inner = RuleExpr::ref(id.text);
      } else if (peek().kind == Tok::kQuestion) {
        ++pos_;
        inner = RuleExpr::pred(id.text, RuleExpr::Threshold::kLearnable);
      } else if (peek().kind == Tok::kGt) {
        ++pos_;
        Token num = peek();
        if (num.kind != Tok::kNumber) fail("number");
        ++pos_;
        double theta;
        try {
          theta = internal::parse_double(num.text);
        } catch (const ValidationError &) {
          throw ParseError(std::to_string(num.loc.line) + ":" + std::to_string(num.loc.column) +
                               ": bad number " + num.text,
                           num.loc.line, num.loc.column);
        }
        if (!(theta >= 0.0 && theta <= 1.0)) {
          throw ParseError(std::to_string(num.loc.line) + ":" + std::to_string(num.loc.column) +
                               ": threshold " + num.text + " outside [0,1]",
                           num.loc.line, num.loc.column);
        }
        inner = RuleExpr::pred(id.text, RuleExpr::Threshold::kFixed, theta);
      } else {
        inner = RuleExpr::pred(id.text);
      }
      inner.loc = id.loc;
    } else {
      fail(negate ? "identifier or '('" : "'!', identifier or '('");
    }
    if (!negate) return inner;
    RuleExpr e = RuleExpr::op(RuleExpr::Kind::kNot, {std::move(inner)});
    e.loc = loc;
    return e;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

void collect_refs(const RuleExpr &e, std::vector<const RuleExpr *> &out) {
  if (e.kind == RuleExpr::Kind::kRef) out.push_back(&e);
  for (const auto &c : e.children) collect_refs(c, out);
}

std::map<std::string, const RuleAST *> rule_index(const std::vector<RuleAST> &asts) {
  std::map<std::string, const RuleAST *> index;
  for (const auto &r : asts) {
    if (!index.emplace(r.name, &r).second) {
      throw ValidationError("rule " + r.name + " defined twice");
    }
  }
  return index;
}

void check_references(const std::vector<RuleAST> &asts) {
  auto index = rule_index(asts);
  for (const auto &r : asts) {
    std::vector<const RuleExpr *> refs;
    collect_refs(r.body, refs);
    for (const auto *ref : refs) {
      if (!index.count(ref->name)) {
        throw ValidationError(std::to_string(ref->loc.line) + ":" +
                              std::to_string(ref->loc.column) + ": undefined rule " + ref->name);
      }
    }
  }
  // Depth-first cycle search.
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::vector<std::string> path;
  std::function<void(const std::string &)> visit = [&](const std::string &name) {
    if (state[name] == 2) return;
    if (state[name] == 1) {
      std::string cycle;
      auto it = std::find(path.begin(), path.end(), name);
      for (; it != path.end(); ++it) cycle += *it + " -> ";
      throw ValidationError("cyclic rule reference: " + cycle + name);
    }
    state[name] = 1;
    path.push_back(name);
    std::vector<const RuleExpr *> refs;
    collect_refs(index.at(name)->body, refs);
    for (const auto *ref : refs) visit(ref->name);
    path.pop_back();
    state[name] = 2;
  };
  for (const auto &r : asts) visit(r.name);
}

}  // namespace

std::vector<RuleAST> parse(const std::string &text) {
  Parser parser(lex(text));
  auto rules = parser.program();
  check_references(rules);
  return rules;
}

std::string format_expr(const RuleExpr &e) {
  using K = RuleExpr::Kind;
  switch (e.kind) {
    case K::kPred:
      switch (e.threshold) {
        case RuleExpr::Threshold::kNone: return e.name;
        case RuleExpr::Threshold::kLearnable: return e.name + "?";
        case RuleExpr::Threshold::kFixed: return e.name + " > " + internal::format_double(e.fixed_theta);
      }
      return e.name;
    case K::kRef:
      return e.name;
    case K::kNot:
      return "!(" + format_expr(e.children[0]) + ")";
    case K::kAnd:
    case K::kOr: {
      std::string out;
      for (size_t i = 0; i < e.children.size(); ++i) {
        const auto &c = e.children[i];
        if (i > 0) out += e.kind == K::kAnd ? " & " : " | ";
        bool paren = c.kind == K::kOr || (e.kind == K::kAnd && c.kind == K::kAnd);
        out += paren ? "(" + format_expr(c) + ")" : format_expr(c);
      }
      return out;
    }
  }
  return "";
}

std::string format(const RuleAST &ast) {
  return "rule " + ast.name + " = " + format_expr(ast.body) + ";";
}

std::string format_program(const std::vector<RuleAST> &asts) {
  std::string out;
  for (const auto &r : asts) out += format(r) + "\n";
  return out;
}

std::vector<std::string> root_rules(const std::vector<RuleAST> &asts) {
  std::set<std::string> referenced;
  for (const auto &r : asts) {
    std::vector<const RuleExpr *> refs;
    collect_refs(r.body, refs);
    for (const auto *ref : refs) referenced.insert(ref->name);
  }
  std::vector<std::string> roots;
  for (const auto &r : asts) {
    if (!referenced.count(r.name)) roots.push_back(r.name);
  }
  return roots;
}

namespace {

RuleExpr inline_expr(const RuleExpr &e, const std::map<std::string, const RuleAST *> &index,
                     std::vector<std::string> &stack) {
  if (e.kind == RuleExpr::Kind::kRef) {
    auto it = index.find(e.name);
    if (it == index.end()) throw ValidationError("undefined rule " + e.name);
    if (std::find(stack.begin(), stack.end(), e.name) != stack.end()) {
      throw ValidationError("cyclic rule reference through " + e.name);
    }
    stack.push_back(e.name);
    RuleExpr out = inline_expr(it->second->body, index, stack);
    stack.pop_back();
    return out;
  }
  RuleExpr out = e;
  for (auto &c : out.children) c = inline_expr(c, index, stack);
  return out;
}

std::string pick_root(const std::vector<RuleAST> &asts, const CompileOptions &options) {
  if (options.root) return *options.root;
  auto roots = root_rules(asts);
  if (roots.size() != 1) {
    std::string names;
    for (const auto &r : roots) names += (names.empty() ? "" : ", ") + r;
    throw ValidationError("expected exactly one root rule, found " +
                          std::to_string(roots.size()) + (names.empty() ? "" : ": " + names));
  }
  return roots[0];
}

class Compiler {
 public:
  Compiler(const std::map<std::string, const RuleAST *> &index, const FeatureCatalog &catalog,
           const CompileOptions &options)
      : index_(index), catalog_(catalog), options_(options), graph_(options.mode, options.alpha) {}

  ScoringGraph run(const std::string &root) {
    auto it = index_.find(root);
    if (it == index_.end()) throw ValidationError("undefined rule " + root);
    stack_.push_back(root);
    int node = build(it->second->body, root);
    graph_.set_root(node);
    return std::move(graph_);
  }

 private:
  double next(const std::vector<double> &v, size_t &pos, double fallback) {
    return pos < v.size() ? v[pos++] : (++pos, fallback);
  }

  int build(const RuleExpr &e, const std::string &rule) {
    using K = RuleExpr::Kind;
    int node = -1;
    switch (e.kind) {
      case K::kRef: {
        auto it = index_.find(e.name);
        if (it == index_.end()) throw ValidationError("undefined rule " + e.name);
        if (std::find(stack_.begin(), stack_.end(), e.name) != stack_.end()) {
          throw ValidationError("cyclic rule reference through " + e.name);
        }
        stack_.push_back(e.name);
        node = build(it->second->body, e.name);
        stack_.pop_back();
        return node;
      }
      case K::kPred: {
        if (!catalog_.contains(e.name)) {
          throw ValidationError("unresolved feature " + e.name + " in rule " + rule);
        }
        if (e.threshold == RuleExpr::Threshold::kNone) {
          node = graph_.add_raw(e.name);
        } else if (e.threshold == RuleExpr::Threshold::kFixed) {
          node = graph_.add_fixed_threshold(e.name, e.fixed_theta);
        } else if (options_.mode == LogicMode::kManual) {
          node = graph_.add_fixed_threshold(
              e.name, next(options_.manual_thresholds, theta_pos_, options_.manual_default_theta));
        } else {
          node = graph_.add_threshold(e.name, ThresholdParams{});
        }
        break;
      }
      case K::kNot:
        node = graph_.add_not(build(e.children[0], rule));
        break;
      case K::kAnd:
      case K::kOr: {
        const bool is_and = e.kind == K::kAnd;
        GateParams params = GateParams::defaults(e.children.size());
        if (options_.mode == LogicMode::kManual) {
          // Literal weights, consumed in depth-first order.
          for (auto &w : params.raw_weights) {
            w = is_and ? next(options_.manual.feature_weights, fw_pos_, 1.0)
                       : next(options_.manual.rule_weights, rw_pos_, 1.0);
          }
        }
        std::vector<int> children;
        for (const auto &c : e.children) children.push_back(build(c, rule));
        node = graph_.add_gate(is_and ? NodeKind::kAnd : NodeKind::kOr, std::move(children), params);
        break;
      }
    }
    graph_.set_origin(node, rule);
    return node;
  }

  const std::map<std::string, const RuleAST *> &index_;
  const FeatureCatalog &catalog_;
  const CompileOptions &options_;
  ScoringGraph graph_;
  std::vector<std::string> stack_;
  size_t rw_pos_ = 0, fw_pos_ = 0, theta_pos_ = 0;
};

}  // namespace

RuleExpr inline_rule(const std::vector<RuleAST> &asts, const std::string &root) {
  auto index = rule_index(asts);
  auto it = index.find(root);
  if (it == index.end()) throw ValidationError("undefined rule " + root);
  std::vector<std::string> stack{root};
  return inline_expr(it->second->body, index, stack);
}

ScoringGraph compile(const std::vector<RuleAST> &asts, const FeatureCatalog &catalog,
                     const CompileOptions &options) {
  if (asts.empty()) throw ValidationError("no rules to compile");
  check_references(asts);
  auto index = rule_index(asts);
  return Compiler(index, catalog, options).run(pick_root(asts, options));
}

namespace {

const std::vector<std::pair<std::string, std::string>> kDisplayNames = {
    {"Name", "Name"},         {"Context", "Context"},           {"Type", "Type"},
    {"Blink", "Blink"},       {"Box", "Box"},                   {"Bert", "Bert"},
    {"LNN-EL", "LNN_EL"},     {"LNN-EL+BLINK", "LNN_EL_BLINK"}, {"LNN-EL_ens", "LNN_EL_ens"},
};

}  // namespace

TemplateLibrary::TemplateLibrary(std::vector<RuleAST> rules) : rules_(std::move(rules)) {
  check_references(rules_);
  std::set<std::string> defined;
  for (const auto &r : rules_) defined.insert(r.name);
  for (const auto &[display, rule] : kDisplayNames) {
    if (defined.count(rule)) display_to_rule_[display] = rule;
  }
  for (const auto &r : rules_) {
    bool named = false;
    for (const auto &[d, rule] : display_to_rule_) named |= rule == r.name;
    if (!named) display_to_rule_[r.name] = r.name;
  }
}

std::vector<std::string> TemplateLibrary::names() const {
  std::vector<std::string> out;
  for (const auto &[display, rule] : kDisplayNames) {
    if (display_to_rule_.count(display)) out.push_back(display);
  }
  for (const auto &[display, rule] : display_to_rule_) {
    if (std::find(out.begin(), out.end(), display) == out.end()) out.push_back(display);
  }
  return out;
}

bool TemplateLibrary::contains(const std::string &display_name) const {
  if (display_to_rule_.count(display_name)) return true;
  for (const auto &r : rules_) {
    if (r.name == display_name) return true;
  }
  return false;
}

const RuleAST &TemplateLibrary::at(const std::string &display_name) const {
  std::string rule = display_name;
  if (auto it = display_to_rule_.find(display_name); it != display_to_rule_.end()) rule = it->second;
  for (const auto &r : rules_) {
    if (r.name == rule) return r;
  }
  throw ValidationError("unknown template " + display_name);
}

std::vector<RuleAST> TemplateLibrary::program_for(const std::string &display_name) const {
  return union_program({display_name});
}

std::vector<RuleAST> TemplateLibrary::union_program(
    const std::vector<std::string> &display_names) const {
  if (display_names.empty()) throw ValidationError("empty template subset");
  std::vector<RuleAST> out;
  std::set<std::string> emitted;
  std::function<void(const RuleAST &)> emit = [&](const RuleAST &r) {
    if (emitted.count(r.name)) return;
    std::vector<const RuleExpr *> refs;
    collect_refs(r.body, refs);
    for (const auto *ref : refs) emit(at(ref->name));
    emitted.insert(r.name);
    out.push_back(r);
  };
  std::vector<RuleExpr> roots;
  for (const auto &d : display_names) {
    const RuleAST &r = at(d);
    emit(r);
    roots.push_back(RuleExpr::ref(r.name));
  }
  if (display_names.size() == 1) return out;
  out.push_back(RuleAST{"Links", RuleExpr::op(RuleExpr::Kind::kOr, std::move(roots)), {}});
  return out;
}

const std::string &builtin_template_source() {
  static const std::string source = R"(# Name, context and type evidence, each gated by entity prominence.
rule Name = (jacc? | lev? | jw? | spacy?) & prom;
rule Context = (jacc? | lev? | jw? | spacy?) & ctx? & prom;
rule Type = (jacc? | lev? | jw? | spacy?) & type? & prom;

# Rules that bring in scores from external linkers.
rule Blink = (jacc? | lev? | jw? | spacy?) & blink;
rule Box = (jacc? | lev? | jw? | spacy?) | box?;
rule Bert = (jacc? | lev? | jw? | spacy?) | bert?;

rule LNN_EL = Name | Context | Type;
rule LNN_EL_BLINK = LNN_EL | Blink;
rule LNN_EL_ens = LNN_EL | Blink | Box;
)";
  return source;
}

const TemplateLibrary &builtin_templates() {
  static const TemplateLibrary library(parse(builtin_template_source()));
  return library;
}

}  // namespace elr
