#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "elr/error.h"
#include "elr/logic.h"
#include "reference.h"

using namespace elr;
using Catch::Approx;
using elr::testing::random_graph;

namespace {

GateParams unit_gate(size_t n) {
  return GateParams::from_effective(std::vector<double>(n, 1.0), 1.0, std::vector<double>(n, 0.0),
                                    0.0);
}

GateParams random_gate(std::mt19937_64 &rng, size_t n) {
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  GateParams g;
  for (size_t k = 0; k < n; ++k) {
    g.raw_weights.push_back(u(rng));
    g.raw_slacks.push_back(u(rng));
  }
  g.bias = u(rng);
  g.raw_slack_big = u(rng);
  return g;
}

std::vector<double> random_inputs(std::mt19937_64 &rng, size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto &v : x) v = u(rng);
  return x;
}

std::vector<double> complement(const std::vector<double> &x) {
  std::vector<double> out;
  for (double v : x) out.push_back(1.0 - v);
  return out;
}

}  // namespace

TEST_CASE("lnn_and examples") {
  auto g = unit_gate(2);
  CHECK(lnn_and(std::vector<double>{1, 1}, g) == 1.0);
  CHECK(lnn_and(std::vector<double>{0, 1}, g) == 0.0);
  CHECK(lnn_and(std::vector<double>{0.8, 0.9}, g) == Approx(0.7).margin(1e-15));
  CHECK_THROWS_AS(lnn_and(std::vector<double>{1, 1, 1}, g), ValidationError);
  CHECK_THROWS_AS(lnn_and(std::vector<double>{std::nan(""), 1}, g), NumericError);
}

TEST_CASE("lnn_or examples") {
  auto g = unit_gate(2);
  CHECK(lnn_or(std::vector<double>{0, 0}, g) == 0.0);
  CHECK(lnn_or(std::vector<double>{1, 0}, g) == 1.0);
  // 1 - clamp(1 - (1 - 0.8) - (1 - 0.9)), the bounded sum min(1, 0.2 + 0.1).
  CHECK(lnn_or(std::vector<double>{0.2, 0.1}, g) == Approx(0.3).margin(1e-15));
}

TEST_CASE("lnn_not examples") {
  CHECK(lnn_not(0.0) == 1.0);
  CHECK(lnn_not(1.0) == 0.0);
  CHECK(lnn_not(0.3) == Approx(0.7).margin(1e-15));
}

TEST_CASE("t-norm examples") {
  CHECK(tnorm_and(std::vector<double>{0.5, 0.5}) == 0.25);
  CHECK(tnorm_or(std::vector<double>{0.5, 0.5}) == 0.75);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    double x = random_inputs(rng, 1)[0];
    CHECK(tnorm_and(std::vector<double>{1.0, x}) == x);
  }
  for (int a = 0; a <= 1; ++a) {
    for (int b = 0; b <= 1; ++b) {
      CHECK(tnorm_and(std::vector<double>{double(a), double(b)}) == double(a && b));
      CHECK(tnorm_or(std::vector<double>{double(a), double(b)}) == double(a || b));
    }
  }
}

TEST_CASE("threshold gate examples") {
  for (double gamma : {-3.0, 0.0, 2.5}) CHECK(threshold_gate(0.0, ThresholdParams{gamma}) == 0.0);
  auto half = ThresholdParams::from_theta(0.5);
  CHECK(half.theta() == Approx(0.5).margin(1e-15));
  CHECK(threshold_gate(0.7, half) == Approx(0.7 / (1.0 + std::exp(-0.2))).margin(1e-12));
  CHECK(threshold_gate(0.7, half) == Approx(0.38488).margin(1e-5));
  CHECK(threshold_gate(1.0, ThresholdParams{30.0}) == Approx(0.5).margin(1e-6));
  CHECK_THROWS_AS(ThresholdParams::from_theta(1.0), ValidationError);
}

TEST_CASE("threshold gate monotonicity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 2000; ++i) {
    double f = u(rng), g = u(rng);
    double lo = std::min(f, g), hi = std::max(f, g);
    if (hi - lo < 1e-9) continue;
    ThresholdParams t{4.0 * u(rng) - 2.0};
    CHECK(threshold_gate(lo, t) < threshold_gate(hi, t));
    ThresholdParams t2{t.gamma + 0.5};
    CHECK(threshold_gate(f, t2) < threshold_gate(f, t));
  }
}

TEST_CASE("constraint residual examples") {
  auto r = constraint_residuals(unit_gate(2), 0.7);
  CHECK(r[0] == Approx(0.3).margin(1e-15));
  auto b = GateParams::from_effective({1, 1}, 1.3, {0, 0}, 0.0);
  CHECK(constraint_residuals(b, 0.7)[0] == Approx(0.0).margin(1e-15));
  auto slack = GateParams::from_effective({1, 1}, 1.0, {100, 100}, 100.0);
  for (double v : constraint_residuals(slack, 0.7)) CHECK(v == 0.0);
  CHECK_THROWS_AS(constraint_residuals(unit_gate(2), 0.4), ValidationError);
}

TEST_CASE("gate parameter defaults") {
  auto g = GateParams::defaults(3);
  CHECK(g.arity() == 3);
  CHECK(g.bias == 1.0);
  for (double w : g.weights()) CHECK(w == Approx(1.0).margin(1e-12));
  for (double s : g.slacks()) CHECK(s == Approx(std::log(2.0)));
  auto e = GateParams::from_effective({0.26, 2.0}, 1.5, {0.0, 0.1}, 0.0);
  CHECK(e.weights()[0] == Approx(0.26).margin(1e-12));
  CHECK(e.weights()[1] == Approx(2.0).margin(1e-12));
  CHECK(e.slacks()[0] == 0.0);
  CHECK(e.slack_big() == 0.0);
  CHECK(softplus_inverse(softplus(0.3)) == Approx(0.3).margin(1e-12));
  CHECK(softplus(1000.0) == 1000.0);
  CHECK(softplus(-1000.0) >= 0.0);
}

TEST_CASE("operator properties over random draws") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    size_t n = 1 + rng() % 5;
    auto g = random_gate(rng, n);
    auto x = random_inputs(rng, n);
    double a = lnn_and(x, g), o = lnn_or(x, g);
    REQUIRE((a >= 0.0 && a <= 1.0));
    REQUIRE((o >= 0.0 && o <= 1.0));
    REQUIRE(o == 1.0 - lnn_and(complement(x), g));
    // Monotone in every input.
    size_t k = rng() % n;
    auto y = x;
    y[k] = std::min(1.0, y[k] + 0.1);
    REQUIRE(lnn_and(y, g) >= a);
    REQUIRE(lnn_or(y, g) >= o);
    double t = tnorm_and(x);
    REQUIRE((t >= 0.0 && t <= 1.0));
  }
}

TEST_CASE("Boolean corners with unit parameters") {
  for (size_t n = 1; n <= 4; ++n) {
    auto g = unit_gate(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<double> x(n);
      bool all = true, any = false;
      for (size_t k = 0; k < n; ++k) {
        x[k] = (mask >> k) & 1u;
        all &= x[k] == 1.0;
        any |= x[k] == 1.0;
      }
      CHECK(lnn_and(x, g) == double(all));
      CHECK(lnn_or(x, g) == double(any));
    }
  }
}

TEST_CASE("alpha semantics under satisfied constraints") {
  const double alpha = 0.7;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int sampled = 0;
  while (sampled < 1000) {
    // Binary gates without slack are feasible for large enough weights.
    std::vector<double> w = {4.0 + 6.0 * u(rng), 4.0 + 6.0 * u(rng)};
    double lo = alpha + (1 - alpha) * (w[0] + w[1]);
    double hi = (1 - alpha) + alpha * std::min(w[0], w[1]);
    if (lo > hi) continue;
    auto g = GateParams::from_effective(w, lo + (hi - lo) * u(rng), {0.0, 0.0}, 0.0);
    auto r = constraint_residuals(g, alpha);
    if (*std::max_element(r.begin(), r.end()) != 0.0) continue;
    ++sampled;
    std::vector<double> high = {alpha + (1 - alpha) * u(rng), alpha + (1 - alpha) * u(rng)};
    REQUIRE(lnn_and(high, g) >= alpha - 1e-12);
    size_t k = rng() % 2;
    std::vector<double> low = {1.0, 1.0};
    low[k] = (1 - alpha) * u(rng);
    REQUIRE(lnn_and(low, g) <= 1 - alpha + 1e-12);
    // Disjunction mirrors through De Morgan.
    REQUIRE(lnn_or(complement(high), g) <= 1 - alpha + 1e-12);
  }
}

TEST_CASE("manual score examples") {
  CHECK(manual_score({{0.7, 0.5}}, {{1.0}, {1.0, 1.0}}) == Approx(0.35));
  CHECK(manual_score({{0.7, 0.5}, {0.2}}, {{0.0, 0.0}, {1.0, 1.0, 1.0}}) == 0.0);
  double one = manual_score({{0.7, 0.5}}, {{1.0}, {0.9, 0.8}});
  double two = manual_score({{0.7, 0.5}, {0.7, 0.5}}, {{0.5, 0.5}, {0.9, 0.8, 0.9, 0.8}});
  CHECK(two == Approx(one).margin(1e-15));
  CHECK_THROWS_AS(manual_score({{0.7}}, {{1.0, 1.0}, {1.0}}), ValidationError);
}

TEST_CASE("graph evaluation examples") {
  SECTION("raw leaf") {
    ScoringGraph g(LogicMode::kLnn, 0.7);
    g.set_root(g.add_raw("prom"));
    CHECK(evaluate_graph(g, {{"prom", 0.8}}) == 0.8);
    CHECK_THROWS_WITH(evaluate_graph(g, {{"jacc", 0.8}}), Catch::Matchers::ContainsSubstring("prom"));
  }
  SECTION("conjunction of two thresholds") {
    ScoringGraph g(LogicMode::kLnn, 0.7);
    int a = g.add_threshold("jacc", ThresholdParams::from_theta(0.5));
    int b = g.add_threshold("ctx", ThresholdParams::from_theta(0.5));
    g.set_root(g.add_gate(NodeKind::kAnd, {a, b}, unit_gate(2)));
    double tl = 0.7 / (1.0 + std::exp(-0.2));
    CHECK(evaluate_graph(g, {{"jacc", 0.7}, {"ctx", 0.7}}) ==
          std::max(0.0, 1.0 - 2.0 * (1.0 - tl)));
    CHECK(evaluate_graph(g, {{"jacc", 0.7}, {"ctx", 0.7}}) == 0.0);
  }
  SECTION("t-norm ignores gate parameters") {
    ScoringGraph g(LogicMode::kTnorm, 0.7);
    int a = g.add_raw("x");
    int b = g.add_raw("y");
    g.set_root(g.add_gate(NodeKind::kAnd, {a, b}, GateParams::from_effective({3, 0.1}, 0.2, {0, 0}, 0)));
    CHECK(evaluate_graph(g, {{"x", 0.5}, {"y", 0.5}}) == 0.25);
  }
}

TEST_CASE("graph evaluation matches the reference scorer") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> features = {"f0", "f1", "f2", "f3"};
  for (auto mode : {LogicMode::kLnn, LogicMode::kTnorm, LogicMode::kManual}) {
    for (int i = 0; i < 300; ++i) {
      auto g = random_graph(rng, mode, features);
      elr::testing::ReferenceScorer ref(g);
      GraphEvaluator ev(g, features);
      for (int r = 0; r < 5; ++r) {
        auto x = random_inputs(rng, features.size());
        std::map<std::string, double> row;
        for (size_t k = 0; k < features.size(); ++k) row[features[k]] = x[k];
        double s = ev.forward(x);
        REQUIRE(s == Approx(ref.score(row)).margin(1e-12));
        REQUIRE(evaluate_graph(g, row) == s);
        if (mode != LogicMode::kManual) REQUIRE((s >= 0.0 && s <= 1.0));
      }
    }
  }
}

TEST_CASE("score backward pass matches central differences") {
  std::mt19937_64 rng(9);
  const std::vector<std::string> features = {"f0", "f1", "f2"};
  const double h = 1e-5;
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    auto mode = i % 2 ? LogicMode::kLnn : LogicMode::kTnorm;
    auto g = random_graph(rng, mode, features);
    auto x = random_inputs(rng, features.size());
    std::map<std::string, double> row;
    for (size_t k = 0; k < features.size(); ++k) row[features[k]] = x[k];
    elr::testing::ReferenceScorer ref(g);
    ref.score(row);
    if (ref.min_kink_distance() < 1e-3) continue;
    GraphEvaluator ev(g, features);
    ev.forward(x);
    std::vector<double> grad(g.params().size(), 0.0);
    ev.backward(1.0, grad);
    for (size_t p = 0; p < grad.size(); ++p) {
      double orig = g.params()[p];
      g.mutable_params()[p] = orig + h;
      double up = ref.score(row);
      g.mutable_params()[p] = orig - h;
      double down = ref.score(row);
      g.mutable_params()[p] = orig;
      double fd = (up - down) / (2 * h);
      double scale = std::max({std::abs(fd), std::abs(grad[p]), 1e-3});
      REQUIRE(std::abs(fd - grad[p]) / scale < 1e-4);
    }
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("unused feature columns do not change scores") {
  std::mt19937_64 rng(13);
  const std::vector<std::string> used = {"f0", "f1", "f2"};
  std::vector<std::string> columns = used;
  columns.push_back("unused");
  for (int i = 0; i < 200; ++i) {
    auto g = random_graph(rng, LogicMode::kLnn, used);
    GraphEvaluator ev(g, columns);
    auto x = random_inputs(rng, columns.size());
    double s = ev.forward(x);
    x.back() *= 0.37;
    CHECK(ev.forward(x) == s);
  }
}

TEST_CASE("trainable mask by mode") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> features = {"a", "b"};
  for (auto mode : {LogicMode::kLnn, LogicMode::kTnorm, LogicMode::kManual}) {
    auto g = random_graph(rng, mode, features);
    auto mask = g.trainable_mask();
    auto names = g.param_names();
    REQUIRE(mask.size() == g.params().size());
    for (size_t p = 0; p < mask.size(); ++p) {
      bool gamma = names[p].find("gamma") != std::string::npos;
      if (mode == LogicMode::kLnn) CHECK(mask[p]);
      if (mode == LogicMode::kTnorm) CHECK(mask[p] == gamma);
      if (mode == LogicMode::kManual) CHECK_FALSE(mask[p]);
    }
  }
}

TEST_CASE("graph checkpoint round-trip") {
  std::mt19937_64 rng(31);
  const std::vector<std::string> features = {"f0", "f1", "f2"};
  for (auto mode : {LogicMode::kLnn, LogicMode::kTnorm, LogicMode::kManual}) {
    for (int i = 0; i < 50; ++i) {
      auto g = random_graph(rng, mode, features);
      auto back = graph_from_json(graph_to_json(g));
      REQUIRE(back.mode() == g.mode());
      REQUIRE(back.alpha() == g.alpha());
      REQUIRE(back.root() == g.root());
      REQUIRE(std::equal(back.params().begin(), back.params().end(), g.params().begin(),
                         g.params().end()));
      REQUIRE(graph_to_json(back) == graph_to_json(g));
      GraphEvaluator a(g, features), b(back, features);
      auto x = random_inputs(rng, features.size());
      REQUIRE(a.forward(x) == b.forward(x));
    }
  }
  CHECK_THROWS_AS(graph_from_json("{}"), ValidationError);
}

TEST_CASE("residual_sum and its gradient") {
  ScoringGraph g(LogicMode::kLnn, 0.7);
  int a = g.add_raw("x"), b = g.add_raw("y");
  g.set_root(g.add_gate(NodeKind::kAnd, {a, b}, unit_gate(2)));
  CHECK(g.residual_sum() == Approx(0.3));

  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    auto r = random_graph(rng, LogicMode::kLnn, {"x", "y"});
    std::vector<double> grad(r.params().size(), 0.0);
    residual_gradient(r, 1.0, grad);
    for (size_t p = 0; p < grad.size(); ++p) {
      double orig = r.params()[p];
      r.mutable_params()[p] = orig + 1e-6;
      double up = r.residual_sum();
      r.mutable_params()[p] = orig - 1e-6;
      double down = r.residual_sum();
      r.mutable_params()[p] = orig;
      double fd = (up - down) / 2e-6;
      // Skip hinge kinks: one-sided slopes disagree there.
      double fwd = (up - r.residual_sum()) / 1e-6;
      double bwd = (r.residual_sum() - down) / 1e-6;
      if (std::abs(fwd - bwd) > 1e-3) continue;
      CHECK(grad[p] == Approx(fd).margin(1e-6));
    }
  }
}
