#include <catch_amalgamated.hpp>

#include <cctype>
#include <random>
#include <set>

#include "elr/error.h"
#include "elr/simfeatures.h"
#include "fixtures.h"
#include "synthetic.h"

using namespace elr;
using Catch::Approx;

namespace {

// Reference implementations used as oracles.

double jaccard_oracle(const std::string &a, const std::string &b) {
  std::set<char> sa, sb, both, either;
  for (char c : a) sa.insert(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (char c : b) sb.insert(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (sa.empty() && sb.empty()) return 1.0;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::inserter(both, both.end()));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(either, either.end()));
  return static_cast<double>(both.size()) / either.size();
}

// Plain recursion with memoisation on (i, j).
int edit_oracle(const std::string &a, const std::string &b, size_t i, size_t j,
                std::vector<std::vector<int>> &memo) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  int &m = memo[i][j];
  if (m >= 0) return m;
  int sub = edit_oracle(a, b, i + 1, j + 1, memo) + (a[i] != b[j]);
  int del = edit_oracle(a, b, i + 1, j, memo) + 1;
  int ins = edit_oracle(a, b, i, j + 1, memo) + 1;
  return m = std::min({sub, del, ins});
}

double lev_oracle(const std::string &a, const std::string &b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
  return 1.0 - static_cast<double>(edit_oracle(a, b, 0, 0, memo)) /
                   static_cast<double>(std::max(a.size(), b.size()));
}

double partial_oracle(std::string a, std::string b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return 1.0;
  double best = 0.0;
  for (size_t s = 0; s + a.size() <= b.size(); ++s) {
    best = std::max(best, lev_oracle(a, b.substr(s, a.size())));
  }
  return best;
}

std::string random_string(std::mt19937_64 &rng, size_t max_len, const std::string &alphabet) {
  std::string s(rng() % (max_len + 1), ' ');
  for (auto &c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

}  // namespace

TEST_CASE("char_jaccard reproduces the toy similarities") {
  CHECK(char_jaccard("Cameron", "James_Cameron") == Approx(0.7).margin(1e-15));
  CHECK(char_jaccard("Cameron", "Roderick_Cameron") == Approx(7.0 / 11.0).margin(1e-15));
  CHECK(char_jaccard("Titanic", "Titanic") == 1.0);
  CHECK(char_jaccard("Titanic", "Titanic_(1997_film)") == Approx(5.0 / 14.0).margin(1e-15));
  CHECK(char_jaccard("", "") == 1.0);
  CHECK(char_jaccard("", "a") == 0.0);
}

TEST_CASE("lev_sim examples") {
  CHECK(lev_sim("Titanic", "Titanic") == 1.0);
  CHECK(lev_sim("abc", "") == 0.0);
  CHECK(lev_sim("Cameron", "Camerons") == Approx(0.875));
  CHECK(lev_sim("", "") == 1.0);
  CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("jaro_winkler examples") {
  CHECK(jaro_winkler("MARTHA", "MARHTA") == Approx(0.9611).margin(1e-4));
  CHECK(jaro_winkler("", "abc") == 0.0);
  CHECK(jaro_winkler("", "") == 1.0);
  CHECK(jaro_winkler("DIXON", "DICKSONX") == Approx(0.8133).margin(1e-4));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto x = random_string(rng, 12, "abcdef");
    CHECK(jaro_winkler(x, x) == 1.0);
  }
}

TEST_CASE("partial_ratio examples") {
  CHECK(partial_ratio("Titanic", "Titanic_(1997_film)") == 1.0);
  CHECK(partial_ratio("Titanic_(1997_film)", "Titanic") == 1.0);
  CHECK(partial_ratio("abc", "zxbcz") == Approx(2.0 / 3.0));
  CHECK(partial_ratio("", "abc") == 1.0);
}

TEST_CASE("string similarities agree with reference implementations") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    auto a = random_string(rng, 10, "abcAB_ ");
    auto b = random_string(rng, 14, "abcAB_ ");
    CHECK(char_jaccard(a, b) == Approx(jaccard_oracle(a, b)).margin(1e-15));
    CHECK(lev_sim(a, b) == Approx(lev_oracle(a, b)).margin(1e-15));
    CHECK(partial_ratio(a, b) == Approx(partial_oracle(a, b)).margin(1e-15));
  }
}

TEST_CASE("similarities are bounded and symmetric") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 5000; ++i) {
    auto a = random_string(rng, 16, "abcdefgXYZ_(0) ");
    auto b = random_string(rng, 16, "abcdefgXYZ_(0) ");
    for (double v : {char_jaccard(a, b), lev_sim(a, b), jaro_winkler(a, b), partial_ratio(a, b)}) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
    CHECK(char_jaccard(a, b) == char_jaccard(b, a));
    CHECK(lev_sim(a, b) == lev_sim(b, a));
    CHECK(partial_ratio(a, b) == partial_ratio(b, a));
  }
}

TEST_CASE("minmax_rescale") {
  CHECK(minmax_rescale(std::vector<double>{2, 4, 6}) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(minmax_rescale(std::vector<double>{5, 5}) == std::vector<double>{1.0, 1.0});
  CHECK(minmax_rescale(std::vector<double>{0.3}) == std::vector<double>{1.0});
  CHECK_THROWS_AS(minmax_rescale(std::vector<double>{1.0, std::nan("")}), ValidationError);
  CHECK_THROWS_AS(minmax_rescale(std::vector<double>{1.0, INFINITY}), ValidationError);
  CHECK_THROWS_AS(minmax_rescale(std::vector<double>{}), ValidationError);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng() % 8);
    for (auto &x : v) x = u(rng);
    auto r = minmax_rescale(v);
    auto imax = std::max_element(v.begin(), v.end()) - v.begin();
    auto imin = std::min_element(v.begin(), v.end()) - v.begin();
    CHECK(r[imax] == 1.0);
    if (v[imax] > v[imin]) CHECK(r[imin] == 0.0);
    for (double x : r) CHECK((x >= 0.0 && x <= 1.0));
  }
}

TEST_CASE("prominence rescales in-degrees") {
  auto ds = elr::testing::toy_dataset();
  CHECK(prominence_score(ds.instances[0]) == std::vector<double>{1.0, 0.0});
  CHECK(prominence_score(ds.instances[1]) == std::vector<double>{0.0, 1.0});
  LabeledInstance single = ds.instances[0];
  single.candidates.resize(1);
  single.labels.resize(1);
  CHECK(prominence_score(single) == std::vector<double>{1.0});
}

TEST_CASE("type_score") {
  Mention m{"m", "x", "t", {}, "Person"};
  CandidateEntity e;
  e.domains = {"Person", "Agent"};
  CHECK(type_score(m, e) == 1.0);
  e.domains.clear();
  CHECK(type_score(m, e) == 0.0);
  m.type.reset();
  e.domains = {"Person"};
  CHECK(type_score(m, e) == 0.0);
}

TEST_CASE("context_score") {
  Mention ctx{"c", "Cameron", "t", {"m"}, std::nullopt};
  Mention m{"m", "Titanic", "t", {"c"}, std::nullopt};
  std::map<std::string, Mention> all{{"c", ctx}, {"m", m}};
  CandidateEntity ship, film, bare;
  ship.id = "ship";
  ship.description = "ship";
  film.id = "film";
  film.description = "film directed by James Cameron";
  bare.id = "bare";
  LabeledInstance inst{m, {ship, film}, {0, 1}};

  SECTION("the description quoting the context wins") {
    CHECK(partial_ratio("Cameron", "ship") < 0.3);
    CHECK(context_score(inst, 0, all) == 0.0);
    CHECK(context_score(inst, 1, all) == 1.0);
  }
  SECTION("missing description scores the minimum") {
    inst.candidates.push_back(bare);
    inst.labels.push_back(0);
    auto s = context_scores(inst, all);
    CHECK(s[2] == 0.0);
    CHECK(s[1] == 1.0);
  }
  SECTION("no context mentions gives all ones") {
    inst.mention.context_ids.clear();
    CHECK(context_scores(inst, all) == std::vector<double>{1.0, 1.0});
  }
  SECTION("unknown context id is an error") {
    inst.mention.context_ids = {"ghost"};
    CHECK_THROWS_WITH(context_scores(inst, all), Catch::Matchers::ContainsSubstring("ghost"));
  }
}

TEST_CASE("feature table on the toy dataset") {
  auto ds = elr::testing::toy_dataset();
  auto table = build_feature_table(ds, FeatureCatalog::defaults().restrict_to({"jacc", "prom"}));
  REQUIRE(table.size() == 4);
  CHECK(table.value("m1", "James_Cameron", "jacc") == Approx(0.7).margin(1e-15));
  CHECK(table.value("m1", "Roderick_Cameron", "jacc") == Approx(7.0 / 11).margin(1e-15));
  CHECK(table.value("m2", "Titanic", "jacc") == 1.0);
  CHECK(table.value("m2", "Titanic_(1997_film)", "jacc") == Approx(5.0 / 14).margin(1e-15));
  CHECK(table.value("m1", "James_Cameron", "prom") == 1.0);
  CHECK(table.value("m1", "Roderick_Cameron", "prom") == 0.0);
  CHECK(table.value("m2", "Titanic", "prom") == 0.0);
  CHECK(table.value("m2", "Titanic_(1997_film)", "prom") == 1.0);
}

TEST_CASE("feature table edge cases") {
  auto catalog = FeatureCatalog::defaults();
  SECTION("empty dataset") {
    Dataset empty;
    CHECK(build_feature_table(empty, catalog.restrict_to({"jacc"})).size() == 0);
  }
  SECTION("external column is echoed") {
    auto ds = elr::testing::make_synthetic(
        {.mentions = 10, .candidates = 4, .seed = 2, .oracle_column = "blinkscore"});
    FeatureCatalog c;
    c.add("blinkscore", FeatureSpec{FeatureKind::kExternal, "blinkscore", {}});
    auto table = build_feature_table(ds, c);
    for (const auto &inst : ds.instances) {
      for (const auto &e : inst.candidates) {
        CHECK(table.value(inst.mention.id, e.id, "blinkscore") ==
              e.external_scores.at("blinkscore"));
      }
    }
  }
  SECTION("missing external column reads 0 with a warning") {
    std::vector<std::string> warnings;
    auto table = build_feature_table(elr::testing::toy_dataset(),
                                     catalog.restrict_to({"blink"}), {.warnings = &warnings});
    CHECK(table.value("m1", "James_Cameron", "blink") == 0.0);
    CHECK_FALSE(warnings.empty());
  }
  SECTION("box feature without embeddings is an error") {
    CHECK_THROWS_AS(build_feature_table(elr::testing::toy_dataset(), catalog.restrict_to({"box"})),
                    ValidationError);
  }
}

TEST_CASE("feature table is pure, parallel-safe and CSV-exact") {
  auto ds = elr::testing::make_synthetic({.mentions = 60, .candidates = 6, .seed = 9,
                                          .context_signal = 0.5});
  auto catalog = FeatureCatalog::defaults().restrict_to(
      {"jacc", "lev", "jw", "pr", "ctx", "type", "prom"});
  auto a = build_feature_table(ds, catalog);
  auto b = build_feature_table(ds, catalog);
  auto c = build_feature_table(ds, catalog, {.jobs = 4});
  CHECK(a == b);
  CHECK(a == c);
  for (const auto &row : a.rows()) {
    for (double v : row.values) CHECK((v >= 0.0 && v <= 1.0));
  }
  auto csv = feature_table_to_csv(a);
  CHECK(csv.rfind("mention_id,candidate_id,", 0) == 0);
  CHECK(feature_table_from_csv(csv) == a);
  elr::testing::TempDir dir;
  save_feature_table(a, dir.file("f.csv"));
  CHECK(load_feature_table(dir.file("f.csv")) == a);
}

TEST_CASE("catalog") {
  auto c = FeatureCatalog::defaults();
  for (const char *n : {"jacc", "lev", "jw", "pr", "ctx", "type", "prom", "spacy", "blink", "bert",
                        "box"}) {
    CHECK(c.contains(n));
  }
  CHECK_THROWS_AS(c.add("jacc", FeatureSpec{}), ValidationError);
  CHECK_THROWS_AS(c.restrict_to({"nope"}), ValidationError);
  CHECK(feature_kind_from_name("jw") == FeatureKind::kJw);
  CHECK_THROWS_AS(feature_kind_from_name("xyz"), ValidationError);
}
