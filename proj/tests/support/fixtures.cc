#include "fixtures.h"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace elr::testing {

TempDir::TempDir() {
  std::random_device rd;
  auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto p = base / ("elr-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(p)) {
      path_ = p;
      return;
    }
  }
  throw std::runtime_error("cannot create temp directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset toy_dataset() {
  Mention m1{"m1", "Cameron", "t1", {"m2"}, "Person"};
  Mention m2{"m2", "Titanic", "t1", {"m1"}, "Work"};

  CandidateEntity james{"James_Cameron", "James_Cameron",
                        "Canadian film director of Titanic", {"Person", "Agent"}, 30, {}, {}};
  CandidateEntity roderick{"Roderick_Cameron", "Roderick_Cameron",
                           "Australian politician", {"Person"}, 10, {}, {}};
  CandidateEntity ship{"Titanic", "Titanic", "British passenger liner", {"Ship"}, 44, {}, {}};
  CandidateEntity film{"Titanic_(1997_film)", "Titanic_(1997_film)",
                       "1997 film directed by James Cameron", {"Work", "Film"}, 52, {}, {}};

  Dataset ds;
  ds.name = "toy";
  ds.instances.push_back({m1, {james, roderick}, {1, 0}});
  ds.instances.push_back({m2, {ship, film}, {0, 1}});
  ds.mentions[m1.id] = m1;
  ds.mentions[m2.id] = m2;
  return ds;
}

}  // namespace elr::testing
