#ifndef ELR_TESTS_SUPPORT_FIXTURES_H_
#define ELR_TESTS_SUPPORT_FIXTURES_H_

#include <filesystem>
#include <string>

#include "elr/corpus.h"

namespace elr::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string file(const std::string &name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_text(const std::string &path, const std::string &content);
std::string read_text(const std::string &path);

// The two-mention "Cameron" / "Titanic" example: each mention has two
// candidates, the first candidate of m1 and the second of m2 are gold.
Dataset toy_dataset();

}  // namespace elr::testing

#endif  // ELR_TESTS_SUPPORT_FIXTURES_H_
