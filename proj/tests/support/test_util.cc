#include "test_util.h"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace synthehr::testing {

ParameterGrid small_grid() {
  return ParameterGrid::from_yaml_string(
      "age: [{key: younger-25, text: '25'}]\n"
      "gender: [female]\n"
      "sexuality: [null]\n"
      "diagnosis: [{key: bipolar-i, text: Bipolar I Disorder}]\n"
      "medication: [null]\n"
      "risks: [null]\n");
}

ParameterGrid sixteen_grid() {
  return ParameterGrid::from_yaml_string(
      "sexuality: [null]\n"
      "ethnicity: [White British]\n"
      "diagnosis: [{key: bipolar-i, text: Bipolar I Disorder}]\n"
      "medication: [null]\n"
      "risks: [null]\n");
}

TempDir::TempDir(const std::string &tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("synthehr-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace synthehr::testing
