#ifndef SYNTHEHR_TESTS_GOLD_EVAL_H_
#define SYNTHEHR_TESTS_GOLD_EVAL_H_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "synthehr/sfl.h"

namespace synthehr::testing {

struct LayerScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
  }
};

struct AnchorResult {
  std::string description;
  bool correct = false;
};

struct GoldReport {
  std::array<LayerScore, 3> layers;  // indexed by Layer
  std::vector<AnchorResult> anchors;
  std::vector<std::string> misses;   // human-readable FN / FP lines
};

// Scores the annotator against tests/fixtures/gold.json. Gold spans are
// located by their unique context string; the trigger is searched inside it.
//  process:  system verb heads inside a process region; a match overlaps the
//            gold trigger and carries the same label.
//  modality: the system clause contains the gold trigger, same leaf label.
//  theme:    the system span overlaps the gold trigger, same label.
GoldReport evaluate_gold(const Annotator &annotator, const std::filesystem::path &fixtures);

std::string read_text(const std::filesystem::path &path);

}  // namespace synthehr::testing

#endif  // SYNTHEHR_TESTS_GOLD_EVAL_H_
