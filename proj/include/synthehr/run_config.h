#ifndef SYNTHEHR_RUN_CONFIG_H_
#define SYNTHEHR_RUN_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synthehr/generation.h"
#include "synthehr/grid.h"

namespace synthehr {

// Settings shared by the CLI subcommands, read from a YAML file:
//
//   corpus: data/corpus            # required except for `grid`
//   annotations: data/annotations  # default <corpus>/annotations
//   grid: grid.yaml                # optional override of the value lists
//   output: reports                # default <corpus>/reports
//   seed: 7
//   parallelism: 4                 # default per-model request limit
//   markers: {refusal: [...], disclaimer: [...], refusal_window: 300}
//   models:
//     - id: llama
//       endpoint: https://host/v1/chat/completions   # or "stub"
//       request_params: {model: llama-3-70b, temperature: 0.7, max_tokens: 2048}
//       timeout_ms: 120000
//       max_retries: 3
//       backoff_ms: 500
//       parallelism: 4
//       token_env: SYNTHEHR_API_TOKEN
//
// Relative paths resolve against the file's directory. Tokens never appear in
// the file; each model names the environment variable holding its token.
struct RunConfig {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> grid_override;
  std::optional<std::filesystem::path> output;
  std::uint64_t seed = 0;
  std::optional<int> parallelism;
  QualityMarkers markers;
  std::vector<ModelConfig> models;

  // Throws kInvalidConfig.
  static RunConfig from_yaml_string(const std::string &yaml,
                                    const std::filesystem::path &base_dir = ".");
  static RunConfig from_yaml_file(const std::filesystem::path &path);

  ParameterGrid grid() const;
  // Throws kInvalidConfig when no corpus path is set.
  std::filesystem::path corpus_dir() const;
  std::filesystem::path annotations_dir() const;
  std::filesystem::path output_dir() const;

  // Configured models by id; an id with no entry named "stub" or
  // "stub-<anything>" becomes an offline stub model. Throws kInvalidConfig for
  // other unknown ids. An empty list selects every configured model.
  std::vector<ModelConfig> select_models(const std::vector<std::string> &ids) const;
};

}  // namespace synthehr

#endif  // SYNTHEHR_RUN_CONFIG_H_
