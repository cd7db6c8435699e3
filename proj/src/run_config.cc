#include "synthehr/run_config.h"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "synthehr/error.h"

namespace synthehr {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string &msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

nlohmann::json yaml_to_json(const YAML::Node &n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
      auto a = nlohmann::json::array();
      for (const auto &x : n) a.push_back(yaml_to_json(x));
      return a;
    }
    case YAML::NodeType::Map: {
      auto o = nlohmann::json::object();
      for (const auto &kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: break;
  }
  if (n.Tag() == "!") return n.as<std::string>();  // quoted
  long long i;
  double d;
  bool b;
  if (YAML::convert<long long>::decode(n, i)) return i;
  if (YAML::convert<double>::decode(n, d)) return d;
  if (YAML::convert<bool>::decode(n, b)) return b;
  return n.as<std::string>();
}

fs::path resolve(const fs::path &base, const std::string &p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T scalar(const YAML::Node &n, const std::string &what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception &) {
    bad("config: bad value for '" + what + "'");
  }
}

std::vector<std::string> string_list(const YAML::Node &n, const std::string &what) {
  if (!n.IsSequence()) bad("config: '" + what + "' must be a list");
  std::vector<std::string> out;
  for (const auto &x : n) out.push_back(scalar<std::string>(x, what));
  return out;
}

const std::set<std::string> kModelKeys = {"id",          "endpoint",  "request_params",
                                          "timeout_ms",  "max_retries", "backoff_ms",
                                          "parallelism", "token_env"};

ModelConfig parse_model(const YAML::Node &n, std::optional<int> default_parallelism) {
  if (!n.IsMap()) bad("config: each model must be a mapping");
  for (const auto &kv : n) {
    const auto key = kv.first.as<std::string>();
    if (key == "token" || key == "api_key" || key == "api_token") {
      bad("config: model '" + key +
          "' is not accepted; put the token in an environment variable named by token_env");
    }
    if (!kModelKeys.count(key)) bad("config: unknown model key '" + key + "'");
  }
  ModelConfig m;
  if (!n["id"]) bad("config: model without id");
  m.model_id = scalar<std::string>(n["id"], "id");
  m.endpoint_url = n["endpoint"] ? scalar<std::string>(n["endpoint"], "endpoint") : "";
  if (m.endpoint_url.empty()) bad("config: model '" + m.model_id + "' has no endpoint");
  if (n["request_params"]) {
    m.request_params = yaml_to_json(n["request_params"]);
    if (!m.request_params.is_object()) bad("config: request_params must be a mapping");
  }
  if (n["timeout_ms"]) m.timeout = std::chrono::milliseconds(scalar<long>(n["timeout_ms"], "timeout_ms"));
  if (n["max_retries"]) m.max_retries = scalar<int>(n["max_retries"], "max_retries");
  if (n["backoff_ms"]) m.backoff = std::chrono::milliseconds(scalar<long>(n["backoff_ms"], "backoff_ms"));
  if (n["parallelism"]) {
    m.parallelism = scalar<int>(n["parallelism"], "parallelism");
  } else if (default_parallelism) {
    m.parallelism = *default_parallelism;
  }
  if (n["token_env"]) m.token_env = scalar<std::string>(n["token_env"], "token_env");
  m.validate();
  return m;
}

}  // namespace

RunConfig RunConfig::from_yaml_string(const std::string &yaml, const fs::path &base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception &e) {
    bad(std::string("config: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) bad("config: top level must be a mapping");
  static const std::set<std::string> known = {"corpus", "annotations", "grid",    "output",
                                              "seed",   "parallelism", "markers", "models"};
  for (const auto &kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) bad("config: unknown key '" + key + "'");
  }
  if (root["corpus"]) c.corpus = resolve(base_dir, scalar<std::string>(root["corpus"], "corpus"));
  if (root["annotations"]) {
    c.annotations = resolve(base_dir, scalar<std::string>(root["annotations"], "annotations"));
  }
  if (root["grid"]) c.grid_override = resolve(base_dir, scalar<std::string>(root["grid"], "grid"));
  if (root["output"]) c.output = resolve(base_dir, scalar<std::string>(root["output"], "output"));
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["parallelism"]) {
    c.parallelism = scalar<int>(root["parallelism"], "parallelism");
    if (*c.parallelism < 1) bad("config: parallelism must be >= 1");
  }
  if (const auto m = root["markers"]) {
    if (m["refusal"]) c.markers.refusal = string_list(m["refusal"], "markers.refusal");
    if (m["disclaimer"]) c.markers.disclaimer = string_list(m["disclaimer"], "markers.disclaimer");
    if (m["refusal_window"]) {
      c.markers.refusal_window = scalar<std::size_t>(m["refusal_window"], "markers.refusal_window");
    }
    if (m["repetition_min_words"]) {
      c.markers.repetition_min_words =
          scalar<std::size_t>(m["repetition_min_words"], "markers.repetition_min_words");
    }
  }
  if (const auto models = root["models"]) {
    if (!models.IsSequence()) bad("config: models must be a list");
    std::set<std::string> ids;
    for (const auto &n : models) {
      auto m = parse_model(n, c.parallelism);
      if (!ids.insert(m.model_id).second) bad("config: duplicate model id '" + m.model_id + "'");
      c.models.push_back(std::move(m));
    }
  }
  return c;
}

RunConfig RunConfig::from_yaml_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return from_yaml_string(buf.str(), base);
}

ParameterGrid RunConfig::grid() const {
  return grid_override ? ParameterGrid::from_yaml_file(*grid_override)
                       : ParameterGrid::standard();
}

fs::path RunConfig::corpus_dir() const {
  if (!corpus) bad("no corpus path; set 'corpus' in the config or pass --corpus");
  return *corpus;
}

fs::path RunConfig::annotations_dir() const {
  return annotations ? *annotations : corpus_dir() / "annotations";
}

fs::path RunConfig::output_dir() const { return output ? *output : corpus_dir() / "reports"; }

std::vector<ModelConfig> RunConfig::select_models(const std::vector<std::string> &ids) const {
  if (ids.empty()) {
    if (models.empty()) bad("no models configured; pass --models stub for the offline model");
    return models;
  }
  std::vector<ModelConfig> out;
  for (const auto &id : ids) {
    const auto it = std::find_if(models.begin(), models.end(),
                                 [&](const ModelConfig &m) { return m.model_id == id; });
    if (it != models.end()) {
      out.push_back(*it);
    } else if (id == "stub" || id.rfind("stub-", 0) == 0) {
      ModelConfig m;
      m.model_id = id;
      m.endpoint_url = "stub";
      if (parallelism) m.parallelism = *parallelism;
      m.validate();
      out.push_back(std::move(m));
    } else {
      bad("model '" + id + "' is not configured");
    }
  }
  return out;
}

}  // namespace synthehr
