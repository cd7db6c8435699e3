#include "synthehr/review_service.h"

#include <map>

#include "httplib.h"
#include "synthehr/analytics.h"
#include "synthehr/error.h"

namespace synthehr {

namespace {

using nlohmann::json;

// byte offset -> UTF-16 code unit offset, for browser clients.
std::vector<std::size_t> utf16_offsets(std::string_view text) {
  std::vector<std::size_t> out(text.size() + 1, 0);
  std::size_t units = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    out[i] = units;
    const auto c = static_cast<unsigned char>(text[i]);
    if ((c & 0xC0) == 0x80) continue;  // continuation byte
    units += (c >= 0xF0) ? 2 : 1;
  }
  out[text.size()] = units;
  return out;
}

json span_json(const Span &s, const std::vector<std::size_t> &u16) {
  const auto clamp = [&](std::size_t i) { return u16[std::min(i, u16.size() - 1)]; };
  return {{"start", s.begin}, {"end", s.end}, {"u16_start", clamp(s.begin)}, {"u16_end", clamp(s.end)}};
}

template <typename A>
json annotation_json(const std::string &doc_key, Layer layer, std::size_t index, const A &a,
                     const std::vector<std::size_t> &u16) {
  json j = span_json(a.span, u16);
  j["id"] = annotation_id(doc_key, layer, index);
  j["layer"] = layer_name(layer);
  j["label"] = a.label_name();
  j["effective_label"] = effective_label(a);
  j["trigger"] = a.trigger;
  j["status"] = review_status_name(a.review.status);
  j["relabel"] = a.review.relabel ? json(*a.review.relabel) : json(nullptr);
  return j;
}

struct StatusCounts {
  std::map<ReviewStatus, std::size_t> by_status;
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto &[s, c] : by_status) n += c;
    return n;
  }
  std::size_t of(ReviewStatus s) const {
    const auto it = by_status.find(s);
    return it == by_status.end() ? 0 : it->second;
  }
  json to_json() const {
    json j = json::object();
    for (auto s : {ReviewStatus::kAuto, ReviewStatus::kAccepted, ReviewStatus::kRejected,
                   ReviewStatus::kRelabeled}) {
      j[std::string(review_status_name(s))] = of(s);
    }
    return j;
  }
};

std::map<Layer, StatusCounts> count_statuses(const AnnotationSet &set) {
  std::map<Layer, StatusCounts> out;
  out[Layer::kProcess];
  out[Layer::kModality];
  out[Layer::kTheme];
  for (const auto &a : set.processes) ++out[Layer::kProcess].by_status[a.review.status];
  for (const auto &a : set.modalities) ++out[Layer::kModality].by_status[a.review.status];
  for (const auto &a : set.themes) ++out[Layer::kTheme].by_status[a.review.status];
  return out;
}

json error_json(const Error &e) {
  return {{"error", error_code_name(e.code())}, {"message", e.what()}};
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownAnnotation:
    case ErrorCode::kUnknownBatch: return 404;
    case ErrorCode::kInvalidLabel: return 422;
    case ErrorCode::kTokenConflict: return 409;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kUnknownDimension: return 400;
    default: return 500;
  }
}

ReviewService::ReviewService(const CorpusStore &corpus, AnnotationStore &annotations,
                             ServiceOptions options)
    : corpus_(corpus), annotations_(annotations), options_(std::move(options)) {}

ReviewService::~ReviewService() { stop(); }

json ReviewService::list_tasks(const std::string &batch_id, const std::string &status) const {
  if (status != "pending" && status != "all") {
    throw Error(ErrorCode::kInvalidArgument, "status must be 'pending' or 'all'");
  }
  const auto batch = annotations_.batch(batch_id);
  json tasks = json::array();
  for (const auto &key : batch.keys) {
    const auto k = to_string(key);
    AnnotationSet set;
    if (annotations_.contains(k)) set = annotations_.get(k);
    const auto counts = count_statuses(set);
    std::size_t pending = 0;
    json by_layer = json::object();
    for (const auto &[layer, c] : counts) {
      by_layer[std::string(layer_name(layer))] = c.to_json();
      pending += c.of(ReviewStatus::kAuto);
    }
    if (status == "pending" && pending == 0) continue;
    tasks.push_back({{"doc_key", k},
                     {"batch", batch_id},
                     {"model", key.model},
                     {"genre", genre_code(key.genre)},
                     {"story_id", key.story_id},
                     {"pending", pending},
                     {"counts", std::move(by_layer)}});
  }
  return {{"batch", batch_id}, {"status", status}, {"tasks", std::move(tasks)}};
}

json ReviewService::document(const std::string &doc_key) const {
  const auto key = parse_doc_key(doc_key);
  if (!key) throw Error(ErrorCode::kNotFound, "no document '" + doc_key + "'");
  const auto record = corpus_.get(*key);  // kNotFound
  AnnotationSet set;
  if (annotations_.contains(doc_key)) set = annotations_.get(doc_key);
  const auto u16 = utf16_offsets(record.text);

  json j = to_json(record, corpus_.grid());
  j["doc_key"] = doc_key;
  j["story"] = corpus_.grid().render_story(record.parameters);
  json sentences = json::array();
  for (std::size_t i = 0; i < set.sentences.size(); ++i) {
    auto s = span_json(set.sentences[i].span, u16);
    s["index"] = i;
    s["heading"] = set.sentences[i].kind == SentenceKind::kHeading;
    sentences.push_back(std::move(s));
  }
  json clauses = json::array();
  for (std::size_t i = 0; i < set.clauses.size(); ++i) {
    auto c = span_json(set.clauses[i].span, u16);
    c["index"] = i;
    c["sentence"] = set.clauses[i].sentence;
    clauses.push_back(std::move(c));
  }
  json anns = json::array();
  for (std::size_t i = 0; i < set.processes.size(); ++i) {
    auto a = annotation_json(doc_key, Layer::kProcess, i, set.processes[i], u16);
    a["clause"] = set.processes[i].clause;
    a["agent_role"] = agent_role_name(set.processes[i].agent_role);
    anns.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < set.modalities.size(); ++i) {
    auto a = annotation_json(doc_key, Layer::kModality, i, set.modalities[i], u16);
    a["clause"] = set.modalities[i].clause;
    anns.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < set.themes.size(); ++i) {
    auto a = annotation_json(doc_key, Layer::kTheme, i, set.themes[i], u16);
    a["sentence"] = set.themes[i].sentence;
    anns.push_back(std::move(a));
  }
  j["sentences"] = std::move(sentences);
  j["clauses"] = std::move(clauses);
  j["annotations"] = std::move(anns);
  json labels = json::object();
  for (auto l : {Layer::kProcess, Layer::kModality, Layer::kTheme}) {
    json v = json::array();
    for (auto s : layer_labels(l)) v.push_back(s);
    labels[std::string(layer_name(l))] = std::move(v);
  }
  j["labels"] = std::move(labels);
  return j;
}

json ReviewService::decide(const std::string &annotation_id, const json &body, bool *replayed) {
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "body must be a JSON object");
  Decision d;
  std::string reviewer;
  std::optional<std::string> token;
  try {
    const auto kind = parse_decision_kind(body.at("decision").get<std::string>());
    if (!kind) throw Error(ErrorCode::kInvalidArgument, "decision must be accept, reject or relabel");
    d.kind = *kind;
    if (body.contains("label") && !body["label"].is_null()) d.label = body["label"].get<std::string>();
    reviewer = body.at("reviewer").get<std::string>();
    if (body.contains("token") && !body["token"].is_null()) token = body["token"].get<std::string>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad decision body: ") + e.what());
  }
  const auto out = annotations_.apply_decision(annotation_id, d, reviewer, token);
  if (replayed) *replayed = out.replayed;
  auto j = out.to_json();
  j.erase("replayed");  // a replay answers exactly like the original
  return j;
}

json ReviewService::progress(const std::string &batch_id) const {
  const auto batch = annotations_.batch(batch_id);
  struct Cell {
    std::size_t documents = 0, documents_done = 0, total = 0, pending = 0, relabeled = 0;
  };
  std::map<Column, Cell> cells;
  for (const auto &key : batch.keys) {
    auto &c = cells[{key.model, key.genre}];
    ++c.documents;
    const auto k = to_string(key);
    if (!annotations_.contains(k)) continue;
    std::size_t pending = 0;
    for (const auto &[layer, sc] : count_statuses(annotations_.get(k))) {
      c.total += sc.total();
      pending += sc.of(ReviewStatus::kAuto);
      c.relabeled += sc.of(ReviewStatus::kRelabeled);
    }
    c.pending += pending;
    if (pending == 0) ++c.documents_done;
  }
  std::vector<std::pair<Column, Cell>> ordered(cells.begin(), cells.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto &a, const auto &b) {
    if (a.first.model != b.first.model) return a.first.model < b.first.model;
    return genre_code(a.first.genre) < genre_code(b.first.genre);
  });
  json out = json::array();
  for (const auto &[col, c] : ordered) {
    const std::size_t decided = c.total - c.pending;
    out.push_back({{"model", col.model},
                   {"genre", genre_code(col.genre)},
                   {"documents", c.documents},
                   {"documents_decided", c.documents_done},
                   {"annotations", c.total},
                   {"decided", decided},
                   {"pending", c.pending},
                   {"relabeled", c.relabeled},
                   {"relabel_rate", decided == 0 ? 0.0 : local_rate(c.relabeled, decided)}});
  }
  return {{"batch", batch_id}, {"cells", std::move(out)}};
}

void ReviewService::install_routes() {
  auto &srv = *server_;
  const auto reply = [](httplib::Response &res, int status, const json &body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  const auto guarded = [this, reply](auto handler) {
    return [this, reply, handler](const httplib::Request &req, httplib::Response &res) {
      if (options_.bearer_token &&
          req.get_header_value("Authorization") != "Bearer " + *options_.bearer_token) {
        reply(res, 401, {{"error", "unauthorized"}, {"message", "bearer token required"}});
        return;
      }
      try {
        handler(req, res);
      } catch (const Error &e) {
        reply(res, http_status(e.code()), error_json(e));
      } catch (const std::exception &e) {
        reply(res, 500, {{"error", "internal"}, {"message", e.what()}});
      }
    };
  };
  const auto required = [](const httplib::Request &req, const char *name) {
    if (!req.has_param(name)) {
      throw Error(ErrorCode::kInvalidArgument, std::string("missing query parameter '") + name + "'");
    }
    return req.get_param_value(name);
  };

  srv.Get("/v1/tasks", guarded([this, reply, required](const auto &req, auto &res) {
            const auto status = req.has_param("status") ? req.get_param_value("status") : "all";
            reply(res, 200, list_tasks(required(req, "batch"), status));
          }));
  srv.Get(R"(/v1/documents/([^/]+))", guarded([this, reply](const auto &req, auto &res) {
            reply(res, 200, document(req.matches[1]));
          }));
  srv.Post(R"(/v1/annotations/([^/]+)/decision)",
           guarded([this, reply](const auto &req, auto &res) {
             const auto body = json::parse(req.body, nullptr, false);
             if (body.is_discarded()) {
               throw Error(ErrorCode::kInvalidArgument, "body is not valid JSON");
             }
             bool replayed = false;
             const auto out = decide(req.matches[1], body, &replayed);
             if (replayed) res.set_header("X-Replayed", "true");
             reply(res, 200, out);
           }));
  srv.Get("/v1/progress", guarded([this, reply, required](const auto &req, auto &res) {
            reply(res, 200, progress(required(req, "batch")));
          }));
  if (options_.static_dir && std::filesystem::is_directory(*options_.static_dir)) {
    srv.set_mount_point("/", options_.static_dir->string());
  }
}

int ReviewService::bind() {
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.bind);
  } else if (!server_->bind_to_port(options_.bind, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "cannot bind " + options_.bind + ":" + std::to_string(options_.port));
  }
  return port;
}

void ReviewService::listen() {
  if (!server_) bind();
  server_->listen_after_bind();
}

void ReviewService::stop() {
  if (server_) server_->stop();
}

}  // namespace synthehr
