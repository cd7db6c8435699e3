#ifndef SYNTHEHR_REVIEW_SERVICE_H_
#define SYNTHEHR_REVIEW_SERVICE_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "synthehr/corpus_store.h"
#include "synthehr/error.h"
#include "synthehr/validation.h"

namespace httplib {
class Server;
}

namespace synthehr {

struct ServiceOptions {
  std::string bind = "127.0.0.1";
  int port = 8080;                            // 0 picks a free port
  std::optional<std::string> bearer_token;    // required on /v1 when set
  std::optional<std::filesystem::path> static_dir;  // UI bundle, served at /
};

// HTTP status for an error code.
int http_status(ErrorCode code);

// JSON views over the corpus and annotation stores. The handlers below are
// what the HTTP routes return; they can be called directly.
class ReviewService {
 public:
  ReviewService(const CorpusStore &corpus, AnnotationStore &annotations,
                ServiceOptions options = {});
  ~ReviewService();

  // Throws kUnknownBatch; kInvalidArgument for a status other than
  // "pending" or "all".
  nlohmann::json list_tasks(const std::string &batch_id, const std::string &status) const;
  // Throws kNotFound when the corpus has no such document.
  nlohmann::json document(const std::string &doc_key) const;
  nlohmann::json decide(const std::string &annotation_id, const nlohmann::json &body,
                        bool *replayed = nullptr);
  nlohmann::json progress(const std::string &batch_id) const;

  // Binds and returns the port. listen() blocks until stop().
  int bind();
  void listen();
  void stop();

 private:
  void install_routes();

  const CorpusStore &corpus_;
  AnnotationStore &annotations_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace synthehr

#endif  // SYNTHEHR_REVIEW_SERVICE_H_
