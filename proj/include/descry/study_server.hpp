#pragma once

#include <memory>
#include <string>

#include "descry/study.hpp"

namespace descry {

struct StudyServerOptions {
  /// When nonempty, study creation, advantage and export require the
  /// X-Admin-Token header. Annotator routes never do.
  std::string admin_token;
};

/// HTTP JSON API over a StudyStore:
///   POST /studies                      create (admin)
///   GET  /studies/{id}/next            annotator's next blinded item
///   POST /studies/{id}/labels          {item_id, choice}
///   GET  /studies/{id}/advantage       model_a vs model_b (admin)
///   GET  /studies/{id}/export          de-anonymized JSONL (admin)
///   GET  /studies/{id}/guide           annotation guide, text/plain
/// Annotators identify via the X-Annotator-Token header or ?annotator=.
/// Errors are JSON {code, message}.
class StudyServer {
 public:
  StudyServer(StudyStore& store, StudyServerOptions options = {});
  ~StudyServer();
  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace descry
