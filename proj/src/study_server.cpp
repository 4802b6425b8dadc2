#include "descry/study_server.hpp"

#include <sstream>

#include "descry/error.hpp"
#include "httplib.h"

namespace descry {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

std::string annotator_of(const httplib::Request& req, const json* body = nullptr) {
  if (req.has_header("X-Annotator-Token")) return req.get_header_value("X-Annotator-Token");
  if (req.has_param("annotator")) return req.get_param_value("annotator");
  if (body && body->contains("annotator") && (*body)["annotator"].is_string()) {
    return (*body)["annotator"].get<std::string>();
  }
  return {};
}

CreateStudyInput create_input_from_json(const json& j) {
  CreateStudyInput in;
  in.study_id = j.value("study_id", "");
  in.model_a = j.at("model_a").get<std::string>();
  in.model_b = j.at("model_b").get<std::string>();
  in.annotators = j.at("annotators").get<std::vector<std::string>>();
  in.seed = j.value("seed", std::uint64_t{0});
  in.overlapping = j.value("overlapping", false);
  if (j.contains("guide_text")) in.guide_text = j["guide_text"].get<std::string>();
  for (const auto& it : j.at("items")) {
    auto id = it.at("video_id").get<std::string>();
    in.videos.push_back({id, it.value("video_ref", id)});
    if (it.contains("text_a")) in.texts_a[id] = it["text_a"].get<std::string>();
    if (it.contains("text_b")) in.texts_b[id] = it["text_b"].get<std::string>();
  }
  return in;
}

}  // namespace

struct StudyServer::Impl {
  StudyStore& store;
  StudyServerOptions options;
  httplib::Server server;

  Impl(StudyStore& s, StudyServerOptions o) : store(s), options(std::move(o)) { routes(); }

  bool admin_ok(const httplib::Request& req, httplib::Response& res) const {
    if (options.admin_token.empty()) return true;
    if (req.get_header_value("X-Admin-Token") == options.admin_token) return true;
    send_error(res, 403, "forbidden", "admin token required");
    return false;
  }

  template <class Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
      } catch (const ForbiddenError& e) {
        send_error(res, 403, "forbidden", e.what());
      } catch (const ConflictError& e) {
        send_error(res, 409, "conflict", e.what());
      } catch (const InputError& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const ValidationError& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", std::string("malformed request body: ") + e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers",
                                 "Content-Type, X-Annotator-Token, X-Admin-Token"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/studies", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!admin_ok(req, res)) return;
      auto study = store.create(create_input_from_json(json::parse(req.body)));
      json per_annotator = json::object();
      for (const auto& it : study.items) {
        per_annotator[it.assigned_to] = per_annotator.value(it.assigned_to, 0) + 1;
      }
      send_json(res, 201, {{"study_id", study.study_id},
                           {"n_items", study.items.size()},
                           {"assignments", per_annotator}});
    }));

    server.Get(R"(/studies/([A-Za-z0-9_-]+)/next)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto annotator = annotator_of(req);
                 if (annotator.empty()) throw InputError("annotator token required");
                 auto next = store.next_item(req.matches[1], annotator);
                 if (next) {
                   send_json(res, 200, to_annotator_json(*next));
                 } else {
                   send_json(res, 200, completed_json(store.progress(req.matches[1], annotator)));
                 }
               }));

    server.Post(R"(/studies/([A-Za-z0-9_-]+)/labels)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto body = json::parse(req.body);
                  auto annotator = annotator_of(req, &body);
                  if (annotator.empty()) throw InputError("annotator token required");
                  auto choice = parse_choice(body.at("choice").get<std::string>());
                  if (!choice) throw InputError("choice must be left, right or same");
                  auto label = store.submit_label(req.matches[1], annotator,
                                                  body.at("item_id").get<int>(), *choice);
                  auto p = store.progress(req.matches[1], annotator);
                  send_json(res, 201, {{"ok", true},
                                       {"item_id", label.item_id},
                                       {"progress", {{"labeled", p.labeled}, {"total", p.total}}}});
                }));

    server.Get(R"(/studies/([A-Za-z0-9_-]+)/advantage)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 if (!admin_ok(req, res)) return;
                 auto study = store.study(req.matches[1]);
                 auto body = to_json(store.advantage(req.matches[1]));
                 body["model_a"] = study.model_a;
                 body["model_b"] = study.model_b;
                 send_json(res, 200, body);
               }));

    server.Get(R"(/studies/([A-Za-z0-9_-]+)/export)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 if (!admin_ok(req, res)) return;
                 std::ostringstream out;
                 store.export_labels(req.matches[1], out);
                 res.status = 200;
                 res.set_content(out.str(), "application/x-ndjson");
               }));

    server.Get(R"(/studies/([A-Za-z0-9_-]+)/guide)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto study = store.study(req.matches[1]);
                 res.status = 200;
                 res.set_content(study.guide_text, "text/plain; charset=utf-8");
               }));
  }
};

StudyServer::StudyServer(StudyStore& store, StudyServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool StudyServer::serve() { return impl_->server.listen_after_bind(); }

void StudyServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace descry
