#include "facealign/server.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "facealign/error.hpp"
#include "facealign/image_io.hpp"
#include "facealign/manifest.hpp"

namespace facealign {

namespace fs = std::filesystem;
using nlohmann::json;

std::string url_encode(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
}

int status_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::not_found: return 404;
        case ErrorKind::stale_lease: return 409;
        case ErrorKind::invalid_annotation:
        case ErrorKind::degenerate_pair: return 422;
        case ErrorKind::invalid_argument: return 400;
        default: return 500;
    }
}

std::optional<Point2> parse_point(const json& j) {
    if (!j.is_object()) return std::nullopt;
    const auto x = j.find("x");
    const auto y = j.find("y");
    if (x == j.end() || y == j.end() || !x->is_number() || !y->is_number()) return std::nullopt;
    return Point2{x->get<double>(), y->get<double>()};
}

}  // namespace

struct AnnotateServer::Impl {
    AnnotationService& service;
    httplib::Server http;
    bool bound = false;

    explicit Impl(AnnotationService& s) : service(s) {}

    void routes(const fs::path& static_dir) {
        http.set_read_timeout(30, 0);
        http.set_write_timeout(30, 0);
        // SO_REUSEADDR only: httplib's default SO_REUSEPORT would let a second
        // server bind the same port and split the traffic.
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });

        http.Get("/v1/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string client = req.get_param_value("client");
            if (client.empty()) return send_error(res, 400, "invalid_argument", "missing client parameter");
            const auto task = service.queue().next_task(client);
            if (!task) {
                res.status = 204;
                return;
            }
            const Size sz = service.image_size_of(*task);
            send_json(res, 200,
                      {{"id", task->id},
                       {"image_url", "/v1/images/" + url_encode(task->id)},
                       {"width", sz.w},
                       {"height", sz.h},
                       {"bucket", to_string(task->bucket)},
                       {"lease_expires_unix_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                                                     task->lease->expires.time_since_epoch())
                                                     .count()}});
        });

        http.Get(R"(/v1/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto task = service.queue().find(req.matches[1]);
            if (!task) return send_error(res, 404, "not_found", "unknown task");
            const fs::path path = service.queue().run_root() / task->image_path;
            const auto bytes = read_file(path);
            res.status = 200;
            res.set_content(std::string(bytes.begin(), bytes.end()), std::string(content_type_for(path)));
        });

        http.Post(R"(/v1/tasks/([^/]+)/annotation)", [this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object()) {
                return send_error(res, 400, "malformed_body", "body is not a JSON object");
            }
            const auto left = parse_point(body.value("left", json()));
            const auto right = parse_point(body.value("right", json()));
            const auto client = body.find("client");
            if (!left || !right || client == body.end() || !client->is_string()) {
                return send_error(res, 400, "malformed_body", "expected {left:{x,y}, right:{x,y}, client}");
            }
            const Annotation a{req.matches[1], *left, *right, client->get<std::string>()};
            const PipelineResult r = service.submit(a);
            send_json(res, 200, manifest_record(r, service.config()));
        });

        http.Get("/v1/progress", [this](const httplib::Request&, httplib::Response& res) {
            const QueueProgress p = service.queue().progress();
            send_json(res, 200,
                      {{"pending", p.pending},
                       {"leased", p.leased},
                       {"done", p.done},
                       {"manual_success", p.manual_success},
                       {"manual_failed", p.manual_failed}});
        });

        http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const Error& e) {
                send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        });

        std::error_code ec;
        if (!static_dir.empty() && fs::is_directory(static_dir, ec)) http.set_mount_point("/", static_dir.string());
    }
};

AnnotateServer::AnnotateServer(AnnotationService& service, fs::path static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    impl_->routes(static_dir);
}

AnnotateServer::~AnnotateServer() { stop(); }

int AnnotateServer::bind(const std::string& host, int port) {
    int bound = -1;
    if (port == 0) {
        bound = impl_->http.bind_to_any_port(host);
    } else if (impl_->http.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound < 0) {
        throw Error(ErrorKind::io, "serve", "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->bound = true;
    return bound;
}

void AnnotateServer::listen() {
    if (!impl_->bound) throw Error(ErrorKind::invalid_argument, "serve", "listen() before bind()");
    impl_->http.listen_after_bind();
}

void AnnotateServer::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

void AnnotateServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace facealign
