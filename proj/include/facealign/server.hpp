#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "facealign/annotate.hpp"

namespace facealign {

/// HTTP front end of an AnnotationService under /v1, plus an optional static
/// directory mounted at /.
///
///   GET  /v1/tasks/next?client=<id>   200 task JSON, 204 when the queue is empty
///   GET  /v1/images/<task id>         original image bytes
///   POST /v1/tasks/<id>/annotation    body {left:{x,y}, right:{x,y}, client}
///   GET  /v1/progress
///
/// Errors are JSON {"error": kind, "message": text} with 400 (malformed
/// request), 404 (unknown task), 409 (stale lease), 422 (invalid points) or
/// 500.
class AnnotateServer {
public:
    explicit AnnotateServer(AnnotationService& service, std::filesystem::path static_dir = {});
    ~AnnotateServer();
    AnnotateServer(const AnnotateServer&) = delete;
    AnnotateServer& operator=(const AnnotateServer&) = delete;

    /// Port 0 picks a free port. Returns the bound port; throws Error(io)
    /// when the address cannot be bound.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Requires a successful bind().
    void listen();
    void stop();
    /// Blocks until the server accepts connections.
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Percent-encodes everything outside the unreserved URL set.
std::string url_encode(const std::string& s);

}  // namespace facealign
