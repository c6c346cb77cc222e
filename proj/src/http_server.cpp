#include "qualnet/http_server.hpp"

#include <httplib.h>

#include "qualnet/error.hpp"

namespace qualnet::service {

struct HttpServer::Impl {
    Workspace& workspace;
    httplib::Server server;

    explicit Impl(Workspace& ws) : workspace(ws) {}

    void dispatch(const httplib::Request& req, httplib::Response& res) {
        Request request;
        request.method = req.method;
        request.path = req.path;
        for (const auto& [key, value] : req.params) request.query[key] = value;
        request.body = req.body;
        request.content_type = req.get_header_value("Content-Type");
        const auto response = workspace.handle(request);
        res.status = response.status;
        res.set_content(response.body, response.content_type);
    }
};

HttpServer::HttpServer(Workspace& workspace) : impl_(std::make_unique<Impl>(workspace)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        impl_->dispatch(req, res);
    };
    const std::string any = R"(/.*)";
    impl_->server.Get(any, handler);
    impl_->server.Post(any, handler);
    impl_->server.Put(any, handler);
    impl_->server.Patch(any, handler);
    impl_->server.Delete(any, handler);
}

HttpServer::~HttpServer() {
    stop();
}

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                                : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw Error(ErrorKind::IoError, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void HttpServer::listen() {
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace qualnet::service
