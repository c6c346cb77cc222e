#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "qualnet/service.hpp"

namespace qualnet::service {

// Thin HTTP adapter over Workspace::handle.
class HttpServer {
public:
    explicit HttpServer(Workspace& workspace);
    ~HttpServer();

    // Returns the bound port (an ephemeral one when `port` is 0).
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qualnet::service
