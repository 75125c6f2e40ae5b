#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <condition_variable>
#include <thread>

#include "grounder/core/timing.hpp"
#include "grounder/gateway/mock_http_server.hpp"
#include "grounder/gateway/mock_services.hpp"
#include "grounder/gateway/transport.hpp"

namespace grounder::gateway {

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) {
        throw Error(ErrorCode::kConfig, "endpoint URL needs a scheme: " + base_url);
    }
    const auto slash = base_url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    return {base_url.substr(0, slash), prefix};
}

HttpReply HttpTransport::send(const std::string& base_url, const HttpRequest& request, std::chrono::milliseconds timeout) {
    const auto [origin, prefix] = split_base_url(base_url);
    httplib::Client client(origin);
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
    client.set_connection_timeout(sec.count(), usec.count());
    client.set_read_timeout(sec.count(), usec.count());
    client.set_write_timeout(sec.count(), usec.count());

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") {
            content_type = v;
        } else {
            headers.emplace(k, v);
        }
    }
    const std::string path = prefix + request.path;
    Stopwatch watch;
    httplib::Result result = request.method == "GET" ? client.Get(path, headers)
                                                     : client.Post(path, headers, request.body, content_type);
    if (!result) {
        const auto err = result.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               (err == httplib::Error::Read && watch.elapsed_ms() >= 0.9 * static_cast<double>(timeout.count()));
        throw TransportError(timed_out ? TransportFailure::kTimeout : TransportFailure::kConnection,
                             base_url + path + ": " + httplib::to_string(err));
    }
    return HttpReply{result->status, result->body};
}

RoutingTransport::RoutingTransport() = default;

void RoutingTransport::register_mock(const std::string& name, std::shared_ptr<mock::MockServices> services) {
    std::lock_guard lock(mutex_);
    mocks_[name] = std::move(services);
}

std::shared_ptr<mock::MockServices> RoutingTransport::mock(const std::string& name) const {
    std::lock_guard lock(mutex_);
    const auto it = mocks_.find(name);
    return it == mocks_.end() ? nullptr : it->second;
}

HttpReply RoutingTransport::send(const std::string& base_url, const HttpRequest& request, std::chrono::milliseconds timeout) {
    constexpr std::string_view kScheme = "mock://";
    if (base_url.rfind(kScheme, 0) != 0) {
        return http_.send(base_url, request, timeout);
    }
    std::string name = base_url.substr(kScheme.size());
    std::string prefix;
    if (const auto slash = name.find('/'); slash != std::string::npos) {
        prefix = name.substr(slash);
        name = name.substr(0, slash);
        while (!prefix.empty() && prefix.back() == '/') {
            prefix.pop_back();
        }
    }
    const auto services = mock(name);
    if (!services) {
        throw TransportError(TransportFailure::kConnection, "no mock service registered as " + name);
    }
    auto reply = services->handle(request.method, prefix + request.path, request.body);
    if (reply.latency > timeout) {
        std::this_thread::sleep_for(timeout);
        throw TransportError(TransportFailure::kTimeout, base_url + request.path + ": timed out");
    }
    if (reply.latency.count() > 0) {
        std::this_thread::sleep_for(reply.latency);
    }
    return HttpReply{reply.status, std::move(reply.body)};
}

namespace mock {

struct MockHttpServer::Impl {
    std::shared_ptr<MockServices> services;
    httplib::Server server;
    std::thread thread;
    std::string host;
    int port = 0;
};

MockHttpServer::MockHttpServer(std::shared_ptr<MockServices> services) : impl_(std::make_unique<Impl>()) {
    impl_->services = std::move(services);
    const auto serve = [this](const httplib::Request& req, httplib::Response& res) {
        auto reply = impl_->services->handle(req.method, req.path, req.body);
        if (reply.latency.count() > 0) {
            std::this_thread::sleep_for(reply.latency);
        }
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    };
    // The library default also sets SO_REUSEPORT, which lets a second server share a busy port.
    impl_->server.set_socket_options([](auto sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    impl_->server.Get(R"(/.*)", serve);
    impl_->server.Post(R"(/.*)", serve);
}

MockHttpServer::~MockHttpServer() {
    stop();
}

int MockHttpServer::start(const std::string& host, int port) {
    impl_->host = host;
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
    } else {
        impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (impl_->port < 0) {
        throw Error(ErrorCode::kPortInUse, "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

bool MockHttpServer::running() const {
    return impl_->server.is_running();
}

void MockHttpServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

std::string MockHttpServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

}  // namespace mock
}  // namespace grounder::gateway
