#include "mock_embed_server.hpp"

#include "refinekit/digest.hpp"

#include "httplib.h"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <vector>

namespace refinekit::testkit {

MockEmbedServer::MockEmbedServer() : server_(std::make_unique<httplib::Server>())
{
    server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        if (!ready_) {
            res.status = 503;
            res.set_content(R"({"status":"loading","model":"mock","dim":0})", "application/json");
            return;
        }
        nlohmann::json j = {{"status", "ok"}, {"model", "mock"}, {"dim", dim_.load()}};
        res.set_content(j.dump(), "application/json");
    });
    server_->Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
        ++embed_calls_;
        int now = ++active_;
        for (int seen = max_concurrent_; now > seen && !max_concurrent_.compare_exchange_weak(seen, now);)
            ;
        struct Leave {
            std::atomic<int>& a;
            ~Leave() { --a; }
        } leave{active_};

        auto fault = fault_.load();
        if (fault == Fault::slow)
            std::this_thread::sleep_for(std::chrono::milliseconds(300));
        if (!ready_) {
            res.status = 503;
            return;
        }
        if (fault == Fault::http_500) {
            res.status = 500;
            return;
        }
        auto digest = sha256_hex(req.body);
        int dim = dim_;
        std::vector<double> v(static_cast<std::size_t>(dim));
        double norm = 0;
        for (int i = 0; i < dim; ++i) {
            int nibble = std::stoi(digest.substr(static_cast<std::size_t>(i % 64), 1), nullptr, 16);
            v[static_cast<std::size_t>(i)] = (nibble - 7.5) + 0.01 * i;
            norm += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        }
        for (auto& x : v)
            x /= std::sqrt(norm);
        if (fault == Fault::bad_norm)
            for (auto& x : v)
                x *= 1.01;
        if (fault == Fault::short_vector)
            v.pop_back();
        nlohmann::json j = {{"vector", v},
                            {"dim", dim},
                            {"model", "mock"},
                            {"checksum", fault == Fault::bad_checksum ? std::string(64, '0') : digest}};
        res.set_content(j.dump(), "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockEmbedServer::~MockEmbedServer()
{
    server_->stop();
    thread_.join();
}

} // namespace refinekit::testkit
