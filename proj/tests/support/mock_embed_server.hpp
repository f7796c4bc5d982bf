#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace refinekit::testkit {

// Local stand-in for the embedding service. Vectors are derived from the
// sha256 of the request body, so identical bytes give identical vectors.
class MockEmbedServer {
public:
    enum class Fault { none, bad_norm, bad_checksum, short_vector, http_500, slow };

    MockEmbedServer();
    ~MockEmbedServer();

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    void set_ready(bool ready) { ready_ = ready; }
    void set_fault(Fault f) { fault_ = f; }
    void set_dim(int dim) { dim_ = dim; }
    int embed_calls() const { return embed_calls_; }
    int max_concurrent() const { return max_concurrent_; }

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<bool> ready_{true};
    std::atomic<Fault> fault_{Fault::none};
    std::atomic<int> dim_{512};
    std::atomic<int> embed_calls_{0};
    std::atomic<int> active_{0};
    std::atomic<int> max_concurrent_{0};
};

} // namespace refinekit::testkit
