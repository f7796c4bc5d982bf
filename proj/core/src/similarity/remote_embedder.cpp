#include "refinekit/digest.hpp"
#include "refinekit/error.hpp"
#include "refinekit/similarity/embedding.hpp"

#include "httplib.h"
#include "json.hpp"

#include <cmath>
#include <mutex>
#include <semaphore>

namespace refinekit::similarity {

using nlohmann::json;

struct RemoteEmbedder::State {
    explicit State(int slots) : in_flight(std::max(1, slots)) {}

    std::counting_semaphore<1024> in_flight;
    mutable std::mutex mu;
    mutable std::size_t dim = 0;
    mutable std::string model;
};

namespace {

httplib::Client make_client(const RemoteEmbedder::Options& o)
{
    httplib::Client client(o.endpoint);
    if (!client.is_valid())
        throw ProviderUnavailable("embed: invalid endpoint " + o.endpoint);
    client.set_connection_timeout(o.timeout);
    client.set_read_timeout(o.timeout);
    client.set_write_timeout(o.timeout);
    return client;
}

json parse_body(const std::string& body, const char* what)
{
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("embed: malformed ") + what + " response: " + e.what());
    }
}

} // namespace

RemoteEmbedder::RemoteEmbedder(Options options) : options_(std::move(options)), state_(std::make_unique<State>(options_.max_in_flight))
{
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::string RemoteEmbedder::name() const
{
    std::lock_guard lock(state_->mu);
    return state_->model.empty() ? "remote" : "remote:" + state_->model;
}

RemoteEmbedder::Health RemoteEmbedder::health() const
{
    auto client = make_client(options_);
    auto res = client.Get("/health");
    if (!res)
        throw ProviderUnavailable("embed: GET /health failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderUnavailable("embed: GET /health returned HTTP " + std::to_string(res->status));
    auto j = parse_body(res->body, "health");
    try {
        Health h{j.at("status").get<std::string>(), j.at("model").get<std::string>(), j.at("dim").get<std::size_t>()};
        if (h.status != "ok")
            throw ProviderUnavailable("embed: service status " + h.status);
        std::lock_guard lock(state_->mu);
        if (state_->dim != 0 && state_->dim != h.dim)
            throw ProviderUnavailable("embed: service dimension changed from " + std::to_string(state_->dim) + " to " +
                                      std::to_string(h.dim));
        state_->dim = h.dim;
        state_->model = h.model;
        return h;
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("embed: malformed health response: ") + e.what());
    }
}

std::size_t RemoteEmbedder::dimension() const
{
    {
        std::lock_guard lock(state_->mu);
        if (state_->dim != 0)
            return state_->dim;
    }
    return health().dim;
}

Embedding RemoteEmbedder::embed(const render::RasterImage& img)
{
    auto png = render::encode_png(render::fit_pixel_budget(img));
    std::string body(png.begin(), png.end());

    state_->in_flight.acquire();
    struct Release {
        State& s;
        ~Release() { s.in_flight.release(); }
    } release{*state_};

    auto client = make_client(options_);
    auto res = client.Post("/embed", body, "image/png");
    if (!res)
        throw ProviderUnavailable("embed: POST /embed failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderUnavailable("embed: POST /embed returned HTTP " + std::to_string(res->status));
    auto j = parse_body(res->body, "embed");
    Embedding v;
    std::size_t dim = 0;
    std::string checksum, model;
    try {
        v = j.at("vector").get<Embedding>();
        dim = j.at("dim").get<std::size_t>();
        checksum = j.at("checksum").get<std::string>();
        model = j.at("model").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("embed: malformed embed response: ") + e.what());
    }
    if (dim == 0 || v.size() != dim)
        throw ProviderUnavailable("embed: vector length " + std::to_string(v.size()) + " does not match dim " + std::to_string(dim));
    double norm = 0;
    for (double x : v)
        norm += x * x;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-5)
        throw ProviderUnavailable("embed: vector is not unit norm");
    if (checksum != sha256_hex(body))
        throw ProviderUnavailable("embed: checksum does not match the sent image");
    std::lock_guard lock(state_->mu);
    if (state_->dim != 0 && state_->dim != dim)
        throw ProviderUnavailable("embed: dimension changed from " + std::to_string(state_->dim) + " to " + std::to_string(dim));
    state_->dim = dim;
    state_->model = model;
    return v;
}

} // namespace refinekit::similarity
