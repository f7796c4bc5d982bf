#pragma once

#include "refinekit/render/provider.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace refinekit::render {

// Drives a headless browser over the devtools wire protocol (JSON messages on
// a websocket). Each render navigates to the document as a data: URL, reads
// text-block geometry with an in-page script, resizes the device metrics to
// the full content height and captures a PNG screenshot.
//
// One instance owns one browser page and serves one render at a time; use
// RenderPool for concurrency.
class CdpRenderProvider final : public RenderProvider {
public:
    struct Options {
        std::string host = "127.0.0.1";
        std::string port = "9222";
        // Websocket path of an existing page target. When empty, a new target
        // is requested with `PUT /json/new` on the same host.
        std::string target_path;
        std::chrono::milliseconds timeout{30000};
        int max_height = 16384;
    };

    explicit CdpRenderProvider(Options options);
    ~CdpRenderProvider() override;

    std::string name() const override { return "cdp"; }
    // Throws RenderTimeout when a step exceeds the timeout and
    // ProviderUnavailable on connection or protocol failures.
    RenderResult render(std::string_view html, const Viewport& viewport) override;

private:
    struct Session;
    Options options_;
    std::unique_ptr<Session> session_;
};

} // namespace refinekit::render
