#include "refinekit/render/cdp_provider.hpp"

#include "refinekit/digest.hpp"
#include "refinekit/error.hpp"

#include "json.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <mutex>

namespace refinekit::render {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

// Collects every element with non-whitespace direct text: its child-index
// path from <html>, the union of its text rects in page coordinates, the
// collapsed text and the computed color.
constexpr const char* kExtractScript = R"JS((() => {
  const root = document.documentElement;
  const blocks = [];
  const pathOf = (el) => {
    const p = [];
    for (let n = el; n && n !== root; n = n.parentNode)
      p.unshift(Array.prototype.indexOf.call(n.parentNode.childNodes, n));
    return p.join('/');
  };
  const walk = (el) => {
    const texts = [...el.childNodes].filter(n => n.nodeType === 3 && n.data.trim() !== '');
    const style = getComputedStyle(el);
    if (texts.length && style.visibility !== 'hidden') {
      let x0 = Infinity, y0 = Infinity, x1 = -Infinity, y1 = -Infinity;
      for (const t of texts) {
        const r = document.createRange();
        r.selectNodeContents(t);
        for (const q of r.getClientRects()) {
          if (q.width <= 0 || q.height <= 0) continue;
          x0 = Math.min(x0, q.left + scrollX); y0 = Math.min(y0, q.top + scrollY);
          x1 = Math.max(x1, q.right + scrollX); y1 = Math.max(y1, q.bottom + scrollY);
        }
      }
      const c = (style.color.match(/[\d.]+/g) || [0, 0, 0]).slice(0, 3).map(Number);
      if (x1 > x0 && y1 > y0)
        blocks.push({path: pathOf(el), bbox: [x0, y0, x1 - x0, y1 - y0],
                     text: texts.map(t => t.data).join('').replace(/\s+/g, ' ').trim(), color: c});
    }
    for (const c of el.children) walk(c);
  };
  walk(root);
  const height = Math.max(root.scrollHeight, document.body ? document.body.scrollHeight : 0);
  return {height, blocks};
})())JS";

bool is_timeout(const beast::error_code& ec) { return ec == beast::error::timeout; }

[[noreturn]] void fail(const beast::error_code& ec, const std::string& what)
{
    if (is_timeout(ec))
        throw RenderTimeout("cdp: timed out during " + what);
    throw ProviderUnavailable("cdp: " + what + ": " + ec.message());
}

} // namespace

struct CdpRenderProvider::Session {
    using Clock = std::chrono::steady_clock;

    asio::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    std::int64_t next_id = 1;
    bool open = false;
    std::mutex mu;

    // Runs one asynchronous operation to completion. Stream expiry only
    // applies to asynchronous operations, so every step goes through here.
    template <class Start>
    beast::error_code run(Start&& start)
    {
        beast::error_code result = asio::error::would_block;
        start([&result](beast::error_code ec, auto&&...) { result = ec; });
        ioc.restart();
        ioc.run();
        return result;
    }

    std::string discover(const Options& o)
    {
        const auto deadline = Clock::now() + o.timeout;
        beast::tcp_stream stream(ioc);
        beast::error_code ec;
        tcp::resolver resolver(ioc);
        auto endpoints = resolver.resolve(o.host, o.port, ec);
        if (ec)
            fail(ec, "resolve");
        stream.expires_at(deadline);
        if ((ec = run([&](auto h) { stream.async_connect(endpoints, h); })))
            fail(ec, "connect");
        http::request<http::empty_body> req{http::verb::put, "/json/new?about:blank", 11};
        req.set(http::field::host, o.host + ":" + o.port);
        if ((ec = run([&](auto h) { http::async_write(stream, req, h); })))
            fail(ec, "target discovery");
        beast::flat_buffer buf;
        http::response<http::string_body> res;
        if ((ec = run([&](auto h) { http::async_read(stream, buf, res, h); })))
            fail(ec, "target discovery");
        stream.socket().shutdown(tcp::socket::shutdown_both, ec);
        if (res.result() != http::status::ok)
            throw ProviderUnavailable("cdp: target discovery returned HTTP " + std::to_string(res.result_int()));
        try {
            auto url = json::parse(res.body()).at("webSocketDebuggerUrl").get<std::string>();
            auto scheme = url.find("://");
            auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
            if (slash == std::string::npos)
                throw ProviderUnavailable("cdp: malformed debugger URL " + url);
            return url.substr(slash);
        } catch (const json::exception& e) {
            throw ProviderUnavailable(std::string("cdp: target discovery: ") + e.what());
        }
    }

    void connect(const Options& o)
    {
        auto path = o.target_path.empty() ? discover(o) : o.target_path;
        const auto deadline = Clock::now() + o.timeout;
        beast::error_code ec;
        tcp::resolver resolver(ioc);
        auto endpoints = resolver.resolve(o.host, o.port, ec);
        if (ec)
            fail(ec, "resolve");
        beast::get_lowest_layer(ws).expires_at(deadline);
        if ((ec = run([&](auto h) { beast::get_lowest_layer(ws).async_connect(endpoints, h); })))
            fail(ec, "connect");
        const auto host = o.host + ":" + o.port;
        if ((ec = run([&](auto h) { ws.async_handshake(host, path, h); })))
            fail(ec, "websocket handshake");
        ws.read_message_max(256u << 20);
        open = true;
        call("Page.enable", json::object(), o.timeout);
    }

    json read_message(const std::string& what, Clock::time_point deadline)
    {
        beast::get_lowest_layer(ws).expires_at(deadline);
        beast::flat_buffer buf;
        if (auto ec = run([&](auto h) { ws.async_read(buf, h); })) {
            open = false;
            fail(ec, what);
        }
        try {
            return json::parse(beast::buffers_to_string(buf.data()));
        } catch (const json::exception& e) {
            throw ProviderUnavailable("cdp: malformed message during " + what + ": " + e.what());
        }
    }

    // Sends one command and returns its result, skipping interleaved events.
    json call(const std::string& method, json params, std::chrono::milliseconds timeout)
    {
        const auto deadline = Clock::now() + timeout;
        auto id = next_id++;
        const auto text = json{{"id", id}, {"method", method}, {"params", std::move(params)}}.dump();
        beast::get_lowest_layer(ws).expires_at(deadline);
        if (auto ec = run([&](auto h) { ws.async_write(asio::buffer(text), h); })) {
            open = false;
            fail(ec, method);
        }
        for (;;) {
            auto reply = read_message(method, deadline);
            if (!reply.contains("id") || reply["id"] != id)
                continue;
            if (reply.contains("error"))
                throw ProviderUnavailable("cdp: " + method + " failed: " + reply["error"].dump());
            return reply.value("result", json::object());
        }
    }

    void wait_event(const std::string& method, std::chrono::milliseconds timeout)
    {
        const auto deadline = Clock::now() + timeout;
        for (;;) {
            auto msg = read_message(method, deadline);
            if (msg.value("method", "") == method)
                return;
        }
    }
};

CdpRenderProvider::CdpRenderProvider(Options options) : options_(std::move(options)), session_(std::make_unique<Session>()) {}

CdpRenderProvider::~CdpRenderProvider()
{
    if (session_ && session_->open) {
        auto& s = *session_;
        beast::get_lowest_layer(s.ws).expires_after(std::chrono::seconds(1));
        s.run([&](auto h) { s.ws.async_close(websocket::close_code::normal, h); });
    }
}

RenderResult CdpRenderProvider::render(std::string_view html, const Viewport& viewport)
{
    std::lock_guard lock(session_->mu);
    auto& s = *session_;
    const auto timeout = options_.timeout;
    if (!s.open)
        s.connect(options_);

    auto metrics = [&](int height) {
        s.call("Emulation.setDeviceMetricsOverride",
               {{"width", viewport.width}, {"height", height}, {"deviceScaleFactor", 1}, {"mobile", false}}, timeout);
    };
    metrics(viewport.height);

    std::vector<std::uint8_t> bytes(html.begin(), html.end());
    s.call("Page.navigate", {{"url", "data:text/html;charset=utf-8;base64," + base64_encode(bytes)}}, timeout);
    s.wait_event("Page.loadEventFired", timeout);

    auto eval = s.call("Runtime.evaluate", {{"expression", kExtractScript}, {"returnByValue", true}}, timeout);
    RenderResult out;
    int height = viewport.height;
    try {
        const auto& value = eval.at("result").at("value");
        height = std::clamp(static_cast<int>(std::ceil(value.at("height").get<double>())), viewport.height,
                            std::max(viewport.height, options_.max_height));
        for (const auto& b : value.at("blocks"))
            out.blocks.push_back(block_from_json(b.dump()));
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("cdp: unexpected extraction result: ") + e.what());
    } catch (const FormatError& e) {
        throw ProviderUnavailable(std::string("cdp: unexpected extraction result: ") + e.what());
    }

    metrics(height);
    auto shot = s.call("Page.captureScreenshot",
                       {{"format", "png"},
                        {"captureBeyondViewport", true},
                        {"clip", {{"x", 0}, {"y", 0}, {"width", viewport.width}, {"height", height}, {"scale", 1}}}},
                       timeout);
    try {
        out.image = decode_png(base64_decode(shot.at("data").get<std::string>()));
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("cdp: screenshot missing: ") + e.what());
    } catch (const FormatError& e) {
        throw ProviderUnavailable(std::string("cdp: screenshot undecodable: ") + e.what());
    }
    return out;
}

} // namespace refinekit::render
