#include "refinekit/metrics/metrics.hpp"

#include "refinekit/error.hpp"
#include "refinekit/metrics/assignment.hpp"
#include "refinekit/metrics/color.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace refinekit::metrics {

namespace {

std::vector<std::uint32_t> code_points(std::string_view s)
{
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < s.size();) {
        auto b = static_cast<unsigned char>(s[i]);
        int len = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : (b >> 3) == 30 ? 4 : 1;
        std::uint32_t cp = len == 1 ? b : b & (0x7Fu >> len);
        for (int k = 1; k < len && i + static_cast<std::size_t>(k) < s.size(); ++k)
            cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
        out.push_back(cp);
        i += static_cast<std::size_t>(len);
    }
    return out;
}

double iou(const render::BBox& a, const render::BBox& b)
{
    const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (w <= 0 || h <= 0)
        return 0;
    const double inter = w * h;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0;
}

double center_distance(const render::BBox& a, const render::BBox& b) { return std::abs(a.cx() - b.cx()) + std::abs(a.cy() - b.cy()); }

constexpr double kTie = 1e-12;

// Compares two alternatives by (overlap sum, -distance sum).
bool strictly_better(double iou_new, double dist_new, double iou_old, double dist_old)
{
    if (iou_new > iou_old + kTie)
        return true;
    return std::abs(iou_new - iou_old) <= kTie && dist_new < dist_old - kTie;
}

} // namespace

double char_dice(std::string_view a, std::string_view b)
{
    auto ca = code_points(a), cb = code_points(b);
    if (ca.empty() && cb.empty())
        return 1.0;
    std::map<std::uint32_t, long> count;
    for (auto c : ca)
        ++count[c];
    long common = 0;
    for (auto c : cb) {
        auto it = count.find(c);
        if (it != count.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(ca.size() + cb.size());
}

BlockMatching match_blocks(const render::BlockExtract& gen, const render::BlockExtract& ref)
{
    std::vector<std::vector<double>> w(gen.size(), std::vector<double>(ref.size(), 0));
    for (std::size_t i = 0; i < gen.size(); ++i)
        for (std::size_t j = 0; j < ref.size(); ++j)
            w[i][j] = char_dice(gen[i].text, ref[j].text);
    auto assign = max_weight_assignment(w);
    std::vector<int> of_ref(ref.size(), -1);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        if (assign[i] >= 0 && w[i][static_cast<std::size_t>(assign[i])] <= 0)
            assign[i] = -1;
        if (assign[i] >= 0)
            of_ref[static_cast<std::size_t>(assign[i])] = static_cast<int>(i);
    }

    // Local moves that keep the total weight and improve geometric agreement,
    // so that equal texts pair up with their own boxes.
    auto geo = [&](std::size_t i, std::size_t j) { return std::pair{iou(gen[i].bbox, ref[j].bbox), center_distance(gen[i].bbox, ref[j].bbox)}; };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t a = 0; a < gen.size(); ++a) {
            if (assign[a] < 0)
                continue;
            for (std::size_t b = a + 1; b < gen.size(); ++b) {
                if (assign[b] < 0 || assign[a] < 0)
                    continue;
                auto ra = static_cast<std::size_t>(assign[a]), rb = static_cast<std::size_t>(assign[b]);
                if (w[a][rb] <= 0 || w[b][ra] <= 0 || w[a][rb] + w[b][ra] < w[a][ra] + w[b][rb] - kTie)
                    continue;
                auto [i1, d1] = geo(a, ra);
                auto [i2, d2] = geo(b, rb);
                auto [i3, d3] = geo(a, rb);
                auto [i4, d4] = geo(b, ra);
                if (strictly_better(i3 + i4, d3 + d4, i1 + i2, d1 + d2)) {
                    std::swap(assign[a], assign[b]);
                    of_ref[ra] = static_cast<int>(b);
                    of_ref[rb] = static_cast<int>(a);
                    changed = true;
                }
            }
            for (std::size_t r = 0; r < ref.size() && assign[a] >= 0; ++r) {
                auto cur = static_cast<std::size_t>(assign[a]);
                if (of_ref[r] >= 0 || w[a][r] < w[a][cur] - kTie || w[a][r] <= 0)
                    continue;
                auto [i1, d1] = geo(a, cur);
                auto [i2, d2] = geo(a, r);
                if (strictly_better(i2, d2, i1, d1)) {
                    of_ref[cur] = -1;
                    of_ref[r] = static_cast<int>(a);
                    assign[a] = static_cast<int>(r);
                    changed = true;
                }
            }
        }
        for (std::size_t g = 0; g < gen.size(); ++g) {
            if (assign[g] >= 0)
                continue;
            for (std::size_t a = 0; a < gen.size(); ++a) {
                if (assign[a] < 0)
                    continue;
                auto r = static_cast<std::size_t>(assign[a]);
                if (w[g][r] < w[a][r] - kTie || w[g][r] <= 0)
                    continue;
                auto [i1, d1] = geo(a, r);
                auto [i2, d2] = geo(g, r);
                if (strictly_better(i2, d2, i1, d1)) {
                    assign[g] = static_cast<int>(r);
                    assign[a] = -1;
                    of_ref[r] = static_cast<int>(g);
                    changed = true;
                    break;
                }
            }
        }
    }

    BlockMatching m;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        if (assign[i] >= 0)
            m.pairs.push_back({i, static_cast<std::size_t>(assign[i]), w[i][static_cast<std::size_t>(assign[i])]});
        else
            m.unmatched_gen.push_back(i);
    }
    for (std::size_t j = 0; j < ref.size(); ++j)
        if (of_ref[j] < 0)
            m.unmatched_ref.push_back(j);
    return m;
}

double matching_weight(const BlockMatching& m)
{
    double s = 0;
    for (const auto& p : m.pairs)
        s += p.dice;
    return s;
}

double block_match_score(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref)
{
    if (gen.empty() && ref.empty())
        return 1.0;
    double gen_area = 0, ref_area = 0, matched = 0;
    for (const auto& b : gen)
        gen_area += b.bbox.area();
    for (const auto& b : ref)
        ref_area += b.bbox.area();
    for (const auto& p : m.pairs)
        matched += std::min(gen[p.gen].bbox.area(), ref[p.ref].bbox.area()) * p.dice;
    const double denom = std::max(gen_area, ref_area);
    return denom > 0 ? std::clamp(matched / denom, 0.0, 1.0) : 0.0;
}

double text_score(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref)
{
    if (gen.empty() && ref.empty())
        return 1.0;
    if (m.pairs.empty())
        return 0.0;
    return matching_weight(m) / static_cast<double>(m.pairs.size());
}

double position_alignment(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref,
                          Dims gd, Dims rd)
{
    if (gen.empty() && ref.empty())
        return 1.0;
    if (m.pairs.empty())
        return 0.0;
    double total = 0;
    for (const auto& p : m.pairs) {
        const auto& g = gen[p.gen].bbox;
        const auto& r = ref[p.ref].bbox;
        const double offset = (std::abs(g.cx() / gd.width - r.cx() / rd.width) + std::abs(g.cy() / gd.height - r.cy() / rd.height)) / 2;
        total += 1 - std::min(1.0, offset);
    }
    return total / static_cast<double>(m.pairs.size());
}

double color_consistency(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref)
{
    if (gen.empty() && ref.empty())
        return 1.0;
    if (m.pairs.empty())
        return 0.0;
    double total = 0;
    for (const auto& p : m.pairs)
        total += std::max(0.0, 1 - ciede2000(to_lab(gen[p.gen].color), to_lab(ref[p.ref].color)) / 100);
    return total / static_cast<double>(m.pairs.size());
}

Page fit_page(const render::RenderResult& r)
{
    const double f = render::budget_scale(r.image.width, r.image.height);
    if (f >= 1.0)
        return {r.image, r.blocks};
    auto img = render::fit_pixel_budget(r.image);
    // Exact per-axis factors keep boxes aligned with the floored dimensions.
    auto blocks = r.blocks;
    const double fx = static_cast<double>(img.width) / r.image.width;
    const double fy = static_cast<double>(img.height) / r.image.height;
    for (auto& b : blocks)
        b.bbox = {b.bbox.x * fx, b.bbox.y * fy, b.bbox.w * fx, b.bbox.h * fy};
    return {std::move(img), std::move(blocks)};
}

double clip_metric(const Page& gen, const Page& ref, similarity::EmbeddingProvider& provider)
{
    return similarity::similarity(similarity::mask_text_regions(gen.image, gen.blocks),
                                  similarity::mask_text_regions(ref.image, ref.blocks), provider);
}

MetricReport evaluate(const Page& gen, const Page& ref, similarity::EmbeddingProvider& provider)
{
    auto m = match_blocks(gen.blocks, ref.blocks);
    MetricReport r;
    r.block = block_match_score(m, gen.blocks, ref.blocks);
    r.text = text_score(m, gen.blocks, ref.blocks);
    r.pos = position_alignment(m, gen.blocks, ref.blocks, {static_cast<double>(gen.image.width), static_cast<double>(gen.image.height)},
                               {static_cast<double>(ref.image.width), static_cast<double>(ref.image.height)});
    r.color = color_consistency(m, gen.blocks, ref.blocks);
    r.clip = clip_metric(gen, ref, provider);
    r.avg = (r.block + r.text + r.pos + r.color + r.clip) / 5;
    return r;
}

MetricReport evaluate(std::string_view gen_html, std::string_view ref_html, render::RenderProvider& renderer,
                      similarity::EmbeddingProvider& provider, const render::Viewport& viewport)
{
    Page gen, ref;
    try {
        gen = fit_page(render::render_html(gen_html, renderer, viewport));
        ref = fit_page(render::render_html(ref_html, renderer, viewport));
    } catch (const IncompleteDocument&) {
        return {0, 0, 0, 0, 0, 0, true};
    } catch (const RenderTimeout&) {
        return {0, 0, 0, 0, 0, 0, true};
    } catch (const ProviderUnavailable&) {
        return {0, 0, 0, 0, 0, 0, true};
    }
    return evaluate(gen, ref, provider);
}

std::string metric_record_json(std::string_view pair_id, const MetricReport& r)
{
    nlohmann::json j = {{"pair_id", pair_id}, {"block", r.block}, {"text", r.text}, {"pos", r.pos},
                        {"color", r.color},   {"clip", r.clip},   {"avg", r.avg},   {"failed", r.failed}};
    return j.dump();
}

MetricSummary summarize(const std::vector<MetricReport>& reports)
{
    MetricSummary s;
    s.count = reports.size();
    for (const auto& r : reports) {
        s.failed += r.failed;
        s.mean.block += r.block;
        s.mean.text += r.text;
        s.mean.pos += r.pos;
        s.mean.color += r.color;
        s.mean.clip += r.clip;
        s.mean.avg += r.avg;
    }
    if (s.count) {
        const double n = static_cast<double>(s.count);
        s.mean.block /= n;
        s.mean.text /= n;
        s.mean.pos /= n;
        s.mean.color /= n;
        s.mean.clip /= n;
        s.mean.avg /= n;
    }
    return s;
}

std::string format_summary_table(const MetricSummary& s)
{
    char row[256];
    std::snprintf(row, sizeof row, "%6.1f %6.1f %6.1f %6.1f %6.1f %6.1f %6zu %6zu\n", 100 * s.mean.block, 100 * s.mean.text,
                  100 * s.mean.pos, 100 * s.mean.color, 100 * s.mean.clip, 100 * s.mean.avg, s.count, s.failed);
    return std::string(" Block   Text   Pos.  Color   CLIP    AVG  Pairs Failed\n") + row;
}

} // namespace refinekit::metrics
