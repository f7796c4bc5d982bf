#include "rules_internal.hpp"

#include "refinekit/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace refinekit::perturb {

using doc::HtmlDocument;

namespace {

std::pair<std::size_t, std::size_t> site_span(const detail::Site& s, const doc::SerializedDocument& ser)
{
    const auto& a = ser.spans.at(s.path);
    switch (s.span) {
    case detail::SpanKind::start_tag: return {a.begin, a.start_tag_end};
    case detail::SpanKind::node: return {a.begin, a.end};
    case detail::SpanKind::stylesheet_block: return {a.content_begin + s.block_begin, a.content_begin + s.block_end};
    case detail::SpanKind::sibling_pair: return {a.begin, ser.spans.at(s.path2).end};
    }
    return {a.begin, a.end};
}

// True when `after` equals `before` with [begin, end) replaced by some text.
bool is_local_edit(std::string_view before, std::string_view after, std::size_t begin, std::size_t end)
{
    std::size_t tail = before.size() - end;
    if (after.size() < begin + tail)
        return false;
    return after.substr(0, begin) == before.substr(0, begin) && after.substr(after.size() - tail) == before.substr(end);
}

bool spans_collide(std::size_t b1, std::size_t e1, std::size_t b2, std::size_t e2)
{
    if (b1 == e1)
        return b2 < b1 && b1 < e2;
    if (b2 == e2)
        return b1 < b2 && b2 < e1;
    return std::max(b1, b2) < std::min(e1, e2);
}

} // namespace

Perturbed apply_rule(const HtmlDocument& d, std::string_view rule_id, std::uint64_t seed, const RuleOptions& options)
{
    const auto& info = find_rule(rule_id);
    auto sites = detail::find_sites(d, rule_id, options);
    if (sites.empty())
        throw RuleNotApplicable(std::string(rule_id) + ": no target in " + (d.provenance.empty() ? "document" : d.provenance));

    Rng rng(mix_seed(seed, rule_id));
    rng.shuffle(sites);
    auto before = doc::serialize_with_spans(d);
    for (auto& site : sites) {
        HtmlDocument out = d;
        if (!site.mutate(out, rng))
            continue;
        auto after = doc::serialize(out);
        if (after == before.text)
            continue;
        auto [begin, end] = site_span(site, before);
        if (!is_local_edit(before.text, after, begin, end))
            throw std::logic_error(std::string(rule_id) + " changed bytes outside its span");
        EditRecord e;
        e.category = info.category;
        e.rule_id = std::string(rule_id);
        e.seed = seed;
        e.node_path = site.path;
        e.target = site.target;
        e.target_name = site.target_name;
        e.begin = begin;
        e.end = end;
        e.original_fragment = before.text.substr(begin, end - begin);
        e.replacement_fragment = after.substr(begin, after.size() - (before.text.size() - end) - begin);
        return {std::move(out), std::move(e)};
    }
    throw RuleNotApplicable(std::string(rule_id) + ": every target is already at the drawn value");
}

Composed compose(const HtmlDocument& d, int k, std::uint64_t seed)
{
    if (k < 1)
        throw std::invalid_argument("compose: k must be at least 1");
    constexpr int kResamples = 8;
    constexpr int kRounds = 4;

    Rng rng(mix_seed(seed, "compose"));
    std::size_t best = 0;
    // A large early edit can shadow every site of a later category; a later
    // round starts over from the original with a fresh category order.
    for (int round = 0; round < kRounds; ++round) {
        std::vector<Category> categories(std::begin(kAllCategories), std::end(kAllCategories));
        rng.shuffle(categories);

        Composed out{d, {}};
        // Spans of accepted replacements in the coordinates of the current text.
        std::vector<std::pair<std::size_t, std::size_t>> live;
        for (auto cat : categories) {
            if (static_cast<int>(out.edits.size()) == k)
                break;
            auto rules = rules_in(cat);
            for (int attempt = 0; attempt <= kResamples; ++attempt) {
                auto rule = rng.pick(rules);
                auto rule_seed = rng.next();
                Perturbed p;
                try {
                    p = apply_rule(out.doc, rule, rule_seed);
                } catch (const RuleNotApplicable&) {
                    continue;
                }
                const auto& e = p.edit;
                bool collides = std::any_of(live.begin(), live.end(), [&](const auto& s) {
                    return spans_collide(e.begin, e.end, s.first, s.second);
                });
                if (collides)
                    continue;
                auto delta = static_cast<std::ptrdiff_t>(e.replacement_fragment.size()) - static_cast<std::ptrdiff_t>(e.end - e.begin);
                for (auto& s : live) {
                    if (s.first >= e.end) {
                        s.first = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.first) + delta);
                        s.second = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s.second) + delta);
                    }
                }
                live.emplace_back(e.begin, e.begin + e.replacement_fragment.size());
                out.doc = std::move(p.doc);
                out.edits.push_back(std::move(p.edit));
                break;
            }
        }
        if (static_cast<int>(out.edits.size()) == k)
            return out;
        best = std::max(best, out.edits.size());
    }
    throw InsufficientTargets("compose: placed " + std::to_string(best) + " of " + std::to_string(k) + " edits");
}

std::string invert(std::string_view perturbed, const std::vector<EditRecord>& edits)
{
    std::string text(perturbed);
    for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
        const auto& r = it->replacement_fragment;
        if (it->begin > text.size() || text.compare(it->begin, r.size(), r) != 0)
            throw SpanMismatch(it->rule_id + ": replacement not found at offset " + std::to_string(it->begin));
        text.replace(it->begin, r.size(), it->original_fragment);
    }
    return text;
}

std::string replay(std::string_view original, const std::vector<EditRecord>& edits)
{
    std::string text(original);
    for (const auto& e : edits) {
        const auto& o = e.original_fragment;
        if (e.begin > text.size() || e.end - e.begin != o.size() || text.compare(e.begin, o.size(), o) != 0)
            throw SpanMismatch(e.rule_id + ": original fragment not found at offset " + std::to_string(e.begin));
        text.replace(e.begin, o.size(), e.replacement_fragment);
    }
    return text;
}

} // namespace refinekit::perturb
