#include "oracles.hpp"

#include "refinekit/render/image.hpp"
#include "refinekit/refine/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>

namespace refinekit::testkit::oracle {

double ris(double s_t, double s_next, double delta_min)
{
    double gain = s_next - s_t;
    bool improved = gain - delta_min > 1e-12;
    bool perfect = 1.0 - s_t <= 1e-6;
    return improved && !perfect ? gain / (1.0 - s_t) : 0.0;
}

Reward reward(bool format_ok, double s_t, double s_next, double delta_min)
{
    Reward r;
    if (!format_ok) {
        r.format = -1;
        r.total = -1;
        return r;
    }
    if (s_next - s_t - delta_min > 1e-12) {
        r.improve = 1;
        r.quality = ris(s_t, s_next, delta_min);
    }
    r.total = r.format + r.improve + r.quality;
    return r;
}

std::vector<double> advantages(const std::vector<double>& rewards, double eps)
{
    // Welford in extended precision.
    long double mean = 0, m2 = 0;
    long double n = 0;
    for (double r : rewards) {
        n += 1;
        long double d = r - mean;
        mean += d / n;
        m2 += d * (r - mean);
    }
    long double sd = std::sqrt(m2 / n);
    std::vector<double> out;
    for (double r : rewards)
        out.push_back(static_cast<double>((r - mean) / (sd + eps)));
    return out;
}

double loss(const std::vector<double>& ratios, const std::vector<double>& advantages, double clip_eps)
{
    long double sum = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        double rho = ratios[i];
        double a = advantages[i];
        // Pessimistic bound: positive advantages cap the ratio from above,
        // negative ones from below.
        double term = a >= 0 ? std::min(rho, 1 + clip_eps) * a : std::max(rho, 1 - clip_eps) * a;
        sum += term;
    }
    return static_cast<double>(-sum / static_cast<long double>(ratios.size()));
}

Assignment brute_force_assignment(const std::vector<std::vector<double>>& weights)
{
    const std::size_t rows = weights.size();
    const std::size_t cols = rows ? weights[0].size() : 0;
    Assignment best;
    best.columns.assign(rows, -1);
    best.weight = -1;
    best.runner_up = -1;
    std::vector<int> current(rows, -1);
    std::vector<bool> used(cols, false);
    std::function<void(std::size_t, double)> go = [&](std::size_t r, double total) {
        if (r == rows) {
            if (total > best.weight) {
                best.runner_up = best.weight;
                best.weight = total;
                best.columns = current;
            } else if (total > best.runner_up) {
                best.runner_up = total;
            }
            return;
        }
        current[r] = -1;
        go(r + 1, total);
        for (std::size_t c = 0; c < cols; ++c) {
            if (used[c] || weights[r][c] <= 0)
                continue;
            used[c] = true;
            current[r] = static_cast<int>(c);
            go(r + 1, total + weights[r][c]);
            used[c] = false;
            current[r] = -1;
        }
    };
    go(0, 0.0);
    if (best.weight < 0)
        best.weight = 0;
    return best;
}

std::vector<double> difficulty(const std::vector<std::array<double, partition::kFeatureCount>>& x)
{
    const std::size_t n = x.size();
    std::vector<double> s(n, 0.0);
    for (std::size_t j = 0; j < partition::kFeatureCount; ++j) {
        long double sum = 0;
        for (const auto& row : x)
            sum += row[j];
        long double mu = sum / n;
        long double ss = 0;
        for (const auto& row : x)
            ss += (row[j] - mu) * (row[j] - mu);
        long double sigma = std::sqrt(ss / n);
        if (sigma == 0)
            continue;
        for (std::size_t i = 0; i < n; ++i)
            s[i] += static_cast<double>((x[i][j] - mu) / sigma);
    }
    return s;
}

namespace {

std::size_t tokens(const std::string& text)
{
    // A token starts at every non-space byte that does not continue a word.
    auto word = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
    std::size_t n = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c))
            continue;
        bool continues = i > 0 && word(c) && word(static_cast<unsigned char>(text[i - 1]));
        if (!continues)
            ++n;
    }
    return n;
}

} // namespace

partition::StructuralFeatures features(const doc::HtmlDocument& d)
{
    partition::StructuralFeatures f;
    std::set<std::string> names;
    std::size_t scripts = 0;
    std::vector<std::pair<const doc::Node*, int>> stack;
    for (auto it = d.root.children.rbegin(); it != d.root.children.rend(); ++it)
        stack.push_back({&*it, 1});
    while (!stack.empty()) {
        auto [n, depth] = stack.back();
        stack.pop_back();
        if (n->kind != doc::NodeKind::element)
            continue;
        f.dom_depth = std::max<double>(f.dom_depth, depth);
        names.insert(n->name);
        bool text = false;
        for (const auto& c : n->children)
            if (c.kind == doc::NodeKind::text && c.text.find_first_not_of(" \t\n\r\f\v") != std::string::npos)
                text = true;
        if (text && n->name != "script" && n->name != "style")
            ++f.block_count;
        if (n->name == "script")
            ++scripts;
        for (const auto& a : n->attributes) {
            if (a.name == "style")
                ++f.inline_style_count;
            std::string v;
            for (char c : a.value)
                v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            auto first = v.find_first_not_of(" \t\n\r\f\v");
            if (a.name.size() > 2 && a.name[0] == 'o' && a.name[1] == 'n')
                ++scripts;
            else if (first != std::string::npos && v.compare(first, 11, "javascript:") == 0)
                ++scripts;
        }
        for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
            stack.push_back({&*it, depth + 1});
    }
    f.tag_diversity = static_cast<double>(names.size());
    auto text = doc::serialize(d);
    double bytes = static_cast<double>(d.source.empty() ? text.size() : d.source.size());
    f.script_density = bytes > 0 ? scripts / (bytes / 1024.0) : 0.0;
    f.token_count = static_cast<double>(tokens(text));
    return f;
}

double clamped_cosine(const std::vector<double>& a, const std::vector<double>& b)
{
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0)
        return 0;
    double c = static_cast<double>(dot / std::sqrt(na * nb));
    return std::clamp(c, 0.0, 1.0);
}

std::vector<grpo::GroupRecord> straight_line_grpo(grpo::PolicyInterface& policy, const std::vector<grpo::TrainingTarget>& targets,
                                                  render::RenderProvider& renderer, similarity::EmbeddingProvider& embedder,
                                                  const LoopConfig& config)
{
    auto draw = [&](const std::string& code) -> std::optional<render::RasterImage> {
        auto lower = code;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lower.find("<html") == std::string::npos || lower.find("</html>") == std::string::npos)
            return std::nullopt;
        try {
            return render::fit_pixel_budget(renderer.render(code, render::Viewport{}).image);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    auto sim = [&](const render::RasterImage& a, const render::RasterImage& b) {
        return clamped_cosine(embedder.embed(a), embedder.embed(b));
    };

    std::vector<grpo::GroupRecord> out;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        policy.snapshot();
        for (const auto& target : targets) {
            std::string dir = "epoch_" + std::to_string(epoch) + "/" + target.id;
            grpo::GenerateRequest g{target.id, &target.image, std::string(refine::system_prompt()), refine::initial_prompt(), {}};
            std::string draft = policy.generate(g);
            auto draft_img = draw(draft);
            double s_t = draft_img ? sim(*draft_img, target.image) : 0.0;
            render::RasterImage blank;
            grpo::RefineRequest r{target.id, &target.image, draft_img ? &*draft_img : &blank, draft,
                                  std::string(refine::system_prompt()), refine::refinement_prompt(draft), {}};
            auto candidates = policy.refine(r, config.group_size);

            grpo::GroupRecord rec;
            rec.epoch = epoch;
            rec.target_id = target.id;
            std::vector<double> totals, ratios;
            for (int i = 0; i < config.group_size; ++i) {
                grpo::SampleRecord s;
                s.code_path = dir + "/sample_" + std::to_string(i) + ".html";
                s.s_t = s_t;
                auto img = draw(candidates[static_cast<std::size_t>(i)].code);
                if (img) {
                    s.render_path = dir + "/sample_" + std::to_string(i) + ".png";
                    s.s_next = sim(*img, target.image);
                }
                auto w = reward(img.has_value(), s_t, s.s_next, config.delta_min);
                s.reward = {w.format, w.improve, w.quality, w.total};
                s.ratio = std::exp(candidates[static_cast<std::size_t>(i)].logprob_new - candidates[static_cast<std::size_t>(i)].logprob_old);
                totals.push_back(w.total);
                ratios.push_back(s.ratio);
                rec.group.push_back(s);
            }
            auto adv = advantages(totals, config.eps_adv);
            for (std::size_t i = 0; i < adv.size(); ++i)
                rec.group[i].advantage = adv[i];
            rec.loss = loss(ratios, adv, config.clip_eps);
            policy.update({epoch, target.id, rec.loss, adv, ratios});
            out.push_back(rec);
        }
    }
    return out;
}

} // namespace refinekit::testkit::oracle
