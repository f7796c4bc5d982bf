#include "refinekit/grpo/reward.hpp"

#include "refinekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace refinekit::grpo {

void validate(const GrpoConfig& c)
{
    if (c.group_size < 2)
        throw ConfigError("grpo: group_size must be at least 2");
    if (!(c.clip_eps > 0 && c.clip_eps < 1))
        throw ConfigError("grpo: clip_eps must lie in (0, 1)");
    if (!(c.delta_min >= 0))
        throw ConfigError("grpo: delta_min must be non-negative");
    if (!(c.eps_adv > 0))
        throw ConfigError("grpo: eps_adv must be positive");
    if (c.epochs < 1)
        throw ConfigError("grpo: epochs must be at least 1");
}

bool passes_gate(double s_t, double s_next, double delta_min) { return s_next - s_t - delta_min > kGateTolerance; }

double ris(double s_t, double s_next, double delta_min)
{
    if (s_t >= kPerfectSimilarity)
        return 0.0;
    if (passes_gate(s_t, s_next, delta_min))
        return (s_next - s_t) / (1.0 - s_t);
    return 0.0;
}

RewardBreakdown composite_reward(bool format_ok, double s_t, double s_next, double delta_min)
{
    if (!format_ok)
        return {-1.0, 0.0, 0.0, -1.0};
    RewardBreakdown r;
    r.r_improve = passes_gate(s_t, s_next, delta_min) ? 1.0 : 0.0;
    r.r_quality = r.r_improve > 0 ? ris(s_t, s_next, delta_min) : 0.0;
    r.total = r.r_format + r.r_improve + r.r_quality;
    return r;
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double eps_adv)
{
    if (rewards.size() < 2)
        throw GroupTooSmall("group_advantages: need at least 2 rewards, got " + std::to_string(rewards.size()));
    const double n = static_cast<double>(rewards.size());
    double mean = 0;
    for (double r : rewards)
        mean += r;
    mean /= n;
    // Second pass removes the rounding error of the first, so equal rewards
    // give a mean equal to them and zero advantages.
    double residual = 0;
    for (double r : rewards)
        residual += r - mean;
    mean += residual / n;
    double var = 0;
    for (double r : rewards)
        var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards)
        out.push_back((r - mean) / (sd + eps_adv));
    return out;
}

double grpo_loss(const std::vector<double>& ratios, const std::vector<double>& advantages, double clip_eps)
{
    if (ratios.size() != advantages.size() || ratios.empty())
        throw LengthMismatch("grpo_loss: " + std::to_string(ratios.size()) + " ratios vs " + std::to_string(advantages.size()) +
                             " advantages");
    double sum = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double clipped = std::clamp(ratios[i], 1.0 - clip_eps, 1.0 + clip_eps);
        sum += std::min(ratios[i] * advantages[i], clipped * advantages[i]);
    }
    return -sum / static_cast<double>(ratios.size());
}

double policy_ratio(double logprob_new, double logprob_old) { return std::exp(logprob_new - logprob_old); }

} // namespace refinekit::grpo
