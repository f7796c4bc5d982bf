#pragma once

#include <vector>

namespace refinekit::grpo {

inline constexpr double kPerfectSimilarity = 1.0 - 1e-6;
// Improvements within this distance of delta_min count as equal to it, so the
// gate is not decided by the rounding of s_next - s_t.
inline constexpr double kGateTolerance = 1e-12;

struct GrpoConfig {
    int group_size = 8;
    double eps_adv = 1e-8;
    double clip_eps = 0.2;
    double delta_min = 0.001;
    int epochs = 8;
};

// Throws ConfigError when a field is out of range.
void validate(const GrpoConfig& c);

// s_next - s_t exceeds delta_min by more than kGateTolerance.
bool passes_gate(double s_t, double s_next, double delta_min = 0.001);

// Relative improvement: (s_next - s_t) / (1 - s_t) when passes_gate and
// s_t < 1 - 1e-6, otherwise 0.
double ris(double s_t, double s_next, double delta_min = 0.001);

struct RewardBreakdown {
    double r_format = 0;  // -1 or 0
    double r_improve = 0; // 0 or 1
    double r_quality = 0; // [0, 1]
    double total = 0;

    bool operator==(const RewardBreakdown&) const = default;
};

RewardBreakdown composite_reward(bool format_ok, double s_t, double s_next, double delta_min = 0.001);

// (r_i - mean) / (std + eps_adv) with the population standard deviation.
// Throws GroupTooSmall for fewer than two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, double eps_adv = 1e-8);

// -(1/G) * sum_i min(rho_i * A_i, clip(rho_i, 1 - eps, 1 + eps) * A_i).
// Throws LengthMismatch when the lists differ in length or are empty.
double grpo_loss(const std::vector<double>& ratios, const std::vector<double>& advantages, double clip_eps = 0.2);

// exp(logprob_new - logprob_old)
double policy_ratio(double logprob_new, double logprob_old);

} // namespace refinekit::grpo
