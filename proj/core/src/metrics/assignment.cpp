#include "refinekit/metrics/assignment.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace refinekit::metrics {

// Shortest-augmenting-path Hungarian method on the square cost matrix
// -weights padded with zeros.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights)
{
    const std::size_t rows = weights.size();
    const std::size_t cols = rows ? weights[0].size() : 0;
    for (const auto& r : weights)
        if (r.size() != cols)
            throw std::invalid_argument("max_weight_assignment: ragged matrix");
    if (rows == 0 || cols == 0)
        return std::vector<int>(rows, -1);

    const std::size_t n = std::max(rows, cols);
    auto cost = [&](std::size_t i, std::size_t j) { return i < rows && j < cols ? -weights[i][j] : 0.0; };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] >= 1 && p[j] <= rows && j <= cols)
            out[p[j] - 1] = static_cast<int>(j - 1);
    return out;
}

} // namespace refinekit::metrics
