#pragma once

#include <vector>

namespace refinekit::metrics {

// Maximum-weight assignment on an n x m weight matrix (rows may be ragged
// only if empty). Returns, per row, the assigned column or -1. Every row and
// column is used at most once; the total weight of the returned assignment
// is maximal among all one-to-one assignments.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

} // namespace refinekit::metrics
