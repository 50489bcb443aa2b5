#pragma once

#include <array>
#include <optional>
#include <vector>

#include "popstat/estimators.hpp"
#include "popstat/staypoints.hpp"

namespace popstat {

struct RelativeErrorResult {
    double overall = 0.0; // NaN when nothing was comparable
    std::vector<std::optional<double>> per_cell;
    int excluded = 0; // zero-truth, ABSENT-truth or ABSENT-estimate cells
};

/// Mean over cells of |truth - est| / |truth|; zero/ABSENT truth and ABSENT
/// estimates are excluded and counted. Throws DataError on size mismatch.
RelativeErrorResult relative_error(const std::vector<std::optional<double>>& truth,
                                   const std::vector<std::optional<double>>& est);

/// Truth column for one attribute as an alignable optional vector
/// (Visits -> c as a real number, AVG attributes -> y or ABSENT).
std::vector<std::optional<double>> truth_values(const TruthTable& t, Attribute a);

struct QuantileBuckets {
    std::vector<std::optional<double>> ratio; // l_mu / L_mu; ABSENT when L_mu = 0
    std::vector<int> bucket;                  // 0..4, -1 for excluded cells
    std::array<double, 4> cuts{};             // nearest-rank cut points
    std::array<int, 5> sizes{};
};

/// Stay-point sampling ratio per cell and its five quantile buckets
/// (nearest-rank cuts at p = .2/.4/.6/.8; ties fall to the lower bucket).
QuantileBuckets quantile_buckets(const Dataset& truth, const Dataset& observed,
                                 const CityGrid& grid);

/// Mean per-cell error within each bucket; ABSENT for empty buckets.
std::array<std::optional<double>, 5> per_bucket_error(
    const std::vector<std::optional<double>>& per_cell_errors, const QuantileBuckets& buckets);

struct VarianceTable {
    // visits, duration, distance: mean over cells of the per-cell variance of
    // per-user values, min-max normalized to [0,1] within the cell first.
    std::array<std::optional<double>, 3> value{};
    std::array<int, 3> cells_used{};
};

VarianceTable variance_analysis(const Dataset& truth, const CityGrid& grid);

/// Standard Pearson r; throws DataError for n < 2 or constant input.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct RunStats {
    double mean = 0.0;
    double sd = 0.0; // sample sd (k-1), 0 for k = 1
};

RunStats aggregate_runs(const std::vector<double>& xs);

} // namespace popstat
