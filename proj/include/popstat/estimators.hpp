#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "popstat/city.hpp"
#include "popstat/staypoints.hpp"

namespace popstat {

enum class Agg { Count, Avg };
enum class Attribute { Visits, Duration, Distance };

std::string attribute_name(Attribute a);
Attribute attribute_from_name(const std::string& s);

struct Query {
    Agg agg = Agg::Count;
    Attribute attribute = Attribute::Visits;
    int cell = 0;
};

/// COUNT pairs only with VISITS; AVG only with DURATION or DISTANCE.
void validate_query(const Query& q, int cell_count);

/// Ground-truth per-cell statistics. Distances of first stay-points are
/// undefined and contribute 0 to sums; denominators are always the full
/// stay-point count c.
struct TruthTable {
    std::vector<std::int64_t> c;       // visit counts
    std::vector<double> t_dur;         // duration sums
    std::vector<double> t_dist;        // distance sums (defined hops only)

    int cell_count() const { return (int)c.size(); }
    /// t^alpha / c, ABSENT when c = 0. For Visits returns c itself.
    std::optional<double> value(Attribute a, int cell) const;
};

struct EstimateTable {
    std::string method;    // oblivious | debiased | debiased-ratio | learned-...
    std::string attribute; // visits | duration | distance
    std::vector<std::optional<double>> value;     // per cell; ABSENT when undefined
    std::vector<std::int64_t> support;            // observed stay-points per cell
    std::vector<std::string> flags;               // per cell, ';'-joined tokens
    std::vector<int> skipped_home_cells;          // debiasing: home cells with n=0

    int cell_count() const { return (int)value.size(); }
};

TruthTable truth_stats(const Dataset& data, const CityGrid& grid);

/// Plain observed mean per cell; ABSENT where nothing was observed.
EstimateTable oblivious_avg(const Dataset& obs, const CityGrid& grid, Attribute attr);

/// (N/n) * observed visit count. Throws DataError when n = 0.
EstimateTable oblivious_count(const Dataset& obs, std::int64_t total_population,
                              std::int64_t observed_users, const CityGrid& grid);

/// Inverse-probability weighting by home cell: each visit weighted N_h/n_h.
/// Home cells with n = 0 contribute nothing and are listed as skipped.
EstimateTable debiased_count(const Dataset& obs, const SamplingProfile& profile,
                             const CityGrid& grid);

/// Weighted attribute sum divided by the known true count c (the unbiased
/// form). ratio_variant divides by the estimated count instead - that ratio
/// is biased and exists for the demonstration.
EstimateTable debiased_avg(const Dataset& obs, const SamplingProfile& profile,
                           const CityGrid& grid, Attribute attr, const TruthTable& c_known,
                           bool ratio_variant = false);

enum class EstimatorId {
    ObliviousCount,
    ObliviousAvgDuration,
    ObliviousAvgDistance,
    DebiasedCount,
    DebiasedAvgDuration,
    DebiasedAvgDistance,
    TruthCount, // oracle: returns the truth regardless of the draw
};

std::string estimator_name(EstimatorId id);

struct BiasVarianceReport {
    std::string estimator;
    // per cell; NaN where truth is undefined or fewer than 2 draws succeeded
    std::vector<double> bias;
    std::vector<double> variance; // sample variance (R-1 denominator)
    std::vector<double> mse;
    std::vector<int> excluded_draws;
};

/// Draw one biased sample per seed, run every estimator on every draw, and
/// report per-cell empirical bias / variance / MSE against the truth.
std::vector<BiasVarianceReport> monte_carlo_bias_variance(
    const Dataset& truth, const CityGrid& grid, const std::vector<double>& targets,
    const std::vector<EstimatorId>& ids, const std::vector<std::uint64_t>& seeds);

// EstimateTable CSV: cell_id,method,attribute,estimate,support_count,flags
void write_estimates_csv(const std::string& path, const EstimateTable& t);
EstimateTable read_estimates_csv(const std::string& path);

// BiasVarianceReport CSV: cell_id,estimator,bias,variance,mse,excluded_draws
void write_bias_variance_csv(const std::string& path,
                             const std::vector<BiasVarianceReport>& reports);

} // namespace popstat
