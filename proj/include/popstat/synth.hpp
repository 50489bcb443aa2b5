#pragma once

#include <cstdint>
#include <vector>

#include "popstat/city.hpp"
#include "popstat/staypoints.hpp"

// Synthetic laboratory: a grid city with planted demographics, POI-category
// attribute distributions, demographic-dependent sampling ratios, and biased
// user-level sampling. The generative process is an explicit stand-in for the
// (unavailable) real collection process; it only plants the statistical
// structure the estimators and the learner depend on.

namespace popstat {

struct GenConfig {
    std::uint64_t seed = 1;

    // grid
    GeoPoint origin{40.0, -100.0};
    double cell_size_m = 1000.0;
    int rows = 5;
    int cols = 5;

    // demographics
    double population_mean = 200.0;
    double population_spread = 40.0;
    double income_mean = 60000.0;
    double income_spread = 15000.0;
    std::array<double, 3> age_concentration{2.0, 5.0, 2.0}; // Dirichlet (child, adult, senior)

    // POIs
    int k_categories = 5;
    int poi_min = 3;
    int poi_max = 8;
    double poi_mix_concentration = 0.7; // Dirichlet over categories, per cell

    // per-category visit attributes (size k, padded with the last value)
    std::vector<double> duration_mean_s{600, 1800, 3600, 5400, 7200};
    std::vector<double> duration_spread_s{360, 1080, 2160, 3240, 4320};
    std::vector<double> distance_mean_m{800, 1500, 2500, 4000, 6000};
    std::vector<double> distance_spread_m{300, 500, 900, 1500, 2500};

    // mobility
    double visits_mean = 6.0;
    double visits_spread = 1.0;
    /// Geometric(p) bonus of extra visits to the user's favourite home-cell
    /// POI ("regulars" give per-cell visit counts a heavy right tail).
    double home_regular_p = 0.35;
    /// Multiplier on home-visit durations (mean and spread). Values != 1 make
    /// a cell's observed duration mix depend on how many of its residents were
    /// sampled, planting a bias that plain observed means inherit.
    double home_duration_scale = 1.0;

    // sampling ratio: s = clamp(base + income_slope*z_income + sum age_slopes*frac)
    double base_ratio = 0.05;
    double income_slope = 0.0;
    std::array<double, 3> age_slopes{0.0, 0.0, 0.0};
};

inline constexpr double kMinSamplingRatio = 0.005;

/// round-half-to-even for sample counts.
std::int64_t round_half_even(double x);

CityModel generate_city(const GenConfig& cfg);

/// Ground-truth population: every resident of every cell, stay-points at
/// POIs, attributes derived, home = the planted residence cell.
Dataset generate_population(const CityModel& city, const GenConfig& cfg);

/// Deterministic per-cell target sampling ratios from planted demographics.
std::vector<double> sampling_targets(const CityModel& city, const GenConfig& cfg);

struct SampleDraw {
    Dataset observed;
    SamplingProfile profile; // realized N, n per cell
};

/// Per cell, round_half_even(s*N) users drawn uniformly without replacement
/// from the cell's home population; whole sequences kept.
SampleDraw biased_sample(const Dataset& truth, int cell_count,
                         const std::vector<double>& targets, std::uint64_t seed);

/// k independent draws with seeds derived from base_seed.
std::vector<SampleDraw> resample_k(const Dataset& truth, int cell_count,
                                   const std::vector<double>& targets, int k,
                                   std::uint64_t base_seed);

} // namespace popstat
