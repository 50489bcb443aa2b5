#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "popstat/geo.hpp"

namespace popstat {

struct Poi {
    LocalPoint location;
    int category = 0; // 0..k-1
};

struct CityCell {
    std::int64_t population = 0;              // true resident count N_mu
    double median_income = 0.0;
    std::array<double, 3> age_fractions{};    // child, adult, senior; sums to 1
    std::vector<Poi> pois;
};

struct CityModel {
    CityGrid grid;
    int k_categories = 0;
    std::vector<CityCell> cells; // indexed by cell id

    std::int64_t total_population() const {
        std::int64_t t = 0;
        for (const auto& c : cells) t += c.population;
        return t;
    }
};

/// Per-cell sampling bookkeeping: true home population N, observed users n.
struct SamplingProfile {
    std::vector<std::int64_t> true_users;     // N_mu
    std::vector<std::int64_t> observed_users; // n_mu

    int cell_count() const { return (int)true_users.size(); }
    std::int64_t total_true() const;
    std::int64_t total_observed() const;
    /// n_mu / N_mu; 0 when N_mu = 0.
    double ratio(int cell) const;
};

void write_city_json(const std::string& path, const CityModel& city);
CityModel read_city_json(const std::string& path);

// Profile CSV: cell_id,N,n,s
void write_profile_csv(const std::string& path, const SamplingProfile& p);
SamplingProfile read_profile_csv(const std::string& path);

} // namespace popstat
