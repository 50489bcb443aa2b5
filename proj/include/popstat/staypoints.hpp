#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popstat/geo.hpp"

namespace popstat {

struct RawPing {
    std::string user_id;
    GeoPoint point;
    std::int64_t timestamp = 0; // unix seconds
};

struct StayPoint {
    GeoPoint centroid;
    std::int64_t arrive_t = 0;
    std::int64_t leave_t = 0;
    double duration_s = 0.0;                    // derived: leave_t - arrive_t
    std::optional<double> dist_from_prev_m;     // derived: absent for the first stay-point
    std::optional<int> cell;                    // derived: absent outside the grid extent
};

struct UserSequence {
    std::string user_id;
    std::vector<StayPoint> staypoints; // ordered by arrive_t, disjoint in time
    std::optional<int> home;           // cell with maximal summed stay duration
};

/// Users ordered by user_id (construction keeps this sorted; file io preserves it).
using Dataset = std::vector<UserSequence>;

/// Pings grouped by user, each group sorted ascending by timestamp (stable).
/// Empty or header-only file -> empty map. Malformed rows name their line.
std::map<std::string, std::vector<RawPing>> parse_pings(const std::string& path);

/// Classic stay-point scan: grow a window while every ping stays within
/// dist_thresh_m of the window's first ping; emit when the window spans at
/// least time_thresh_s; advance past emitted windows, else slide by one.
/// Centroid is the unweighted mean of the window's lat/lon.
std::vector<StayPoint> detect_staypoints(const std::vector<RawPing>& pings,
                                         double dist_thresh_m, double time_thresh_s);

/// Fill duration, grid cell, and consecutive distances (ABSENT for the first
/// stay-point, and for hops where either endpoint falls outside the
/// projection extent).
std::vector<StayPoint> derive_attributes(std::vector<StayPoint> sps, const CityGrid& grid);

/// Cell id with maximal summed stay duration; ties -> lowest id. Throws
/// NoHomeError when the sequence is empty or no stay-point lies on the grid.
int assign_home(const UserSequence& seq, const CityGrid& grid);

struct IngestResult {
    Dataset dataset;
    std::int64_t dropped_users = 0; // users with no in-grid stay-point
};

/// parse -> SPD -> derive -> home, dropping users that cannot be homed.
IngestResult build_dataset(const std::map<std::string, std::vector<RawPing>>& pings,
                           const CityGrid& grid, double dist_thresh_m, double time_thresh_s);

// Stay-point dataset CSV:
// user_id,seq_idx,lat,lon,arrive_t,leave_t,duration_s,dist_from_prev_m,cell_id,home_cell_id
// (empty fields for ABSENT values; doubles round-trip bit-exactly).
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

} // namespace popstat
