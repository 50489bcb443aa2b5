#include "popstat/staypoints.hpp"

#include <algorithm>
#include <stdexcept>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"

namespace popstat {

std::map<std::string, std::vector<RawPing>> parse_pings(const std::string& path) {
    std::map<std::string, std::vector<RawPing>> out;
    {
        std::ifstream probe(path);
        if (!probe) throw ParseError(path + ": cannot open");
        if (probe.peek() == std::ifstream::traits_type::eof()) return out; // empty file is fine
    }
    CsvReader reader(path, {"user_id", "lat", "lon", "timestamp"});
    while (auto row = reader.next()) {
        RawPing p;
        p.user_id = (*row)[0];
        if (p.user_id.empty()) throw ParseError(reader.where() + ": empty user_id");
        p.point.lat = parse_double((*row)[1], reader.where());
        p.point.lon = parse_double((*row)[2], reader.where());
        p.timestamp = parse_int((*row)[3], reader.where());
        if (p.point.lat < -90.0 || p.point.lat > 90.0)
            throw ParseError(reader.where() + ": latitude out of range: " + (*row)[1]);
        if (p.point.lon < -180.0 || p.point.lon > 180.0)
            throw ParseError(reader.where() + ": longitude out of range: " + (*row)[2]);
        if (p.timestamp < 0)
            throw ParseError(reader.where() + ": negative timestamp");
        out[p.user_id].push_back(std::move(p));
    }
    for (auto& [id, pings] : out)
        std::stable_sort(pings.begin(), pings.end(),
                         [](const RawPing& a, const RawPing& b) { return a.timestamp < b.timestamp; });
    return out;
}

std::vector<StayPoint> detect_staypoints(const std::vector<RawPing>& pings,
                                         double dist_thresh_m, double time_thresh_s) {
    if (dist_thresh_m <= 0.0 || time_thresh_s <= 0.0)
        throw ConfigError("detect_staypoints: thresholds must be positive");
    for (std::size_t i = 1; i < pings.size(); ++i)
        if (pings[i].timestamp < pings[i - 1].timestamp)
            throw DataError("detect_staypoints: pings not sorted by timestamp");

    std::vector<StayPoint> out;
    const std::size_t n = pings.size();
    std::size_t i = 0;
    while (i < n) {
        // Grow the window while pings stay near the anchor. Distances are taken
        // in a projection centred on the anchor itself, so the extent guard
        // never trips for the ~200 m scales this scan cares about.
        const GeoPoint anchor = pings[i].point;
        std::size_t j = i + 1;
        while (j < n && euclid(project(pings[j].point, anchor), LocalPoint{}) <= dist_thresh_m)
            ++j;
        const double span = static_cast<double>(pings[j - 1].timestamp - pings[i].timestamp);
        if (j > i + 1 && span >= time_thresh_s) {
            StayPoint sp;
            double lat = 0.0, lon = 0.0;
            for (std::size_t m = i; m < j; ++m) {
                lat += pings[m].point.lat;
                lon += pings[m].point.lon;
            }
            const double cnt = static_cast<double>(j - i);
            sp.centroid = {lat / cnt, lon / cnt};
            sp.arrive_t = pings[i].timestamp;
            sp.leave_t = pings[j - 1].timestamp;
            sp.duration_s = span;
            out.push_back(sp);
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<StayPoint> derive_attributes(std::vector<StayPoint> sps, const CityGrid& grid) {
    std::vector<std::optional<LocalPoint>> local(sps.size());
    for (std::size_t i = 0; i < sps.size(); ++i) {
        auto& sp = sps[i];
        sp.duration_s = static_cast<double>(sp.leave_t - sp.arrive_t);
        try {
            LocalPoint p = project(sp.centroid, grid.origin);
            local[i] = p;
            sp.cell = grid.contains(p) ? std::optional<int>(locate(p, grid)) : std::nullopt;
        } catch (const ExtentError&) {
            sp.cell = std::nullopt; // too far from the city to project
        }
        if (i == 0 || !local[i] || !local[i - 1])
            sp.dist_from_prev_m = std::nullopt;
        else
            sp.dist_from_prev_m = euclid(*local[i - 1], *local[i]);
    }
    return sps;
}

int assign_home(const UserSequence& seq, const CityGrid& grid) {
    if (seq.staypoints.empty())
        throw NoHomeError("assign_home: user " + seq.user_id + " has no stay-points");
    std::map<int, double> total;
    for (const auto& sp : seq.staypoints)
        if (sp.cell) total[*sp.cell] += sp.duration_s;
    if (total.empty())
        throw NoHomeError("assign_home: user " + seq.user_id + " has no in-grid stay-points");
    int best = -1;
    double best_d = -1.0;
    for (const auto& [cell, dur] : total) // map order: ties go to the lowest id
        if (dur > best_d) {
            best = cell;
            best_d = dur;
        }
    return best;
}

IngestResult build_dataset(const std::map<std::string, std::vector<RawPing>>& pings,
                           const CityGrid& grid, double dist_thresh_m, double time_thresh_s) {
    IngestResult res;
    for (const auto& [user, ps] : pings) {
        UserSequence seq;
        seq.user_id = user;
        seq.staypoints = derive_attributes(detect_staypoints(ps, dist_thresh_m, time_thresh_s), grid);
        try {
            seq.home = assign_home(seq, grid);
        } catch (const NoHomeError&) {
            ++res.dropped_users;
            continue;
        }
        res.dataset.push_back(std::move(seq));
    }
    return res;
}

static const std::vector<std::string> kDatasetHeader = {
    "user_id", "seq_idx",    "lat",
    "lon",     "arrive_t",   "leave_t",
    "duration_s", "dist_from_prev_m", "cell_id", "home_cell_id"};

void write_dataset_csv(const std::string& path, const Dataset& data) {
    CsvWriter w(path, kDatasetHeader);
    for (const auto& seq : data) {
        for (std::size_t i = 0; i < seq.staypoints.size(); ++i) {
            const auto& sp = seq.staypoints[i];
            w.row({seq.user_id, fmt_int((std::int64_t)i), fmt_double(sp.centroid.lat),
                   fmt_double(sp.centroid.lon), fmt_int(sp.arrive_t), fmt_int(sp.leave_t),
                   fmt_double(sp.duration_s),
                   sp.dist_from_prev_m ? fmt_double(*sp.dist_from_prev_m) : "",
                   sp.cell ? fmt_int(*sp.cell) : "",
                   seq.home ? fmt_int(*seq.home) : ""});
        }
    }
}

Dataset read_dataset_csv(const std::string& path) {
    CsvReader reader(path, kDatasetHeader);
    Dataset data;
    while (auto row = reader.next()) {
        const std::string& user = (*row)[0];
        const std::int64_t idx = parse_int((*row)[1], reader.where());
        if (data.empty() || data.back().user_id != user) {
            for (const auto& seq : data)
                if (seq.user_id == user)
                    throw ParseError(reader.where() + ": user " + user + " rows are not contiguous");
            data.push_back(UserSequence{user, {}, std::nullopt});
        }
        auto& seq = data.back();
        if (idx != (std::int64_t)seq.staypoints.size())
            throw ParseError(reader.where() + ": seq_idx out of order for user " + user);
        StayPoint sp;
        sp.centroid.lat = parse_double((*row)[2], reader.where());
        sp.centroid.lon = parse_double((*row)[3], reader.where());
        sp.arrive_t = parse_int((*row)[4], reader.where());
        sp.leave_t = parse_int((*row)[5], reader.where());
        sp.duration_s = parse_double((*row)[6], reader.where());
        if (!(*row)[7].empty()) sp.dist_from_prev_m = parse_double((*row)[7], reader.where());
        if (!(*row)[8].empty()) sp.cell = (int)parse_int((*row)[8], reader.where());
        if (!(*row)[9].empty()) {
            int home = (int)parse_int((*row)[9], reader.where());
            if (seq.home && *seq.home != home)
                throw ParseError(reader.where() + ": conflicting home for user " + user);
            seq.home = home;
        }
        seq.staypoints.push_back(sp);
    }
    return data;
}

} // namespace popstat
