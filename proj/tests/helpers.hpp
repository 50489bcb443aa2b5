#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "popstat/city.hpp"
#include "popstat/geo.hpp"
#include "popstat/staypoints.hpp"

// Shared fixture builders for the unit tests.

namespace testutil {

inline const popstat::GeoPoint kOrigin{40.0, -100.0};

inline popstat::CityGrid grid(int rows, int cols, double cell_m = 100.0) {
    return popstat::CityGrid{kOrigin, cell_m, rows, cols};
}

/// Ping at a local (x, y) metre offset from the fixture origin.
inline popstat::RawPing ping(const std::string& user, double x, double y, std::int64_t t) {
    return {user, popstat::unproject({x, y}, kOrigin), t};
}

/// Stay-point carrying only what the estimators consume.
inline popstat::StayPoint sp(std::optional<int> cell, double duration_s,
                             std::optional<double> dist_m = std::nullopt) {
    popstat::StayPoint s;
    s.arrive_t = 0;
    s.leave_t = static_cast<std::int64_t>(duration_s);
    s.duration_s = duration_s;
    s.dist_from_prev_m = dist_m;
    s.cell = cell;
    return s;
}

inline popstat::UserSequence user(std::string id, int home,
                                  std::vector<popstat::StayPoint> sps) {
    return {std::move(id), std::move(sps), home};
}

/// Scratch directory, wiped on construction and destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& name) : path(std::filesystem::path("scratch") / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace testutil
