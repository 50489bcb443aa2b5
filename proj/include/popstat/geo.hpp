#pragma once

#include <cmath>
#include <numbers>

#include "popstat/errors.hpp"

// City-scale planar geometry: equirectangular projection around a fixed
// origin, Euclidean distances, and a row-major rectangular grid of cells.

namespace popstat {

inline constexpr double kEarthRadiusM = 6371000.0;
/// Projection is only honest near the origin; half a degree is ~55 km.
inline constexpr double kMaxExtentDeg = 0.5;

struct GeoPoint {
    double lat = 0.0; // degrees
    double lon = 0.0; // degrees
};

struct LocalPoint {
    double x = 0.0; // metres east of origin
    double y = 0.0; // metres north of origin
};

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Equirectangular: metres east/north of origin; longitude scaled by
/// cos(origin latitude). Throws ExtentError beyond ~0.5 deg from origin.
inline LocalPoint project(GeoPoint p, GeoPoint origin) {
    const double dlat = p.lat - origin.lat;
    const double dlon = p.lon - origin.lon;
    if (std::abs(dlat) > kMaxExtentDeg || std::abs(dlon) > kMaxExtentDeg)
        throw ExtentError("project: point too far from origin");
    return {kEarthRadiusM * std::cos(deg2rad(origin.lat)) * deg2rad(dlon),
            kEarthRadiusM * deg2rad(dlat)};
}

/// Inverse of project() (same linear map, solved for lat/lon).
inline GeoPoint unproject(LocalPoint p, GeoPoint origin) {
    return {origin.lat + rad2deg(p.y / kEarthRadiusM),
            origin.lon + rad2deg(p.x / (kEarthRadiusM * std::cos(deg2rad(origin.lat))))};
}

inline double euclid(LocalPoint a, LocalPoint b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Row-major grid of square cells anchored at a geographic origin; cell ids
/// run 0..rows*cols-1, row = id / cols, col = id % cols.
struct CityGrid {
    GeoPoint origin;
    double cell_size_m = 1000.0;
    int rows = 1;
    int cols = 1;

    int cell_count() const { return rows * cols; }
    double width_m() const { return cols * cell_size_m; }
    double height_m() const { return rows * cell_size_m; }

    bool contains(LocalPoint p) const {
        return p.x >= 0.0 && p.x <= width_m() && p.y >= 0.0 && p.y <= height_m();
    }

    /// South-west corner of a cell, in local coordinates.
    LocalPoint cell_origin(int cell) const {
        return {(cell % cols) * cell_size_m, (cell / cols) * cell_size_m};
    }

    LocalPoint cell_center(int cell) const {
        LocalPoint o = cell_origin(cell);
        return {o.x + 0.5 * cell_size_m, o.y + 0.5 * cell_size_m};
    }
};

/// Cell id for a local point. Boundary pings belong to the cell with the
/// larger index (floor), except the maximal east/north edges, which fold
/// into the last row/column so the grid exactly tiles its extent.
inline int locate(LocalPoint p, const CityGrid& g) {
    if (!g.contains(p)) throw ExtentError("locate: point outside grid extent");
    int col = static_cast<int>(std::floor(p.x / g.cell_size_m));
    int row = static_cast<int>(std::floor(p.y / g.cell_size_m));
    if (col == g.cols) --col;
    if (row == g.rows) --row;
    return row * g.cols + col;
}

} // namespace popstat
