#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "popstat/city.hpp"

// Per-cell feature vectors e_mu = [poi category histogram (k), population_z,
// income_z]; the two census features are z-scored city-wide.

namespace popstat {

/// Normalized POI category histogram; all-zero for POI-less cells.
Eigen::VectorXd poi_distribution(const std::vector<Poi>& pois, int k);

struct FeatureScaler {
    double population_mean = 0.0;
    double population_spread = 0.0; // population sd over cells; 0 -> constant feature 0
    double income_mean = 0.0;
    double income_spread = 0.0;
};

/// City-wide moments of the raw census features. Throws on < 2 cells.
FeatureScaler fit_scaler(const CityModel& city);

/// [poi_dist, population_z, income_z], length k+2.
Eigen::VectorXd cell_features(const CityCell& cell, int k, const FeatureScaler& s);

/// One row per cell.
Eigen::MatrixXd feature_matrix(const CityModel& city, const FeatureScaler& s);

// CSV `cell_id,f_0..f_{k+1}` plus a sidecar JSON carrying k and the scaler.
void write_features_csv(const std::string& path, const Eigen::MatrixXd& features);
void write_scaler_json(const std::string& path, int k, const FeatureScaler& s);
FeatureScaler read_scaler_json(const std::string& path, int& k_out);

} // namespace popstat
