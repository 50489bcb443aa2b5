#include "popstat/features.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"

namespace popstat {

Eigen::VectorXd poi_distribution(const std::vector<Poi>& pois, int k) {
    if (k < 1) throw ConfigError("poi_distribution: k must be >= 1");
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k);
    for (const auto& p : pois) {
        if (p.category < 0 || p.category >= k)
            throw DataError("poi_distribution: category " + fmt_int(p.category) +
                            " outside 0.." + fmt_int(k - 1));
        h[p.category] += 1.0;
    }
    if (!pois.empty()) h /= (double)pois.size();
    return h;
}

FeatureScaler fit_scaler(const CityModel& city) {
    const auto n = city.cells.size();
    if (n < 2) throw DataError("fit_scaler: need at least 2 cells");
    FeatureScaler s;
    for (const auto& c : city.cells) {
        s.population_mean += (double)c.population;
        s.income_mean += c.median_income;
    }
    s.population_mean /= (double)n;
    s.income_mean /= (double)n;
    double pv = 0.0, iv = 0.0;
    for (const auto& c : city.cells) {
        pv += ((double)c.population - s.population_mean) * ((double)c.population - s.population_mean);
        iv += (c.median_income - s.income_mean) * (c.median_income - s.income_mean);
    }
    s.population_spread = std::sqrt(pv / (double)n);
    s.income_spread = std::sqrt(iv / (double)n);
    return s;
}

Eigen::VectorXd cell_features(const CityCell& cell, int k, const FeatureScaler& s) {
    Eigen::VectorXd e(k + 2);
    e.head(k) = poi_distribution(cell.pois, k);
    e[k] = s.population_spread > 0.0
               ? ((double)cell.population - s.population_mean) / s.population_spread
               : 0.0;
    e[k + 1] =
        s.income_spread > 0.0 ? (cell.median_income - s.income_mean) / s.income_spread : 0.0;
    return e;
}

Eigen::MatrixXd feature_matrix(const CityModel& city, const FeatureScaler& s) {
    const int k = city.k_categories;
    Eigen::MatrixXd X(city.cells.size(), k + 2);
    for (std::size_t mu = 0; mu < city.cells.size(); ++mu)
        X.row(mu) = cell_features(city.cells[mu], k, s).transpose();
    return X;
}

void write_features_csv(const std::string& path, const Eigen::MatrixXd& features) {
    std::vector<std::string> header{"cell_id"};
    for (int j = 0; j < features.cols(); ++j) header.push_back("f_" + fmt_int(j));
    CsvWriter w(path, header);
    for (int i = 0; i < features.rows(); ++i) {
        std::vector<std::string> row{fmt_int(i)};
        for (int j = 0; j < features.cols(); ++j) row.push_back(fmt_double(features(i, j)));
        w.row(row);
    }
}

void write_scaler_json(const std::string& path, int k, const FeatureScaler& s) {
    nlohmann::json j{{"k", k},
                     {"population_mean", s.population_mean},
                     {"population_spread", s.population_spread},
                     {"income_mean", s.income_mean},
                     {"income_spread", s.income_spread}};
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << j.dump(1) << '\n';
}

FeatureScaler read_scaler_json(const std::string& path, int& k_out) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
        k_out = j.at("k").get<int>();
        return FeatureScaler{j.at("population_mean").get<double>(),
                             j.at("population_spread").get<double>(),
                             j.at("income_mean").get<double>(),
                             j.at("income_spread").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace popstat
