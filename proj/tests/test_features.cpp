#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "popstat/csv.hpp"
#include "popstat/features.hpp"
#include "popstat/synth.hpp"

using namespace popstat;

namespace {

CityModel two_cell_city(double income0, double income1) {
    CityModel city;
    city.grid = testutil::grid(1, 2);
    city.k_categories = 3;
    city.cells.resize(2);
    city.cells[0].population = 100;
    city.cells[0].median_income = income0;
    city.cells[1].population = 300;
    city.cells[1].median_income = income1;
    return city;
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("poi histogram counts and normalizes") {
    std::vector<Poi> pois{{{1, 1}, 0}, {{2, 2}, 0}, {{3, 3}, 1}, {{4, 4}, 2}};
    Eigen::VectorXd h = poi_distribution(pois, 3);
    CHECK(h[0] == 0.5);
    CHECK(h[1] == 0.25);
    CHECK(h[2] == 0.25);
    CHECK(h.sum() == doctest::Approx(1.0));

    CHECK(poi_distribution({}, 3).isZero()); // no POIs: all-zero vector

    std::vector<Poi> mono{{{1, 1}, 2}, {{2, 2}, 2}};
    Eigen::VectorXd one_hot = poi_distribution(mono, 4);
    CHECK(one_hot[2] == 1.0);
    CHECK(one_hot.sum() == 1.0);

    CHECK_THROWS_AS(poi_distribution(pois, 2), DataError); // category 2 out of range
    CHECK_THROWS_AS(poi_distribution(pois, 0), ConfigError);
}

TEST_CASE("histogram sums to 1 whenever a cell has POIs") {
    GenConfig cfg;
    cfg.seed = 71;
    CityModel city = generate_city(cfg);
    for (const auto& c : city.cells) {
        Eigen::VectorXd h = poi_distribution(c.pois, city.k_categories);
        if (!c.pois.empty()) CHECK(h.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("scaler z-scores with population spread") {
    CityModel city = two_cell_city(10.0, 30.0);
    FeatureScaler s = fit_scaler(city);
    CHECK(s.income_mean == 20.0);
    CHECK(s.income_spread == 10.0); // population sd, not sample sd
    CHECK(s.population_mean == 200.0);
    CHECK(s.population_spread == 100.0);

    Eigen::VectorXd e0 = cell_features(city.cells[0], 3, s);
    Eigen::VectorXd e1 = cell_features(city.cells[1], 3, s);
    REQUIRE(e0.size() == 5); // k + 2
    CHECK(e0[4] == -1.0);
    CHECK(e1[4] == 1.0);
    CHECK(e0[3] == -1.0);
    CHECK(e1[3] == 1.0);

    // applying the same scaler twice changes nothing
    Eigen::VectorXd again = cell_features(city.cells[0], 3, s);
    CHECK((e0 - again).norm() == 0.0);
}

TEST_CASE("a cell at the city mean gets z = 0; constant features map to 0") {
    CityModel city = two_cell_city(20.0, 20.0);
    city.cells[0].population = 150;
    city.cells[1].population = 250;
    FeatureScaler s = fit_scaler(city);
    CHECK(s.income_spread == 0.0);
    Eigen::VectorXd e = cell_features(city.cells[0], 3, s);
    CHECK(e[4] == 0.0); // constant income: feature pinned to 0

    CityModel mid = two_cell_city(10.0, 30.0);
    CityCell at_mean;
    at_mean.population = 200;
    at_mean.median_income = 20.0;
    Eigen::VectorXd em = cell_features(at_mean, 3, fit_scaler(mid));
    CHECK(em[3] == 0.0);
    CHECK(em[4] == 0.0);

    CityModel tiny;
    tiny.grid = testutil::grid(1, 1);
    tiny.k_categories = 1;
    tiny.cells.resize(1);
    CHECK_THROWS_AS(fit_scaler(tiny), DataError);
}

TEST_CASE("feature matrix has a z-scored row per cell") {
    GenConfig cfg;
    cfg.seed = 72;
    cfg.rows = 3;
    cfg.cols = 4;
    CityModel city = generate_city(cfg);
    FeatureScaler s = fit_scaler(city);
    Eigen::MatrixXd X = feature_matrix(city, s);
    CHECK(X.rows() == 12);
    CHECK(X.cols() == cfg.k_categories + 2);
    // z-scored columns have mean ~0 and population sd ~1
    for (int j : {cfg.k_categories, cfg.k_categories + 1}) {
        CHECK(X.col(j).mean() == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(std::sqrt(X.col(j).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int i = 0; i < X.rows(); ++i)
        CHECK((X.row(i).transpose() - cell_features(city.cells[i], cfg.k_categories, s)).norm() ==
              0.0);
}

TEST_CASE("feature csv and scaler json round-trip") {
    GenConfig cfg;
    cfg.seed = 73;
    cfg.rows = 2;
    cfg.cols = 3;
    CityModel city = generate_city(cfg);
    FeatureScaler s = fit_scaler(city);
    Eigen::MatrixXd X = feature_matrix(city, s);

    testutil::TempDir tmp("features_io");
    write_features_csv(tmp.file("f.csv"), X);
    std::vector<std::string> header{"cell_id"};
    for (int j = 0; j < X.cols(); ++j) header.push_back("f_" + fmt_int(j));
    CsvReader r(tmp.file("f.csv"), header);
    int i = 0;
    while (auto row = r.next()) {
        CHECK(parse_int((*row)[0], r.where()) == i);
        for (int j = 0; j < X.cols(); ++j)
            CHECK(parse_double((*row)[j + 1], r.where()) == X(i, j)); // bit-exact
        ++i;
    }
    CHECK(i == X.rows());

    write_scaler_json(tmp.file("s.json"), city.k_categories, s);
    int k = 0;
    FeatureScaler back = read_scaler_json(tmp.file("s.json"), k);
    CHECK(k == city.k_categories);
    CHECK(back.population_mean == s.population_mean);
    CHECK(back.population_spread == s.population_spread);
    CHECK(back.income_mean == s.income_mean);
    CHECK(back.income_spread == s.income_spread);
    CHECK_THROWS_AS(read_scaler_json(tmp.file("missing.json"), k), ParseError);
}

} // TEST_SUITE
