#include "popstat/city.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "popstat/csv.hpp"
#include "popstat/errors.hpp"

namespace popstat {

using nlohmann::json;

std::int64_t SamplingProfile::total_true() const {
    std::int64_t t = 0;
    for (auto v : true_users) t += v;
    return t;
}

std::int64_t SamplingProfile::total_observed() const {
    std::int64_t t = 0;
    for (auto v : observed_users) t += v;
    return t;
}

double SamplingProfile::ratio(int cell) const {
    if (true_users[cell] == 0) return 0.0;
    return static_cast<double>(observed_users[cell]) / static_cast<double>(true_users[cell]);
}

static void validate_city(const CityModel& city, const std::string& ctx) {
    if (city.grid.rows < 1 || city.grid.cols < 1 || city.grid.cell_size_m <= 0.0)
        throw DataError(ctx + ": degenerate grid");
    if (city.k_categories < 1) throw DataError(ctx + ": k_categories must be >= 1");
    if ((int)city.cells.size() != city.grid.cell_count())
        throw DataError(ctx + ": cell list does not match grid size");
    for (std::size_t i = 0; i < city.cells.size(); ++i) {
        const auto& c = city.cells[i];
        if (c.population < 0) throw DataError(ctx + ": negative population");
        double sum = c.age_fractions[0] + c.age_fractions[1] + c.age_fractions[2];
        if (c.population > 0 && std::abs(sum - 1.0) > 1e-9)
            throw DataError(ctx + ": age fractions of cell " + fmt_int((std::int64_t)i) +
                            " sum to " + fmt_double(sum));
        for (const auto& poi : c.pois) {
            if (poi.category < 0 || poi.category >= city.k_categories)
                throw DataError(ctx + ": POI category out of range in cell " + fmt_int((std::int64_t)i));
            if (locate(poi.location, city.grid) != (int)i)
                throw DataError(ctx + ": POI outside its cell " + fmt_int((std::int64_t)i));
        }
    }
}

void write_city_json(const std::string& path, const CityModel& city) {
    validate_city(city, path);
    json j;
    j["grid"] = {{"origin_lat", city.grid.origin.lat},
                 {"origin_lon", city.grid.origin.lon},
                 {"cell_size_m", city.grid.cell_size_m},
                 {"rows", city.grid.rows},
                 {"cols", city.grid.cols}};
    j["k_categories"] = city.k_categories;
    json cells = json::array();
    for (const auto& c : city.cells) {
        json pois = json::array();
        for (const auto& p : c.pois)
            pois.push_back({{"x", p.location.x}, {"y", p.location.y}, {"category", p.category}});
        cells.push_back({{"population", c.population},
                         {"median_income", c.median_income},
                         {"age_fractions", c.age_fractions},
                         {"pois", pois}});
    }
    j["cells"] = std::move(cells);
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << j.dump(1) << '\n';
}

CityModel read_city_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    CityModel city;
    try {
        const auto& g = j.at("grid");
        city.grid.origin = {g.at("origin_lat").get<double>(), g.at("origin_lon").get<double>()};
        city.grid.cell_size_m = g.at("cell_size_m").get<double>();
        city.grid.rows = g.at("rows").get<int>();
        city.grid.cols = g.at("cols").get<int>();
        city.k_categories = j.at("k_categories").get<int>();
        for (const auto& jc : j.at("cells")) {
            CityCell c;
            c.population = jc.at("population").get<std::int64_t>();
            c.median_income = jc.at("median_income").get<double>();
            auto af = jc.at("age_fractions");
            for (int a = 0; a < 3; ++a) c.age_fractions[a] = af.at(a).get<double>();
            for (const auto& jp : jc.at("pois"))
                c.pois.push_back(Poi{{jp.at("x").get<double>(), jp.at("y").get<double>()},
                                     jp.at("category").get<int>()});
            city.cells.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    validate_city(city, path);
    return city;
}

void write_profile_csv(const std::string& path, const SamplingProfile& p) {
    CsvWriter w(path, {"cell_id", "N", "n", "s"});
    for (int c = 0; c < p.cell_count(); ++c)
        w.row({fmt_int(c), fmt_int(p.true_users[c]), fmt_int(p.observed_users[c]),
               fmt_double(p.ratio(c))});
}

SamplingProfile read_profile_csv(const std::string& path) {
    CsvReader reader(path, {"cell_id", "N", "n", "s"});
    SamplingProfile p;
    std::int64_t expect = 0;
    while (auto row = reader.next()) {
        if (parse_int((*row)[0], reader.where()) != expect)
            throw ParseError(reader.where() + ": cell ids must be dense from 0");
        std::int64_t N = parse_int((*row)[1], reader.where());
        std::int64_t n = parse_int((*row)[2], reader.where());
        if (N < 0 || n < 0 || n > N)
            throw ParseError(reader.where() + ": need 0 <= n <= N");
        p.true_users.push_back(N);
        p.observed_users.push_back(n);
        ++expect;
    }
    return p;
}

} // namespace popstat
