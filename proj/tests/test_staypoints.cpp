#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "popstat/rng.hpp"
#include "popstat/staypoints.hpp"
#include "popstat/synth.hpp"

using namespace popstat;
using testutil::kOrigin;
using testutil::ping;

TEST_SUITE("parse_pings") {

TEST_CASE("empty and header-only files yield an empty map") {
    testutil::TempDir tmp("pings_empty");
    testutil::write_text(tmp.file("none.csv"), "");
    CHECK(parse_pings(tmp.file("none.csv")).empty());
    testutil::write_text(tmp.file("header.csv"), "user_id,lat,lon,timestamp\n");
    CHECK(parse_pings(tmp.file("header.csv")).empty());
}

TEST_CASE("groups one user's shuffled rows sorted by timestamp") {
    testutil::TempDir tmp("pings_sort");
    const std::string path = tmp.file("p.csv");
    testutil::write_text(path,
                         "user_id,lat,lon,timestamp\n"
                         "u1,40.0,-100.0,300\n"
                         "u1,40.001,-100.0,100\n"
                         "u1,40.002,-100.0,200\n");
    auto groups = parse_pings(path);
    REQUIRE(groups.size() == 1);
    const auto& ps = groups.at("u1");
    REQUIRE(ps.size() == 3);
    CHECK(ps[0].timestamp == 100);
    CHECK(ps[1].timestamp == 200);
    CHECK(ps[2].timestamp == 300);
    CHECK(ps[0].point.lat == doctest::Approx(40.001));
}

TEST_CASE("malformed rows fail naming the offending line") {
    testutil::TempDir tmp("pings_bad");
    const std::string path = tmp.file("p.csv");
    testutil::write_text(path,
                         "user_id,lat,lon,timestamp\n"
                         "u1,40.0,-100.0,100\n"
                         "u1,91.0,-100.0,200\n");
    CHECK_THROWS_WITH_AS(parse_pings(path), doctest::Contains(":3"), ParseError);

    testutil::write_text(path, "user_id,lat,lon,timestamp\nu1,40.0,-200.0,100\n");
    CHECK_THROWS_AS(parse_pings(path), ParseError);
    testutil::write_text(path, "user_id,lat,lon,timestamp\nu1,40.0,-100.0,-5\n");
    CHECK_THROWS_AS(parse_pings(path), ParseError);
    testutil::write_text(path, "user_id,lat,lon,timestamp\n,40.0,-100.0,5\n");
    CHECK_THROWS_AS(parse_pings(path), ParseError);
}

} // TEST_SUITE

TEST_SUITE("detect_staypoints") {

TEST_CASE("two nearby pings spanning 2000 s form one stay-point") {
    std::vector<RawPing> ps{ping("u", 0.0, 0.0, 0), ping("u", 10.0, 0.0, 2000)};
    auto sps = detect_staypoints(ps, 200.0, 1800.0);
    REQUIRE(sps.size() == 1);
    CHECK(sps[0].arrive_t == 0);
    CHECK(sps[0].leave_t == 2000);
    CHECK(sps[0].duration_s == 2000.0);
    // centroid is the plain mean of the ping coordinates
    CHECK(sps[0].centroid.lat == doctest::Approx((ps[0].point.lat + ps[1].point.lat) / 2));
    CHECK(sps[0].centroid.lon == doctest::Approx((ps[0].point.lon + ps[1].point.lon) / 2));
}

TEST_CASE("constant movement yields no stay-points") {
    std::vector<RawPing> ps;
    for (int i = 0; i < 20; ++i) ps.push_back(ping("u", 500.0 * i, 0.0, 60 * i));
    CHECK(detect_staypoints(ps, 200.0, 1800.0).empty());
}

TEST_CASE("edge cases and validation") {
    CHECK(detect_staypoints({}, 200.0, 1800.0).empty());
    CHECK(detect_staypoints({ping("u", 0, 0, 0)}, 200.0, 1800.0).empty());

    // nearby but too brief: no emission
    std::vector<RawPing> brief{ping("u", 0, 0, 0), ping("u", 5, 0, 600)};
    CHECK(detect_staypoints(brief, 200.0, 1800.0).empty());

    std::vector<RawPing> unsorted{ping("u", 0, 0, 100), ping("u", 0, 0, 50)};
    CHECK_THROWS_AS(detect_staypoints(unsorted, 200.0, 1800.0), DataError);
    CHECK_THROWS_AS(detect_staypoints({}, 0.0, 1800.0), ConfigError);
    CHECK_THROWS_AS(detect_staypoints({}, 200.0, -1.0), ConfigError);
}

TEST_CASE("emitted stay-points are long enough, ordered and disjoint") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        // random mix of dwells and hops
        std::vector<RawPing> ps;
        std::int64_t t = 0;
        double x = 0.0, y = 0.0;
        for (int seg = 0; seg < 8; ++seg) {
            if (rng.uniform() < 0.5) { // dwell: jitter within 30 m
                const int n = 2 + (int)rng.bounded(5);
                for (int i = 0; i < n; ++i) {
                    ps.push_back(ping("u", x + rng.uniform(-30, 30), y + rng.uniform(-30, 30), t));
                    t += 400 + (std::int64_t)rng.bounded(700);
                }
            } else { // hop far away
                x += rng.uniform(500, 2000);
                y += rng.uniform(-800, 800);
                ps.push_back(ping("u", x, y, t));
                t += 60 + (std::int64_t)rng.bounded(300);
            }
        }
        auto sps = detect_staypoints(ps, 200.0, 1800.0);
        for (std::size_t i = 0; i < sps.size(); ++i) {
            CHECK(sps[i].leave_t - sps[i].arrive_t >= 1800);
            CHECK(sps[i].duration_s == (double)(sps[i].leave_t - sps[i].arrive_t));
            if (i > 0) CHECK(sps[i].arrive_t >= sps[i - 1].leave_t);
        }
    }
}

} // TEST_SUITE

TEST_SUITE("derive_attributes") {

TEST_CASE("durations, hop distances, and cells") {
    CityGrid g = testutil::grid(2, 2); // 2x2, 100 m cells
    StayPoint a;
    a.centroid = unproject({10.0, 10.0}, kOrigin);
    a.arrive_t = 100;
    a.leave_t = 400;
    StayPoint b;
    b.centroid = unproject({13.0, 14.0}, kOrigin);
    b.arrive_t = 500;
    b.leave_t = 2600;
    auto out = derive_attributes({a, b}, g);
    REQUIRE(out.size() == 2);
    CHECK(out[0].duration_s == 300.0);
    CHECK_FALSE(out[0].dist_from_prev_m.has_value()); // first stay-point: undefined
    REQUIRE(out[1].dist_from_prev_m.has_value());
    CHECK(*out[1].dist_from_prev_m == doctest::Approx(5.0).epsilon(1e-6)); // 3-4-5
    CHECK(out[0].cell == 0);
    CHECK(out[1].cell == 0);
}

TEST_CASE("points off the grid leave cell and adjacent distances absent") {
    CityGrid g = testutil::grid(2, 2);
    StayPoint in1;
    in1.centroid = unproject({50.0, 50.0}, kOrigin);
    StayPoint out_near; // projectable but outside the grid rectangle
    out_near.centroid = unproject({-50.0, 50.0}, kOrigin);
    StayPoint out_far; // beyond the projection extent entirely
    out_far.centroid = {kOrigin.lat + 1.0, kOrigin.lon};
    StayPoint in2;
    in2.centroid = unproject({150.0, 50.0}, kOrigin);

    auto v = derive_attributes({in1, out_near, out_far, in2}, g);
    CHECK(v[0].cell == 0);
    CHECK_FALSE(v[1].cell.has_value());
    CHECK_FALSE(v[2].cell.has_value());
    CHECK(v[3].cell == 1);
    REQUIRE(v[1].dist_from_prev_m.has_value()); // both endpoints projectable
    CHECK(*v[1].dist_from_prev_m == doctest::Approx(100.0).epsilon(1e-6));
    CHECK_FALSE(v[2].dist_from_prev_m.has_value()); // far endpoint unprojectable
    CHECK_FALSE(v[3].dist_from_prev_m.has_value()); // previous endpoint unprojectable
}

} // TEST_SUITE

TEST_SUITE("assign_home") {

static StayPoint cell_sp(const CityGrid& g, int cell, double dur) {
    StayPoint s;
    s.centroid = unproject(g.cell_center(cell), g.origin);
    s.arrive_t = 0;
    s.leave_t = (std::int64_t)dur;
    s.duration_s = dur;
    s.cell = cell;
    return s;
}

TEST_CASE("single cell, argmax, and tie rule") {
    CityGrid g = testutil::grid(4, 3);
    UserSequence all7{"u", {cell_sp(g, 7, 100), cell_sp(g, 7, 50)}, std::nullopt};
    CHECK(assign_home(all7, g) == 7);

    UserSequence u2{"u",
                    {cell_sp(g, 2, 2500), cell_sp(g, 9, 4000), cell_sp(g, 2, 2500)},
                    std::nullopt};
    CHECK(assign_home(u2, g) == 2); // 5000 s in cell 2 beats 4000 s in cell 9

    UserSequence tie{"u", {cell_sp(g, 3, 1000), cell_sp(g, 1, 1000)}, std::nullopt};
    CHECK(assign_home(tie, g) == 1); // ties go to the lowest id
}

TEST_CASE("errors when no stay-point can anchor a home") {
    CityGrid g = testutil::grid(2, 2);
    CHECK_THROWS_AS(assign_home(UserSequence{"u", {}, std::nullopt}, g), NoHomeError);
    StayPoint off;
    off.cell = std::nullopt;
    off.duration_s = 100.0;
    CHECK_THROWS_AS(assign_home(UserSequence{"u", {off}, std::nullopt}, g), NoHomeError);
}

TEST_CASE("home is invariant under stay-point order") {
    CityGrid g = testutil::grid(3, 3);
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<StayPoint> sps;
        const int n = 2 + (int)rng.bounded(8);
        for (int i = 0; i < n; ++i)
            sps.push_back(cell_sp(g, (int)rng.bounded(9), 100.0 + (double)rng.bounded(5000)));
        const int home = assign_home(UserSequence{"u", sps, std::nullopt}, g);
        rng.shuffle(sps);
        CHECK(assign_home(UserSequence{"u", sps, std::nullopt}, g) == home);
    }
}

} // TEST_SUITE

TEST_SUITE("dataset") {

TEST_CASE("build_dataset drops users it cannot home and counts them") {
    CityGrid g = testutil::grid(2, 2);
    std::map<std::string, std::vector<RawPing>> pings;
    pings["a"] = {ping("a", 50, 50, 0), ping("a", 55, 50, 2000)};
    pings["b"] = {ping("b", -500, 50, 0), ping("b", -505, 50, 2000)}; // off the grid
    pings["c"] = {ping("c", 10, 10, 0)};                              // no stay-point at all

    auto res = build_dataset(pings, g, 200.0, 1800.0);
    REQUIRE(res.dataset.size() == 1);
    CHECK(res.dataset[0].user_id == "a");
    CHECK(res.dataset[0].home == 0);
    CHECK(res.dropped_users == 2);
}

TEST_CASE("dataset csv round-trips bit-exactly") {
    GenConfig cfg;
    cfg.seed = 33;
    cfg.rows = 3;
    cfg.cols = 3;
    cfg.population_mean = 4.0;
    cfg.population_spread = 1.0;
    CityModel city = generate_city(cfg);
    Dataset truth = generate_population(city, cfg);
    REQUIRE_FALSE(truth.empty());

    testutil::TempDir tmp("dataset_roundtrip");
    const std::string p1 = tmp.file("d1.csv"), p2 = tmp.file("d2.csv");
    write_dataset_csv(p1, truth);
    Dataset back = read_dataset_csv(p1);
    write_dataset_csv(p2, back);
    CHECK(testutil::read_text(p1) == testutil::read_text(p2));

    REQUIRE(back.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(back[i].user_id == truth[i].user_id);
        CHECK(back[i].home == truth[i].home);
        REQUIRE(back[i].staypoints.size() == truth[i].staypoints.size());
        for (std::size_t j = 0; j < truth[i].staypoints.size(); ++j) {
            const auto& x = truth[i].staypoints[j];
            const auto& y = back[i].staypoints[j];
            CHECK(y.arrive_t == x.arrive_t);
            CHECK(y.leave_t == x.leave_t);
            CHECK(y.duration_s == x.duration_s);
            CHECK(y.cell == x.cell);
            CHECK(y.dist_from_prev_m.has_value() == x.dist_from_prev_m.has_value());
            if (x.dist_from_prev_m) CHECK(*y.dist_from_prev_m == *x.dist_from_prev_m);
        }
    }
}

TEST_CASE("dataset csv readers reject structural corruption") {
    testutil::TempDir tmp("dataset_bad");
    const std::string header =
        "user_id,seq_idx,lat,lon,arrive_t,leave_t,duration_s,dist_from_prev_m,cell_id,home_cell_id\n";
    const std::string path = tmp.file("d.csv");

    testutil::write_text(path, header +
                                   "a,0,40,-100,0,10,10,,0,0\n"
                                   "b,0,40,-100,0,10,10,,0,0\n"
                                   "a,1,40,-100,20,30,10,,0,0\n");
    CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("not contiguous"), ParseError);

    testutil::write_text(path, header + "a,1,40,-100,0,10,10,,0,0\n");
    CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("seq_idx"), ParseError);

    testutil::write_text(path, header +
                                   "a,0,40,-100,0,10,10,,0,0\n"
                                   "a,1,40,-100,20,30,10,,0,3\n");
    CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("conflicting home"), ParseError);
}

} // TEST_SUITE
