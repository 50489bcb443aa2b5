#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>

#include "helpers.hpp"
#include "popstat/csv.hpp"
#include "popstat/rng.hpp"

using namespace popstat;

namespace {

bool same_bits(double a, double b) {
    std::uint64_t ba, bb;
    std::memcpy(&ba, &a, 8);
    std::memcpy(&bb, &b, 8);
    return ba == bb;
}

} // namespace

TEST_SUITE("csv") {

TEST_CASE("fmt_double round-trips doubles bit-exactly") {
    const double fixed[] = {0.0,     -0.0,   0.1,      1.0 / 3.0, 1e-300, 1e300,
                            12345.6789, 2.5e-10, 9007199254740993.0, -1.5};
    for (double v : fixed) CHECK(same_bits(parse_double(fmt_double(v), "t"), v));

    Rng rng(21);
    for (int i = 0; i < 500; ++i) {
        // spread across magnitudes
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-30.0, 30.0));
        CHECK(same_bits(parse_double(fmt_double(v), "t"), v));
    }
}

TEST_CASE("fmt_int round-trips 64-bit integers") {
    const std::int64_t vals[] = {0, 1, -1, 42, INT64_MAX, INT64_MIN + 1};
    for (auto v : vals) CHECK(parse_int(fmt_int(v), "t") == v);
}

TEST_CASE("parse errors carry context and reject trailing garbage") {
    CHECK_THROWS_AS(parse_double("x12", "f.csv:3"), ParseError);
    CHECK_THROWS_AS(parse_double("1.5x", "f.csv:3"), ParseError);
    CHECK_THROWS_AS(parse_double("", "f.csv:3"), ParseError);
    CHECK_THROWS_AS(parse_int("1.5", "f.csv:3"), ParseError);
    CHECK_THROWS_WITH_AS(parse_int("zz", "f.csv:3"), doctest::Contains("f.csv:3"), ParseError);
}

TEST_CASE("split_fields keeps empty fields") {
    auto f = split_fields("a,b,c");
    REQUIRE(f.size() == 3);
    CHECK(f[1] == "b");
    f = split_fields("a,,c");
    REQUIRE(f.size() == 3);
    CHECK(f[1] == "");
    f = split_fields("a,b,");
    REQUIRE(f.size() == 3);
    CHECK(f[2] == "");
    f = split_fields("");
    REQUIRE(f.size() == 1);
    CHECK(f[0] == "");
}

TEST_CASE("CsvReader validates the header") {
    testutil::TempDir tmp("csv_header");
    const std::string path = tmp.file("t.csv");

    testutil::write_text(path, "a,b\n1,2\n");
    CHECK_NOTHROW(CsvReader(path, {"a", "b"}));
    CHECK_THROWS_AS(CsvReader(path, {"a", "b", "c"}), ParseError);
    CHECK_THROWS_WITH_AS(CsvReader(path, {"a", "x"}), doctest::Contains(":1:"), ParseError);
    CHECK_THROWS_AS(CsvReader(tmp.file("missing.csv"), {"a"}), ParseError);

    testutil::write_text(tmp.file("empty.csv"), "");
    CHECK_THROWS_AS(CsvReader(tmp.file("empty.csv"), {"a"}), ParseError);
}

TEST_CASE("CsvReader reports the line of a malformed row and skips blanks") {
    testutil::TempDir tmp("csv_rows");
    const std::string path = tmp.file("t.csv");
    testutil::write_text(path, "a,b\r\n1,2\r\n\n3,4,5\n");
    CsvReader r(path, {"a", "b"});
    auto row = r.next();
    REQUIRE(row.has_value());
    CHECK((*row)[0] == "1");
    CHECK((*row)[1] == "2"); // CR stripped
    CHECK_THROWS_WITH_AS(r.next(), doctest::Contains(":4"), ParseError);
}

TEST_CASE("CsvWriter then CsvReader round-trips rows and doubles") {
    testutil::TempDir tmp("csv_roundtrip");
    const std::string path = tmp.file("t.csv");
    Rng rng(22);
    std::vector<double> vals;
    {
        CsvWriter w(path, {"i", "v"});
        for (int i = 0; i < 50; ++i) {
            vals.push_back(rng.normal(0.0, 1e6));
            w.row({fmt_int(i), fmt_double(vals.back())});
        }
        w.close();
    }
    CsvReader r(path, {"i", "v"});
    int i = 0;
    while (auto row = r.next()) {
        CHECK(parse_int((*row)[0], r.where()) == i);
        CHECK(same_bits(parse_double((*row)[1], r.where()), vals[i]));
        ++i;
    }
    CHECK(i == 50);
}

} // TEST_SUITE
