#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "symreg/dataset.hpp"
#include "symreg/error.hpp"
#include "test_support.hpp"

using namespace symreg;

TEST_CASE("load_csv reads a minimal table")
{
    std::istringstream in("a,b\n1,2\n3,4\n");
    const auto t = load_csv(in);
    CHECK(t.width() == 2);
    CHECK(t.length() == 2);
    CHECK(t.names() == std::vector<std::string> { "a", "b" });
    CHECK(t.values(0)[1] == 3.0);
    CHECK(t.values(1)[0] == 2.0);
}

TEST_CASE("load_csv errors")
{
    SUBCASE("duplicate header")
    {
        std::istringstream in("a,a\n1,2\n");
        CHECK_THROWS_AS(load_csv(in), SchemaError);
    }
    SUBCASE("ragged row names the row")
    {
        std::istringstream in("a,b\n1,2\n3\n");
        try {
            load_csv(in);
            FAIL("expected StructuralError");
        } catch (const StructuralError& e) {
            CHECK(std::string(e.what()).find('3') != std::string::npos);
        }
    }
    SUBCASE("unparsable cell reports line and column")
    {
        std::istringstream in("a,b\n1,2\n3,abc\n");
        try {
            load_csv(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
            CHECK(e.column() == 2);
        }
    }
    SUBCASE("empty input")
    {
        std::istringstream in("");
        CHECK_THROWS_AS(load_csv(in), Error);
    }
}

TEST_CASE("load_csv handles missing tokens, quotes and custom formats")
{
    std::istringstream in("\"first col\";b\n1,5;NA\n;2\n");
    CsvOptions opts;
    opts.delimiter = ';';
    opts.decimal = ',';
    const auto t = load_csv(in, opts);
    CHECK(t.names()[0] == "first col");
    CHECK(t.values(0)[0] == 1.5);
    CHECK(is_missing(t.values(1)[0]));
    CHECK(is_missing(t.values(0)[1]));
    CHECK(t.has_missing());
}

TEST_CASE("33-column table loads with 331 rows")
{
    std::ostringstream out;
    for (int c = 0; c < 33; ++c) out << (c ? "," : "") << "v" << c;
    out << "\n";
    for (int r = 0; r < 331; ++r) {
        for (int c = 0; c < 33; ++c) out << (c ? "," : "") << r * 0.5 + c;
        out << "\n";
    }
    std::istringstream in(out.str());
    const auto t = load_csv(in);
    CHECK(t.length() == 331);
    CHECK(t.width() == 33);
}

TEST_CASE("CSV round trip preserves names and values")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0, 1e3);
    std::vector<Column> cols { { "alpha", {} }, { "b,c", {} }, { "gamma", {} } };
    for (int r = 0; r < 50; ++r) {
        for (auto& c : cols) c.values.push_back(z(rng));
    }
    cols[2].values[7] = missing_value;
    const TimeSeriesTable original(cols);
    std::stringstream buf;
    write_csv(buf, original);
    const auto back = load_csv(buf);
    REQUIRE(back.names() == original.names());
    for (std::size_t c = 0; c < original.width(); ++c) {
        for (std::size_t r = 0; r < original.length(); ++r) {
            const double a = original.values(c)[r], b = back.values(c)[r];
            CHECK((a == b || (is_missing(a) && is_missing(b))));
        }
    }
}

TEST_CASE("table invariants")
{
    CHECK_THROWS_AS(TimeSeriesTable({ { "a", { 1, 2 } }, { "b", { 1 } } }), StructuralError);
    CHECK_THROWS_AS(TimeSeriesTable(std::vector<Column> { Column { "a", {} } }), StructuralError);
    CHECK_THROWS_AS(TimeSeriesTable({ { "", { 1 } } }), SchemaError);
    CHECK_THROWS_AS(TimeSeriesTable({ { "a", { 1 } }, { "a", { 2 } } }), SchemaError);
}

TEST_CASE("five-point derivative examples")
{
    SUBCASE("t^2 at the centre")
    {
        const std::vector<double> v { 1, 4, 9, 16, 25 };
        const auto d = five_point_derivative(v);
        CHECK(d[2] == doctest::Approx(6.0).epsilon(1e-15));
        CHECK(is_missing(d[0]));
        CHECK(is_missing(d[1]));
        CHECK(is_missing(d[3]));
        CHECK(is_missing(d[4]));
    }
    SUBCASE("constant sequence")
    {
        const std::vector<double> v(9, 4.25);
        const auto d = five_point_derivative(v);
        for (std::size_t t = 2; t + 2 < v.size(); ++t) CHECK(d[t] == 0.0);
    }
    SUBCASE("t^4 on an integer grid")
    {
        std::vector<double> v;
        for (int t = 0; t < 30; ++t) v.push_back(std::pow(double(t), 4));
        const auto d = five_point_derivative(v);
        for (int t = 2; t < 28; ++t) {
            const double exact = 4.0 * std::pow(double(t), 3);
            if (exact == 0) {
                CHECK(std::fabs(d[t]) < 1e-9);
            } else {
                CHECK(std::fabs(d[t] - exact) / std::fabs(exact) < 1e-9);
            }
        }
    }
    SUBCASE("too short")
    {
        const std::vector<double> v { 1, 2, 3, 4 };
        CHECK_THROWS_AS(five_point_derivative(v), SizeError);
    }
}

TEST_CASE("five-point derivative is linear")
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0, 1);
    std::vector<double> x(40), y(40), mix(40);
    const double alpha = 1.7, beta = -0.3;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = z(rng);
        y[i] = z(rng);
        mix[i] = alpha * x[i] + beta * y[i];
    }
    const auto dx = five_point_derivative(x), dy = five_point_derivative(y), dm = five_point_derivative(mix);
    for (std::size_t t = 2; t + 2 < x.size(); ++t) {
        CHECK(std::fabs(dm[t] - (alpha * dx[t] + beta * dy[t])) < 1e-12);
    }
}

TEST_CASE("apply_derivatives replaces only the listed columns")
{
    const auto t = fixture::table({ { "a", { 1, 4, 9, 16, 25, 36 } }, { "b", { 1, 2, 3, 4, 5, 6 } } });
    const auto d = apply_derivatives(t, { "a" });
    CHECK(is_missing(d.values(0)[0]));
    CHECK(d.values(0)[2] == doctest::Approx(6.0));
    CHECK(d.values(1)[0] == 1.0);
    CHECK_THROWS_AS(apply_derivatives(t, { "zz" }), SchemaError);
}

TEST_CASE("lagged design matrix")
{
    SUBCASE("shift by one")
    {
        const LaggedDesignMatrix m(fixture::table({ { "a", { 10, 20, 30 } } }), 1);
        CHECK(m.cell(0, 1, 2) == 20.0);
        CHECK(m.cell(0, 0, 2) == 30.0);
        CHECK(m.first_valid_row() == 1);
        CHECK_THROWS_AS(m.cell(0, 1, 0), RangeError);
        CHECK_THROWS_AS(m.cell(0, 2, 2), SchemaError);
        CHECK_THROWS_AS(m.cell(1, 0, 2), SchemaError);
    }
    SUBCASE("max lag 0 is the identity")
    {
        const auto t = fixture::table({ { "a", { 1, 2, 3 } }, { "b", { 4, 5, 6 } } });
        const LaggedDesignMatrix m(t, 0);
        for (std::size_t v = 0; v < 2; ++v) {
            for (std::size_t r = 0; r < 3; ++r) CHECK(m.cell(v, 0, r) == t.values(v)[r]);
        }
    }
    SUBCASE("lag 12: first valid row is observation 13")
    {
        std::vector<double> v(331);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
        const LaggedDesignMatrix m(fixture::table({ { "a", v } }), 12);
        CHECK(m.first_valid_row() == 12);
        CHECK(Partition::from_one_based(13, 200, 201, 299, 300, 331).fitness.first == m.first_valid_row());
        for (std::size_t r = 12; r < 331; ++r) CHECK(m.cell(0, 0, r) == v[r]);
        CHECK(m.cell(0, 12, 12) == 0.0);
    }
    SUBCASE("max lag must be below the length")
    {
        CHECK_THROWS_AS(LaggedDesignMatrix(fixture::table({ { "a", { 1, 2, 3 } } }), 3), RangeError);
    }
}

TEST_CASE("partition validation")
{
    const auto p = Partition::from_one_based(13, 200, 201, 299, 300, 331);
    CHECK(p.fitness == IndexRange { 12, 199 });
    CHECK(p.validation == IndexRange { 200, 298 });
    CHECK(p.test == IndexRange { 299, 330 });
    CHECK_NOTHROW(p.validate(331));
    CHECK_THROWS_AS(p.validate(330), RangeError);
    CHECK_THROWS_AS(Partition::from_one_based(13, 201, 201, 299, 300, 331).validate(331), RangeError);
    CHECK_THROWS_AS(Partition::from_one_based(201, 299, 13, 200, 300, 331).validate(331), RangeError);
    CHECK_THROWS_AS(Partition::from_one_based(0, 200, 201, 299, 300, 331), RangeError);
}
