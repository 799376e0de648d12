#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hrm/csv.hpp"
#include "hrm/dataset.hpp"

using namespace hrm;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / ("hrm_test_" + name);
    std::ofstream(path) << text;
    return path;
}

const DatasetPaths fixtures = DatasetPaths::in_directory(HRM_DATA_DIR);

}  // namespace

TEST_CASE("csv parse handles quotes, BOM and blank lines") {
    const auto t = csv::parse("\xEF\xBB\xBF" "a,b\n\n\"x, y\",\"say \"\"hi\"\"\"\r\n1,2\n");
    REQUIRE(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].cells[0] == "x, y");
    CHECK(t.rows[0].cells[1] == "say \"hi\"");
    CHECK(t.rows[0].line == 3);
    CHECK(t.rows[1].line == 4);
    CHECK(t.column("b") == 1);
    CHECK_THROWS_AS(t.column("c"), DataError);
    CHECK_THROWS_AS(csv::parse("a\n\"open"), DataError);
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("csv to_double is strict") {
    CHECK(csv::to_double("-3.25") == -3.25);
    CHECK_THROWS_AS(csv::to_double(" 7 "), std::invalid_argument);
    CHECK_THROWS_AS(csv::to_double(""), std::invalid_argument);
    CHECK_THROWS_AS(csv::to_double("abc"), std::invalid_argument);
    CHECK_THROWS_AS(csv::to_double("1.5x"), std::invalid_argument);
    CHECK_THROWS_AS(csv::to_double("nan"), std::invalid_argument);
}

TEST_CASE("linear scaling examples") {
    Eigen::VectorXd x(3);
    x << 0, 5, 10;
    const Eigen::VectorXd unit = linear_scaling(x);
    CHECK(unit[0] == 0.0);
    CHECK(unit[1] == doctest::Approx(0.5));
    CHECK(unit[2] == 1.0);
    const Eigen::VectorXd pct = linear_scaling(x, Scale::percent);
    CHECK(pct[1] == doctest::Approx(50.0));
    CHECK(pct[2] == doctest::Approx(100.0));

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(4, 2.5);
    try {
        (void)linear_scaling(flat);
        FAIL("expected degenerate_range");
    } catch (const DomainError& e) {
        CHECK(e.code() == "degenerate_range");
    }
    CHECK_THROWS_AS(linear_scaling(x, 3.0, 3.0, Scale::unit), DomainError);
}

TEST_CASE("linear scaling properties on random data") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 20;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = u(rng);
        if (x.maxCoeff() == x.minCoeff()) continue;
        const Eigen::VectorXd y = linear_scaling(x);
        CHECK(y.minCoeff() == doctest::Approx(0.0));
        CHECK(y.maxCoeff() == doctest::Approx(1.0));
        for (int i = 0; i < n; ++i) {
            CHECK(y[i] >= 0.0);
            CHECK(y[i] <= 1.0);
            // inverse map recovers the input
            CHECK(x.minCoeff() + y[i] * (x.maxCoeff() - x.minCoeff()) == doctest::Approx(x[i]).epsilon(1e-9));
            for (int j = 0; j < n; ++j) {
                if (x[i] < x[j]) CHECK(y[i] <= y[j]);
            }
        }
    }
}

TEST_CASE("bundled hospital fixture") {
    const auto h = load_hospitals(fixtures.hospitals);
    REQUIRE(h.size() == 11);
    CHECK(h[0].facility_name == "CENTRA");
    CHECK(h[0].rating == 4);
    CHECK(h[0].beds == doctest::Approx(39.1));
    CHECK(h[0].value(HospitalField::death_rate) == doctest::Approx(10.3));

    const auto n = normalize_dataset(h, {HospitalField::beds, HospitalField::cost});
    const auto spec = fit_normalization(h, HospitalField::beds);
    for (const auto& r : n) {
        CHECK(r.normalized.at(HospitalField::beds) ==
              doctest::Approx((r.beds - spec.mn) / (spec.mx - spec.mn)));
        CHECK(r.normalized.count(HospitalField::rating) == 0);
    }
}

TEST_CASE("state fixtures and join") {
    const auto loc = load_state_locations(fixtures.state_centers);
    const auto pat = load_state_patients(fixtures.state_patients);
    CHECK(loc.size() == 49);
    CHECK(contiguous_only(loc).size() == 49);
    CHECK(pat.size() == 47);
    const auto joined = join_state_centers(loc, pat);
    CHECK(joined.size() == 47);
    for (const auto& s : joined) {
        CHECK(s.state != "MN");
        CHECK(s.state != "WY");
        CHECK(s.cost > 0.0);
    }

    std::vector<StateLocation> with_ak = loc;
    with_ak.push_back({"AK", 64.0, -150.0, 3.0});
    with_ak.push_back({"HI", 20.0, -157.0, 3.0});
    CHECK(contiguous_only(with_ak).size() == 49);
    CHECK(join_state_centers(with_ak, pat).size() == 47);
}

TEST_CASE("loaders report every bad row with its line") {
    const auto path = write_temp("bad_hospitals.csv",
                                 "facility_name,state,latitude,longitude,rating,beds,death_rate,cost,patients\n"
                                 "A,VA,37,-79,4,10,1,1,1\n"
                                 "B,VA,37,-79,9,10,1,1,1\n"
                                 "C,VA,37,-79,3,ten,1,1,1\n"
                                 "D,VA,97,-79,3,10,1,1,1\n");
    try {
        (void)load_hospitals(path);
        FAIL("expected invalid_rows");
    } catch (const DataError& e) {
        CHECK(e.code() == "invalid_rows");
        const std::string msg = e.what();
        CHECK(msg.find("3 rejected") != std::string::npos);
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("row 4") != std::string::npos);
        CHECK(msg.find("row 5") != std::string::npos);
        CHECK(msg.find("row 2") == std::string::npos);
    }
}

TEST_CASE("loader errors") {
    try {
        (void)load_hospitals("/nonexistent/hospitals.csv");
        FAIL("expected missing_file");
    } catch (const DataError& e) {
        CHECK(e.code() == "missing_file");
    }
    const auto dup = write_temp("dup.csv",
                                "facility_name,state,latitude,longitude,rating,beds,death_rate,cost,patients\n"
                                "A,VA,37,-79,4,10,1,1,1\n"
                                "A,VA,37,-79,4,10,1,1,1\n");
    CHECK_THROWS_AS(load_hospitals(dup), DataError);
    const auto schema = write_temp("schema.csv", "facility_name,rating\nA,3\n");
    CHECK_THROWS_AS(load_hospitals(schema), DataError);
}

TEST_CASE("enum round trips") {
    for (auto f : {HospitalField::rating, HospitalField::beds, HospitalField::death_rate, HospitalField::cost,
                   HospitalField::patients}) {
        CHECK(parse_hospital_field(to_string(f)) == f);
    }
    CHECK(parse_scale("percent") == Scale::percent);
    CHECK_THROWS_AS(parse_scale("log"), DataError);
}
