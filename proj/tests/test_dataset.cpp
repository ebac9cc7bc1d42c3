#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "steti/dataset.hpp"

using namespace steti;
using namespace steti::data;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

constexpr const char* kHeader = "name,launch_date,failure_date,launch_mass,destination,contact_type,country\n";

}  // namespace

TEST_CASE("decimal year conversion") {
    CHECK(decimal_year(1959, 1, 1) == doctest::Approx(1959.0).epsilon(1e-12));
    CHECK(decimal_year(1959, 1, 2) == doctest::Approx(1959.0 + 1.0 / 365.0).epsilon(1e-12));
    CHECK(decimal_year(1960, 12, 31) == doctest::Approx(1960.0 + 365.0 / 366.0).epsilon(1e-12));  // leap
    CHECK(decimal_year(2000, 3, 1) == doctest::Approx(2000.0 + 60.0 / 366.0).epsilon(1e-12));
    CHECK_THROWS_AS(decimal_year(2001, 2, 29), ValidationError);
    CHECK(parse_date_field("1987.5", "t") == doctest::Approx(1987.5));
}

TEST_CASE("parse_missions derives lifetime and status") {
    auto path = write_temp("missions_ok.csv", std::string(kHeader) +
                                                  "Luna-ish,1959-01-02,1959-01-05,361.3,Lunar,Flyby,Soviet Union\n"
                                                  "Steady,2020-06-01,,1000,Mars,Orbit,US\n"
                                                  "Decimal,1987.5,1990.25,42.5,Venus,Lander,US\n");
    auto records = parse_missions(path);
    REQUIRE(records.size() == 3);

    CHECK(records[0].launch_date == doctest::Approx(1959.0 + 1.0 / 365.0).epsilon(1e-12));
    CHECK(records[0].lifetime.value() == doctest::Approx(3.0 / 365.0).epsilon(1e-9));
    CHECK(records[0].status == Status::inactive);

    CHECK(records[1].status == Status::active);
    CHECK_FALSE(records[1].lifetime.has_value());
    CHECK_FALSE(records[1].failure_date.has_value());

    CHECK(records[2].launch_date == doctest::Approx(1987.5));
    CHECK(records[2].lifetime.value() == doctest::Approx(2.75).epsilon(1e-12));

    for (const auto& r : records) {
        CHECK(std::isfinite(r.launch_date));
        if (r.failure_date) CHECK(std::isfinite(*r.failure_date));
        if (r.lifetime)
            CHECK(*r.lifetime == doctest::Approx(*r.failure_date - r.launch_date).epsilon(1e-9));
    }
}

TEST_CASE("parse_missions validation errors") {
    SUBCASE("missing column") {
        auto path = write_temp("missions_nocol.csv",
                               "name,launch_date,failure_date,destination,contact_type,country\n"
                               "X,2000-01-01,,Lunar,Orbit,US\n");
        CHECK_THROWS_WITH_AS(parse_missions(path), doctest::Contains("launch_mass"), ValidationError);
    }
    SUBCASE("failure before launch") {
        auto path = write_temp("missions_order.csv",
                               std::string(kHeader) + "X,2000-01-01,1999-01-01,10,Lunar,Orbit,US\n");
        CHECK_THROWS_AS(parse_missions(path), ValidationError);
    }
    SUBCASE("lifetime below minimum") {
        auto path = write_temp("missions_tiny.csv",
                               std::string(kHeader) + "X,2000.0,2000.00001,10,Lunar,Orbit,US\n");
        CHECK_THROWS_WITH_AS(parse_missions(path), doctest::Contains("minimum"), ValidationError);
    }
    SUBCASE("missing mass is a hard error") {
        auto path = write_temp("missions_nomass.csv",
                               std::string(kHeader) + "X,2000-01-01,,,Lunar,Orbit,US\n");
        CHECK_THROWS_AS(parse_missions(path), ValidationError);
    }
    SUBCASE("unparseable value names the column") {
        auto path = write_temp("missions_bad.csv",
                               std::string(kHeader) + "X,not-a-date,,10,Lunar,Orbit,US\n");
        CHECK_THROWS_WITH_AS(parse_missions(path), doctest::Contains("launch_date"), ValidationError);
    }
    SUBCASE("date outside admissible range") {
        auto path = write_temp("missions_range.csv",
                               std::string(kHeader) + "X,1234.5,,10,Lunar,Orbit,US\n");
        CHECK_THROWS_AS(parse_missions(path), ValidationError);
    }
}

TEST_CASE("missing categoricals map to the reserved label") {
    auto path = write_temp("missions_cat.csv", std::string(kHeader) + "X,2000-01-01,,10,,,\n");
    auto records = parse_missions(path);
    CHECK(records[0].destination == "unknown");
    CHECK(records[0].contact_type == "unknown");
    CHECK(records[0].country == "unknown");
}

TEST_CASE("missions csv round trip is field-equal") {
    std::vector<MissionRecord> records = parse_missions(
        write_temp("missions_rt1.csv", std::string(kHeader) +
                                           "A,1959-01-02,1959-01-05,361.3,Lunar,Flyby,Soviet Union\n"
                                           "\"B, with comma\",2020-06-01,,1000.25,Mars,Orbit,US\n"));
    auto out = std::filesystem::temp_directory_path() / "missions_rt2.csv";
    write_missions_csv(out, records);
    auto again = parse_missions(out);
    REQUIRE(again.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(again[i].name == records[i].name);
        CHECK(again[i].launch_date == records[i].launch_date);  // exact: shortest round-trip format
        CHECK(again[i].failure_date == records[i].failure_date);
        CHECK(again[i].launch_mass == records[i].launch_mass);
        CHECK(again[i].destination == records[i].destination);
        CHECK(again[i].contact_type == records[i].contact_type);
        CHECK(again[i].country == records[i].country);
        CHECK(again[i].status == records[i].status);
    }
}

TEST_CASE("deflate") {
    FundingSeries s{"nasa_budget", {{2000, 100.0}, {2001, 110.0}, {2002, 120.0}}};
    SUBCASE("identity when index equals base index") {
        Deflator d{{{2000, 100.0}, {2001, 100.0}, {2002, 100.0}}, 2002};
        auto out = deflate(s, d);
        CHECK(out.values.at(2000) == doctest::Approx(100.0));
    }
    SUBCASE("halved index doubles the value") {
        Deflator d{{{2000, 50.0}, {2001, 100.0}, {2002, 100.0}}, 2001};
        CHECK(deflate(s, d).values.at(2000) == doctest::Approx(200.0));
    }
    SUBCASE("three-year series against spreadsheet recomputation") {
        Deflator d{{{2000, 50.0}, {2001, 80.0}, {2002, 100.0}}, 2002};
        auto out = deflate(s, d);
        CHECK(out.values.at(2000) == doctest::Approx(200.0).epsilon(1e-9));
        CHECK(out.values.at(2001) == doctest::Approx(137.5).epsilon(1e-9));
        CHECK(out.values.at(2002) == doctest::Approx(120.0).epsilon(1e-9));  // base year unchanged
    }
    SUBCASE("missing deflator year") {
        Deflator d{{{2000, 50.0}, {2002, 100.0}}, 2002};
        CHECK_THROWS_WITH_AS(deflate(s, d), doctest::Contains("2001"), ValidationError);
    }
    SUBCASE("deflation is invertible via the reciprocal-rebased index") {
        Deflator d{{{2000, 50.0}, {2001, 80.0}, {2002, 100.0}}, 2002};
        Deflator inv{{{2000, 1.0 / 50.0}, {2001, 1.0 / 80.0}, {2002, 1.0 / 100.0}}, 2002};
        auto back = deflate(deflate(s, d), inv);
        for (auto [year, v] : s.values) CHECK(back.values.at(year) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("derive_lifetime_status") {
    MissionRecord r;
    r.name = "X";
    r.launch_date = 2000.0;
    SUBCASE("inactive") {
        r.failure_date = 2005.5;
        auto out = derive_lifetime_status(r, 2022.0);
        CHECK(out.lifetime.value() == doctest::Approx(5.5));
        CHECK(out.status == Status::inactive);
        CHECK_FALSE(out.age.has_value());
    }
    SUBCASE("active gets an age") {
        r.launch_date = 2020.0;
        auto out = derive_lifetime_status(r, 2022.0);
        CHECK(out.status == Status::active);
        CHECK_FALSE(out.lifetime.has_value());
        CHECK(out.age.value() == doctest::Approx(2.0));
    }
    SUBCASE("failure before launch") {
        r.failure_date = 1999.0;
        CHECK_THROWS_AS(derive_lifetime_status(r, 2022.0), ValidationError);
    }
    SUBCASE("launch after observation date") {
        r.launch_date = 2030.0;
        CHECK_THROWS_AS(derive_lifetime_status(r, 2022.0), ValidationError);
    }
}

TEST_CASE("join_funding uses floor of the key date") {
    MissionRecord r;
    r.name = "X";
    r.launch_date = 1970.9;
    r.failure_date = 1975.2;
    r.lifetime = 4.3;
    r.status = Status::inactive;
    r.launch_mass = 10.0;
    std::vector<FundingSeries> series;
    for (const char* n : {"total_rd", "defense_rd", "space_rd", "nasa_budget"}) {
        FundingSeries fs{n, {}};
        for (int y = 1970; y <= 1975; ++y) fs.values[y] = 1000.0 * y;
        series.push_back(fs);
    }
    auto by_launch = join_funding({r}, series, KeyDate::launch);
    CHECK(by_launch[0].nasa_budget == doctest::Approx(1000.0 * 1970));
    auto by_failure = join_funding({r}, series, KeyDate::failure);
    CHECK(by_failure[0].nasa_budget == doctest::Approx(1000.0 * 1975));
    CHECK(by_failure[0].funding_joined);

    series[0].values.erase(1970);
    series[0].values.erase(1971);  // keep contiguity irrelevant here; lookup must fail
    CHECK_THROWS_WITH_AS(join_funding({r}, series, KeyDate::launch), doctest::Contains("1970"),
                         ValidationError);
}

TEST_CASE("summarize counts statuses and ranges") {
    auto path = write_temp("missions_sum.csv", std::string(kHeader) +
                                                   "A,1960.0,1961.0,10,Lunar,Orbit,US\n"
                                                   "B,1970.0,,20,Mars,Flyby,Japan\n"
                                                   "C,1980.0,1990.0,30,Lunar,Orbit,US\n");
    auto s = summarize(parse_missions(path));
    CHECK(s.total == 3);
    CHECK(s.inactive == 2);
    CHECK(s.active == 1);
    CHECK(s.categorical_values["country"].size() == 2);
    bool found = false;
    for (const auto& r : s.numeric_ranges)
        if (r.attribute == "lifetime") {
            found = true;
            CHECK(r.min == doctest::Approx(1.0));
            CHECK(r.max == doctest::Approx(10.0));
        }
    CHECK(found);
}
