#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steti/common.hpp"

namespace steti::data {

enum class Status { active, inactive };

// One event-lifetime observation. Dates are decimal years
// (year + (day_of_year - 1) / days_in_year).
struct MissionRecord {
    std::string name;
    double launch_date = 0.0;
    std::optional<double> failure_date;
    std::optional<double> lifetime;  // years, inactive records only
    Status status = Status::active;
    std::optional<double> age;  // years since launch, active records only
    double launch_mass = 0.0;   // kg
    std::string destination;
    std::string contact_type;
    std::string country;
    // Constant-dollar millions for the record's reference year, populated by
    // join_funding.
    double total_rd = 0.0;
    double defense_rd = 0.0;
    double space_rd = 0.0;
    double nasa_budget = 0.0;
    bool funding_joined = false;
};

// Yearly values of one funding attribute, contiguous over the declared range.
struct FundingSeries {
    std::string name;
    std::map<int, double> values;

    int first_year() const { return values.begin()->first; }
    int last_year() const { return values.rbegin()->first; }
    double at(int year) const;
};

struct Deflator {
    std::map<int, double> values;
    int base_year = 0;
};

// Records must start below this; log2 targets blow up otherwise.
inline constexpr double kMinLifetimeYears = 1e-4;

constexpr const char* kMissionColumns[] = {"name",        "launch_date",  "failure_date", "launch_mass",
                                           "destination", "contact_type", "country"};
constexpr const char* kFundingColumns[] = {"year", "total_rd", "defense_rd", "space_rd", "nasa_budget"};

// "YYYY-MM-DD" -> decimal year; plain decimal years pass through unchanged.
double decimal_year(int year, int month, int day);
double parse_date_field(const std::string& text, const std::string& context);

std::vector<MissionRecord> parse_missions(const std::filesystem::path& path);
void write_missions_csv(const std::filesystem::path& path, const std::vector<MissionRecord>& records);

std::vector<FundingSeries> parse_funding(const std::filesystem::path& path);  // nominal dollars
Deflator parse_deflator(const std::filesystem::path& path, std::optional<int> base_year = std::nullopt);

// value_constant(y) = value_nominal(y) * index(base_year) / index(y)
FundingSeries deflate(const FundingSeries& series, const Deflator& deflator);

enum class KeyDate { launch, failure };

// Inactive records keep lifetime = failure - launch; active records get
// age = observation_date - launch.
MissionRecord derive_lifetime_status(const MissionRecord& record, double observation_date);

// Populates the four funding fields from floor(key date) year.
std::vector<MissionRecord> join_funding(std::vector<MissionRecord> missions,
                                        const std::vector<FundingSeries>& series, KeyDate key);

double key_date(const MissionRecord& r, KeyDate key);

struct DatasetSummary {
    int total = 0;
    int active = 0;
    int inactive = 0;
    struct Range {
        std::string attribute;
        double min = 0, max = 0;
    };
    std::vector<Range> numeric_ranges;
    std::map<std::string, std::vector<std::string>> categorical_values;
};

DatasetSummary summarize(const std::vector<MissionRecord>& records);

}  // namespace steti::data
