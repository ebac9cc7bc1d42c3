#include "steti/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "steti/common.hpp"
#include "steti/csv.hpp"

namespace steti::data {

namespace {

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return days[month - 1];
}

std::string row_tag(const std::string& file, std::size_t row) {
    return file + " row " + std::to_string(row + 2);  // 1-based, after header
}

}  // namespace

double FundingSeries::at(int year) const {
    auto it = values.find(year);
    if (it == values.end())
        throw ValidationError("funding series '" + name + "' has no value for year " + std::to_string(year));
    return it->second;
}

double decimal_year(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
        throw ValidationError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                              "-" + std::to_string(day));
    int doy = day;
    for (int m = 1; m < month; ++m) doy += days_in_month(year, m);
    double days = is_leap(year) ? 366.0 : 365.0;
    return year + (doy - 1) / days;
}

double parse_date_field(const std::string& text, const std::string& context) {
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        int y = static_cast<int>(parse_long(std::string_view(text).substr(0, 4), context));
        int m = static_cast<int>(parse_long(std::string_view(text).substr(5, 2), context));
        int d = static_cast<int>(parse_long(std::string_view(text).substr(8, 2), context));
        return decimal_year(y, m, d);
    }
    return parse_double(text, context);
}

std::vector<MissionRecord> parse_missions(const std::filesystem::path& path) {
    auto table = csv::read_file(path);
    const std::string file = path.filename().string();
    std::vector<int> cols;
    for (const char* name : kMissionColumns) cols.push_back(table.require_column(name, file));

    std::vector<MissionRecord> records;
    records.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() < table.header.size())
            throw ValidationError(row_tag(file, i) + ": expected " + std::to_string(table.header.size()) +
                                  " fields, got " + std::to_string(row.size()));
        auto field = [&](int c) -> const std::string& { return row[static_cast<std::size_t>(cols[c])]; };

        MissionRecord r;
        r.name = field(0);
        r.launch_date = parse_date_field(field(1), row_tag(file, i) + " launch_date");
        if (r.launch_date < 1900.0 || r.launch_date > 2100.0)
            throw ValidationError(row_tag(file, i) + ": launch_date " + format_double(r.launch_date) +
                                  " outside [1900, 2100]");
        if (!field(2).empty()) {
            double f = parse_date_field(field(2), row_tag(file, i) + " failure_date");
            if (f < r.launch_date)
                throw ValidationError(row_tag(file, i) + ": failure_date precedes launch_date");
            r.failure_date = f;
            r.lifetime = f - r.launch_date;
            r.status = Status::inactive;
            if (*r.lifetime < kMinLifetimeYears)
                throw ValidationError(row_tag(file, i) + ": lifetime " + format_double(*r.lifetime) +
                                      " below minimum " + format_double(kMinLifetimeYears) +
                                      " (log2 target undefined)");
        }
        if (field(3).empty())
            throw ValidationError(row_tag(file, i) + ": launch_mass missing (required model input)");
        r.launch_mass = parse_double(field(3), row_tag(file, i) + " launch_mass");
        if (!(r.launch_mass > 0.0))
            throw ValidationError(row_tag(file, i) + ": launch_mass must be > 0");
        auto cat = [](const std::string& s) { return s.empty() ? std::string("unknown") : s; };
        r.destination = cat(field(4));
        r.contact_type = cat(field(5));
        r.country = cat(field(6));
        records.push_back(std::move(r));
    }
    return records;
}

void write_missions_csv(const std::filesystem::path& path, const std::vector<MissionRecord>& records) {
    csv::Writer w(path);
    w.row({"name", "launch_date", "failure_date", "launch_mass", "destination", "contact_type", "country"});
    for (const auto& r : records) {
        w.row({r.name, format_double(r.launch_date), r.failure_date ? format_double(*r.failure_date) : "",
               format_double(r.launch_mass), r.destination, r.contact_type, r.country});
    }
}

std::vector<FundingSeries> parse_funding(const std::filesystem::path& path) {
    auto table = csv::read_file(path);
    const std::string file = path.filename().string();
    int year_col = table.require_column("year", file);
    std::vector<FundingSeries> series;
    for (std::size_t c = 1; c < std::size(kFundingColumns); ++c) {
        series.push_back({kFundingColumns[c], {}});
        table.require_column(kFundingColumns[c], file);
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        int year = static_cast<int>(parse_long(row[static_cast<std::size_t>(year_col)], row_tag(file, i) + " year"));
        for (auto& s : series) {
            int c = table.column(s.name);
            double v = parse_double(row[static_cast<std::size_t>(c)], row_tag(file, i) + " " + s.name);
            if (v < 0) throw ValidationError(row_tag(file, i) + ": " + s.name + " must be >= 0");
            if (!s.values.emplace(year, v).second)
                throw ValidationError(row_tag(file, i) + ": duplicate year " + std::to_string(year));
        }
    }
    for (const auto& s : series) {
        if (s.values.empty()) throw ValidationError(file + ": no data rows");
        for (int y = s.first_year(); y <= s.last_year(); ++y)
            if (!s.values.count(y))
                throw ValidationError(file + ": series " + s.name + " missing year " + std::to_string(y) +
                                      " (years must be contiguous)");
    }
    return series;
}

Deflator parse_deflator(const std::filesystem::path& path, std::optional<int> base_year) {
    auto table = csv::read_file(path);
    const std::string file = path.filename().string();
    int year_col = table.require_column("year", file);
    int index_col = table.require_column("index", file);
    Deflator d;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        int year = static_cast<int>(parse_long(row[static_cast<std::size_t>(year_col)], row_tag(file, i) + " year"));
        double idx = parse_double(row[static_cast<std::size_t>(index_col)], row_tag(file, i) + " index");
        if (!(idx > 0)) throw ValidationError(row_tag(file, i) + ": index must be > 0");
        d.values[year] = idx;
    }
    if (d.values.empty()) throw ValidationError(file + ": no data rows");
    d.base_year = base_year.value_or(d.values.rbegin()->first);
    if (!d.values.count(d.base_year))
        throw ValidationError(file + ": base year " + std::to_string(d.base_year) + " not present");
    return d;
}

FundingSeries deflate(const FundingSeries& series, const Deflator& deflator) {
    FundingSeries out{series.name, {}};
    double base = deflator.values.at(deflator.base_year);
    for (const auto& [year, nominal] : series.values) {
        auto it = deflator.values.find(year);
        if (it == deflator.values.end())
            throw ValidationError("deflator missing year " + std::to_string(year) + " needed by series '" +
                                  series.name + "'");
        out.values[year] = nominal * base / it->second;
    }
    return out;
}

MissionRecord derive_lifetime_status(const MissionRecord& record, double observation_date) {
    if (record.launch_date > observation_date)
        throw ValidationError("record '" + record.name + "' launches after the observation date " +
                              format_double(observation_date));
    MissionRecord r = record;
    if (r.failure_date) {
        if (*r.failure_date < r.launch_date)
            throw ValidationError("record '" + r.name + "': failure_date precedes launch_date");
        r.lifetime = *r.failure_date - r.launch_date;
        r.status = Status::inactive;
        r.age.reset();
    } else {
        r.lifetime.reset();
        r.status = Status::active;
        r.age = observation_date - r.launch_date;
    }
    return r;
}

double key_date(const MissionRecord& r, KeyDate key) {
    if (key == KeyDate::launch) return r.launch_date;
    if (!r.failure_date)
        throw ValidationError("record '" + r.name + "' has no failure date to key on");
    return *r.failure_date;
}

std::vector<MissionRecord> join_funding(std::vector<MissionRecord> missions,
                                        const std::vector<FundingSeries>& series, KeyDate key) {
    for (auto& r : missions) {
        if (key == KeyDate::failure && !r.failure_date) continue;  // active records have no failure year
        int year = static_cast<int>(std::floor(key_date(r, key)));
        for (const auto& s : series) {
            double v = s.at(year);
            if (s.name == "total_rd") r.total_rd = v;
            else if (s.name == "defense_rd") r.defense_rd = v;
            else if (s.name == "space_rd") r.space_rd = v;
            else if (s.name == "nasa_budget") r.nasa_budget = v;
            else throw ValidationError("unknown funding series '" + s.name + "'");
        }
        r.funding_joined = true;
    }
    return missions;
}

DatasetSummary summarize(const std::vector<MissionRecord>& records) {
    DatasetSummary s;
    s.total = static_cast<int>(records.size());
    auto range = [&](const std::string& attr, auto getter) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        bool any = false;
        for (const auto& r : records) {
            auto v = getter(r);
            if (!v) continue;
            any = true;
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
        if (any) s.numeric_ranges.push_back({attr, lo, hi});
    };
    std::set<std::string> dest, contact, country;
    for (const auto& r : records) {
        if (r.status == Status::active) ++s.active;
        else ++s.inactive;
        dest.insert(r.destination);
        contact.insert(r.contact_type);
        country.insert(r.country);
    }
    auto opt = [](double v) { return std::optional<double>(v); };
    range("launch_date", [&](const MissionRecord& r) { return opt(r.launch_date); });
    range("failure_date", [](const MissionRecord& r) { return r.failure_date; });
    range("lifetime", [](const MissionRecord& r) { return r.lifetime; });
    range("launch_mass", [&](const MissionRecord& r) { return opt(r.launch_mass); });
    if (std::any_of(records.begin(), records.end(), [](const MissionRecord& r) { return r.funding_joined; })) {
        auto joined = [](const MissionRecord& r, double v) {
            return r.funding_joined ? std::optional<double>(v) : std::nullopt;
        };
        range("total_rd", [&](const MissionRecord& r) { return joined(r, r.total_rd); });
        range("defense_rd", [&](const MissionRecord& r) { return joined(r, r.defense_rd); });
        range("space_rd", [&](const MissionRecord& r) { return joined(r, r.space_rd); });
        range("nasa_budget", [&](const MissionRecord& r) { return joined(r, r.nasa_budget); });
    }
    s.categorical_values["destination"] = {dest.begin(), dest.end()};
    s.categorical_values["contact_type"] = {contact.begin(), contact.end()};
    s.categorical_values["country"] = {country.begin(), country.end()};
    return s;
}

}  // namespace steti::data
