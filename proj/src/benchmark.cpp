#include "steti/benchmark.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <map>

namespace steti::bench {

using data::FundingSeries;
using data::MissionRecord;

double moving_average_feature(const FundingSeries& series, int window, int year) {
    if (window < 1) throw ValidationError("moving-average window must be >= 1");
    double sum = 0.0;
    for (int y = year - window + 1; y <= year; ++y) sum += series.at(y);
    return sum / window;
}

Eigen::MatrixXd pearson_matrix(const std::vector<std::vector<double>>& columns) {
    const int n = static_cast<int>(columns.size());
    if (n == 0) throw ValidationError("pearson matrix needs at least one column");
    const std::size_t rows = columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw ValidationError("pearson matrix: ragged columns");
    std::vector<double> mean(static_cast<std::size_t>(n)), sd(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto& c = columns[static_cast<std::size_t>(j)];
        double m = 0.0;
        for (double v : c) m += v;
        m /= static_cast<double>(rows);
        double s = 0.0;
        for (double v : c) s += (v - m) * (v - m);
        mean[static_cast<std::size_t>(j)] = m;
        sd[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            double cov = 0.0;
            for (std::size_t r = 0; r < rows; ++r)
                cov += (columns[static_cast<std::size_t>(a)][r] - mean[static_cast<std::size_t>(a)]) *
                       (columns[static_cast<std::size_t>(b)][r] - mean[static_cast<std::size_t>(b)]);
            double denom = sd[static_cast<std::size_t>(a)] * sd[static_cast<std::size_t>(b)];
            double r = denom > 0.0 ? cov / denom : 0.0;
            out(a, b) = out(b, a) = r;
        }
    return out;
}

RegressionModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::vector<std::string> names) {
    if (X.rows() != y.size()) throw ValidationError("ols: row count mismatch");
    if (X.rows() <= X.cols())
        throw ValidationError("ols: need more rows (" + std::to_string(X.rows()) + ") than columns (" +
                              std::to_string(X.cols()) + ")");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols())
        throw ValidationError("ols: design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(X.cols()) + ")");
    RegressionModel m;
    m.column_names = std::move(names);
    m.coefficients = qr.solve(y);
    Eigen::VectorXd residuals = y - X * m.coefficients;
    long dof = X.rows() - X.cols();
    m.residual_variance = residuals.squaredNorm() / static_cast<double>(dof);
    return m;
}

std::vector<double> vif(const Eigen::MatrixXd& X) {
    const long p = X.cols();
    if (p < 1) throw ValidationError("vif: empty design");
    std::vector<double> out;
    for (long j = 0; j < p; ++j) {
        Eigen::VectorXd target = X.col(j);
        Eigen::MatrixXd others(X.rows(), p);  // intercept + remaining columns
        others.col(0).setOnes();
        long c = 1;
        for (long k = 0; k < p; ++k) {
            if (k == j) continue;
            others.col(c++) = X.col(k);
        }
        others.conservativeResize(Eigen::NoChange, c);
        Eigen::VectorXd beta = others.colPivHouseholderQr().solve(target);
        double ss_res = (target - others * beta).squaredNorm();
        double mean = target.mean();
        double ss_tot = (target.array() - mean).square().sum();
        if (ss_tot <= 0.0) {
            out.push_back(kVifInfinity);  // constant column, perfectly explained by the intercept
            continue;
        }
        double r2 = 1.0 - ss_res / ss_tot;
        if (r2 >= 1.0 - 1e-12) {
            out.push_back(kVifInfinity);
        } else {
            out.push_back(std::max(1.0, 1.0 / (1.0 - r2)));
        }
    }
    return out;
}

double kfold_cv_rmse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k) {
    const long n = X.rows();
    if (k < 2 || k > n) throw ValidationError("cv: k must be in [2, n]");
    long base = n / k, extra = n % k;
    double rmse_sum = 0.0;
    long start = 0;
    for (int f = 0; f < k; ++f) {
        long len = base + (f < extra ? 1 : 0);
        long train_rows = n - len;
        Eigen::MatrixXd Xt(train_rows, X.cols());
        Eigen::VectorXd yt(train_rows);
        long r = 0;
        for (long i = 0; i < n; ++i) {
            if (i >= start && i < start + len) continue;
            Xt.row(r) = X.row(i);
            yt(r) = y(i);
            ++r;
        }
        RegressionModel m = ols_fit(Xt, yt, {});
        double se = 0.0;
        for (long i = start; i < start + len; ++i) {
            double err = y(i) - X.row(i).dot(m.coefficients);
            se += err * err;
        }
        rmse_sum += std::sqrt(se / static_cast<double>(len));
        start += len;
    }
    return rmse_sum / k;
}

namespace {

const FundingSeries& series_by_name(const std::vector<FundingSeries>& funding, const std::string& name) {
    for (const auto& s : funding)
        if (s.name == name) return s;
    throw ValidationError("funding series '" + name + "' not provided");
}

// reference level = most frequent, ties to the lexicographically smallest
std::string reference_level(const std::vector<const MissionRecord*>& records,
                            const std::string MissionRecord::*field) {
    std::map<std::string, int> counts;
    for (const auto* r : records) counts[r->*field]++;
    std::string best;
    int best_count = -1;
    for (const auto& [label, count] : counts)
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    return best;
}

std::vector<std::string> other_levels(const std::vector<const MissionRecord*>& records,
                                      const std::string MissionRecord::*field,
                                      const std::string& reference) {
    std::map<std::string, int> counts;
    for (const auto* r : records) counts[r->*field]++;
    std::vector<std::string> out;
    for (const auto& [label, count] : counts)
        if (label != reference) out.push_back(label);
    return out;
}

}  // namespace

Design build_design(const std::vector<MissionRecord>& records,
                    const std::vector<FundingSeries>& funding,
                    const std::vector<std::string>& funding_subset, int window) {
    std::vector<const MissionRecord*> usable;
    for (const auto& r : records)
        if (r.status == data::Status::inactive && r.lifetime) usable.push_back(&r);
    if (usable.size() < 3) throw ValidationError("benchmark: need at least 3 completed records");
    std::sort(usable.begin(), usable.end(), [](const MissionRecord* a, const MissionRecord* b) {
        if (a->launch_date != b->launch_date) return a->launch_date < b->launch_date;
        return a->name < b->name;
    });

    struct Dummy {
        const std::string MissionRecord::*field;
        std::string prefix;
        std::vector<std::string> levels;
    };
    std::vector<Dummy> dummies{{&MissionRecord::destination, "destination", {}},
                               {&MissionRecord::contact_type, "contact_type", {}},
                               {&MissionRecord::country, "country", {}}};
    for (auto& d : dummies)
        d.levels = other_levels(usable, d.field, reference_level(usable, d.field));

    std::vector<std::string> names{"intercept", "launch_date", "log2_launch_mass"};
    for (const auto& f : funding_subset) names.push_back("log2_ma_" + f);
    for (const auto& d : dummies)
        for (const auto& level : d.levels) names.push_back(d.prefix + "=" + level);

    Design design;
    design.names = names;
    for (std::size_t j = 1; j < 3 + funding_subset.size(); ++j)
        design.continuous_columns.push_back(static_cast<int>(j));

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> targets;
    for (const auto* r : usable) {
        Eigen::VectorXd row(names.size());
        long c = 0;
        row(c++) = 1.0;
        row(c++) = r->launch_date;
        row(c++) = std::log2(r->launch_mass);
        bool finite = true;
        int launch_year = static_cast<int>(std::floor(r->launch_date));
        for (const auto& f : funding_subset) {
            double ma = moving_average_feature(series_by_name(funding, f), window, launch_year);
            if (!(ma > 0.0)) {
                finite = false;  // log2 undefined, drop the record for this candidate
                break;
            }
            row(c++) = std::log2(ma);
        }
        if (!finite) {
            design.dropped_records++;
            continue;
        }
        for (const auto& d : dummies)
            for (const auto& level : d.levels) row(c++) = (r->*d.field == level) ? 1.0 : 0.0;
        rows.push_back(std::move(row));
        targets.push_back(std::log2(*r->lifetime));
        design.record_names.push_back(r->name);
    }
    if (rows.size() < 3) throw ValidationError("benchmark: too few usable records after feature checks");

    design.X.resize(static_cast<long>(rows.size()), static_cast<long>(names.size()));
    design.y.resize(static_cast<long>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        design.X.row(static_cast<long>(i)) = rows[i];
        design.y(static_cast<long>(i)) = targets[i];
    }
    return design;
}

double benchmark_predict(const RegressionModel& model, const MissionRecord& record,
                         const std::vector<FundingSeries>& funding,
                         const std::vector<std::string>& funding_subset, int window) {
    double acc = 0.0;
    long c = 0;
    auto coef = [&](const std::string& name) {
        if (model.column_names[static_cast<std::size_t>(c)] != name)
            throw ValidationError("benchmark predict: model columns do not match the spec");
        return model.coefficients(c++);
    };
    acc += coef("intercept");
    acc += coef("launch_date") * record.launch_date;
    acc += coef("log2_launch_mass") * std::log2(record.launch_mass);
    int launch_year = static_cast<int>(std::floor(record.launch_date));
    for (const auto& f : funding_subset) {
        double ma = moving_average_feature(series_by_name(funding, f), window, launch_year);
        if (!(ma > 0.0)) throw ValidationError("benchmark predict: nonpositive funding average");
        acc += coef("log2_ma_" + f) * std::log2(ma);
    }
    for (; c < model.coefficients.size(); ++c) {
        const std::string& name = model.column_names[static_cast<std::size_t>(c)];
        auto eq = name.find('=');
        std::string field = name.substr(0, eq), level = name.substr(eq + 1);
        const std::string& value = field == "destination"    ? record.destination
                                   : field == "contact_type" ? record.contact_type
                                                             : record.country;
        if (value == level) acc += model.coefficients(c);
    }
    return acc;
}

SearchResult feature_search(const std::vector<MissionRecord>& records,
                            const std::vector<FundingSeries>& funding, int window_lo, int window_hi,
                            double vif_threshold, int k) {
    // Table-7 ordering: subsets by decreasing size, lexicographic within size
    // over [nasa_budget, defense_rd, space_rd, total_rd]
    const std::vector<std::string> vars{"nasa_budget", "defense_rd", "space_rd", "total_rd"};
    std::vector<std::vector<std::string>> subsets;
    for (int size = 4; size >= 1; --size) {
        std::vector<int> idx(static_cast<std::size_t>(size));
        std::function<void(int, int)> gen = [&](int start, int depth) {
            if (depth == size) {
                std::vector<std::string> subset;
                for (int i : idx) subset.push_back(vars[static_cast<std::size_t>(i)]);
                subsets.push_back(std::move(subset));
                return;
            }
            for (int i = start; i < 4; ++i) {
                idx[static_cast<std::size_t>(depth)] = i;
                gen(i + 1, depth + 1);
            }
        };
        gen(0, 0);
    }

    SearchResult result;
    for (std::size_t s = 0; s < subsets.size(); ++s) {
        CandidateResult cand;
        cand.model_no = static_cast<int>(s) + 1;
        cand.variables = subsets[s];
        cand.lowest_mean_rmse = std::numeric_limits<double>::infinity();
        for (int w = window_lo; w <= window_hi; ++w) {
            ++result.evaluations;
            try {
                Design d = build_design(records, funding, subsets[s], w);
                double rmse = kfold_cv_rmse(d.X, d.y, k);
                if (rmse < cand.lowest_mean_rmse) {
                    cand.lowest_mean_rmse = rmse;
                    cand.best_window = w;
                }
            } catch (const Error&) {
                // window unusable for this subset (missing years, collinear fold)
            }
        }
        if (!std::isfinite(cand.lowest_mean_rmse)) {
            cand.usable = false;
            result.candidates.push_back(std::move(cand));
            continue;
        }
        Design d = build_design(records, funding, subsets[s], cand.best_window);
        Eigen::MatrixXd continuous(d.X.rows(), static_cast<long>(d.continuous_columns.size()));
        for (std::size_t j = 0; j < d.continuous_columns.size(); ++j)
            continuous.col(static_cast<long>(j)) = d.X.col(d.continuous_columns[j]);
        auto vifs = vif(continuous);
        cand.vif_ok = true;
        for (std::size_t j = 0; j < vifs.size(); ++j) {
            cand.vifs.emplace_back(d.names[static_cast<std::size_t>(d.continuous_columns[j])], vifs[j]);
            if (!(vifs[j] < vif_threshold)) cand.vif_ok = false;
        }
        result.candidates.push_back(std::move(cand));
    }

    for (std::size_t s = 0; s < result.candidates.size(); ++s) {
        const auto& c = result.candidates[s];
        if (!c.usable || !c.vif_ok) continue;
        if (result.selected < 0 ||
            c.lowest_mean_rmse <
                result.candidates[static_cast<std::size_t>(result.selected)].lowest_mean_rmse)
            result.selected = static_cast<int>(s);
    }
    if (result.selected < 0)
        throw RuntimeError("benchmark search: no candidate satisfies the VIF threshold");

    const auto& sel = result.candidates[static_cast<std::size_t>(result.selected)];
    Design d = build_design(records, funding, sel.variables, sel.best_window);
    result.selected_model = ols_fit(d.X, d.y, d.names);
    result.selected_window = sel.best_window;
    result.selected_variables = sel.variables;
    return result;
}

}  // namespace steti::bench
