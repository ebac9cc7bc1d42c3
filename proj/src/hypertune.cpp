#include "steti/hypertune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "steti/csv.hpp"

namespace steti::tune {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double x, double mu, double sigma) {
    double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

// Adaptive-bandwidth Parzen mixture over [lo, hi] with a flat-ish prior
// component spanning the whole range.
class ParzenEstimator {
public:
    ParzenEstimator(std::vector<double> obs, double lo, double hi) : lo_(lo), hi_(hi) {
        std::sort(obs.begin(), obs.end());
        const double range = hi - lo;
        mus_ = std::move(obs);
        sigmas_.resize(mus_.size());
        // bandwidth floor keeps late proposals exploring around the cluster
        const double min_sigma = range / std::min(100.0, static_cast<double>(mus_.size()) + 2.0);
        for (std::size_t i = 0; i < mus_.size(); ++i) {
            double left = i == 0 ? mus_[i] - lo : mus_[i] - mus_[i - 1];
            double right = i + 1 == mus_.size() ? hi - mus_[i] : mus_[i + 1] - mus_[i];
            double s = std::max(left, right);
            sigmas_[i] = std::clamp(s, min_sigma, range);
        }
        // prior component: wide Gaussian centred on the domain
        mus_.push_back(0.5 * (lo + hi));
        sigmas_.push_back(range);
    }

    double draw(Rng& rng) const {
        std::size_t k = static_cast<std::size_t>(rng.next_u64() % mus_.size());
        for (int attempt = 0; attempt < 64; ++attempt) {
            double x = rng.normal(mus_[k], sigmas_[k]);
            if (x >= lo_ && x <= hi_) return x;
        }
        return std::clamp(rng.normal(mus_[k], sigmas_[k]), lo_, hi_);
    }

    double log_pdf(double x) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < mus_.size(); ++i) acc += normal_pdf(x, mus_[i], sigmas_[i]);
        acc /= static_cast<double>(mus_.size());
        return std::log(std::max(acc, 1e-300));
    }

private:
    std::vector<double> mus_, sigmas_;
    double lo_, hi_;
};

double propose_continuous(const std::vector<double>& good, const std::vector<double>& bad, double lo,
                          double hi, Rng& rng) {
    ParzenEstimator l(good, lo, hi);
    ParzenEstimator g(bad, lo, hi);
    double best_x = lo, best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < kCandidates; ++c) {
        double x = l.draw(rng);
        double score = l.log_pdf(x) - g.log_pdf(x);
        if (score > best_score) {
            best_score = score;
            best_x = x;
        }
    }
    return best_x;
}

int propose_quantized(const std::vector<double>& good, const std::vector<double>& bad, int lo, int hi,
                      Rng& rng) {
    double x = propose_continuous(good, bad, lo, hi, rng);
    return std::clamp(static_cast<int>(std::lround(x)), lo, hi);
}

// Dirichlet-smoothed categorical densities.
int propose_categorical(const std::vector<int>& good, const std::vector<int>& bad, int n_categories,
                        Rng& rng) {
    auto weights = [&](const std::vector<int>& obs) {
        std::vector<double> w(static_cast<std::size_t>(n_categories), 1.0);
        for (int c : obs) w[static_cast<std::size_t>(c)] += 1.0;
        double total = 0.0;
        for (double v : w) total += v;
        for (double& v : w) v /= total;
        return w;
    };
    std::vector<double> wl = weights(good), wg = weights(bad);
    int best_c = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < kCandidates; ++c) {
        double u = rng.uniform();
        int cat = n_categories - 1;
        double acc = 0.0;
        for (int k = 0; k < n_categories; ++k) {
            acc += wl[static_cast<std::size_t>(k)];
            if (u < acc) {
                cat = k;
                break;
            }
        }
        double score = std::log(wl[static_cast<std::size_t>(cat)]) - std::log(wg[static_cast<std::size_t>(cat)]);
        if (score > best_score) {
            best_score = score;
            best_c = cat;
        }
    }
    return best_c;
}

HyperParams sample_prior(const SearchSpace& space, Rng& rng) {
    HyperParams hp;
    hp.learning_rate = std::pow(10.0, rng.uniform(SearchSpace::kLogLrLow, SearchSpace::kLogLrHigh));
    hp.optimizer = static_cast<Optimizer>(rng.uniform_int(0, 2));
    hp.dropout_rate = rng.uniform();
    hp.recurrent_dropout_rate = rng.uniform();
    hp.lstm_activation = static_cast<Activation>(rng.uniform_int(0, 3));
    hp.output_activation = static_cast<Activation>(rng.uniform_int(0, 3));
    hp.bidirectional = rng.uniform() < 0.5;
    hp.window_size = rng.uniform_int(SearchSpace::kWindowLow, SearchSpace::kWindowHigh);
    if (space.time_plus)
        hp.window_size_funding = rng.uniform_int(SearchSpace::kWindowLow, SearchSpace::kWindowHigh);
    return hp;
}

}  // namespace

bool in_domain(const SearchSpace& space, const HyperParams& hp) {
    bool ok = hp.learning_rate >= std::pow(10.0, SearchSpace::kLogLrLow) &&
              hp.learning_rate <= std::pow(10.0, SearchSpace::kLogLrHigh) && hp.dropout_rate >= 0.0 &&
              hp.dropout_rate <= 1.0 && hp.recurrent_dropout_rate >= 0.0 &&
              hp.recurrent_dropout_rate <= 1.0 && hp.window_size >= SearchSpace::kWindowLow &&
              hp.window_size <= SearchSpace::kWindowHigh;
    if (space.time_plus)
        ok = ok && hp.window_size_funding && *hp.window_size_funding >= SearchSpace::kWindowLow &&
             *hp.window_size_funding <= SearchSpace::kWindowHigh;
    else
        ok = ok && !hp.window_size_funding;
    return ok;
}

HyperParams sample(const SearchSpace& space, const std::vector<Trial>& history, Rng& rng) {
    std::vector<const Trial*> done;
    for (const auto& t : history)
        if (t.ok) done.push_back(&t);
    if (static_cast<int>(done.size()) < kStartupTrials) return sample_prior(space, rng);

    std::sort(done.begin(), done.end(),
              [](const Trial* a, const Trial* b) { return a->objective < b->objective; });
    std::size_t n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(kGamma * static_cast<double>(done.size()))));
    n_good = std::min(n_good, done.size() - 1);

    auto cont = [&](auto getter, double lo, double hi) {
        std::vector<double> good, bad;
        for (std::size_t i = 0; i < done.size(); ++i)
            (i < n_good ? good : bad).push_back(getter(done[i]->params));
        return propose_continuous(good, bad, lo, hi, rng);
    };
    auto quant = [&](auto getter, int lo, int hi) {
        std::vector<double> good, bad;
        for (std::size_t i = 0; i < done.size(); ++i)
            (i < n_good ? good : bad).push_back(getter(done[i]->params));
        return propose_quantized(good, bad, lo, hi, rng);
    };
    auto cat = [&](auto getter, int n_categories) {
        std::vector<int> good, bad;
        for (std::size_t i = 0; i < done.size(); ++i)
            (i < n_good ? good : bad).push_back(getter(done[i]->params));
        return propose_categorical(good, bad, n_categories, rng);
    };

    HyperParams hp;
    hp.learning_rate = std::pow(
        10.0, cont([](const HyperParams& p) { return std::log10(p.learning_rate); },
                   SearchSpace::kLogLrLow, SearchSpace::kLogLrHigh));
    hp.dropout_rate = cont([](const HyperParams& p) { return p.dropout_rate; }, 0.0, 1.0);
    hp.recurrent_dropout_rate =
        cont([](const HyperParams& p) { return p.recurrent_dropout_rate; }, 0.0, 1.0);
    hp.window_size = quant([](const HyperParams& p) { return double(p.window_size); },
                           SearchSpace::kWindowLow, SearchSpace::kWindowHigh);
    if (space.time_plus)
        hp.window_size_funding =
            quant([](const HyperParams& p) { return double(p.window_size_funding.value_or(5)); },
                  SearchSpace::kWindowLow, SearchSpace::kWindowHigh);
    hp.optimizer =
        static_cast<Optimizer>(cat([](const HyperParams& p) { return static_cast<int>(p.optimizer); }, 3));
    hp.lstm_activation = static_cast<Activation>(
        cat([](const HyperParams& p) { return static_cast<int>(p.lstm_activation); }, 4));
    hp.output_activation = static_cast<Activation>(
        cat([](const HyperParams& p) { return static_cast<int>(p.output_activation); }, 4));
    hp.bidirectional = cat([](const HyperParams& p) { return p.bidirectional ? 1 : 0; }, 2) == 1;
    return hp;
}

StudyResult run_study(const Objective& objective, const SearchSpace& space, int max_trials,
                      std::uint64_t seed, std::vector<Trial> resume,
                      const std::function<void(const Trial&)>& on_trial) {
    if (max_trials < 1) throw ValidationError("study needs max_trials >= 1");
    StudyResult result;
    result.ledger = std::move(resume);

    for (int id = static_cast<int>(result.ledger.size()); id < max_trials; ++id) {
        // per-trial streams keyed by (seed, id) so resumed studies continue
        // exactly where an uninterrupted one would be
        Rng proposal_rng = Rng(seed).split("proposal-" + std::to_string(id));
        Trial t;
        t.id = id;
        t.params = sample(space, result.ledger, proposal_rng);
        t.seed = Rng(seed).split("trial-seed-" + std::to_string(id)).next_u64();
        auto start = std::chrono::steady_clock::now();
        try {
            double value = objective(t.params, t.seed);
            if (!std::isfinite(value)) throw RuntimeError("objective returned a non-finite value");
            t.objective = value;
            t.ok = true;
        } catch (const std::exception&) {
            t.ok = false;
            t.objective = std::numeric_limits<double>::quiet_NaN();
        }
        t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.ledger.push_back(t);
        if (on_trial) on_trial(result.ledger.back());
    }

    const Trial* best = nullptr;
    for (const auto& t : result.ledger)
        if (t.ok && (!best || t.objective < best->objective)) best = &t;
    if (!best) throw RuntimeError("hyperparameter study: all trials failed");
    result.best = *best;
    return result;
}

std::vector<std::string> ledger_header(bool time_plus) {
    std::vector<std::string> h{"trial_id",     "learning_rate",          "optimizer",
                               "dropout_rate", "recurrent_dropout_rate", "lstm_activation",
                               "output_activation", "bidirectional",     "window_size"};
    if (time_plus) h.push_back("window_size_funding");
    h.insert(h.end(), {"objective", "status", "seed", "seconds"});
    return h;
}

std::vector<std::string> ledger_row(const Trial& t, bool with_seconds) {
    std::vector<std::string> row{std::to_string(t.id),
                                 format_double(t.params.learning_rate),
                                 to_string(t.params.optimizer),
                                 format_double(t.params.dropout_rate),
                                 format_double(t.params.recurrent_dropout_rate),
                                 to_string(t.params.lstm_activation),
                                 to_string(t.params.output_activation),
                                 t.params.bidirectional ? "true" : "false",
                                 std::to_string(t.params.window_size)};
    if (t.params.window_size_funding) row.push_back(std::to_string(*t.params.window_size_funding));
    row.push_back(t.ok ? format_double(t.objective) : "");
    row.push_back(t.ok ? "ok" : "failed");
    row.push_back(std::to_string(t.seed));
    row.push_back(with_seconds ? format_double(t.seconds) : "");
    return row;
}

void write_ledger_csv(const std::filesystem::path& path, const std::vector<Trial>& ledger,
                      bool time_plus) {
    csv::Writer w(path);
    w.row(ledger_header(time_plus));
    for (const auto& t : ledger) w.row(ledger_row(t));
}

std::vector<Trial> read_ledger_csv(const std::filesystem::path& path) {
    auto table = csv::read_file(path);
    const std::string file = path.filename().string();
    auto col = [&](const std::string& name) { return table.require_column(name, file); };
    int c_id = col("trial_id"), c_lr = col("learning_rate"), c_opt = col("optimizer");
    int c_dr = col("dropout_rate"), c_rdr = col("recurrent_dropout_rate");
    int c_la = col("lstm_activation"), c_oa = col("output_activation");
    int c_bi = col("bidirectional"), c_ws = col("window_size");
    int c_wsf = table.column("window_size_funding");
    int c_obj = col("objective"), c_status = col("status"), c_seed = col("seed"), c_sec = col("seconds");

    std::vector<Trial> out;
    for (const auto& row : table.rows) {
        auto f = [&](int c) { return row[static_cast<std::size_t>(c)]; };
        Trial t;
        t.id = static_cast<int>(parse_long(f(c_id), file));
        t.params.learning_rate = parse_double(f(c_lr), file);
        t.params.optimizer = optimizer_from_string(f(c_opt));
        t.params.dropout_rate = parse_double(f(c_dr), file);
        t.params.recurrent_dropout_rate = parse_double(f(c_rdr), file);
        t.params.lstm_activation = activation_from_string(f(c_la));
        t.params.output_activation = activation_from_string(f(c_oa));
        t.params.bidirectional = f(c_bi) == "true";
        t.params.window_size = static_cast<int>(parse_long(f(c_ws), file));
        if (c_wsf >= 0 && !f(c_wsf).empty())
            t.params.window_size_funding = static_cast<int>(parse_long(f(c_wsf), file));
        t.ok = f(c_status) == "ok";
        t.objective = t.ok ? parse_double(f(c_obj), file) : std::numeric_limits<double>::quiet_NaN();
        t.seed = static_cast<std::uint64_t>(std::stoull(f(c_seed)));
        t.seconds = f(c_sec).empty() ? 0.0 : parse_double(f(c_sec), file);
        out.push_back(t);
    }
    return out;
}

}  // namespace steti::tune
