#include "sievelab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "parallel.hpp"
#include "sievelab/errors.hpp"
#include "sievelab/rng.hpp"
#include "sievelab/sampling.hpp"

namespace sievelab {
namespace {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
    MeanStderr r;
    if (v.empty()) return r;
    const double n = static_cast<double>(v.size());
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (const double x : v) ss += (x - r.mean) * (x - r.mean);
        r.stderr_ = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

void finish_frequency(ConcentrationReport& r) {
    const double R = static_cast<double>(r.replicates);
    r.frequency = r.replicates ? static_cast<double>(r.exceedances) / R : 0.0;
    r.stderr_ = r.replicates ? std::sqrt(r.frequency * (1.0 - r.frequency) / R) : 0.0;
}

}  // namespace

SieveSetup::SieveSetup(const ClassSpec& spec, CandidatePool pool, const SieveConfig& config)
    : spec_(spec), pool_(std::make_unique<CandidatePool>(std::move(pool))), config_(config) {
    spec_.validate();
    if (pool_->empty()) throw ConfigError("candidate pool is empty");
    if (pool_->grid_size() != spec_.grid_size) throw DimensionError("pool grid does not match class grid");
    if (config_.J_cap < 1) throw ConfigError("J_cap must be at least 1");
    if (config_.centers < 1) throw ConfigError("center count must be positive");
    const double d = std::min(diameter_upper_bound(spec_.bounds), pool_->diameter());
    constants_ = compute_constants(spec_.bounds, config_.c, d, config_.schedule_constant, config_.radius_multiplier);
    tree_ = std::make_unique<PackingTree>(*pool_, constants_);

    const auto centers = default_centers(*pool_, config_.centers);
    entropy_rows_.resize(static_cast<std::size_t>(config_.J_cap));
    detail::parallel_for(entropy_rows_.size(), config_.threads, [&](std::size_t i) {
        const int J = static_cast<int>(i) + 1;
        const double radius = entropy_radius(J, constants_);
        if (radius > 0.0) {
            entropy_rows_[i] = local_entropy_estimate(spec_, radius, config_.c, *pool_, centers);
        } else {
            entropy_rows_[i].epsilon = radius;
            entropy_rows_[i].c = config_.c;
            entropy_rows_[i].mode = EntropyMode::LocalSup;
        }
    });
    // Radii shrink with J; the monotone fit wants them ascending.
    std::vector<double> eps;
    std::vector<double> raw;
    for (auto it = entropy_rows_.rbegin(); it != entropy_rows_.rend(); ++it) {
        eps.push_back(it->epsilon);
        raw.push_back(it->log_count);
    }
    entropy_ = std::make_unique<MonotoneEntropy>(std::move(eps), raw);
}

int SieveSetup::J_bar(std::size_t n) const {
    return solve_J_bar(n, constants_, [this](double r) { return (*entropy_)(r); }, config_.J_cap);
}

SieveResult SieveSetup::estimate(const std::vector<double>& samples) const {
    if (config_.adaptive) return run_adaptive_sieve(samples, *tree_, config_.J_cap, config_.max_children);
    return run_sieve(samples, *tree_, J_bar(samples.size()));
}

RiskPoint risk_estimate(const SieveSetup& setup, const GridDensity& f_true, std::size_t n, std::size_t replicates,
                        std::uint64_t seed) {
    if (replicates == 0) throw ConfigError("replicate count must be positive");
    const auto report = membership(setup.spec(), f_true);
    if (!report.is_member) {
        std::string worst;
        double slack = 0.0;
        for (const auto& s : report.slacks) {
            if (s.slack < slack) {
                slack = s.slack;
                worst = s.name;
            }
        }
        throw InputError("true density is not a member of the class (constraint '" + worst + "' violated)");
    }
    RiskPoint point;
    point.n = n;
    point.replicates = replicates;
    point.J_bar = setup.J_bar(n);
    point.rows.resize(replicates);
    detail::parallel_for(replicates, setup.config().threads, [&](std::size_t r) {
        ReplicateResult& row = point.rows[r];
        row.replicate = r;
        row.seed = derive_seed(seed, {stream_tag::kReplicate, n, r});
        Rng rng(row.seed);
        const auto samples = sample_iid(f_true, n, rng);
        const auto result = setup.estimate(samples);
        row.l2_squared = l2_distance_squared(result.estimate, f_true);
        row.kl = kl_divergence(f_true, result.estimate);
        const double h = hellinger(result.estimate, f_true);
        row.hellinger_squared = h * h;
        row.depth = result.trace.stop_level;
        row.estimate_index = result.estimate_index;
    });
    std::vector<double> l2;
    std::vector<double> kl;
    std::vector<double> he;
    std::vector<double> depth;
    for (const auto& row : point.rows) {
        l2.push_back(row.l2_squared);
        kl.push_back(row.kl);
        he.push_back(row.hellinger_squared);
        depth.push_back(row.depth);
    }
    const auto s = mean_stderr(l2);
    point.mean = s.mean;
    point.stderr_ = s.stderr_;
    point.kl_mean = mean_stderr(kl).mean;
    point.hellinger_mean = mean_stderr(he).mean;
    point.mean_depth = mean_stderr(depth).mean;
    return point;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("fit_power_law needs matching series of length >= 2");
    PowerLawFit fit;
    const std::size_t k = x.size();
    for (std::size_t i = 0; i < k; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            fit.slope = fit.intercept = fit.slope_stderr = fit.half_width = std::numeric_limits<double>::quiet_NaN();
            return fit;
        }
    }
    std::vector<double> lx(k);
    std::vector<double> ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(k);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(k);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (k > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double e = ly[i] - fit.intercept - fit.slope * lx[i];
            sse += e * e;
        }
        fit.slope_stderr = std::sqrt(sse / static_cast<double>(k - 2) / sxx);
        const boost::math::students_t dist(static_cast<double>(k - 2));
        fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * fit.slope_stderr;
    }
    return fit;
}

RiskSweepReport rate_sweep(const SieveSetup& setup, const GridDensity& f_true, const std::vector<std::size_t>& n_list,
                           std::size_t replicates, std::uint64_t seed) {
    if (n_list.size() < 4) throw ConfigError("a rate sweep needs at least 4 sample sizes");
    RiskSweepReport report;
    report.seed = seed;
    report.pool_size = setup.pool().size();
    std::vector<double> ns;
    std::vector<double> risks;
    int deepest = 1;
    for (const std::size_t n : n_list) {
        report.points.push_back(risk_estimate(setup, f_true, n, replicates, seed));
        const auto& p = report.points.back();
        ns.push_back(static_cast<double>(n));
        risks.push_back(p.mean);
        for (const auto& row : p.rows) deepest = std::max(deepest, row.depth);
    }
    report.fit = fit_power_law(ns, risks);
    report.theoretical_slope = -setup.spec().rate_exponent();
    report.pool_spacing = mean_nearest_neighbor_spacing(setup.pool());
    report.deepest_separation = level_separation(std::max(deepest - 1, 1), setup.constants());
    report.pool_limited = report.pool_spacing > report.deepest_separation;
    std::ostringstream note;
    note.precision(4);
    note << "pool of " << report.pool_size << " with mean nearest-neighbour spacing " << report.pool_spacing
         << "; deepest packing separation " << report.deepest_separation
         << (report.pool_limited ? " (pool-limited: the pool is coarser than the deepest packing)" : "");
    report.note = note.str();
    return report;
}

ConcentrationReport bernstein_experiment(const GridDensity& f, const GridDensity& g, const GridDensity& g_prime,
                                         const Bounds& bounds, double c, std::size_t n, std::size_t replicates,
                                         std::uint64_t seed) {
    const auto constants = compute_constants(bounds, c, diameter_upper_bound(bounds));
    ConcentrationReport r;
    r.n = n;
    r.C = constants.C;
    r.L = constants.L;
    r.replicates = replicates;
    r.delta = l2_distance(g, g_prime) / constants.C;
    if (!(r.delta > 0.0)) throw InputError("bernstein_experiment: g and g' coincide, so delta = 0");
    if (!(l2_distance(g_prime, f) <= r.delta)) {
        throw InputError("bernstein_experiment: ||g' - f|| <= delta = ||g - g'|| / C is violated");
    }
    std::vector<char> exceed(replicates, 0);
    for (std::size_t k = 0; k < replicates; ++k) {
        Rng rng = make_stream(seed, {stream_tag::kReplicate, n, k});
        const auto x = sample_iid(f, n, rng);
        exceed[k] = log_likelihood_diff(g, g_prime, x) > 0.0 ? 1 : 0;
    }
    r.exceedances = static_cast<std::size_t>(std::count(exceed.begin(), exceed.end(), 1));
    r.bound = std::exp(-static_cast<double>(n) * r.L * r.delta * r.delta);
    finish_frequency(r);
    return r;
}

ConcentrationReport packing_mle_experiment(const GridDensity& f, const std::vector<GridDensity>& packing,
                                           const Bounds& bounds, double C, double delta, std::size_t n,
                                           std::size_t replicates, std::uint64_t seed) {
    if (packing.empty()) throw InputError("packing_mle_experiment: empty packing");
    for (std::size_t a = 0; a < packing.size(); ++a) {
        for (std::size_t b = a + 1; b < packing.size(); ++b) {
            if (!(l2_distance(packing[a], packing[b]) > delta)) {
                throw InputError("packing_mle_experiment: packing elements " + std::to_string(a) + " and " +
                                 std::to_string(b) + " are not more than delta apart");
            }
        }
    }
    const bool near = std::any_of(packing.begin(), packing.end(),
                                  [&](const GridDensity& g) { return l2_distance(g, f) <= delta; });
    if (!near) throw InputError("packing_mle_experiment: no packing element within delta of f");
    const auto constants = compute_constants(bounds, 2.0 * (C + 1.0), diameter_upper_bound(bounds));
    CandidatePool pool(packing);
    ConcentrationReport r;
    r.n = n;
    r.delta = delta;
    r.C = C;
    r.L = constants.L;
    r.replicates = replicates;
    for (std::size_t k = 0; k < replicates; ++k) {
        Rng rng = make_stream(seed, {stream_tag::kReplicate, n, k});
        const auto counts = cell_counts(sample_iid(f, n, rng), f.size());
        std::size_t best = 0;
        double best_ll = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool.size(); ++j) {
            double ll = 0.0;
            const auto lv = pool.log_values(j);
            for (std::size_t i = 0; i < counts.size(); ++i) {
                if (counts[i] > 0.0) ll += counts[i] * lv[i];
            }
            if (j == 0 || ll > best_ll) {
                best_ll = ll;
                best = j;
            }
        }
        if (l2_distance(packing[best], f) > (C + 1.0) * delta) ++r.exceedances;
    }
    r.bound = static_cast<double>(packing.size()) * std::exp(-static_cast<double>(n) * r.L * delta * delta);
    finish_frequency(r);
    return r;
}

std::vector<GridDensity> chain_packing(const GridDensity& f, std::size_t count, double step) {
    const std::size_t m = f.size();
    std::vector<double> u(m);
    for (std::size_t i = 0; i < m; ++i) {
        u[i] = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(m));
    }
    const double mean = grid_mass(u);
    for (double& v : u) v -= mean;
    double norm2 = 0.0;
    for (const double v : u) norm2 += v * v;
    const double norm = std::sqrt(norm2 / static_cast<double>(m));
    std::vector<GridDensity> out;
    for (std::size_t j = 0; j < count; ++j) {
        std::vector<double> v(m);
        for (std::size_t i = 0; i < m; ++i) v[i] = f[i] + static_cast<double>(j) * step * u[i] / norm;
        out.push_back(GridDensity::normalized(std::move(v)));
    }
    return out;
}

void to_json(nlohmann::json& j, const RiskSweepReport& report) {
    auto points = nlohmann::json::array();
    for (const auto& p : report.points) {
        points.push_back({{"n", p.n},
                          {"replicates", p.replicates},
                          {"J_bar", p.J_bar},
                          {"mean_depth", p.mean_depth},
                          {"risk_l2_squared", p.mean},
                          {"stderr", p.stderr_},
                          {"risk_kl", p.kl_mean},
                          {"risk_hellinger_squared", p.hellinger_mean}});
    }
    j = nlohmann::json{{"points", points},
                       {"slope", report.fit.slope},
                       {"slope_half_width", report.fit.half_width},
                       {"theoretical_slope", report.theoretical_slope},
                       {"seed", report.seed},
                       {"pool_size", report.pool_size},
                       {"pool_spacing", report.pool_spacing},
                       {"deepest_separation", report.deepest_separation},
                       {"pool_limited", report.pool_limited},
                       {"note", report.note}};
}

void to_json(nlohmann::json& j, const ConcentrationReport& r) {
    j = nlohmann::json{{"n", r.n},
                       {"delta", r.delta},
                       {"C", r.C},
                       {"L", r.L},
                       {"replicates", r.replicates},
                       {"exceedances", r.exceedances},
                       {"frequency", r.frequency},
                       {"stderr", r.stderr_},
                       {"bound", r.bound},
                       {"within_bound", r.within_bound()}};
}

}  // namespace sievelab
