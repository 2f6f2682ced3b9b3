#include "sievelab/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sievelab/errors.hpp"
#include "sievelab/kernels.hpp"
#include "sievelab/sampling.hpp"

namespace sievelab {
namespace {

std::uint64_t node_key(std::size_t node, int level) {
    return (static_cast<std::uint64_t>(node) << 8) | static_cast<std::uint64_t>(level & 0xff);
}

double log_likelihood(const CandidatePool& pool, std::size_t i, const std::vector<double>& counts) {
    if (pool.strictly_positive(i)) return kernels::dot(counts, pool.log_values(i));
    const auto lv = pool.log_values(i);
    double acc = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0.0) acc += counts[c] * lv[c];
    }
    return acc;
}

struct Selection {
    std::size_t index = 0;
    std::size_t ties = 0;
    double value = -std::numeric_limits<double>::infinity();
};

// Children arrive in ascending pool order, so the first maximizer has the
// smallest index.
Selection select_child(const CandidatePool& pool, const std::vector<std::size_t>& children,
                       const std::vector<double>& counts) {
    Selection s;
    bool first = true;
    for (const std::size_t child : children) {
        const double ll = log_likelihood(pool, child, counts);
        if (first || ll > s.value) {
            s.value = ll;
            s.index = child;
            s.ties = 0;
            first = false;
        } else if (ll == s.value) {
            ++s.ties;
        }
    }
    return s;
}

std::vector<double> clip_into(std::vector<double> v, double hi) {
    for (int pass = 0; pass < 64; ++pass) {
        for (double& x : v) x = std::clamp(x, 0.0, hi);
        const double mass = grid_mass(v);
        if (!(mass > 0.0)) throw DomainError("mixture_lift: averaged estimate has no mass");
        for (double& x : v) x /= mass;
        if (*std::max_element(v.begin(), v.end()) <= hi + 1e-13) break;
    }
    return v;
}

}  // namespace

double minimal_c(const Bounds& bounds) {
    const auto eq = equivalence_constants(bounds);
    return 2.0 * (2.0 + std::sqrt(1.0 / (bounds.alpha * eq.c_ab)));
}

SieveConstants compute_constants(const Bounds& bounds, double c, double d, double schedule_constant,
                                 double radius_multiplier) {
    if (!(bounds.alpha > 0.0)) throw ConfigError("sieve constants need alpha > 0");
    bounds.validate(true);
    const auto eq = equivalence_constants(bounds);
    SieveConstants k;
    k.c = c;
    k.C = c / 2.0 - 1.0;
    k.c_ab = eq.c_ab;
    k.K_ab = eq.K_ab;
    const double threshold = 1.0 + std::sqrt(1.0 / (bounds.alpha * eq.c_ab));
    if (!(k.C > threshold)) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "c = " << c << " gives C = c/2 - 1 = " << k.C << ", which does not exceed 1 + sqrt(1/(alpha c_ab)) = "
            << threshold << " (Bernstein threshold); the smallest admissible c is " << minimal_c(bounds);
        throw ConfigError(msg.str());
    }
    const double root = std::sqrt(eq.c_ab) * (k.C - 1.0) - std::sqrt(1.0 / bounds.alpha);
    k.L = root * root / (2.0 * (2.0 * eq.K_ab + (2.0 / 3.0) * std::log(bounds.beta / bounds.alpha)));
    if (!(d >= 0.0) || !std::isfinite(d)) throw ConfigError("diameter d must be finite and nonnegative");
    k.d = d;
    k.schedule_constant = std::isnan(schedule_constant) ? std::sqrt(k.L) / c : schedule_constant;
    if (!(k.schedule_constant > 0.0)) throw ConfigError("schedule constant must be positive");
    if (!(radius_multiplier > 0.0)) throw ConfigError("radius multiplier must be positive");
    k.radius_multiplier = radius_multiplier;
    return k;
}

double epsilon_schedule(int J, const SieveConstants& k) {
    if (J < 1) throw DomainError("epsilon_schedule needs J >= 1");
    return k.schedule_constant * k.d / std::ldexp(1.0, J - 2);
}

double entropy_radius(int J, const SieveConstants& k) {
    if (J < 1) throw DomainError("entropy_radius needs J >= 1");
    return k.radius_multiplier * k.d / std::ldexp(1.0, J - 2);
}

double level_radius(int k, const SieveConstants& constants) { return constants.d / std::ldexp(1.0, k - 1); }

double level_separation(int k, const SieveConstants& constants) {
    return constants.d / (std::ldexp(1.0, k) * (constants.C + 1.0));
}

int solve_J_bar(std::size_t n, const SieveConstants& constants, const EntropyFn& entropy, int J_cap) {
    int best = 1;
    const double nn = static_cast<double>(n);
    for (int J = 1; J <= J_cap; ++J) {
        const double eps = epsilon_schedule(J, constants);
        const double rhs = std::max(2.0 * entropy(entropy_radius(J, constants)), std::numbers::ln2);
        if (nn * eps * eps > rhs) best = J;
    }
    return best;
}

std::vector<double> cell_counts(const std::vector<double>& samples, std::size_t m) {
    std::vector<double> counts(m, 0.0);
    for (const double x : samples) counts[GridDensity::cell_of(x, m)] += 1.0;
    return counts;
}

double log_likelihood_diff(const GridDensity& g, const GridDensity& g_prime, const std::vector<double>& samples) {
    if (g.size() != g_prime.size()) throw DimensionError("log_likelihood_diff: grid sizes differ");
    const auto counts = cell_counts(samples, g.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0.0) continue;
        if (!(g[i] > 0.0) || !(g_prime[i] > 0.0)) {
            throw DomainError("log_likelihood_diff: density vanishes at an observed cell");
        }
        acc += counts[i] * (std::log(g[i]) - std::log(g_prime[i]));
    }
    return acc;
}

PackingTree::PackingTree(const CandidatePool& pool, const SieveConstants& constants)
    : pool_(&pool), constants_(constants) {
    if (pool.empty()) throw DomainError("PackingTree needs a nonempty pool");
}

std::shared_ptr<const std::vector<std::size_t>> PackingTree::children(std::size_t node, int level) const {
    const auto key = node_key(node, level);
    {
        std::lock_guard lock(mutex_);
        if (const auto it = children_.find(key); it != children_.end()) return it->second;
    }
    std::shared_ptr<const std::vector<std::size_t>> value;
    const double radius = level_radius(level, constants_);
    const double separation = level_separation(level, constants_);
    if (separation > 0.0) {
        auto packing = greedy_maximal_packing(*pool_, separation, Ball{(*pool_)[node], radius});
        value = std::make_shared<const std::vector<std::size_t>>(std::move(packing.center_indices));
    } else {
        value = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{node});
    }
    std::lock_guard lock(mutex_);
    return children_.try_emplace(key, std::move(value)).first->second;
}

double PackingTree::adaptive_log_count(std::size_t node, int J) const {
    const auto key = node_key(node, J);
    {
        std::lock_guard lock(mutex_);
        if (const auto it = adaptive_.find(key); it != adaptive_.end()) return it->second;
    }
    const double radius = 2.0 * entropy_radius(J, constants_);
    const double scale = 2.0 * constants_.c;
    double value = 0.0;
    if (radius > 0.0) {
        const auto packing = greedy_maximal_packing(*pool_, radius / scale, Ball{(*pool_)[node], radius});
        value = std::log(static_cast<double>(std::max<std::size_t>(packing.center_indices.size(), 1)));
    }
    std::lock_guard lock(mutex_);
    return adaptive_.try_emplace(key, value).first->second;
}

namespace {

SieveTrace start_trace(const PackingTree& tree, int J) {
    SieveTrace trace;
    trace.constants = tree.constants();
    trace.J_bar = J;
    trace.path.push_back(0);
    return trace;
}

void record_level(SieveTrace& trace, const PackingTree& tree, int k, const std::vector<std::size_t>& children,
                  const Selection& s) {
    SieveLevel level;
    level.level = k;
    level.parent_index = trace.path.back();
    level.selected_index = s.index;
    level.packing_size = children.size();
    level.ties = s.ties;
    level.radius = level_radius(k, tree.constants());
    level.separation = level_separation(k, tree.constants());
    level.log_likelihood = s.value;
    trace.levels.push_back(level);
    trace.path.push_back(s.index);
}

SieveResult finish(const PackingTree& tree, SieveTrace trace) {
    trace.stop_level = static_cast<int>(trace.path.size());
    trace.epsilon_schedule.clear();
    for (int J = 1; J <= trace.J_bar; ++J) trace.epsilon_schedule.push_back(epsilon_schedule(J, tree.constants()));
    SieveResult r;
    r.estimate_index = trace.path.back();
    r.estimate = tree.pool()[r.estimate_index];
    r.trace = std::move(trace);
    return r;
}

}  // namespace

SieveResult run_sieve(const std::vector<double>& samples, const PackingTree& tree, int J_bar) {
    if (J_bar < 1) throw DomainError("run_sieve needs J_bar >= 1");
    const auto counts = cell_counts(samples, tree.pool().grid_size());
    SieveTrace trace = start_trace(tree, J_bar);
    trace.stop_reason = "J_bar";
    for (int k = 1; k < J_bar; ++k) {
        const auto children = tree.children(trace.path.back(), k);
        if (children->empty()) {
            trace.truncated = true;
            trace.stop_reason = "empty packing";
            break;
        }
        record_level(trace, tree, k, *children, select_child(tree.pool(), *children, counts));
    }
    return finish(tree, std::move(trace));
}

SieveResult run_adaptive_sieve(const std::vector<double>& samples, const PackingTree& tree, int J_cap,
                               std::size_t max_children, const AdaptiveEntropyFn& entropy) {
    if (J_cap < 1) throw DomainError("run_adaptive_sieve needs J_cap >= 1");
    const auto counts = cell_counts(samples, tree.pool().grid_size());
    const double n = static_cast<double>(samples.size());
    SieveTrace trace = start_trace(tree, 1);
    trace.adaptive = true;
    trace.stop_reason = "J_cap";
    for (int k = 1; k < J_cap; ++k) {
        const std::size_t node = trace.path.back();
        const int J = k + 1;
        const double eps = epsilon_schedule(J, tree.constants());
        const double ent = entropy ? entropy(node, J) : tree.adaptive_log_count(node, J);
        if (!(n * eps * eps > std::max(2.0 * ent, std::numbers::ln2))) {
            trace.stop_reason = "adaptive condition";
            break;
        }
        const auto children = tree.children(node, k);
        if (children->empty()) {
            trace.truncated = true;
            trace.stop_reason = "empty packing";
            break;
        }
        if (children->size() > max_children) {
            trace.stop_reason = "packing budget";
            break;
        }
        // Balls only shrink with depth, so a node that is its own sole child
        // stays the estimate at every deeper level.
        if (children->size() == 1 && children->front() == node) {
            trace.stop_reason = "singleton packing";
            break;
        }
        record_level(trace, tree, k, *children, select_child(tree.pool(), *children, counts));
        trace.J_bar = J;
    }
    return finish(tree, std::move(trace));
}

GridDensity mixture_lift(const GridDensity& f_alpha, const EstimateFn& estimate, const std::vector<double>& samples,
                         Rng& rng, int rounds, double beta) {
    if (rounds < 1) throw DomainError("mixture_lift needs at least one round");
    if (!(f_alpha.min_value() > 0.0)) throw DomainError("mixture_lift needs a strictly positive f_alpha");
    const std::size_t m = f_alpha.size();
    std::vector<double> acc(m, 0.0);
    std::bernoulli_distribution coin(0.5);
    for (int r = 0; r < rounds; ++r) {
        const auto t = sample_iid(f_alpha, samples.size(), rng);
        std::vector<double> z(samples.size());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = coin(rng) ? t[i] : samples[i];
        const GridDensity f_hat = estimate(z);
        if (f_hat.size() != m) throw DimensionError("mixture_lift: estimate on a different grid");
        for (std::size_t i = 0; i < m; ++i) acc[i] += 2.0 * f_hat[i] - f_alpha[i];
    }
    for (double& v : acc) v /= static_cast<double>(rounds);
    return GridDensity::normalized(clip_into(std::move(acc), beta));
}

void to_json(nlohmann::json& j, const SieveConstants& k) {
    j = nlohmann::json{{"c", k.c},
                       {"C", k.C},
                       {"c_ab", k.c_ab},
                       {"K_ab", k.K_ab},
                       {"L", k.L},
                       {"d", k.d},
                       {"schedule_constant", k.schedule_constant},
                       {"radius_multiplier", k.radius_multiplier}};
}

void to_json(nlohmann::json& j, const SieveTrace& trace) {
    auto levels = nlohmann::json::array();
    for (const auto& l : trace.levels) {
        levels.push_back({{"level", l.level},
                          {"parent_index", l.parent_index},
                          {"selected_index", l.selected_index},
                          {"packing_size", l.packing_size},
                          {"ties", l.ties},
                          {"radius", l.radius},
                          {"separation", l.separation},
                          {"log_likelihood", l.log_likelihood}});
    }
    j = nlohmann::json{{"constants", trace.constants},
                       {"J_bar", trace.J_bar},
                       {"epsilon_schedule", trace.epsilon_schedule},
                       {"path", trace.path},
                       {"levels", levels},
                       {"adaptive", trace.adaptive},
                       {"truncated", trace.truncated},
                       {"stop_level", trace.stop_level},
                       {"stop_reason", trace.stop_reason}};
}

std::string trace_csv(const SieveTrace& trace) {
    std::ostringstream out;
    out << "level,selected_index,packing_size,ties,radius,separation\n";
    char buf[64];
    for (const auto& l : trace.levels) {
        out << l.level << ',' << l.selected_index << ',' << l.packing_size << ',' << l.ties << ',';
        std::snprintf(buf, sizeof buf, "%.17g", l.radius);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", l.separation);
        out << buf << '\n';
    }
    return out.str();
}

}  // namespace sievelab
