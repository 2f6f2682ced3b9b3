#include "sievelab/packing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sievelab/errors.hpp"
#include "sievelab/kernels.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {
namespace {

double log_count_of(std::size_t count) { return std::log(static_cast<double>(std::max<std::size_t>(count, 1))); }

void require_grid(const ClassSpec& spec, const CandidatePool& pool) {
    if (!pool.empty() && pool.grid_size() != spec.grid_size) {
        throw DimensionError("pool grid (" + std::to_string(pool.grid_size()) + ") does not match class grid (" +
                             std::to_string(spec.grid_size) + ")");
    }
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

}  // namespace

CandidatePool::CandidatePool(std::vector<GridDensity> densities, std::optional<ClassSpec> spec, std::uint64_t seed)
    : densities_(std::move(densities)), spec_(std::move(spec)), seed_(seed) {
    const std::size_t m = grid_size();
    logs_.reserve(densities_.size());
    positive_.reserve(densities_.size());
    for (const auto& f : densities_) {
        if (f.size() != m) throw DimensionError("pool densities must share one grid");
        std::vector<double> lv(m);
        bool positive = true;
        for (std::size_t i = 0; i < m; ++i) {
            if (f[i] > 0.0) {
                lv[i] = std::log(f[i]);
            } else {
                lv[i] = -std::numeric_limits<double>::infinity();
                positive = false;
            }
        }
        logs_.push_back(std::move(lv));
        positive_.push_back(positive ? 1 : 0);
    }
}

CandidatePool CandidatePool::generate(const ClassSpec& spec, std::size_t size, std::uint64_t seed) {
    spec.validate();
    std::vector<GridDensity> out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        Rng rng = make_stream(seed, {stream_tag::kPool, i});
        out.push_back(sample_member(spec, rng));
    }
    return CandidatePool(std::move(out), spec, seed);
}

double CandidatePool::distance(std::size_t i, std::size_t j) const {
    return std::sqrt(kernels::squared_distance(densities_[i].values(), densities_[j].values()) /
                     static_cast<double>(grid_size()));
}

double CandidatePool::distance_to(std::size_t i, const GridDensity& g) const {
    if (g.size() != grid_size()) throw DimensionError("density grid does not match pool grid");
    return std::sqrt(kernels::squared_distance(densities_[i].values(), g.values()) /
                     static_cast<double>(grid_size()));
}

double CandidatePool::diameter() const {
    std::call_once(*diameter_once_, [this] {
        double best = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            for (std::size_t j = i + 1; j < size(); ++j) best = std::max(best, distance(i, j));
        }
        *diameter_ = best;
    });
    return **diameter_;
}

double mean_nearest_neighbor_spacing(const CandidatePool& pool, std::size_t sample) {
    const std::size_t n = pool.size();
    if (n < 2 || sample == 0) return 0.0;
    const std::size_t k = std::min(sample, n);
    double acc = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
        const std::size_t i = s * n / k;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) nearest = std::min(nearest, pool.distance(i, j));
        }
        acc += nearest;
    }
    return acc / static_cast<double>(k);
}

std::vector<std::size_t> ball_members(const CandidatePool& pool, const GridDensity& center, double radius) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.distance_to(i, center) <= radius) out.push_back(i);
    }
    return out;
}

PackingResult greedy_packing_of(const CandidatePool& pool, std::span<const std::size_t> eligible, double separation) {
    if (!(separation > 0.0)) throw DomainError("packing separation must be positive");
    PackingResult result;
    result.separation = separation;
    result.eligible_count = eligible.size();
    for (const std::size_t i : eligible) {
        bool admit = true;
        for (const std::size_t j : result.center_indices) {
            if (!(pool.distance(i, j) > separation)) {
                admit = false;
                break;
            }
        }
        if (admit) result.center_indices.push_back(i);
    }
    result.maximal = true;
    return result;
}

PackingResult greedy_maximal_packing(const CandidatePool& pool, double separation, const std::optional<Ball>& restrict) {
    const auto eligible =
        restrict ? ball_members(pool, restrict->center, restrict->radius) : all_indices(pool.size());
    return greedy_packing_of(pool, eligible, separation);
}

bool verify_packing(const CandidatePool& pool, const PackingResult& packing, const std::optional<Ball>& restrict) {
    const auto& idx = packing.center_indices;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            if (!(pool.distance(idx[a], idx[b]) > packing.separation)) return false;
        }
    }
    const auto eligible =
        restrict ? ball_members(pool, restrict->center, restrict->radius) : all_indices(pool.size());
    for (const std::size_t i : idx) {
        if (std::find(eligible.begin(), eligible.end(), i) == eligible.end()) return false;
    }
    if (!packing.maximal) return true;
    for (const std::size_t i : eligible) {
        const bool covered = std::any_of(idx.begin(), idx.end(),
                                         [&](std::size_t j) { return !(pool.distance(i, j) > packing.separation); });
        if (!covered) return false;
    }
    return true;
}

std::string_view entropy_mode_name(EntropyMode mode) {
    switch (mode) {
        case EntropyMode::Global:
            return "global";
        case EntropyMode::LocalSup:
            return "local-sup";
        case EntropyMode::Adaptive:
            return "adaptive";
    }
    return "unknown";
}

EntropyEstimate global_entropy_estimate(const CandidatePool& pool, double epsilon) {
    const auto packing = greedy_maximal_packing(pool, epsilon);
    EntropyEstimate e;
    e.epsilon = epsilon;
    e.c = 1.0;
    e.mode = EntropyMode::Global;
    e.count = packing.center_indices.size();
    e.log_count = log_count_of(e.count);
    return e;
}

EntropyEstimate local_entropy_estimate(const ClassSpec& spec, double epsilon, double c, const CandidatePool& pool,
                                       std::span<const GridDensity> centers) {
    if (!(c > 1.0)) throw DomainError("local entropy needs c > 1");
    if (centers.empty()) throw DomainError("local entropy needs at least one center");
    require_grid(spec, pool);
    EntropyEstimate best;
    best.epsilon = epsilon;
    best.c = c;
    best.mode = EntropyMode::LocalSup;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const auto packing = greedy_maximal_packing(pool, epsilon / c, Ball{centers[k], epsilon});
        const std::size_t count = packing.center_indices.size();
        if (!best.center_index || count > best.count) {
            best.count = count;
            best.center_index = k;
        }
    }
    best.log_count = log_count_of(best.count);
    return best;
}

EntropyEstimate adaptive_local_entropy(const ClassSpec& spec, const GridDensity& theta, double epsilon, double c,
                                       const CandidatePool& pool) {
    auto e = local_entropy_estimate(spec, epsilon, c, pool, std::span<const GridDensity>(&theta, 1));
    e.mode = EntropyMode::Adaptive;
    return e;
}

std::vector<GridDensity> default_centers(const CandidatePool& pool, std::size_t count) {
    const std::size_t k = std::min(count, pool.size());
    return {pool.densities().begin(), pool.densities().begin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<GridDensity> contract_packing(const GridDensity& theta, double eps, double eps_prime, double c,
                                          std::span<const GridDensity> g) {
    if (!(eps_prime > 0.0 && eps_prime <= eps)) throw ContractError("contract_packing needs 0 < eps' <= eps");
    if (!(c > 0.0)) throw ContractError("contract_packing needs c > 0");
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!(l2_distance(g[j], theta) <= eps)) {
            throw ContractError("contract_packing: element " + std::to_string(j) + " lies outside B(theta, eps)");
        }
        for (std::size_t k = j + 1; k < g.size(); ++k) {
            if (!(l2_distance(g[j], g[k]) > eps / c)) {
                throw ContractError("contract_packing: elements " + std::to_string(j) + " and " + std::to_string(k) +
                                    " are not eps/c separated");
            }
        }
    }
    const double kappa = eps_prime / eps;
    std::vector<GridDensity> out;
    out.reserve(g.size());
    for (const auto& gj : g) out.push_back(convex_combine(gj, theta, kappa));
    return out;
}

std::vector<double> isotonic_nonincreasing(std::span<const double> y) {
    // Blocks of (mean, weight); merge while a later block exceeds an earlier one.
    std::vector<double> mean;
    std::vector<std::size_t> weight;
    for (const double v : y) {
        mean.push_back(v);
        weight.push_back(1);
        while (mean.size() > 1 && mean[mean.size() - 2] < mean.back()) {
            const std::size_t w = weight[weight.size() - 2] + weight.back();
            const double mu = (mean[mean.size() - 2] * static_cast<double>(weight[weight.size() - 2]) +
                               mean.back() * static_cast<double>(weight.back())) /
                              static_cast<double>(w);
            mean.pop_back();
            weight.pop_back();
            mean.back() = mu;
            weight.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t b = 0; b < mean.size(); ++b) out.insert(out.end(), weight[b], mean[b]);
    return out;
}

MonotoneEntropy::MonotoneEntropy(std::vector<double> epsilons, std::span<const double> raw_log_counts)
    : eps_(std::move(epsilons)) {
    if (eps_.empty() || eps_.size() != raw_log_counts.size()) {
        throw DimensionError("MonotoneEntropy needs one value per epsilon");
    }
    if (!std::is_sorted(eps_.begin(), eps_.end())) throw DomainError("MonotoneEntropy needs an ascending grid");
    values_ = isotonic_nonincreasing(raw_log_counts);
}

double MonotoneEntropy::operator()(double epsilon) const {
    const auto it = std::upper_bound(eps_.begin(), eps_.end(), epsilon);
    if (it == eps_.begin()) return values_.front();
    return values_[static_cast<std::size_t>(it - eps_.begin()) - 1];
}

double solve_critical_epsilon(std::size_t n, double diameter, const EntropyFn& entropy) {
    if (!(diameter > 0.0)) return 0.0;
    const double nn = static_cast<double>(n);
    // A zero entropy is never feasible, otherwise n eps^2 underflows to 0 at tiny eps.
    auto feasible = [&](double eps) {
        const double e = entropy(eps);
        return e > 0.0 && nn * eps * eps <= e;
    };
    if (feasible(diameter)) return diameter;
    // Bracket a feasible point by halving.
    double hi = diameter;
    double lo = 0.0;
    for (int k = 0; k < 1100; ++k) {
        const double trial = hi * 0.5;
        if (!(trial > 0.0)) break;
        if (feasible(trial)) {
            lo = trial;
            break;
        }
        hi = trial;
    }
    if (lo == 0.0) return 0.0;
    for (int it = 0; it < kBisectionIterations; ++it) {
        if (hi - lo <= kBisectionRelativeTolerance * lo) break;
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

bool lower_bound_condition(std::size_t n, double epsilon, double alpha, double entropy_value) {
    if (!(alpha > 0.0)) throw DomainError("lower_bound_condition needs alpha > 0");
    return entropy_value > 2.0 * static_cast<double>(n) * epsilon * epsilon / alpha + 2.0 * std::numbers::ln2;
}

GapReport global_local_gap_check(const ClassSpec& spec, double epsilon, double c, const CandidatePool& pool,
                                 std::span<const GridDensity> centers) {
    if (!(c > 1.0)) throw DomainError("gap check needs c > 1");
    require_grid(spec, pool);
    GapReport r;
    r.epsilon = epsilon;
    r.c = c;
    if (pool.empty()) {
        r.lower_holds = r.upper_holds = true;
        return r;
    }
    const auto coarse = greedy_maximal_packing(pool, epsilon);
    const auto fine = greedy_maximal_packing(pool, epsilon / c);

    std::size_t local = 0;
    auto consider_center = [&](const GridDensity& theta) {
        const auto packing = greedy_maximal_packing(pool, epsilon / c, Ball{theta, epsilon});
        local = std::max(local, packing.center_indices.size());
        std::size_t inside = 0;
        for (const std::size_t j : fine.center_indices) {
            if (pool.distance_to(j, theta) <= epsilon) ++inside;
        }
        local = std::max(local, inside);
    };
    for (const std::size_t i : coarse.center_indices) consider_center(pool[i]);
    for (const auto& theta : centers) consider_center(theta);

    const std::size_t global_fine = std::max(fine.center_indices.size(), local);
    r.log_global_eps = log_count_of(coarse.center_indices.size());
    r.log_global_eps_over_c = log_count_of(global_fine);
    r.log_local = log_count_of(local);
    r.lower_slack = r.log_local - (r.log_global_eps_over_c - r.log_global_eps);
    r.upper_slack = r.log_global_eps_over_c - r.log_local;
    r.lower_holds = r.lower_slack >= -kInequalitySlack;
    r.upper_holds = r.upper_slack >= -kInequalitySlack;
    return r;
}

}  // namespace sievelab
