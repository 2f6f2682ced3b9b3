#pragma once

// Monte Carlo risk estimation, rate sweeps and the empirical concentration
// experiments. Replicate r at sample size n draws from the stream
// (seed, replicate, n, r); results are stored by replicate index, so reports
// do not depend on how replicates are scheduled across threads.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include <json.hpp>

#include "sievelab/classes.hpp"
#include "sievelab/packing.hpp"
#include "sievelab/sieve.hpp"

namespace sievelab {

struct SieveConfig {
    double c = 14.0;
    int J_cap = 8;
    // NaN selects the theorem's sqrt(L) / c.
    double schedule_constant = 0.5;
    double radius_multiplier = 1.0;
    bool adaptive = false;
    std::size_t centers = 32;
    std::size_t max_children = std::numeric_limits<std::size_t>::max();
    unsigned threads = 1;
};

// Pool, constants, packing tree and the monotonized local-entropy curve
// shared by every replicate of an experiment.
class SieveSetup {
public:
    SieveSetup(const ClassSpec& spec, CandidatePool pool, const SieveConfig& config);

    const ClassSpec& spec() const noexcept { return spec_; }
    const CandidatePool& pool() const noexcept { return *pool_; }
    const SieveConfig& config() const noexcept { return config_; }
    const SieveConstants& constants() const noexcept { return constants_; }
    const PackingTree& tree() const noexcept { return *tree_; }

    // Local entropy estimates at entropy_radius(J) for J = 1..J_cap.
    const std::vector<EntropyEstimate>& entropy_table() const noexcept { return entropy_rows_; }
    const MonotoneEntropy& entropy() const noexcept { return *entropy_; }

    int J_bar(std::size_t n) const;
    SieveResult estimate(const std::vector<double>& samples) const;

private:
    ClassSpec spec_;
    std::unique_ptr<CandidatePool> pool_;
    SieveConfig config_;
    SieveConstants constants_;
    std::unique_ptr<PackingTree> tree_;
    std::vector<EntropyEstimate> entropy_rows_;
    std::unique_ptr<MonotoneEntropy> entropy_;
};

struct ReplicateResult {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double l2_squared = 0.0;
    double kl = 0.0;
    double hellinger_squared = 0.0;
    int depth = 1;
    std::size_t estimate_index = 0;
};

struct RiskPoint {
    std::size_t n = 0;
    std::size_t replicates = 0;
    int J_bar = 1;
    double mean = 0.0;
    double stderr_ = 0.0;
    double kl_mean = 0.0;
    double hellinger_mean = 0.0;
    double mean_depth = 0.0;
    std::vector<ReplicateResult> rows;
};

// Throws InputError when f_true is not a member of the setup's class.
RiskPoint risk_estimate(const SieveSetup& setup, const GridDensity& f_true, std::size_t n, std::size_t replicates,
                        std::uint64_t seed);

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double half_width = 0.0;  // 95% t interval
};

// OLS of log y on log x.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct RiskSweepReport {
    std::vector<RiskPoint> points;
    PowerLawFit fit;
    double theoretical_slope = 0.0;
    std::uint64_t seed = 0;
    std::size_t pool_size = 0;
    double pool_spacing = 0.0;        // mean nearest-neighbour distance
    double deepest_separation = 0.0;  // separation of the deepest packing built
    bool pool_limited = false;
    std::string note;
};

// Throws ConfigError for fewer than four sample sizes.
RiskSweepReport rate_sweep(const SieveSetup& setup, const GridDensity& f_true, const std::vector<std::size_t>& n_list,
                           std::size_t replicates, std::uint64_t seed);

struct ConcentrationReport {
    std::size_t n = 0;
    double delta = 0.0;
    double C = 0.0;
    double L = 0.0;
    std::size_t replicates = 0;
    std::size_t exceedances = 0;
    double frequency = 0.0;
    double stderr_ = 0.0;
    double bound = 0.0;

    bool within_bound() const { return frequency <= bound + 3.0 * stderr_; }
};

// Frequency of psi(g, g', X) > 0 with delta = ||g - g'|| / C. Throws
// InputError unless ||g' - f|| <= delta.
ConcentrationReport bernstein_experiment(const GridDensity& f, const GridDensity& g, const GridDensity& g_prime,
                                         const Bounds& bounds, double c, std::size_t n, std::size_t replicates,
                                         std::uint64_t seed);

// Frequency of ||g_{j*} - f|| > (C + 1) delta for the likelihood maximizer
// j* over the packing, against |packing| exp(-n L delta^2).
ConcentrationReport packing_mle_experiment(const GridDensity& f, const std::vector<GridDensity>& packing,
                                           const Bounds& bounds, double C, double delta, std::size_t n,
                                           std::size_t replicates, std::uint64_t seed);

// g_j = f + (j - 1) step u for a fixed zero-mean direction u, j = 1..count.
std::vector<GridDensity> chain_packing(const GridDensity& f, std::size_t count, double step);

void to_json(nlohmann::json& j, const RiskSweepReport& report);
void to_json(nlohmann::json& j, const ConcentrationReport& report);

}  // namespace sievelab
