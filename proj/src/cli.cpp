#include "sievelab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "sievelab/errors.hpp"
#include "sievelab/experiments.hpp"
#include "sievelab/packing.hpp"
#include "sievelab/properties.hpp"
#include "sievelab/sieve.hpp"

namespace sievelab::cli {
namespace {

namespace fs = std::filesystem;

const std::set<std::string> kClassKeys{"variant", "alpha", "beta",       "m",           "gamma", "q",
                                       "psi",     "zeta",  "components", "sine_components", "sine_alpha"};

const std::set<std::string> kRunKeys{"schema",        "c",          "pool_size",         "centers",
                                     "n_list",        "replicates", "J_cap",             "seed",
                                     "out",           "threads",    "radius_multiplier", "schedule_constant",
                                     "adaptive",      "max_children", "epsilon_list",    "samples",
                                     "truth",         "verify_pairs", "bernstein_n",     "bernstein_replicates"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string header_comment(const RunConfig& config) { return "# config_hash=" + config_hash(config) + "\n"; }

fs::path output_path(const RunConfig& config, const std::string& name) {
    fs::create_directories(config.out);
    return fs::path(config.out) / name;
}

void write_json(const RunConfig& config, const std::string& name, nlohmann::json body) {
    body["schema"] = kSchemaVersion;
    body["config_hash"] = config_hash(config);
    write_atomic(output_path(config, name).string(), body.dump(2) + "\n");
}

SieveConfig sieve_config(const RunConfig& config) {
    SieveConfig s;
    s.c = config.c;
    s.J_cap = config.J_cap;
    s.schedule_constant = config.schedule_constant;
    s.radius_multiplier = config.radius_multiplier;
    s.adaptive = config.adaptive;
    s.centers = config.centers;
    s.max_children = config.max_children == 0 ? std::numeric_limits<std::size_t>::max() : config.max_children;
    s.threads = config.threads;
    return s;
}

GridDensity resolve_truth(const RunConfig& config, const CandidatePool& pool) {
    if (config.truth == "default") return default_truth(config.spec);
    const std::size_t index = std::stoul(config.truth.substr(5));
    if (index >= pool.size()) throw ConfigError("truth index " + std::to_string(index) + " is outside the pool");
    return pool[index];
}

std::vector<double> epsilon_grid(const RunConfig& config, double d) {
    if (!config.epsilon_list.empty()) {
        auto eps = config.epsilon_list;
        std::sort(eps.begin(), eps.end());
        return eps;
    }
    std::vector<double> eps;
    for (int i = 15; i >= 0; --i) eps.push_back(d * std::pow(2.0, -0.5 * i));
    return eps;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

void RunConfig::validate() const {
    spec.validate();
    compute_constants(spec.bounds, c, 1.0);  // Bernstein threshold on c
    if (pool_size == 0) throw ConfigError("pool_size must be positive");
    if (centers == 0) throw ConfigError("centers must be positive");
    if (replicates == 0) throw ConfigError("replicates must be positive");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (J_cap < 1 || J_cap > 60) throw ConfigError("J_cap must lie in [1, 60]");
    if (std::any_of(n_list.begin(), n_list.end(), [](std::size_t n) { return n == 0; })) {
        throw ConfigError("n_list entries must be positive");
    }
    if (!(radius_multiplier > 0.0)) throw ConfigError("radius_multiplier must be positive");
    if (!std::isnan(schedule_constant) && !(schedule_constant > 0.0)) {
        throw ConfigError("schedule_constant must be positive or \"theorem\"");
    }
    if (std::any_of(epsilon_list.begin(), epsilon_list.end(), [](double e) { return !(e > 0.0); })) {
        throw ConfigError("epsilon_list entries must be positive");
    }
    if (truth != "default") {
        if (truth.rfind("pool:", 0) != 0 || truth.size() == 5 ||
            truth.find_first_not_of("0123456789", 5) != std::string::npos) {
            throw ConfigError("truth must be \"default\" or \"pool:<index>\"");
        }
    }
    if (verify_pairs == 0 || bernstein_replicates == 0) throw ConfigError("verify/bernstein counts must be positive");
}

RunConfig default_config() {
    RunConfig config;
    config.spec = example_convmix(Bounds{}, 64);
    return config;
}

void to_json(nlohmann::json& j, const RunConfig& config) {
    j = config.spec;
    j["schema"] = kSchemaVersion;
    j["c"] = config.c;
    j["pool_size"] = config.pool_size;
    j["centers"] = config.centers;
    j["n_list"] = config.n_list;
    j["replicates"] = config.replicates;
    j["J_cap"] = config.J_cap;
    j["seed"] = config.seed;
    j["out"] = config.out;
    j["threads"] = config.threads;
    j["radius_multiplier"] = config.radius_multiplier;
    j["schedule_constant"] =
        std::isnan(config.schedule_constant) ? nlohmann::json("theorem") : nlohmann::json(config.schedule_constant);
    j["adaptive"] = config.adaptive;
    j["max_children"] = config.max_children;
    j["epsilon_list"] = config.epsilon_list;
    j["samples"] = config.samples;
    j["truth"] = config.truth;
    j["verify_pairs"] = config.verify_pairs;
    j["bernstein_n"] = config.bernstein_n;
    j["bernstein_replicates"] = config.bernstein_replicates;
}

void merge_json(const nlohmann::json& j, RunConfig& config) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kClassKeys.count(key) && !kRunKeys.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
    }
    if (j.contains("schema") && j.at("schema") != kSchemaVersion) {
        throw ConfigError("unsupported configuration schema (expected \"v1\")");
    }
    try {
        bool touches_class = false;
        for (const auto& key : kClassKeys) touches_class = touches_class || j.contains(key);
        if (touches_class) {
            nlohmann::json cls;
            const nlohmann::json current = config.spec;
            const bool same_variant = !j.contains("variant") || j.at("variant") == current.at("variant");
            if (same_variant) {
                cls = current;
            } else {
                cls["variant"] = j.at("variant");
                for (const char* k : {"alpha", "beta", "m"}) cls[k] = current.at(k);
            }
            for (const auto& key : kClassKeys) {
                if (j.contains(key)) cls[key] = j.at(key);
            }
            // Explicit components from the previous layer no longer fit once the grid,
            // bounds or sine parameters change; regenerate them instead.
            const bool regenerate = j.contains("sine_components") || j.contains("sine_alpha") || j.contains("m") ||
                                    j.contains("alpha") || j.contains("beta");
            if (regenerate && !j.contains("components")) cls.erase("components");
            if (cls.at("variant") == "convmix" && !cls.contains("components") && !cls.contains("sine_components")) {
                cls["sine_alpha"] = std::max({cls.at("alpha").get<double>(), 2.0 - cls.at("beta").get<double>(), 0.5});
            }
            config.spec = cls.get<ClassSpec>();
        }
        auto take = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
        };
        take("c", config.c);
        take("pool_size", config.pool_size);
        take("centers", config.centers);
        take("n_list", config.n_list);
        take("replicates", config.replicates);
        take("J_cap", config.J_cap);
        take("seed", config.seed);
        take("out", config.out);
        take("threads", config.threads);
        take("radius_multiplier", config.radius_multiplier);
        if (j.contains("schedule_constant")) {
            const auto& s = j.at("schedule_constant");
            config.schedule_constant =
                s.is_string() && s == "theorem" ? std::numeric_limits<double>::quiet_NaN() : s.get<double>();
        }
        take("adaptive", config.adaptive);
        take("max_children", config.max_children);
        take("epsilon_list", config.epsilon_list);
        take("samples", config.samples);
        take("truth", config.truth);
        take("verify_pairs", config.verify_pairs);
        take("bernstein_n", config.bernstein_n);
        take("bernstein_replicates", config.bernstein_replicates);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration value has the wrong type: ") + e.what());
    }
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("configuration file '" + path + "' is not valid JSON: " + e.what());
    }
    merge_json(j, base);
    return base;
}

std::string config_hash(const RunConfig& config) {
    nlohmann::json j = config;
    j.erase("out");
    j.erase("threads");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

void write_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << contents;
        if (!out.flush()) throw std::runtime_error("write to '" + tmp + "' failed");
    }
    fs::rename(tmp, path);
}

std::vector<double> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open samples file '" + path + "'");
    std::vector<double> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || line.find_first_not_of(" \t", used) != std::string::npos) {
            throw ParseError("samples file '" + path + "', line " + std::to_string(number) + ": not a number: '" +
                             line + "'");
        }
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ParseError("samples file '" + path + "', line " + std::to_string(number) + ": value outside [0,1]");
        }
        out.push_back(v);
    }
    if (out.empty()) throw ParseError("samples file '" + path + "' contains no samples");
    return out;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
    const Bounds& b = config.spec.bounds;
    const std::size_t m = config.spec.grid_size;
    const std::uint64_t seed = config.seed;
    std::vector<SuiteResult> suites;
    suites.push_back(suite_kl_sandwich(b, m, config.verify_pairs, seed));
    suites.push_back(suite_hellinger_sandwich(b, m, config.verify_pairs, seed));
    suites.push_back(suite_kl_below_chi_square(b, m, config.verify_pairs, seed));
    suites.push_back(suite_log_inequality(317, 317));
    suites.push_back(suite_h_monotone(1000));
    suites.push_back(suite_sine_family(0.5, 256, 8, 1e-9));
    const std::vector<ClassSpec> classes{example_lipschitz(b, 64), example_bv(b, 64), example_quad(b, 64),
                                         example_convmix(b, 64)};
    for (const auto& spec : classes) suites.push_back(suite_convexity(spec, 1000, seed));
    for (const auto& spec : classes) suites.push_back(suite_contraction(spec, 100, 400, config.c, seed));
    for (const auto& spec : classes) suites.push_back(suite_cauchy_trajectory(spec, 125, 400, config.c, 6, seed));

    bool all = true;
    auto arr = nlohmann::json::array();
    for (const auto& s : suites) {
        log << (s.passed() ? "PASS " : "FAIL ") << s.name << " (" << s.checked << " checked, " << s.violations
            << " violations)\n";
        all = all && s.passed();
        arr.push_back(s);
    }
    write_json(config, "verify.json", {{"suites", arr}, {"passed", all}});
    return all ? kSuccess : kPropertyFailure;
}

int cmd_entropy(const RunConfig& config, std::ostream& log) {
    const auto pool = CandidatePool::generate(config.spec, config.pool_size, config.seed);
    double d = std::min(diameter_upper_bound(config.spec.bounds), pool.diameter());
    if (!(d > 0.0)) d = diameter_upper_bound(config.spec.bounds);
    const auto eps_grid = epsilon_grid(config, d);
    const auto centers = default_centers(pool, config.centers);
    const auto truth = resolve_truth(config, pool);

    std::ostringstream csv;
    csv << header_comment(config) << "epsilon,c,mode,log_count,center_index\n";
    std::vector<double> local;
    auto row = [&](const EntropyEstimate& e) {
        csv << num(e.epsilon) << ',' << num(e.c) << ',' << entropy_mode_name(e.mode) << ',' << num(e.log_count) << ',';
        if (e.center_index) csv << *e.center_index;
        csv << '\n';
    };
    for (const double eps : eps_grid) {
        auto global = global_entropy_estimate(pool, eps / config.c);
        global.epsilon = eps;
        global.c = config.c;
        row(global);
        const auto loc = local_entropy_estimate(config.spec, eps, config.c, pool, centers);
        row(loc);
        local.push_back(loc.log_count);
        row(adaptive_local_entropy(config.spec, truth, eps, config.c, pool));
    }
    const MonotoneEntropy entropy(eps_grid, local);
    std::ostringstream crit;
    crit << header_comment(config) << "n,epsilon_star,epsilon_star_squared\n";
    auto summary = nlohmann::json::array();
    for (const std::size_t n : config.n_list) {
        const double e = solve_critical_epsilon(n, diameter_upper_bound(config.spec.bounds), entropy);
        crit << n << ',' << num(e) << ',' << num(e * e) << '\n';
        summary.push_back({{"n", n}, {"epsilon_star", e}});
        log << "n=" << n << " epsilon*=" << e << "\n";
    }
    write_atomic(output_path(config, "entropy.csv").string(), csv.str());
    write_atomic(output_path(config, "critical.csv").string(), crit.str());
    write_json(config, "entropy.json",
               {{"epsilons", eps_grid}, {"local_monotone", entropy.values()}, {"critical", summary}, {"d", d}});
    return kSuccess;
}

int cmd_estimate(const RunConfig& config, std::ostream& log) {
    if (config.samples.empty()) throw ConfigError("estimate needs a samples file (--samples)");
    const auto samples = read_samples(config.samples);
    SieveSetup setup(config.spec, CandidatePool::generate(config.spec, config.pool_size, config.seed),
                     sieve_config(config));
    const auto result = setup.estimate(samples);
    const auto& trace = result.trace;
    log << "n=" << samples.size() << " depth=" << trace.stop_level << " estimate_index=" << result.estimate_index
        << (trace.adaptive ? " (adaptive, stopped: " + trace.stop_reason + ")" : "") << "\n";
    write_json(config, "estimate.json",
               {{"n", samples.size()},
                {"estimate", result.estimate},
                {"estimate_index", result.estimate_index},
                {"J_bar", trace.J_bar},
                {"adaptive", trace.adaptive},
                {"stop_level", trace.stop_level},
                {"stop_reason", trace.stop_reason}});
    write_json(config, "trace.json", {{"trace", trace}});
    write_atomic(output_path(config, "trace.csv").string(), header_comment(config) + trace_csv(trace));
    return kSuccess;
}

int cmd_sweep(const RunConfig& config, std::ostream& log) {
    if (config.n_list.size() < 4) throw ConfigError("a rate sweep needs at least 4 sample sizes in n_list");
    SieveSetup setup(config.spec, CandidatePool::generate(config.spec, config.pool_size, config.seed),
                     sieve_config(config));
    const auto truth = resolve_truth(config, setup.pool());
    const auto report = rate_sweep(setup, truth, config.n_list, config.replicates, config.seed);

    std::ostringstream csv;
    csv << header_comment(config)
        << "kind,n,replicate,seed,J_bar,depth,estimate_index,l2_squared,kl,hellinger_squared,stderr\n";
    for (const auto& p : report.points) {
        for (const auto& r : p.rows) {
            csv << "replicate," << p.n << ',' << r.replicate << ',' << r.seed << ',' << p.J_bar << ',' << r.depth << ','
                << r.estimate_index << ',' << num(r.l2_squared) << ',' << num(r.kl) << ','
                << num(r.hellinger_squared) << ",\n";
        }
    }
    for (const auto& p : report.points) {
        csv << "summary," << p.n << ',' << p.replicates << ",," << p.J_bar << ',' << num(p.mean_depth) << ",,"
            << num(p.mean) << ',' << num(p.kl_mean) << ',' << num(p.hellinger_mean) << ',' << num(p.stderr_) << '\n';
    }
    write_atomic(output_path(config, "sweep.csv").string(), csv.str());
    nlohmann::json body = report;
    body["variant"] = config.spec.variant_name();
    write_json(config, "sweep.json", body);
    for (const auto& p : report.points) {
        log << "n=" << p.n << " J_bar=" << p.J_bar << " risk=" << p.mean << " (se " << p.stderr_ << ")\n";
    }
    log << "slope " << report.fit.slope << " +/- " << report.fit.half_width << " (theory " << report.theoretical_slope
        << "); " << report.note << "\n";
    return kSuccess;
}

int cmd_bernstein(const RunConfig& config, std::ostream& log) {
    // Scenarios sit around the uniform density, which lies in every class.
    const auto f = uniform_density(config.spec.grid_size);
    const Bounds& b = config.spec.bounds;
    const auto constants = compute_constants(b, config.c, diameter_upper_bound(b));
    const auto direction = chain_packing(f, 2, 1.0);  // f and f + u with ||u|| = 1
    auto shifted = [&](double t) {
        std::vector<double> v(f.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] + t * (direction[1][i] - f[i]);
        return GridDensity::normalized(std::move(v));
    };
    const double spread = 0.3;
    const double delta = spread / constants.C;
    struct Scenario {
        std::string name;
        GridDensity g_prime;
        GridDensity g;
    };
    const std::vector<Scenario> scenarios{{"g_prime_is_f", f, shifted(spread)},
                                          {"g_prime_near_f", shifted(0.5 * delta), shifted(0.5 * delta + spread)}};

    std::ostringstream csv;
    csv << header_comment(config)
        << "experiment,scenario,n,delta,C,L,replicates,exceedances,frequency,stderr,bound,within_bound\n";
    auto arr = nlohmann::json::array();
    bool all = true;
    auto emit = [&](const std::string& experiment, const std::string& scenario, const ConcentrationReport& r) {
        csv << experiment << ',' << scenario << ',' << r.n << ',' << num(r.delta) << ',' << num(r.C) << ','
            << num(r.L) << ',' << r.replicates << ',' << r.exceedances << ',' << num(r.frequency) << ','
            << num(r.stderr_) << ',' << num(r.bound) << ',' << (r.within_bound() ? "true" : "false") << '\n';
        nlohmann::json j = r;
        j["experiment"] = experiment;
        j["scenario"] = scenario;
        arr.push_back(j);
        all = all && r.within_bound();
        log << experiment << '/' << scenario << " n=" << r.n << " frequency=" << r.frequency << " bound=" << r.bound
            << (r.within_bound() ? "" : "  VIOLATED") << "\n";
    };
    for (const auto& s : scenarios) {
        for (const std::size_t n : config.bernstein_n) {
            emit("bernstein", s.name,
                 bernstein_experiment(f, s.g, s.g_prime, b, config.c, n, config.bernstein_replicates, config.seed));
        }
    }
    const auto packing = chain_packing(f, 8, 0.05);
    for (const std::size_t n : config.bernstein_n) {
        emit("packing_mle", "chain8",
             packing_mle_experiment(f, packing, b, constants.C, 0.01, n, config.bernstein_replicates, config.seed));
    }
    write_atomic(output_path(config, "bernstein.csv").string(), csv.str());
    write_json(config, "bernstein.json", {{"reports", arr}, {"passed", all}});
    return all ? kSuccess : kPropertyFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sieve MLE density-estimation laboratory", "sievelab"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    unsigned threads = 0;
    bool adaptive = false;
    std::size_t replicates = 0;
    std::size_t pool_size = 0;
    std::vector<std::size_t> n_list;
    double c = 0.0;
    std::string samples;
    std::vector<double> epsilons;
    int J_cap = 0;
    double radius_multiplier = 0.0;

    auto* o_config = app.add_option("--config", config_path, "JSON configuration file");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_threads = app.add_option("--threads", threads, "worker threads");
    auto* o_adaptive = app.add_flag("--adaptive", adaptive, "use the depth-adaptive sieve");
    auto* o_reps = app.add_option("--replicates", replicates, "Monte Carlo replicates per n");
    auto* o_pool = app.add_option("--pool-size", pool_size, "candidate pool size");
    auto* o_n = app.add_option("--n-list", n_list, "sample sizes, comma separated")->delimiter(',');
    auto* o_c = app.add_option("--c", c, "local entropy scale c");
    auto* o_samples = app.add_option("--samples", samples, "samples file for estimate");
    auto* o_eps = app.add_option("--epsilons", epsilons, "epsilon grid for entropy, comma separated")->delimiter(',');
    auto* o_jcap = app.add_option("--J-cap", J_cap, "maximal sieve depth");
    auto* o_rm = app.add_option("--radius-multiplier", radius_multiplier, "entropy radius multiplier");

    auto* verify = app.add_subcommand("verify", "run the property suites");
    auto* entropy = app.add_subcommand("entropy", "local entropy estimates and critical radii");
    auto* estimate = app.add_subcommand("estimate", "run the sieve on a samples file");
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo rate sweep");
    auto* bernstein = app.add_subcommand("bernstein", "likelihood-ratio concentration experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        RunConfig config = default_config();
        if (*o_config) config = load_config_file(config_path, config);
        if (*o_seed) config.seed = seed;
        if (*o_out) config.out = out_dir;
        if (*o_threads) config.threads = threads;
        if (*o_adaptive) config.adaptive = adaptive;
        if (*o_reps) config.replicates = replicates;
        if (*o_pool) config.pool_size = pool_size;
        if (*o_n) config.n_list = n_list;
        if (*o_c) config.c = c;
        if (*o_samples) config.samples = samples;
        if (*o_eps) config.epsilon_list = epsilons;
        if (*o_jcap) config.J_cap = J_cap;
        if (*o_rm) config.radius_multiplier = radius_multiplier;
        config.validate();

        if (verify->parsed()) return cmd_verify(config, out);
        if (entropy->parsed()) return cmd_entropy(config, out);
        if (estimate->parsed()) return cmd_estimate(config, out);
        if (sweep->parsed()) return cmd_sweep(config, out);
        if (bernstein->parsed()) return cmd_bernstein(config, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return kUsageError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kPropertyFailure;
    }
    return kUsageError;
}

}  // namespace sievelab::cli
