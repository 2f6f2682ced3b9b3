#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sievelab/cli.hpp"
#include "sievelab/errors.hpp"
#include "sievelab/experiments.hpp"
#include "sievelab/sampling.hpp"

using namespace sievelab;
using namespace sievelab::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sievelab_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "sievelab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config merging and precedence") {
    RunConfig c = default_config();
    merge_json(nlohmann::json{{"seed", 5}, {"replicates", 7}, {"n_list", {10, 20, 40, 80}}}, c);
    CHECK(c.seed == 5);
    CHECK(c.replicates == 7);
    CHECK(c.n_list.size() == 4);
    CHECK(c.spec.variant_name() == "convmix");

    merge_json(nlohmann::json{{"m", 96}}, c);
    CHECK(c.spec.grid_size == 96);
    CHECK(std::get<ConvexMixtureClass>(c.spec.kind).components.front().size() == 96);

    merge_json(nlohmann::json{{"variant", "bv"}, {"zeta", 1.8}}, c);
    CHECK(c.spec.variant_name() == "bv");
    CHECK(std::get<BoundedVariationClass>(c.spec.kind).zeta == 1.8);
    CHECK(c.spec.grid_size == 96);

    merge_json(nlohmann::json{{"schedule_constant", "theorem"}}, c);
    CHECK(std::isnan(c.schedule_constant));
    CHECK(nlohmann::json(c).at("schedule_constant") == "theorem");

    CHECK_THROWS_AS(merge_json(nlohmann::json{{"sed", 1}}, c), ConfigError);
    CHECK_THROWS_AS(merge_json(nlohmann::json{{"seed", "x"}}, c), ConfigError);
    CHECK_THROWS_AS(merge_json(nlohmann::json{{"schema", "v2"}}, c), ConfigError);
    CHECK_THROWS_AS(merge_json(nlohmann::json::array(), c), ConfigError);

    // JSON round trip reproduces the hash.
    RunConfig d = default_config();
    merge_json(nlohmann::json(c), d);
    CHECK(config_hash(c) == config_hash(d));
}

TEST_CASE("config hash ignores out and threads only") {
    RunConfig a = default_config();
    RunConfig b = a;
    b.out = "elsewhere";
    b.threads = 8;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed += 1;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("config validation") {
    RunConfig c = default_config();
    CHECK_NOTHROW(c.validate());
    c.c = 12.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = default_config();
    c.truth = "pool:x";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.truth = "pool:3";
    CHECK_NOTHROW(c.validate());
    c = default_config();
    c.n_list = {0, 10};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("samples files") {
    TempDir dir("samples");
    write_file(dir.file("ok.txt"), "0.5\n0\n1\n0.25\n");
    CHECK(read_samples(dir.file("ok.txt")) == std::vector<double>{0.5, 0.0, 1.0, 0.25});
    write_file(dir.file("bad.txt"), "0.5\n0.7\nabc\n");
    try {
        (void)read_samples(dir.file("bad.txt"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    write_file(dir.file("range.txt"), "0.5\n1.5\n");
    CHECK_THROWS_AS(read_samples(dir.file("range.txt")), ParseError);
    write_file(dir.file("trail.txt"), "0.5x\n");
    CHECK_THROWS_AS(read_samples(dir.file("trail.txt")), ParseError);
    write_file(dir.file("empty.txt"), "");
    CHECK_THROWS_AS(read_samples(dir.file("empty.txt")), ParseError);
}

TEST_CASE("usage errors exit with 2") {
    TempDir dir("usage");
    CHECK(run({}).code == kUsageError);
    CHECK(run({"frobnicate"}).code == kUsageError);
    const auto low_c = run({"verify", "--c", "12", "--out", dir.path.string()});
    CHECK(low_c.code == kUsageError);
    CHECK(low_c.err.find("smallest admissible c") != std::string::npos);
    CHECK(run({"sweep", "--n-list", "100,200,400", "--out", dir.path.string()}).code == kUsageError);
    write_file(dir.file("cfg.json"), R"({"unknown_key": 1})");
    CHECK(run({"verify", "--config", dir.file("cfg.json")}).code == kUsageError);
    write_file(dir.file("empty.txt"), "");
    CHECK(run({"estimate", "--samples", dir.file("empty.txt"), "--out", dir.path.string()}).code == kUsageError);
    CHECK(run({"estimate", "--out", dir.path.string()}).code == kUsageError);
}

TEST_CASE("estimate writes the estimate and trace") {
    TempDir dir("estimate");
    RunConfig c = default_config();
    merge_json(nlohmann::json{{"pool_size", 300}}, c);
    const auto pool = CandidatePool::generate(c.spec, c.pool_size, c.seed);
    Rng rng(3);
    std::ostringstream text;
    for (const double x : sample_iid(pool[0], 2000, rng)) text << x << '\n';
    write_file(dir.file("x.txt"), text.str());
    nlohmann::json cfg = c;
    cfg["out"] = (dir.path / "out").string();
    cfg["samples"] = dir.file("x.txt");
    write_file(dir.file("cfg.json"), cfg.dump());

    const auto r = run({"estimate", "--config", dir.file("cfg.json")});
    REQUIRE(r.code == kSuccess);
    const auto est = nlohmann::json::parse(read_file((dir.path / "out" / "estimate.json").string()));
    CHECK(est.at("schema") == "v1");
    CHECK(est.at("n") == 2000);
    CHECK(est.at("adaptive") == false);
    const std::string csv = read_file((dir.path / "out" / "trace.csv").string());
    CHECK(csv.rfind("# config_hash=", 0) == 0);
    CHECK(csv.find("level,selected_index,packing_size,ties,radius,separation") != std::string::npos);

    const auto a = run({"estimate", "--config", dir.file("cfg.json"), "--adaptive"});
    REQUIRE(a.code == kSuccess);
    const auto trace = nlohmann::json::parse(read_file((dir.path / "out" / "trace.json").string()));
    CHECK(trace.at("trace").at("adaptive") == true);
    CHECK(trace.at("trace").at("stop_level").get<int>() >= 1);
    CHECK(!trace.at("trace").at("stop_reason").get<std::string>().empty());
    CHECK(!fs::exists(dir.path / "out" / "trace.json.tmp"));
}

TEST_CASE("estimates land within the schedule radius of the pool truth") {
    RunConfig c = default_config();
    SieveConfig cfg;
    const SieveSetup setup(c.spec, CandidatePool::generate(c.spec, 4000, 21), cfg);
    const auto& truth = setup.pool()[0];
    int hits = 0;
    const int runs = 40;
    for (int r = 0; r < runs; ++r) {
        Rng rng = make_stream(8, {static_cast<std::uint64_t>(r)});
        const auto result = setup.estimate(sample_iid(truth, 4000, rng));
        if (l2_distance(result.estimate, truth) <= epsilon_schedule(result.trace.J_bar, setup.constants())) ++hits;
    }
    CHECK(hits >= 0.95 * runs);
}

TEST_CASE("entropy command") {
    TempDir dir("entropy");
    const auto single = run({"entropy", "--pool-size", "1", "--out", dir.path.string()});
    REQUIRE(single.code == kSuccess);
    std::istringstream csv(read_file(dir.file("entropy.csv")));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("# config_hash=", 0) == 0);
    std::getline(csv, line);
    CHECK(line == "epsilon,c,mode,log_count,center_index");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        REQUIRE(cells.size() >= 4);
        CHECK(std::stod(cells[3]) == 0.0);
    }
    CHECK(rows == 16 * 3);
    const auto j = nlohmann::json::parse(read_file(dir.file("entropy.json")));
    for (const auto& row : j.at("critical")) CHECK(row.at("epsilon_star") == 0.0);

    const auto eps = run({"entropy", "--pool-size", "50", "--epsilons", "0.1,0.2,0.4", "--out", dir.path.string()});
    REQUIRE(eps.code == kSuccess);
    std::istringstream csv2(read_file(dir.file("entropy.csv")));
    rows = 0;
    while (std::getline(csv2, line)) ++rows;
    CHECK(rows == 2 + 3 * 3);
}

TEST_CASE("sweep output is byte-identical across runs and thread counts") {
    TempDir dir("sweep");
    const std::vector<std::string> common{"--pool-size", "300", "--replicates", "6", "--n-list", "50,100,200,400"};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> args{"sweep"};
        args.insert(args.end(), common.begin(), common.end());
        args.insert(args.end(), extra.begin(), extra.end());
        return args;
    };
    REQUIRE(run(with({"--out", (dir.path / "a").string()})).code == kSuccess);
    REQUIRE(run(with({"--out", (dir.path / "b").string(), "--threads", "3"})).code == kSuccess);
    const std::string a = read_file((dir.path / "a" / "sweep.csv").string());
    CHECK(a == read_file((dir.path / "b" / "sweep.csv").string()));
    std::istringstream in(a);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# config_hash=", 0) == 0);
    std::getline(in, line);
    CHECK(line == "kind,n,replicate,seed,J_bar,depth,estimate_index,l2_squared,kl,hellinger_squared,stderr");
    std::size_t replicate_rows = 0, summary_rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("replicate,", 0) == 0) ++replicate_rows;
        if (line.rfind("summary,", 0) == 0) ++summary_rows;
    }
    CHECK(replicate_rows == 24);
    CHECK(summary_rows == 4);
    const auto j = nlohmann::json::parse(read_file((dir.path / "a" / "sweep.json").string()));
    CHECK(j.at("schema") == "v1");
    CHECK(j.contains("slope"));
    CHECK(j.contains("pool_limited"));
}

TEST_CASE("verify and bernstein commands succeed on small settings") {
    TempDir dir("verify");
    write_file(dir.file("cfg.json"), R"({"verify_pairs": 200, "bernstein_replicates": 300, "bernstein_n": [50, 200]})");
    const auto v = run({"verify", "--config", dir.file("cfg.json"), "--out", dir.path.string()});
    CHECK(v.code == kSuccess);
    const auto j = nlohmann::json::parse(read_file(dir.file("verify.json")));
    CHECK(j.at("passed") == true);
    const auto b = run({"bernstein", "--config", dir.file("cfg.json"), "--out", dir.path.string()});
    CHECK(b.code == kSuccess);
    CHECK(fs::exists(dir.path / "bernstein.csv"));
}
