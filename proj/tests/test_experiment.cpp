#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "qemlab/lab.hpp"

using namespace qemlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json small_quench_config(const std::string& outdir, const std::string& tier) {
    nlohmann::json j;
    j["kind"] = "quench";
    j["topology"] = {{"sublattice_size", 4}};
    j["quench"] = {{"j", 0.5236}, {"h", 1.0}, {"dt", 0.5}, {"steps", 2}, {"mode", "native_rzz"}};
    j["stretch_factors"] = {1.0, 1.6, 2.0};
    j["extrapolation_order"] = 1;
    j["twirl_instances"] = 2;
    j["dd"] = "x2";
    j["tier"] = tier;
    j["shots"] = 4000;
    j["seed"] = 2024;
    j["bootstrap_resamples"] = tier == "trajectories" ? 10 : 0;
    j["tn_baseline"] = {{"enabled", true}, {"bond_dim", 4}};
    j["noise_model"] = {
        {"t1_us", 150.0},
        {"t2_us", 120.0},
        {"gate_error", {{"RZZ", {{"depolarizing", 0.004}}}}},
        {"zz_crosstalk_rad_per_us", 0.03},
        {"readout", {{0.985, 0.02}, {0.015, 0.98}}},
    };
    j["output_dir"] = outdir;
    return j;
}

}  // namespace

TEST_CASE("quench run produces the full bundle and wins after mitigation", "[experiment]") {
    fs::path out = fs::temp_directory_path() / "qemlab_test_quench_density";
    fs::remove_all(out);
    nlohmann::json cj = small_quench_config(out.string(), "density");
    RunResult res = run(cj);
    REQUIRE(res.steps.size() == 2);
    REQUIRE(fs::exists(out / "manifest.json"));
    REQUIRE(fs::exists(out / "summary.csv"));
    REQUIRE(fs::exists(out / "expectations.csv"));
    REQUIRE(fs::exists(out / "metrics.csv"));
    REQUIRE(fs::exists(out / "magnetization.csv"));
    REQUIRE(fs::exists(out / "raw"));
    REQUIRE(!res.tn.empty());

    // metrics: mitigation should not be worse than raw on this gentle model
    std::string metrics = slurp(out / "metrics.csv");
    REQUIRE(metrics.find("d_avg_tn") != std::string::npos);

    // the oracle matches a direct exact simulation of the base circuit
    auto [topo, ids] = resolve_topology(config_from_json(cj));
    EdgeColoring col = color_edges(topo);
    Circuit base = build_trotter(topo, col, 0.5236, 1.0, 0.5, 1, DecompositionMode::native_rzz);
    Statevector sv = evolve_exact(base);
    std::string z0(topo.node_count, 'I');
    z0[0] = 'Z';
    REQUIRE(res.steps[0].oracle.at(z0) == Approx(expectation(sv, z0)).margin(1e-12));
    fs::remove_all(out);
}

TEST_CASE("identical configs reproduce byte-identical outputs", "[experiment]") {
    fs::path out1 = fs::temp_directory_path() / "qemlab_det_1";
    fs::path out2 = fs::temp_directory_path() / "qemlab_det_2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    nlohmann::json a = small_quench_config(out1.string(), "trajectories");
    a["shots"] = 800;
    a["quench"]["steps"] = 1;
    nlohmann::json b = a;
    b["output_dir"] = out2.string();
    run(a);
    run(b);
    for (const char* name : {"summary.csv", "metrics.csv", "magnetization.csv"})
        REQUIRE(slurp(out1 / name) == slurp(out2 / name));
    // count files byte-identical
    for (const auto& entry : fs::directory_iterator(out1 / "raw")) {
        fs::path other = out2 / "raw" / entry.path().filename();
        REQUIRE(fs::exists(other));
        REQUIRE(slurp(entry.path()) == slurp(other));
    }
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("t1 experiment reproduces the damping closed form", "[experiment]") {
    fs::path out = fs::temp_directory_path() / "qemlab_test_t1";
    fs::remove_all(out);
    nlohmann::json j;
    j["kind"] = "t1";
    j["topology"] = {{"sublattice_size", 2}};
    j["t1"] = {{"qubits", 1}, {"delays_us", {30.0}}};
    j["stretch_factors"] = {1.0, 1.5, 2.0};
    j["tier"] = "density";
    j["noise_model"] = {{"t1_us", 100.0}, {"t2_us", 200.0}};
    j["durations_us"] = {{"single_qubit", 0.0}, {"measure", 0.0}};
    j["save_raw"] = false;
    j["output_dir"] = out.string();
    RunResult res = run(j);
    // raw value at c = 1.5 equals 1 - 2 exp(-1.5 * 30/100) on qubit 0
    const auto& row0 = res.steps[0].rows[0];
    REQUIRE(row0.observable[0] == 'Z');
    REQUIRE(row0.raw_per_stretch[1] == Approx(1 - 2 * std::exp(-0.45)).margin(1e-10));
    fs::remove_all(out);
}

TEST_CASE("ghz experiment emits local and nonlocal observables", "[experiment]") {
    fs::path out = fs::temp_directory_path() / "qemlab_test_ghz";
    fs::remove_all(out);
    nlohmann::json j;
    j["kind"] = "ghz";
    j["topology"] = {{"sublattice_size", 6}};
    j["ghz"] = {{"chain_length", 5}};
    j["stretch_factors"] = {1.0, 1.3, 1.6};
    j["tier"] = "trajectories";
    j["shots"] = 500;
    j["seed"] = 5;
    j["noise_model"] = {{"t1_us", 100.0}, {"t2_us", 100.0}};
    j["save_raw"] = false;
    j["output_dir"] = out.string();
    RunResult res = run(j);
    // 4 local + 3 extra nonlocal (Z0Z1 appears once)
    REQUIRE(res.steps[0].rows.size() == 7);
    fs::remove_all(out);
}

TEST_CASE("sweep continues past failing points", "[experiment]") {
    fs::path out = fs::temp_directory_path() / "qemlab_test_sweep";
    fs::remove_all(out);
    nlohmann::json t = small_quench_config((out / "pt").string(), "density");
    t["quench"]["steps"] = 1;
    t["twirl_instances"] = 1;
    t["tn_baseline"] = {{"enabled", false}};
    t["save_raw"] = false;
    t["output_dir"] = out.string();
    nlohmann::json res = sweep(t, "J", {0.1, 0.5236});
    REQUIRE(res["points"].size() == 2);
    for (const auto& p : res["points"]) REQUIRE(p["status"] == "ok");
    REQUIRE(fs::exists(out / "grid.csv"));
    fs::remove_all(out);
}

TEST_CASE("config validation failures are invalid_argument", "[experiment]") {
    nlohmann::json j;
    j["kind"] = "quench";
    j["quench"] = {{"steps", 0}};
    REQUIRE_THROWS_AS(config_from_json(j), std::invalid_argument);
    j["quench"]["steps"] = 2;
    j["stretch_factors"] = {2.0, 1.0};
    REQUIRE_THROWS_AS(config_from_json(j), std::invalid_argument);
}

TEST_CASE("failed runs remove partial output", "[experiment]") {
    fs::path out = fs::temp_directory_path() / "qemlab_test_fail";
    fs::remove_all(out);
    nlohmann::json j = small_quench_config(out.string(), "density");
    // density tier cannot hold 16 qubits: runtime failure after config passes
    j["topology"] = {{"sublattice_size", 16}};
    REQUIRE_THROWS(run(j));
    REQUIRE_FALSE(fs::exists(out));
}

TEST_CASE("twirling reduces coherent crosstalk error at c=1", "[experiment]") {
    // 4-qubit path, strong idle ZZ crosstalk, no DD: the bare circuit keeps a
    // coherent error; pooling 8 twirl instances averages it into stochastic
    // noise and lands closer to the ideal magnetization.
    auto cfg = [&](int instances, const std::string& outdir) {
        nlohmann::json j;
        j["kind"] = "quench";
        j["topology"] = {{"sublattice_size", 4}};
        j["quench"] = {{"j", 0.5236}, {"h", 1.0}, {"dt", 0.5}, {"steps", 3}, {"mode", "native_rzz"}};
        j["stretch_factors"] = {1.0, 1.5};
        j["twirl_instances"] = instances;
        j["dd"] = "none";
        j["tier"] = "density";
        j["seed"] = 99;
        j["save_raw"] = false;
        j["noise_model"] = {{"zz_crosstalk_rad_per_us", 0.6}};
        j["output_dir"] = (fs::temp_directory_path() / outdir).string();
        return j;
    };
    fs::remove_all(fs::temp_directory_path() / "qemlab_tw_bare");
    fs::remove_all(fs::temp_directory_path() / "qemlab_tw_8");
    RunResult bare = run(cfg(1, "qemlab_tw_bare"));
    RunResult twirled = run(cfg(8, "qemlab_tw_8"));
    for (size_t s = 0; s < bare.steps.size(); ++s) {
        auto ideal = oracle_magnetization(bare.steps[s], 4);
        double err_bare = d_avg(ideal, magnetization_from_rows(bare.steps[s], 4, false, 0));
        double err_tw = d_avg(ideal, magnetization_from_rows(twirled.steps[s], 4, false, 0));
        REQUIRE(err_tw <= err_bare + 1e-12);
    }
    fs::remove_all(fs::temp_directory_path() / "qemlab_tw_bare");
    fs::remove_all(fs::temp_directory_path() / "qemlab_tw_8");
}
