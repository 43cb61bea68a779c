#pragma once

// Declarative experiment runner: loads a config, executes the T1 / GHZ /
// quench pipelines across stretch factors and twirl instances, applies
// readout mitigation and zero-noise extrapolation, and writes raw tables,
// mitigated summaries and error metrics plus a manifest.
//
// Pipeline per circuit variant: build family circuit -> twirl instance ->
// merge single-qubit runs -> append basis rotation + measurement ->
// insert DD -> simulate at stretch factor c.  The density tier produces
// exact outcome distributions (infinite-shot limit); the trajectory tier
// produces sampled counts through the readout confusion.  Readout
// mitigation inverts the per-qubit confusion, twirl instances are pooled
// shot-weighted, and the stretch series extrapolates to c = 0.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qemlab/analysis.hpp"
#include "qemlab/baseline.hpp"
#include "qemlab/builders.hpp"
#include "qemlab/mitigation.hpp"
#include "qemlab/sim.hpp"
#include "qemlab/transforms.hpp"

namespace qemlab {

constexpr const char* kVersion = "0.1.0";

// 12 significant digits; fixed across the project so reruns are byte-stable.
inline std::string fmt_g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

enum class SimTier { exact, density, trajectories };

inline SimTier tier_from_name(const std::string& s) {
    if (s == "exact") return SimTier::exact;
    if (s == "density") return SimTier::density;
    if (s == "trajectories") return SimTier::trajectories;
    throw std::invalid_argument("unknown simulation tier: " + s);
}

struct ExperimentConfig {
    std::string kind;  // t1 | ghz | quench | tn_baseline
    // topology selection
    std::string topology_base = "heavy_hex_27";
    std::vector<int> exclude_nodes;
    int sublattice_size = -1;
    std::vector<int> explicit_nodes;
    // quench parameters
    double j_coupling = 0.5236;
    double h_field = 1.0;
    double dt = 0.5;
    int steps = 0;
    DecompositionMode mode = DecompositionMode::native_rzz;
    // t1 parameters
    int t1_qubit_count = 1;
    std::vector<double> delays_us;
    // ghz parameters
    int chain_length = 21;
    // shared
    std::vector<double> stretch_factors{1.0, 1.5, 2.0};
    int extrapolation_order = 1;
    long long shots = 100000;
    int twirl_instances = 8;  // 1 = bare, untwirled circuit
    DDSequence dd = DDSequence::none;
    SimTier tier = SimTier::density;
    uint64_t seed = 1;
    int bootstrap_resamples = 0;
    bool tn_baseline = false;
    int bond_dim = 4;
    bool save_raw = true;
    GateDurations durations;
    nlohmann::json noise_json;  // resolved inline noise model description
    std::string output_dir = "out";

    void validate() const {
        if (kind != "t1" && kind != "ghz" && kind != "quench" && kind != "tn_baseline")
            throw std::invalid_argument("unknown experiment kind: " + kind);
        if (stretch_factors.empty()) throw std::invalid_argument("no stretch factors");
        for (size_t i = 0; i < stretch_factors.size(); ++i) {
            if (stretch_factors[i] < 1.0)
                throw std::invalid_argument("stretch factors must be >= 1");
            if (i > 0 && stretch_factors[i] <= stretch_factors[i - 1])
                throw std::invalid_argument("stretch factors must be strictly increasing");
        }
        if (twirl_instances < 1) throw std::invalid_argument("twirl_instances must be >= 1");
        if (shots < 1) throw std::invalid_argument("shots must be >= 1");
        if (extrapolation_order < 1 ||
            extrapolation_order >= static_cast<int>(stretch_factors.size()))
            throw std::invalid_argument("extrapolation order must be in [1, points-1]");
        if (kind == "quench" || kind == "tn_baseline") {
            if (steps < 1) throw std::invalid_argument("quench needs steps >= 1");
        }
        if (kind == "t1" && delays_us.empty()) throw std::invalid_argument("t1 needs delays");
    }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.kind = j.at("kind").get<std::string>();
    if (j.contains("topology")) {
        const auto& t = j["topology"];
        if (t.contains("base")) c.topology_base = t["base"].get<std::string>();
        if (t.contains("exclude")) c.exclude_nodes = t["exclude"].get<std::vector<int>>();
        if (t.contains("sublattice_size")) c.sublattice_size = t["sublattice_size"].get<int>();
        if (t.contains("nodes")) c.explicit_nodes = t["nodes"].get<std::vector<int>>();
    }
    if (j.contains("quench")) {
        const auto& q = j["quench"];
        if (q.contains("j")) c.j_coupling = q["j"].get<double>();
        if (q.contains("h")) c.h_field = q["h"].get<double>();
        if (q.contains("dt")) c.dt = q["dt"].get<double>();
        if (q.contains("steps")) c.steps = q["steps"].get<int>();
        if (q.contains("mode"))
            c.mode = q["mode"].get<std::string>() == "cnot_pair" ? DecompositionMode::cnot_pair
                                                                 : DecompositionMode::native_rzz;
    }
    if (j.contains("t1")) {
        const auto& t = j["t1"];
        if (t.contains("qubits")) c.t1_qubit_count = t["qubits"].get<int>();
        if (t.contains("delays_us")) c.delays_us = t["delays_us"].get<std::vector<double>>();
    }
    if (j.contains("ghz") && j["ghz"].contains("chain_length"))
        c.chain_length = j["ghz"]["chain_length"].get<int>();
    if (j.contains("stretch_factors"))
        c.stretch_factors = j["stretch_factors"].get<std::vector<double>>();
    if (j.contains("extrapolation_order")) c.extrapolation_order = j["extrapolation_order"].get<int>();
    if (j.contains("shots")) c.shots = j["shots"].get<long long>();
    if (j.contains("twirl_instances")) c.twirl_instances = j["twirl_instances"].get<int>();
    if (j.contains("dd")) c.dd = dd_sequence_from_name(j["dd"].get<std::string>());
    if (j.contains("tier")) c.tier = tier_from_name(j["tier"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("bootstrap_resamples")) c.bootstrap_resamples = j["bootstrap_resamples"].get<int>();
    if (j.contains("tn_baseline")) {
        c.tn_baseline = j["tn_baseline"].value("enabled", false);
        c.bond_dim = j["tn_baseline"].value("bond_dim", 4);
    }
    if (j.contains("save_raw")) c.save_raw = j["save_raw"].get<bool>();
    if (j.contains("durations_us")) {
        const auto& d = j["durations_us"];
        if (d.contains("single_qubit")) c.durations.single_qubit = d["single_qubit"].get<double>();
        if (d.contains("cnot")) c.durations.cnot = d["cnot"].get<double>();
        if (d.contains("rzz_native")) c.durations.rzz_native = d["rzz_native"].get<double>();
        if (d.contains("measure")) c.durations.measure = d["measure"].get<double>();
    }
    if (j.contains("noise_model")) c.noise_json = j["noise_model"];
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.validate();
    return c;
}

// Topology selection: base map, optional exclusions, optional canonical
// sub-lattice or explicit node list; returns the compact graph plus the
// original node ids.
inline std::pair<Topology, std::vector<int>> resolve_topology(const ExperimentConfig& c) {
    Topology t;
    if (c.topology_base == "heavy_hex_27")
        t = heavy_hex_27();
    else
        throw std::invalid_argument("unknown topology base: " + c.topology_base);
    if (c.sublattice_size > 0) t = heavy_hex_sublattice(c.sublattice_size);
    if (!c.explicit_nodes.empty()) t = induced_subgraph(t, c.explicit_nodes);
    for (int n : c.exclude_nodes) t = exclude_node(t, n);
    return compact(t);
}

inline NoiseModel resolve_noise(const ExperimentConfig& c, const Topology& compact_topo) {
    if (c.noise_json.is_null()) return NoiseModel::ideal(compact_topo.node_count);
    nlohmann::json j = c.noise_json;
    if (j.is_string()) {
        std::ifstream in(j.get<std::string>());
        if (!in.good()) throw std::invalid_argument("noise model file not found: " +
                                                    j.get<std::string>());
        j = nlohmann::json::parse(in);
    }
    if (!j.contains("qubits")) j["qubits"] = compact_topo.node_count;
    if (j["qubits"].get<int>() != compact_topo.node_count)
        throw std::invalid_argument("noise model qubit count does not match topology");
    return noise_model_from_json(j, &compact_topo);
}

// ---------------------------------------------------------------------------
// Variant simulation
// ---------------------------------------------------------------------------

struct VariantOutput {
    // per observable (readout-mitigated expectation of this single variant)
    std::map<std::string, EstimatedValue> values;
    // raw distribution per basis for persistence / bootstrap
    std::map<char, Counts> counts;                 // trajectories tier
    std::map<char, std::vector<double>> probs;     // density tier (confused)
};

struct VariantRequest {
    Circuit base;               // compiled circuit before measurement
    std::vector<char> bases;    // measurement bases to run
    std::map<char, std::vector<std::string>> observables;  // per basis
    double stretch_c = 1.0;
    long long shots = 0;        // trajectories only
    uint64_t seed = 0;
};

inline VariantOutput simulate_variant(const VariantRequest& req, const ExperimentConfig& cfg,
                                      const NoiseModel& nm, const Topology& topo) {
    VariantOutput out;
    const int n = req.base.qubit_count;
    std::vector<int> all_qubits(n);
    for (int q = 0; q < n; ++q) all_qubits[q] = q;

    for (char basis : req.bases) {
        Circuit measured = req.base;
        append_measurement(measured, all_qubits, basis, cfg.durations);
        measured = insert_dd(measured, cfg.dd, cfg.durations.single_qubit);
        const std::string basis_string(n, basis);

        if (cfg.tier == SimTier::density) {
            DensityMatrix rho = evolve_density(measured, nm, req.stretch_c, &topo);
            std::vector<double> confused =
                apply_readout_confusion(rho.diagonal_probs(), nm.readout);
            out.probs[basis] = confused;
            std::vector<double> corrected = readout_mitigate_probs(confused, nm.readout);
            for (const auto& pauli : req.observables.at(basis)) {
                EstimatedValue ev;
                ev.value = probs_expectation(corrected, pauli, basis_string);
                ev.stderr_ = 0.0;
                ev.shots = cfg.shots;  // nominal weight for pooling
                out.values[pauli] = ev;
            }
        } else if (cfg.tier == SimTier::trajectories) {
            TrajectoryResult res = evolve_trajectories(measured, nm, req.stretch_c, req.shots,
                                                       req.seed + size_t(basis), &topo, 1, 22);
            out.counts[basis] = res.counts;
            for (const auto& pauli : req.observables.at(basis))
                out.values[pauli] = readout_mitigate(res.counts, pauli, nm.readout);
        } else {
            Statevector sv = evolve_exact(req.base);
            for (const auto& pauli : req.observables.at(basis)) {
                EstimatedValue ev;
                ev.value = expectation(sv, pauli);
                ev.shots = cfg.shots;
                out.values[pauli] = ev;
            }
        }
    }
    return out;
}

// Bounded worker pool with slot-indexed results (deterministic).
template <typename Job, typename Result>
std::vector<Result> run_parallel(const std::vector<Job>& jobs,
                                 const std::function<Result(const Job&)>& fn, int workers) {
    std::vector<Result> results(jobs.size());
    if (workers <= 1 || jobs.size() <= 1) {
        for (size_t i = 0; i < jobs.size(); ++i) results[i] = fn(jobs[i]);
        return results;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            try {
                while (true) {
                    size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) break;
                    results[i] = fn(jobs[i]);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

inline int worker_count() {
    if (const char* env = std::getenv("QEMLAB_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------------------
// Mitigated point: one (circuit id, observable) across the stretch series
// ---------------------------------------------------------------------------

struct ObservableRow {
    int step = 0;                        // step index or delay index
    std::string observable;
    std::vector<double> raw_per_stretch;  // pooled, readout-mitigated
    MitigatedValue mitigated;
    double bootstrap_std = -1.0;          // <0 when bootstrap disabled
};

struct StepData {
    int step = 0;
    // pooled per (stretch index, observable)
    std::vector<std::map<std::string, EstimatedValue>> pooled;
    std::vector<ObservableRow> rows;
    // raw artifacts per (stretch index, instance): for bootstrap + saving
    std::vector<std::vector<VariantOutput>> variants;
    std::map<std::string, double> oracle;  // noiseless expectations
};

// Pool instances and extrapolate every observable of one step.
inline void mitigate_step(StepData& sd, const ExperimentConfig& cfg,
                          const std::vector<std::string>& observables) {
    sd.rows.clear();
    for (const auto& pauli : observables) {
        StretchSeries series;
        series.observable = pauli;
        ObservableRow row;
        row.step = sd.step;
        row.observable = pauli;
        for (size_t ci = 0; ci < cfg.stretch_factors.size(); ++ci) {
            const EstimatedValue& ev = sd.pooled[ci].at(pauli);
            series.points.push_back({cfg.stretch_factors[ci], ev.value, ev.stderr_});
            row.raw_per_stretch.push_back(ev.value);
        }
        row.mitigated = extrapolate(series, cfg.extrapolation_order);
        sd.rows.push_back(std::move(row));
    }
}

}  // namespace qemlab
