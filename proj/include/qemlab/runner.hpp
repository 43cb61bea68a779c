#pragma once

// Experiment execution: family-specific frame lists (Trotter steps, T1
// delays, one GHZ frame), the shared mitigation pipeline, result tables and
// the sweep driver.
//
// Output bundle layout (one directory per run):
//   manifest.json       config echo, config hash, seeds, stage wall-clock
//   summary.csv         step,observable,source,<c=...>,mitigated,stderr,
//                       unphysical,bootstrap_std
//   expectations.csv    step,qubit,basis,value,stderr,source   (weight-1)
//   magnetization.csv   step,source,mx,my,mz
//   metrics.csv         step,d_avg_raw,d_avg_mit,e_avg_raw,e_avg_mit,
//                       d_avg_tn,e_avg_tn          (quench families)
//   raw/                per-variant counts (trajectories) or outcome
//                       distributions (density), JSON

#include "qemlab/experiment.hpp"

namespace qemlab {

struct FamilySpec {
    std::vector<int> frames;
    std::function<Circuit(int)> build;  // base circuit without measurement
    std::vector<char> bases;
    std::map<char, std::vector<std::string>> observables;
    std::string source_label;
};

inline std::vector<std::string> all_observables(const FamilySpec& spec) {
    std::vector<std::string> out;
    for (char b : spec.bases)
        for (const auto& p : spec.observables.at(b)) out.push_back(p);
    return out;
}

struct RunResult {
    std::vector<StepData> steps;
    std::vector<TnStepRecord> tn;  // empty unless the baseline ran
    nlohmann::json manifest;
};

namespace detail_run {

struct VariantJob {
    size_t ci = 0;
    int instance = 0;
};

inline void save_variant(const std::filesystem::path& dir, int frame, double c, int instance,
                         const VariantOutput& out) {
    for (const auto& [basis, counts] : out.counts) {
        nlohmann::json j = counts_to_json(counts);
        std::ofstream f(dir / ("counts_f" + std::to_string(frame) + "_c" + fmt_g12(c) +
                               "_inst" + std::to_string(instance) + "_" + basis + ".json"));
        f << j.dump(0) << "\n";
    }
    for (const auto& [basis, probs] : out.probs) {
        nlohmann::json j;
        j["basis"] = std::string(1, basis);
        nlohmann::json arr = nlohmann::json::array();
        for (double p : probs) arr.push_back(fmt_g12(p));
        j["probs"] = arr;
        std::ofstream f(dir / ("probs_f" + std::to_string(frame) + "_c" + fmt_g12(c) + "_inst" +
                               std::to_string(instance) + "_" + basis + ".json"));
        f << j.dump(0) << "\n";
    }
}

inline char observable_basis(const FamilySpec& spec, const std::string& pauli) {
    for (char b : spec.bases) {
        const auto& list = spec.observables.at(b);
        if (std::find(list.begin(), list.end(), pauli) != list.end()) return b;
    }
    throw std::logic_error("observable missing from family");
}

}  // namespace detail_run

// Runs one family through the full pipeline; fills per-frame rows.
inline std::vector<StepData> run_family(const ExperimentConfig& cfg, const Topology& topo,
                                        const NoiseModel& nm, const FamilySpec& spec,
                                        const std::filesystem::path& raw_dir,
                                        nlohmann::json* timing = nullptr) {
    const int workers = worker_count();
    const auto obs_list = all_observables(spec);
    std::vector<StepData> result;
    const auto t0 = std::chrono::steady_clock::now();

    for (int frame : spec.frames) {
        Circuit base = spec.build(frame);
        StepData sd;
        sd.step = frame;

        if (base.qubit_count <= 24) {
            Statevector sv = evolve_exact(base);
            for (const auto& p : obs_list) sd.oracle[p] = expectation(sv, p);
        }

        // compile per twirl instance (instances == 1 runs the bare circuit)
        std::vector<Circuit> compiled;
        if (cfg.twirl_instances > 1) {
            uint64_t tw_seed = derive_seed(cfg.seed, 0x636972637473ULL, uint64_t(frame));
            for (auto& inst : twirl(base, tw_seed, cfg.twirl_instances))
                compiled.push_back(merge_single_qubit(inst));
        } else {
            compiled.push_back(merge_single_qubit(base));
        }

        std::vector<detail_run::VariantJob> jobs;
        for (size_t ci = 0; ci < cfg.stretch_factors.size(); ++ci)
            for (int k = 0; k < cfg.twirl_instances; ++k) jobs.push_back({ci, k});

        const long long shots_per_instance =
            std::max<long long>(1, cfg.shots / cfg.twirl_instances);
        std::function<VariantOutput(const detail_run::VariantJob&)> work =
            [&](const detail_run::VariantJob& job) {
                VariantRequest req;
                req.base = compiled[job.instance];
                req.bases = spec.bases;
                req.observables = spec.observables;
                req.stretch_c = cfg.stretch_factors[job.ci];
                req.shots = shots_per_instance;
                req.seed = derive_seed(cfg.seed, 0x76726e74ULL,
                                       (uint64_t(frame) << 24) ^ (uint64_t(job.ci) << 16) ^
                                           uint64_t(job.instance));
                return simulate_variant(req, cfg, nm, topo);
            };
        std::vector<VariantOutput> outs = run_parallel(jobs, work, workers);

        sd.variants.assign(cfg.stretch_factors.size(), {});
        for (size_t ji = 0; ji < jobs.size(); ++ji)
            sd.variants[jobs[ji].ci].push_back(std::move(outs[ji]));

        sd.pooled.resize(cfg.stretch_factors.size());
        for (size_t ci = 0; ci < cfg.stretch_factors.size(); ++ci)
            for (const auto& p : obs_list) {
                std::vector<EstimatedValue> inst;
                for (const auto& v : sd.variants[ci]) inst.push_back(v.values.at(p));
                sd.pooled[ci][p] = average_twirl_instances(inst);
            }
        mitigate_step(sd, cfg, obs_list);

        if (cfg.tier == SimTier::trajectories && cfg.bootstrap_resamples > 0) {
            for (auto& row : sd.rows) {
                const char basis = detail_run::observable_basis(spec, row.observable);
                std::vector<std::vector<Counts>> per_stretch(cfg.stretch_factors.size());
                for (size_t ci = 0; ci < cfg.stretch_factors.size(); ++ci)
                    for (const auto& v : sd.variants[ci])
                        per_stretch[ci].push_back(v.counts.at(basis));
                auto pipeline = [&](const std::vector<std::vector<Counts>>& cs) {
                    StretchSeries series;
                    for (size_t ci = 0; ci < cs.size(); ++ci) {
                        std::vector<EstimatedValue> inst;
                        for (const auto& counts : cs[ci])
                            inst.push_back(readout_mitigate(counts, row.observable, nm.readout));
                        EstimatedValue pooled = average_twirl_instances(inst);
                        series.points.push_back(
                            {cfg.stretch_factors[ci], pooled.value, pooled.stderr_});
                    }
                    return extrapolate(series, cfg.extrapolation_order).estimate;
                };
                uint64_t bseed = derive_seed(cfg.seed, seed_stream::bootstrap,
                                             uint64_t(frame) * 1000 +
                                                 fnv1a64(row.observable) % 997);
                BootstrapResult br =
                    bootstrap(per_stretch, cfg.bootstrap_resamples, bseed, pipeline);
                row.bootstrap_std = br.stddev;
            }
        }

        if (cfg.save_raw && !raw_dir.empty()) {
            std::filesystem::create_directories(raw_dir);
            for (size_t ci = 0; ci < cfg.stretch_factors.size(); ++ci)
                for (int k = 0; k < cfg.twirl_instances; ++k)
                    detail_run::save_variant(raw_dir, frame, cfg.stretch_factors[ci], k,
                                             sd.variants[ci][k]);
        }
        result.push_back(std::move(sd));
    }
    if (timing)
        (*timing)[spec.source_label + "_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// Family specifications
// ---------------------------------------------------------------------------

inline FamilySpec quench_spec(const ExperimentConfig& cfg, const Topology& topo,
                              const EdgeColoring& coloring) {
    FamilySpec spec;
    spec.source_label = std::string("quench_") + decomposition_name(cfg.mode);
    for (int s = 1; s <= cfg.steps; ++s) spec.frames.push_back(s);
    spec.build = [cfg, topo, coloring](int s) {
        return build_trotter(topo, coloring, cfg.j_coupling, cfg.h_field, cfg.dt, s, cfg.mode,
                             cfg.durations);
    };
    spec.bases = {'X', 'Y', 'Z'};
    const int n = topo.node_count;
    for (char b : spec.bases) {
        std::vector<std::string> obs;
        for (int q = 0; q < n; ++q) obs.push_back(ObservableSpec::weight1(n, q, b).pauli);
        if (b == 'Z')
            for (const auto& e : topo.edges)
                obs.push_back(ObservableSpec::zz_pair(n, e.first, e.second, true).pauli);
        spec.observables[b] = obs;
    }
    return spec;
}

inline FamilySpec t1_spec(const ExperimentConfig& cfg, const Topology& topo) {
    FamilySpec spec;
    spec.source_label = "t1";
    const int n = std::min(cfg.t1_qubit_count, topo.node_count);
    for (size_t i = 0; i < cfg.delays_us.size(); ++i) spec.frames.push_back(static_cast<int>(i));
    std::vector<int> qubits(n);
    for (int q = 0; q < n; ++q) qubits[q] = q;
    const int total = topo.node_count;
    spec.build = [cfg, qubits, total](int frame) {
        Circuit c = build_t1(qubits, cfg.delays_us[frame], 1.0, total, cfg.durations);
        // measurement is appended by the pipeline; strip the builder's
        Circuit out(c.qubit_count);
        for (const auto& m : c.moments) {
            std::vector<Gate> keep;
            for (const auto& g : m)
                if (g.kind != GateKind::Measure) keep.push_back(g);
            if (!keep.empty()) out.add_moment(keep);
        }
        return out;
    };
    spec.bases = {'Z'};
    std::vector<std::string> obs;
    for (int q = 0; q < n; ++q) obs.push_back(ObservableSpec::weight1(total, q, 'Z').pauli);
    for (int k = 2; k <= n; ++k) {
        std::string p(total, 'I');
        for (int q = 0; q < k; ++q) p[q] = 'Z';
        obs.push_back(p);
    }
    spec.observables['Z'] = obs;
    return spec;
}

inline FamilySpec ghz_spec(const ExperimentConfig& cfg, const Topology& topo,
                           const std::vector<int>& chain) {
    FamilySpec spec;
    spec.source_label = "ghz";
    spec.frames = {0};
    spec.build = [cfg, topo, chain](int) { return build_ghz(topo, chain, cfg.durations); };
    spec.bases = {'Z'};
    const int n = topo.node_count;
    std::vector<std::string> obs;
    for (size_t jx = 1; jx < chain.size(); ++jx)
        obs.push_back(ObservableSpec::zz_pair(n, chain[jx - 1], chain[jx], true).pauli);
    for (size_t jx = 1; jx < chain.size(); ++jx) {
        std::string p = ObservableSpec::zz_pair(n, chain[0], chain[jx], false).pauli;
        if (std::find(obs.begin(), obs.end(), p) == obs.end()) obs.push_back(p);
    }
    spec.observables['Z'] = obs;
    return spec;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline void write_summary_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                              const std::vector<StepData>& steps, const std::string& source) {
    std::ofstream f(path);
    f << "step,observable,source";
    for (double c : cfg.stretch_factors) f << ",c" << fmt_g12(c);
    f << ",mitigated,stderr,unphysical,bootstrap_std\n";
    for (const auto& sd : steps)
        for (const auto& row : sd.rows) {
            f << sd.step << "," << row.observable << "," << source;
            for (double v : row.raw_per_stretch) f << "," << fmt_g12(v);
            f << "," << fmt_g12(row.mitigated.estimate) << "," << fmt_g12(row.mitigated.stderr_)
              << "," << (row.mitigated.unphysical ? 1 : 0) << ","
              << (row.bootstrap_std < 0 ? "" : fmt_g12(row.bootstrap_std)) << "\n";
        }
}

inline void write_expectations_csv(const std::filesystem::path& path,
                                   const std::vector<StepData>& steps,
                                   const std::string& source) {
    std::ofstream f(path);
    f << "step,qubit,basis,value,stderr,source\n";
    for (const auto& sd : steps)
        for (const auto& row : sd.rows) {
            if (pauli_weight(row.observable) != 1) continue;
            size_t q = row.observable.find_first_not_of('I');
            f << sd.step << "," << q << "," << row.observable[q] << ","
              << fmt_g12(row.mitigated.estimate) << "," << fmt_g12(row.mitigated.stderr_) << ","
              << source << "\n";
        }
}

struct MagnetizationTable {
    // step -> source -> vector
    std::map<int, std::map<std::string, std::array<double, 3>>> rows;
};

inline std::array<double, 3> magnetization_from_rows(const StepData& sd, int n, bool mitigated,
                                                     size_t raw_index = 0) {
    std::map<char, std::vector<double>> table;
    for (char b : {'X', 'Y', 'Z'}) table[b] = std::vector<double>();
    for (const auto& row : sd.rows) {
        if (pauli_weight(row.observable) != 1) continue;
        size_t q = row.observable.find_first_not_of('I');
        (void)q;
        double v = mitigated ? row.mitigated.estimate : row.raw_per_stretch.at(raw_index);
        table[row.observable[row.observable.find_first_not_of('I')]].push_back(v);
    }
    for (char b : {'X', 'Y', 'Z'})
        if (static_cast<int>(table[b].size()) != n)
            throw std::logic_error("incomplete magnetization table");
    return magnetization(table).m;
}

inline std::array<double, 3> oracle_magnetization(const StepData& sd, int n) {
    std::map<char, std::vector<double>> table;
    for (const auto& [pauli, v] : sd.oracle) {
        if (pauli_weight(pauli) != 1) continue;
        table[pauli[pauli.find_first_not_of('I')]].push_back(v);
    }
    for (char b : {'X', 'Y', 'Z'})
        if (static_cast<int>(table[b].size()) != n)
            throw std::logic_error("incomplete oracle table");
    return magnetization(table).m;
}

inline double adjacent_zz_average(const StepData& sd, const Topology& topo, bool mitigated,
                                  bool oracle, size_t raw_index = 0) {
    double sum = 0;
    int count = 0;
    for (const auto& e : topo.edges) {
        std::string p = ObservableSpec::zz_pair(topo.node_count, e.first, e.second, true).pauli;
        if (oracle) {
            sum += sd.oracle.at(p);
        } else {
            for (const auto& row : sd.rows)
                if (row.observable == p)
                    sum += mitigated ? row.mitigated.estimate : row.raw_per_stretch.at(raw_index);
        }
        ++count;
    }
    return count ? sum / count : 0.0;
}

}  // namespace qemlab
