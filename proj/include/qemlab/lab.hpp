#pragma once

// Top-level entry points used by the CLI and the acceptance suite:
// run(config) executes one experiment and writes its result bundle;
// sweep(template, axis, values) fans a config out over a parameter grid.

#include "qemlab/runner.hpp"

namespace qemlab {

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path manifest() const { return dir / "manifest.json"; }
    std::filesystem::path summary() const { return dir / "summary.csv"; }
    std::filesystem::path expectations() const { return dir / "expectations.csv"; }
    std::filesystem::path magnetization() const { return dir / "magnetization.csv"; }
    std::filesystem::path metrics() const { return dir / "metrics.csv"; }
    std::filesystem::path raw() const { return dir / "raw"; }
};

inline void write_magnetization_csv(const std::filesystem::path& path,
                                    const MagnetizationTable& table) {
    std::ofstream f(path);
    f << "step,source,mx,my,mz\n";
    for (const auto& [step, sources] : table.rows)
        for (const auto& [source, m] : sources)
            f << step << "," << source << "," << fmt_g12(m[0]) << "," << fmt_g12(m[1]) << ","
              << fmt_g12(m[2]) << "\n";
}

struct QuenchMetrics {
    int step = 0;
    double d_avg_raw = -1, d_avg_mit = -1, e_avg_raw = -1, e_avg_mit = -1;
    double d_avg_tn = -1, e_avg_tn = -1;  // <0: baseline disabled
};

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<QuenchMetrics>& metrics) {
    std::ofstream f(path);
    f << "step,d_avg_raw,d_avg_mit,e_avg_raw,e_avg_mit,d_avg_tn,e_avg_tn\n";
    auto cell = [](double v) { return v < 0 ? std::string() : fmt_g12(v); };
    for (const auto& m : metrics)
        f << m.step << "," << cell(m.d_avg_raw) << "," << cell(m.d_avg_mit) << ","
          << cell(m.e_avg_raw) << "," << cell(m.e_avg_mit) << "," << cell(m.d_avg_tn) << ","
          << cell(m.e_avg_tn) << "\n";
}

// Executes the configured experiment and writes the result bundle.  On
// failure the partially written bundle is removed (when this call created
// the directory).
inline RunResult run(const ExperimentConfig& cfg, const nlohmann::json& config_echo) {
    cfg.validate();
    RunPaths paths{cfg.output_dir};
    const bool created = std::filesystem::create_directories(paths.dir);
    const auto t_start = std::chrono::steady_clock::now();
    try {
        auto [topo, node_ids] = resolve_topology(cfg);
        NoiseModel nm = resolve_noise(cfg, topo);
        nm.validate();

        RunResult result;
        nlohmann::json timing = nlohmann::json::object();

        FamilySpec spec;
        std::vector<int> chain;
        if (cfg.kind == "quench" || cfg.kind == "tn_baseline") {
            EdgeColoring coloring = color_edges(topo);
            spec = quench_spec(cfg, topo, coloring);
            if (cfg.kind == "tn_baseline" || cfg.tn_baseline) {
                const auto t0 = std::chrono::steady_clock::now();
                result.tn = tn_evolve_trotter(topo, coloring, cfg.j_coupling, cfg.h_field,
                                              cfg.dt, cfg.steps, cfg.bond_dim);
                timing["tn_seconds"] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        } else if (cfg.kind == "t1") {
            spec = t1_spec(cfg, topo);
        } else if (cfg.kind == "ghz") {
            // restrict the simulation to the chain qubits
            chain = longest_chain(topo, cfg.chain_length);
            auto [sub, sub_ids] = compact(induced_subgraph(topo, chain));
            std::vector<int> to_new(topo.node_count, -1);
            std::vector<int> new_ids(sub_ids.size());
            for (size_t i = 0; i < sub_ids.size(); ++i) {
                to_new[sub_ids[i]] = static_cast<int>(i);
                new_ids[i] = node_ids[sub_ids[i]];
            }
            std::vector<int> mapped;
            for (int n : chain) mapped.push_back(to_new[n]);
            node_ids = new_ids;
            topo = sub;
            chain = mapped;
            nm = resolve_noise(cfg, topo);
            spec = ghz_spec(cfg, topo, chain);
        }

        if (cfg.kind != "tn_baseline")
            result.steps = run_family(cfg, topo, nm, spec, paths.raw(), &timing);

        // tables
        const std::string source = spec.source_label + "_" +
                                   (cfg.tier == SimTier::density
                                        ? "density"
                                        : (cfg.tier == SimTier::exact ? "exact" : "trajectories"));
        if (!result.steps.empty()) {
            write_summary_csv(paths.summary(), cfg, result.steps, source);
            write_expectations_csv(paths.expectations(), result.steps, source);
        }

        MagnetizationTable mag;
        std::vector<QuenchMetrics> metrics;
        if (cfg.kind == "quench") {
            const std::string tn_label = "tn_simple_update_D" + std::to_string(cfg.bond_dim);
            for (const auto& sd : result.steps) {
                QuenchMetrics qm;
                qm.step = sd.step;
                auto m_ideal = oracle_magnetization(sd, topo.node_count);
                auto m_raw = magnetization_from_rows(sd, topo.node_count, false, 0);
                auto m_mit = magnetization_from_rows(sd, topo.node_count, true);
                mag.rows[sd.step]["exact"] = m_ideal;
                mag.rows[sd.step]["raw_c1"] = m_raw;
                mag.rows[sd.step]["mitigated"] = m_mit;
                qm.d_avg_raw = d_avg(m_ideal, m_raw);
                qm.d_avg_mit = d_avg(m_ideal, m_mit);
                double zz_ideal = adjacent_zz_average(sd, topo, false, true);
                if (zz_ideal != 0) {
                    qm.e_avg_raw = e_avg_zz(zz_ideal, adjacent_zz_average(sd, topo, false, false));
                    qm.e_avg_mit = e_avg_zz(zz_ideal, adjacent_zz_average(sd, topo, true, false));
                }
                if (!result.tn.empty()) {
                    const auto& rec = result.tn[sd.step - 1];
                    mag.rows[sd.step][tn_label] = rec.magnetization.m;
                    qm.d_avg_tn = d_avg(m_ideal, rec.magnetization.m);
                    if (zz_ideal != 0) {
                        double zz_tn = 0;
                        for (const auto& [e, v] : rec.zz) zz_tn += v;
                        zz_tn /= double(rec.zz.size());
                        qm.e_avg_tn = e_avg_zz(zz_ideal, zz_tn);
                    }
                }
                metrics.push_back(qm);
            }
            write_magnetization_csv(paths.magnetization(), mag);
            write_metrics_csv(paths.metrics(), metrics);
        } else if (cfg.kind == "tn_baseline") {
            const std::string tn_label = "tn_simple_update_D" + std::to_string(cfg.bond_dim);
            std::ofstream f(paths.expectations());
            f << "step,qubit,basis,value,stderr,source\n";
            for (const auto& rec : result.tn) {
                mag.rows[rec.magnetization.step][tn_label] = rec.magnetization.m;
            }
            write_magnetization_csv(paths.magnetization(), mag);
        }

        // manifest
        nlohmann::json manifest;
        manifest["version"] = kVersion;
        manifest["config"] = config_echo;
        manifest["config_hash"] = fmt_g12(double(fnv1a64(config_echo.dump())));
        manifest["config_hash_hex"] = [&] {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%016llx",
                          static_cast<unsigned long long>(fnv1a64(config_echo.dump())));
            return std::string(buf);
        }();
        manifest["seed"] = cfg.seed;
        manifest["workers"] = worker_count();
        manifest["topology_nodes"] = node_ids;
        manifest["stages"] = timing;
        manifest["total_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        // note: stretched circuits are not re-averaged over time; noise in
        // this laboratory is static, so interleaving would be a no-op.
        manifest["static_noise"] = true;
        std::ofstream mf(paths.manifest());
        mf << manifest.dump(2) << "\n";
        RunResult out = std::move(result);
        out.manifest = std::move(manifest);
        return out;
    } catch (...) {
        if (created) {
            std::error_code ec;
            std::filesystem::remove_all(paths.dir, ec);
        }
        throw;
    }
}

inline RunResult run(const nlohmann::json& config_json) {
    return run(config_from_json(config_json), config_json);
}

// Axis sweep: clones the template per value, runs into a subdirectory and
// aggregates the per-step metric grid.  Per-point failures are recorded and
// the sweep continues.
inline nlohmann::json sweep(const nlohmann::json& template_json, const std::string& axis,
                            const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one axis value");
    nlohmann::json grid = nlohmann::json::array();
    std::filesystem::path base_dir =
        template_json.value("output_dir", std::string("sweep_out"));
    std::filesystem::create_directories(base_dir);
    std::ofstream gridfile(base_dir / "grid.csv");
    gridfile << "axis,value,step,d_avg_raw,d_avg_mit,e_avg_raw,e_avg_mit,d_avg_tn,e_avg_tn\n";
    for (double v : values) {
        nlohmann::json cj = template_json;
        if (axis == "J")
            cj["quench"]["j"] = v;
        else if (axis == "steps")
            cj["quench"]["steps"] = static_cast<int>(v);
        else if (axis == "lattice_size")
            cj["topology"]["sublattice_size"] = static_cast<int>(v);
        else if (axis == "D")
            cj["tn_baseline"]["bond_dim"] = static_cast<int>(v);
        else
            throw std::invalid_argument("unknown sweep axis: " + axis);
        cj["output_dir"] =
            (base_dir / (axis + "_" + fmt_g12(v))).string();
        nlohmann::json point;
        point["axis"] = axis;
        point["value"] = v;
        try {
            run(cj);
            point["status"] = "ok";
            std::ifstream mf(std::filesystem::path(cj["output_dir"].get<std::string>()) /
                             "metrics.csv");
            std::string line;
            bool header = true;
            while (std::getline(mf, line)) {
                if (header) {
                    header = false;
                    continue;
                }
                gridfile << axis << "," << fmt_g12(v) << "," << line << "\n";
            }
        } catch (const std::exception& e) {
            point["status"] = "error";
            point["message"] = e.what();
        }
        grid.push_back(point);
    }
    nlohmann::json out;
    out["points"] = grid;
    std::ofstream sf(base_dir / "sweep.json");
    sf << out.dump(2) << "\n";
    return out;
}

}  // namespace qemlab
