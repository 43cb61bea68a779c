// qemlab: experiment runner for the error-mitigation laboratory.
//
//   qemlab run <config.json> [--out DIR]
//   qemlab sweep <template.json> --axis {J|steps|lattice_size|D} --values a,b,c
//   qemlab audit-insertion <channel.json> --k K [--out FILE]
//
// Exit codes: 0 success, 2 config error, 3 runtime failure.
// QEMLAB_WORKERS bounds the worker pool (default: hardware concurrency).

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qemlab/lab.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::invalid_argument("cannot open " + path);
    return nlohmann::json::parse(in);
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    nlohmann::json cj;
    qemlab::ExperimentConfig cfg;
    try {
        cj = load_json(config_path);
        if (!out_override.empty()) cj["output_dir"] = out_override;
        cfg = qemlab::config_from_json(cj);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        qemlab::RunResult res = qemlab::run(cfg, cj);
        std::cout << "run complete: " << cfg.output_dir << " ("
                  << res.manifest["total_seconds"].get<double>() << " s)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "run failed [" << cfg.kind << "]: " << e.what() << "\n";
        return 3;
    }
}

int cmd_sweep(const std::string& template_path, const std::string& axis,
              const std::string& values_csv) {
    nlohmann::json tj;
    std::vector<double> values;
    try {
        tj = load_json(template_path);
        values = parse_values(values_csv);
        if (values.empty()) throw std::invalid_argument("empty axis value list");
        qemlab::config_from_json(tj);  // template must itself be valid
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        nlohmann::json res = qemlab::sweep(tj, axis, values);
        int failures = 0;
        for (const auto& p : res["points"])
            if (p["status"] != "ok") {
                ++failures;
                std::cerr << "sweep point " << axis << "=" << p["value"]
                          << " failed: " << p.value("message", std::string("?")) << "\n";
            }
        std::cout << "sweep complete: " << res["points"].size() - failures << "/"
                  << res["points"].size() << " points ok\n";
        return failures == static_cast<int>(res["points"].size()) ? 3 : 0;
    } catch (const std::exception& e) {
        std::cerr << "sweep failed: " << e.what() << "\n";
        return 3;
    }
}

int cmd_audit(const std::string& channel_path, int k, const std::string& out_path) {
    qemlab::Channel ch;
    try {
        nlohmann::json j = load_json(channel_path);
        std::vector<double> probs(16, 0.0);
        if (j.contains("pauli")) {
            for (auto it = j["pauli"].begin(); it != j["pauli"].end(); ++it)
                probs[qemlab::pauli_index(it.key())] = it.value().get<double>();
        } else if (j.contains("probs")) {
            probs = j["probs"].get<std::vector<double>>();
            probs.resize(16, 0.0);
        } else {
            throw std::invalid_argument("channel json needs 'pauli' or 'probs'");
        }
        ch = qemlab::Channel::from_pauli_probs(2, probs);
        if (k < 0) throw std::invalid_argument("k must be >= 0");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        qemlab::InsertionAudit audit = qemlab::identity_insertion_map(ch, k);
        std::ostringstream table;
        table << "pauli,actual,desired,abs_diff\n";
        for (size_t i = 0; i < audit.paulis.size(); ++i)
            table << audit.paulis[i] << "," << qemlab::fmt_g12(audit.actual[i]) << ","
                  << qemlab::fmt_g12(audit.desired[i]) << ","
                  << qemlab::fmt_g12(std::abs(audit.actual[i] - audit.desired[i])) << "\n";
        if (out_path.empty()) {
            std::cout << table.str();
        } else {
            std::ofstream f(out_path);
            f << table.str();
            std::cout << "audit written to " << out_path << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "audit failed: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"error-mitigation simulation laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run_cmd = app.add_subcommand("run", "execute one experiment config");
    run_cmd->add_option("config", config_path, "experiment config JSON")->required();
    run_cmd->add_option("--out", out_dir, "override output directory");

    std::string template_path, axis, values_csv;
    auto* sweep_cmd = app.add_subcommand("sweep", "run a config template over a parameter axis");
    sweep_cmd->add_option("template", template_path, "template config JSON")->required();
    sweep_cmd->add_option("--axis", axis, "J | steps | lattice_size | D")->required();
    sweep_cmd->add_option("--values", values_csv, "comma-separated axis values")->required();

    std::string channel_path, audit_out;
    int k = 1;
    auto* audit_cmd =
        app.add_subcommand("audit-insertion", "identity-insertion amplification audit");
    audit_cmd->add_option("channel", channel_path, "2-qubit Pauli channel JSON")->required();
    audit_cmd->add_option("--k", k, "number of inserted identity pairs (2k+1 gates)");
    audit_cmd->add_option("--out", audit_out, "write the CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return cmd_run(config_path, out_dir);
    if (sweep_cmd->parsed()) return cmd_sweep(template_path, axis, values_csv);
    if (audit_cmd->parsed()) return cmd_audit(channel_path, k, audit_out);
    return 2;
}
