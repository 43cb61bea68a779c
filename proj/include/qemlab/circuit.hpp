#pragma once

// Circuit IR: time-ordered moments of gates with explicit durations.
//
// Moments define the per-qubit gate order; actual start times are computed
// as-soon-as-possible per qubit (a two-qubit gate waits for both operands).
// A moment containing any Measure gate acts as a global barrier so that
// readout is simultaneous.  Gaps between a qubit's scheduled gates are its
// idle windows; they carry idle noise and are the insertion points for
// dynamical decoupling.

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "qemlab/gates.hpp"

namespace qemlab {

struct Circuit {
    int qubit_count = 0;
    std::vector<std::vector<Gate>> moments;

    Circuit() = default;
    explicit Circuit(int n) : qubit_count(n) {
        if (n < 1) throw std::invalid_argument("qubit_count must be positive");
    }

    void add_moment(std::vector<Gate> gates) {
        std::vector<char> used(qubit_count, 0);
        for (const auto& g : gates) {
            g.validate();
            for (int i = 0; i < g.arity; ++i) {
                int q = g.qubits[i];
                if (q >= qubit_count) throw std::invalid_argument("qubit index out of range");
                if (used[q]) throw std::invalid_argument("overlapping qubits in moment");
                used[q] = 1;
            }
        }
        moments.push_back(std::move(gates));
    }

    void append(const Gate& g) { add_moment({g}); }

    size_t gate_count() const {
        size_t n = 0;
        for (const auto& m : moments) n += m.size();
        return n;
    }

    size_t count_kind(GateKind k) const {
        size_t n = 0;
        for (const auto& m : moments)
            for (const auto& g : m)
                if (g.kind == k) ++n;
        return n;
    }

    bool has_measurements() const { return count_kind(GateKind::Measure) > 0; }

    void validate() const {
        std::vector<char> used;
        for (const auto& m : moments) {
            used.assign(qubit_count, 0);
            for (const auto& g : m) {
                g.validate();
                for (int i = 0; i < g.arity; ++i) {
                    int q = g.qubits[i];
                    if (q >= qubit_count) throw std::invalid_argument("qubit out of range");
                    if (used[q]) throw std::invalid_argument("overlapping qubits in moment");
                    used[q] = 1;
                }
            }
        }
    }
};

struct ScheduledGate {
    Gate gate;
    int moment = 0;
    int index_in_moment = 0;
    double start = 0;
    double end = 0;
};

struct IdleWindow {
    int qubit = 0;
    double start = 0;
    double end = 0;
    double length() const { return end - start; }
};

struct Schedule {
    std::vector<ScheduledGate> gates;  // moment order
    std::vector<IdleWindow> idles;     // per-qubit gaps, including leading idle
    double total_time = 0;
};

inline Schedule schedule_circuit(const Circuit& c) {
    Schedule s;
    std::vector<double> ready(c.qubit_count, 0.0);
    std::vector<char> has_gate(c.qubit_count, 0);

    for (size_t mi = 0; mi < c.moments.size(); ++mi) {
        const auto& moment = c.moments[mi];
        const bool barrier =
            std::any_of(moment.begin(), moment.end(),
                        [](const Gate& g) { return g.kind == GateKind::Measure; });
        double barrier_time = 0;
        if (barrier)
            barrier_time = *std::max_element(ready.begin(), ready.end());
        for (size_t gi = 0; gi < moment.size(); ++gi) {
            const Gate& g = moment[gi];
            double start = barrier ? barrier_time : 0.0;
            for (int i = 0; i < g.arity; ++i) start = std::max(start, ready[g.qubits[i]]);
            ScheduledGate sg;
            sg.gate = g;
            sg.moment = static_cast<int>(mi);
            sg.index_in_moment = static_cast<int>(gi);
            sg.start = start;
            sg.end = start + g.duration;
            for (int i = 0; i < g.arity; ++i) {
                int q = g.qubits[i];
                if (sg.start > ready[q] + 1e-15)
                    s.idles.push_back({q, ready[q], sg.start});
                ready[q] = sg.end;
                has_gate[q] = 1;
            }
            s.gates.push_back(sg);
        }
    }
    s.total_time = ready.empty() ? 0.0 : *std::max_element(ready.begin(), ready.end());
    // A qubit with no gates at all idles for the whole circuit.
    for (int q = 0; q < c.qubit_count; ++q)
        if (!has_gate[q] && s.total_time > 0) s.idles.push_back({q, 0.0, s.total_time});
    std::sort(s.idles.begin(), s.idles.end(), [](const IdleWindow& a, const IdleWindow& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.qubit < b.qubit;
    });
    return s;
}

inline double total_time(const Circuit& c) { return schedule_circuit(c).total_time; }

// Rebuild a moment list from per-qubit gate sequences.  Two-qubit gates must
// appear in both operands' sequences as the same shared element (tracked via
// ids).  Used by the circuit transformations after they splice gates in or
// out of per-qubit order.
struct SequencedGate {
    Gate gate;
    long long id;  // shared by the two entries of a two-qubit gate
};

inline Circuit circuit_from_sequences(int qubit_count,
                                      std::vector<std::deque<SequencedGate>> seq) {
    Circuit out(qubit_count);
    size_t remaining = 0;
    for (const auto& s : seq) remaining += s.size();
    while (remaining > 0) {
        // Measure moments are barriers, so they are never mixed with other
        // gates: emit every available non-measure front first, and a
        // measure-only moment once nothing else can move.
        std::vector<Gate> moment;
        std::vector<char> used(qubit_count, 0);
        for (int q = 0; q < qubit_count; ++q) {
            if (seq[q].empty() || used[q]) continue;
            const SequencedGate& sg = seq[q].front();
            if (sg.gate.kind == GateKind::Measure) continue;
            if (sg.gate.arity == 1) {
                moment.push_back(sg.gate);
                used[q] = 1;
                seq[q].pop_front();
                --remaining;
            } else {
                int other = sg.gate.qubits[0] == q ? sg.gate.qubits[1] : sg.gate.qubits[0];
                if (other == q || used[other] || seq[other].empty()) continue;
                if (seq[other].front().id != sg.id) continue;
                moment.push_back(sg.gate);
                used[q] = used[other] = 1;
                seq[q].pop_front();
                seq[other].pop_front();
                remaining -= 2;
            }
        }
        if (moment.empty()) {
            for (int q = 0; q < qubit_count; ++q) {
                if (seq[q].empty()) continue;
                if (seq[q].front().gate.kind != GateKind::Measure)
                    throw std::logic_error("circuit_from_sequences: inconsistent ordering");
                moment.push_back(seq[q].front().gate);
                seq[q].pop_front();
                --remaining;
            }
        }
        if (moment.empty())
            throw std::logic_error("circuit_from_sequences: no progress");
        out.add_moment(std::move(moment));
    }
    return out;
}

inline std::vector<std::deque<SequencedGate>> sequences_from_circuit(const Circuit& c) {
    std::vector<std::deque<SequencedGate>> seq(c.qubit_count);
    long long id = 0;
    for (const auto& m : c.moments)
        for (const auto& g : m) {
            ++id;
            for (int i = 0; i < g.arity; ++i) seq[g.qubits[i]].push_back({g, id});
        }
    return seq;
}

inline nlohmann::json circuit_to_json(const Circuit& c) {
    nlohmann::json j;
    j["qubit_count"] = c.qubit_count;
    auto& jm = j["moments"] = nlohmann::json::array();
    for (const auto& m : c.moments) {
        nlohmann::json moment = nlohmann::json::array();
        for (const auto& g : m) {
            nlohmann::json jg;
            jg["kind"] = gate_kind_name(g.kind);
            jg["qubits"] = g.arity == 1 ? std::vector<int>{g.qubits[0]}
                                        : std::vector<int>{g.qubits[0], g.qubits[1]};
            jg["params"] = g.params;
            jg["duration"] = g.duration;
            jg["stretchable"] = g.stretchable;
            if (g.kind == GateKind::Measure) jg["basis"] = std::string(1, g.basis);
            moment.push_back(jg);
        }
        jm.push_back(moment);
    }
    return j;
}

inline Circuit circuit_from_json(const nlohmann::json& j) {
    Circuit c(j.at("qubit_count").get<int>());
    for (const auto& jm : j.at("moments")) {
        std::vector<Gate> moment;
        for (const auto& jg : jm) {
            Gate g;
            g.kind = gate_kind_from_name(jg.at("kind").get<std::string>());
            auto qs = jg.at("qubits").get<std::vector<int>>();
            g.arity = static_cast<int>(qs.size());
            g.qubits = {qs[0], g.arity == 2 ? qs[1] : -1};
            auto ps = jg.at("params").get<std::vector<double>>();
            for (size_t i = 0; i < ps.size() && i < 3; ++i) g.params[i] = ps[i];
            g.duration = jg.at("duration").get<double>();
            g.stretchable = jg.at("stretchable").get<bool>();
            if (jg.contains("basis")) g.basis = jg.at("basis").get<std::string>()[0];
            moment.push_back(g);
        }
        c.add_moment(std::move(moment));
    }
    return c;
}

}  // namespace qemlab
