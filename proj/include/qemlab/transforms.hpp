#pragma once

// Circuit transformations: duration stretching, single-qubit gate merging,
// dynamical-decoupling insertion and Pauli twirling.  Every transform
// preserves the noiseless unitary up to a global phase.

#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "qemlab/circuit.hpp"
#include "qemlab/linalg.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

// Durations of stretchable gates multiplied by c; angles untouched.
inline Circuit stretch(const Circuit& c, double factor) {
    if (factor < 1.0) throw std::invalid_argument("stretch factor must be >= 1");
    Circuit out = c;
    for (auto& m : out.moments)
        for (auto& g : m)
            if (g.stretchable) g.duration *= factor;
    return out;
}

// ---------------------------------------------------------------------------
// Single-qubit gate merging
// ---------------------------------------------------------------------------

// Collapses each maximal run of consecutive single-qubit unitaries on a qubit
// into one gate: dropped when the product is the identity (up to phase),
// an RZ when it is diagonal, otherwise a U(theta,phi,lambda) whose duration
// is the longest constituent pulse (zero-duration twirl gates therefore add
// no time).  Block unitaries are preserved to 1e-12 up to global phase.
inline Circuit merge_single_qubit(const Circuit& c) {
    auto seq = sequences_from_circuit(c);
    std::vector<std::deque<SequencedGate>> out(c.qubit_count);
    long long next_id = 1'000'000'000LL;

    for (int q = 0; q < c.qubit_count; ++q) {
        size_t i = 0;
        while (i < seq[q].size()) {
            const Gate& g = seq[q][i].gate;
            if (g.arity != 1 || !g.is_unitary_gate()) {
                out[q].push_back(seq[q][i]);
                ++i;
                continue;
            }
            Eigen::Matrix2cd m = gate_matrix(g);
            double dur = g.duration;
            size_t jx = i + 1;
            while (jx < seq[q].size()) {
                const Gate& h = seq[q][jx].gate;
                if (h.arity != 1 || !h.is_unitary_gate()) break;
                m = Eigen::Matrix2cd(gate_matrix(h)) * m;
                dur = std::max(dur, h.duration);
                ++jx;
            }
            if (jx == i + 1) {  // single gate: leave untouched
                out[q].push_back(seq[q][i]);
                ++i;
                continue;
            }
            if (dist_up_to_phase(Eigen::Matrix2cd::Identity(), m) < 1e-12) {
                // net identity: drop the whole run
            } else if (std::abs(m(0, 1)) < 1e-12 && std::abs(m(1, 0)) < 1e-12) {
                double angle = std::arg(m(1, 1) / m(0, 0));
                out[q].push_back({Gate::rz(q, angle), next_id++});
            } else {
                auto [theta, phi, lambda] = u3_params_from_matrix(m);
                out[q].push_back({Gate::u3(q, theta, phi, lambda, dur), next_id++});
            }
            i = jx;
        }
    }
    return circuit_from_sequences(c.qubit_count, std::move(out));
}

// ---------------------------------------------------------------------------
// Dynamical decoupling
// ---------------------------------------------------------------------------

enum class DDSequence { none, x2, xy4, xy8 };

inline const char* dd_sequence_name(DDSequence s) {
    switch (s) {
        case DDSequence::none: return "none";
        case DDSequence::x2: return "x2";
        case DDSequence::xy4: return "xy4";
        case DDSequence::xy8: return "xy8";
    }
    return "?";
}

inline DDSequence dd_sequence_from_name(const std::string& s) {
    if (s == "none") return DDSequence::none;
    if (s == "x2") return DDSequence::x2;
    if (s == "xy4") return DDSequence::xy4;
    if (s == "xy8") return DDSequence::xy8;
    throw std::invalid_argument("unknown DD sequence: " + s);
}

namespace detail {

struct DDPattern {
    std::vector<double> gaps;  // fractions of tau, size pulses+1
    std::vector<int> pulses;   // 0 = X(pi), 1 = X(-pi), 2 = Y(pi)
};

inline const DDPattern& dd_pattern(DDSequence s) {
    static const DDPattern x2{{0.25, 0.5, 0.25}, {0, 1}};
    static const DDPattern xy4{{0.125, 0.25, 0.25, 0.25, 0.125}, {0, 2, 0, 2}};
    static const DDPattern xy8{
        {0.0625, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.0625},
        {0, 2, 0, 2, 2, 0, 2, 0}};
    switch (s) {
        case DDSequence::x2: return x2;
        case DDSequence::xy4: return xy4;
        case DDSequence::xy8: return xy8;
        default: throw std::invalid_argument("no pattern for DD sequence");
    }
}

inline Gate dd_pulse(int q, int code, double dur) {
    switch (code) {
        case 0: return Gate::rx(q, kPi, dur);
        case 1: return Gate::rx(q, -kPi, dur);
        case 2: return Gate::u3(q, kPi, 0.0, 0.0, dur);  // Y(pi)
    }
    throw std::logic_error("bad pulse code");
}

}  // namespace detail

// Replaces every idle window long enough to hold the sequence with the timed
// pulse pattern; windows too short fall back to the next shorter sequence
// (xy8 -> xy4 -> x2) and stay untouched when even x2 does not fit.
// Explicit Delay gates are deliberate idles and are left alone.
inline Circuit insert_dd(const Circuit& c, DDSequence seq, double pulse_duration = 0.035) {
    if (seq == DDSequence::none) return c;
    Schedule sched = schedule_circuit(c);
    auto sequences = sequences_from_circuit(c);

    // Gate start times in per-qubit order, aligned with the sequence entries
    // (both enumerate gates in moment order).
    std::vector<std::deque<double>> starts(c.qubit_count);
    for (const auto& sg : sched.gates)
        for (int i = 0; i < sg.gate.arity; ++i) starts[sg.gate.qubits[i]].push_back(sg.start);
    std::vector<std::vector<IdleWindow>> windows(c.qubit_count);
    for (const auto& w : sched.idles) windows[w.qubit].push_back(w);

    auto emit_fill = [&](std::deque<SequencedGate>& dst, int q, double span,
                         long long& next_id) {
        // Longest sequence from the requested one downwards that fits.
        static const DDSequence order[] = {DDSequence::xy8, DDSequence::xy4, DDSequence::x2};
        for (DDSequence cand : order) {
            if (static_cast<int>(cand) > static_cast<int>(seq)) continue;
            const auto& pat = detail::dd_pattern(cand);
            double tau = span - pulse_duration * static_cast<double>(pat.pulses.size());
            if (tau <= 1e-12) continue;
            for (size_t p = 0; p <= pat.pulses.size(); ++p) {
                double gap = tau * pat.gaps[p];
                if (gap > 0) dst.push_back({Gate::delay(q, gap), next_id++});
                if (p < pat.pulses.size())
                    dst.push_back({detail::dd_pulse(q, pat.pulses[p], pulse_duration), next_id++});
            }
            return;
        }
        // nothing fits: leave the window as implicit idle time
    };

    std::vector<std::deque<SequencedGate>> out(c.qubit_count);
    long long next_id = 2'000'000'000LL;
    for (int q = 0; q < c.qubit_count; ++q) {
        size_t wi = 0;
        for (size_t gi = 0; gi < sequences[q].size(); ++gi) {
            double start = starts[q][gi];
            while (wi < windows[q].size() && windows[q][wi].end <= start + 1e-12) {
                emit_fill(out[q], q, windows[q][wi].length(), next_id);
                ++wi;
            }
            out[q].push_back(sequences[q][gi]);
        }
        for (; wi < windows[q].size(); ++wi) emit_fill(out[q], q, windows[q][wi].length(), next_id);
    }
    return circuit_from_sequences(c.qubit_count, std::move(out));
}

// ---------------------------------------------------------------------------
// Pauli twirling
// ---------------------------------------------------------------------------

// CNOT conjugation of Pauli pairs (control letter first), sign dropped: the
// sign is a global phase once the compensating gates are applied.
inline std::pair<Pauli, Pauli> cnot_conjugate(Pauli control, Pauli target) {
    static const int table[4][4][2] = {
        // target:   I         X         Y         Z        control:
        {{0, 0}, {0, 1}, {3, 2}, {3, 3}},  // I
        {{1, 1}, {1, 0}, {2, 3}, {2, 2}},  // X
        {{2, 1}, {2, 0}, {1, 3}, {1, 2}},  // Y
        {{3, 0}, {3, 1}, {0, 2}, {0, 3}},  // Z
    };
    const int* e = table[static_cast<int>(control)][static_cast<int>(target)];
    return {static_cast<Pauli>(e[0]), static_cast<Pauli>(e[1])};
}

// The twirl subset commuting with RZZ(theta): {II, XX, YY, ZZ}.
inline const std::vector<Pauli>& gzz_twirl_set() {
    static const std::vector<Pauli> set{Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};
    return set;
}

// Returns `instances` circuits whose noiseless unitary equals the input's
// (up to global phase).  CNOTs are sandwiched by uniformly sampled Pauli
// pairs with the conjugated pair after the gate; RZZ gates by pairs from
// {II,XX,YY,ZZ} applied identically on both sides.  Twirl gates carry zero
// duration, so merging them into neighbouring pulses adds no circuit time.
inline std::vector<Circuit> twirl(const Circuit& c, uint64_t master_seed, int instances) {
    if (instances < 1) throw std::invalid_argument("twirl: instances must be >= 1");
    std::vector<Circuit> out;
    out.reserve(instances);
    for (int inst = 0; inst < instances; ++inst) {
        Circuit tw(c.qubit_count);
        uint64_t gate_counter = 0;
        for (const auto& moment : c.moments) {
            std::vector<Gate> pre, post;
            for (const auto& g : moment) {
                if (g.kind != GateKind::CNOT && g.kind != GateKind::RZZ) continue;
                auto rng = make_rng(master_seed, seed_stream::twirl,
                                    (static_cast<uint64_t>(inst) << 32) | gate_counter);
                ++gate_counter;
                Pauli pa, pb, qa, qb;
                if (g.kind == GateKind::CNOT) {
                    std::uniform_int_distribution<int> dist(0, 15);
                    int pair = dist(rng);
                    pa = static_cast<Pauli>(pair / 4);
                    pb = static_cast<Pauli>(pair % 4);
                    std::tie(qa, qb) = cnot_conjugate(pa, pb);
                } else {
                    std::uniform_int_distribution<int> dist(0, 3);
                    pa = pb = qa = qb = gzz_twirl_set()[dist(rng)];
                }
                if (pa != Pauli::I) pre.push_back(pauli_gate(g.qubits[0], pa));
                if (pb != Pauli::I) pre.push_back(pauli_gate(g.qubits[1], pb));
                if (qa != Pauli::I) post.push_back(pauli_gate(g.qubits[0], qa));
                if (qb != Pauli::I) post.push_back(pauli_gate(g.qubits[1], qb));
            }
            if (!pre.empty()) tw.add_moment(std::move(pre));
            tw.add_moment(moment);
            if (!post.empty()) tw.add_moment(std::move(post));
        }
        out.push_back(std::move(tw));
    }
    return out;
}

}  // namespace qemlab
