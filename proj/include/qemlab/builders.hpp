#pragma once

// Builders for the three circuit families: simultaneous T1 decay, GHZ chain
// preparation, and first-order Trotter steps of the transverse-field Ising
// evolution on a coloured topology.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qemlab/circuit.hpp"
#include "qemlab/topology.hpp"

namespace qemlab {

enum class DecompositionMode { cnot_pair, native_rzz };

inline const char* decomposition_name(DecompositionMode m) {
    return m == DecompositionMode::cnot_pair ? "cnot_pair" : "native_rzz";
}

// X(pi) preparation, a stretchable delay, then Z readout on every qubit.
inline Circuit build_t1(const std::vector<int>& qubits, double delay, double stretch,
                        int qubit_count, const GateDurations& dur = {}) {
    if (delay < 0) throw std::invalid_argument("build_t1: negative delay");
    if (stretch < 1) throw std::invalid_argument("build_t1: stretch < 1");
    Circuit c(qubit_count);
    std::vector<Gate> prep, idle, meas;
    for (int q : qubits) {
        prep.push_back(Gate::rx(q, kPi, dur.single_qubit));
        idle.push_back(Gate::delay(q, stretch * delay));
        meas.push_back(Gate::measure(q, 'Z', dur.measure));
    }
    c.add_moment(std::move(prep));
    if (delay > 0) c.add_moment(std::move(idle));
    c.add_moment(std::move(meas));
    return c;
}

// Superposition on the chain head, then a CNOT cascade along the chain.
// Controls sit at the lower chain position.  No measurement appended.
inline Circuit build_ghz(const Topology& t, const std::vector<int>& chain,
                         const GateDurations& dur = {}) {
    if (chain.empty()) throw std::invalid_argument("build_ghz: empty chain");
    std::vector<char> seen(t.node_count, 0);
    for (size_t i = 0; i < chain.size(); ++i) {
        int n = chain[i];
        if (n < 0 || n >= t.node_count || !t.active[n] || seen[n])
            throw std::invalid_argument("build_ghz: chain is not a simple path");
        seen[n] = 1;
        if (i > 0 && !t.has_edge(chain[i - 1], chain[i]))
            throw std::invalid_argument("build_ghz: chain is not a path in the topology");
    }
    Circuit c(t.node_count);
    // Hadamard up to global phase.
    c.append(Gate::u3(chain[0], kPi / 2, 0.0, kPi, dur.single_qubit));
    for (size_t i = 0; i + 1 < chain.size(); ++i)
        c.append(Gate::cnot(chain[i], chain[i + 1], dur.cnot));
    return c;
}

// One Trotter step: RX(2 h dt) on every active qubit, then RZZ(-2 J dt) on
// each colour class in turn.  cnot_pair mode expands each RZZ(theta) into
// CNOT . RZ(theta) . CNOT on the target.
inline Circuit build_trotter(const Topology& t, const EdgeColoring& coloring, double j_coupling,
                             double h_field, double dt, int steps, DecompositionMode mode,
                             const GateDurations& dur = {}) {
    if (steps < 0) throw std::invalid_argument("build_trotter: negative steps");
    validate_coloring(t, coloring);
    Circuit c(t.node_count);
    const double theta_x = 2.0 * h_field * dt;
    const double theta_zz = -2.0 * j_coupling * dt;
    for (int s = 0; s < steps; ++s) {
        std::vector<Gate> xs;
        for (int q : t.active_nodes()) xs.push_back(Gate::rx(q, theta_x, dur.single_qubit));
        c.add_moment(std::move(xs));
        for (const auto& cls : coloring.classes) {
            if (cls.empty()) continue;
            if (mode == DecompositionMode::native_rzz) {
                std::vector<Gate> layer;
                for (const auto& e : cls)
                    layer.push_back(Gate::rzz(e.first, e.second, theta_zz, dur.rzz_native));
                c.add_moment(std::move(layer));
            } else {
                std::vector<Gate> first, mid, second;
                for (const auto& e : cls) {
                    first.push_back(Gate::cnot(e.first, e.second, dur.cnot));
                    mid.push_back(Gate::rz(e.second, theta_zz));
                    second.push_back(Gate::cnot(e.first, e.second, dur.cnot));
                }
                c.add_moment(std::move(first));
                c.add_moment(std::move(mid));
                c.add_moment(std::move(second));
            }
        }
    }
    return c;
}

// Z-basis readout on the given qubits, optionally preceded by the basis
// change that maps the requested axis onto Z.
inline void append_measurement(Circuit& c, const std::vector<int>& qubits, char basis,
                               const GateDurations& dur = {}) {
    if (basis != 'X' && basis != 'Y' && basis != 'Z')
        throw std::invalid_argument("measurement basis must be X, Y or Z");
    if (basis == 'X') {
        std::vector<Gate> rot;
        for (int q : qubits) rot.push_back(Gate::u3(q, -kPi / 2, 0.0, 0.0, dur.single_qubit));
        c.add_moment(std::move(rot));  // RY(-pi/2): X -> Z
    } else if (basis == 'Y') {
        std::vector<Gate> rot;
        for (int q : qubits) rot.push_back(Gate::rx(q, kPi / 2, dur.single_qubit));
        c.add_moment(std::move(rot));  // RX(pi/2): Y -> Z
    }
    std::vector<Gate> meas;
    for (int q : qubits) meas.push_back(Gate::measure(q, basis, dur.measure));
    c.add_moment(std::move(meas));
}

}  // namespace qemlab
