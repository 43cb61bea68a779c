#pragma once

// Gate set and matrix conventions.
//
//   RX(t)      = exp(-i t X / 2)
//   RZ(t)      = exp(-i t Z / 2)            (virtual, zero duration)
//   U(t,p,l)   = RZ(p) RX(-pi/2) RZ(t) RX(pi/2) RZ(l) = RZ(p) RY(t) RZ(l)
//   CNOT       = control on the first listed qubit
//   RZZ(t)     = exp(-i t Z@Z / 2)
//   Delay(d)   = identity occupying d time units
//   Measure    = terminal computational-basis readout (basis label is
//                bookkeeping; X/Y readout is realised by an explicit
//                rotation appended before the measure)
//
// For a two-qubit gate on qubits [a, b] the 4x4 matrix is indexed by
// 2*x_a + x_b (first listed qubit = high bit of the local index).

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "qemlab/pauli.hpp"

namespace qemlab {

constexpr double kPi = 3.14159265358979323846;

enum class GateKind { RX, RZ, U3, CNOT, RZZ, Delay, Measure };

inline const char* gate_kind_name(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RZ: return "RZ";
        case GateKind::U3: return "U";
        case GateKind::CNOT: return "CNOT";
        case GateKind::RZZ: return "RZZ";
        case GateKind::Delay: return "Delay";
        case GateKind::Measure: return "Measure";
    }
    return "?";
}

inline GateKind gate_kind_from_name(const std::string& s) {
    if (s == "RX") return GateKind::RX;
    if (s == "RZ") return GateKind::RZ;
    if (s == "U") return GateKind::U3;
    if (s == "CNOT") return GateKind::CNOT;
    if (s == "RZZ") return GateKind::RZZ;
    if (s == "Delay") return GateKind::Delay;
    if (s == "Measure") return GateKind::Measure;
    throw std::invalid_argument("unknown gate kind: " + s);
}

// Default pulse lengths in microseconds; configurable per experiment.
struct GateDurations {
    double single_qubit = 0.035;
    double cnot = 0.45;
    double rzz_native = 0.12;
    double measure = 0.7;
};

struct Gate {
    GateKind kind = GateKind::Delay;
    std::array<int, 2> qubits{-1, -1};
    int arity = 1;
    std::array<double, 3> params{0, 0, 0};  // angles; unused slots zero
    double duration = 0;
    bool stretchable = true;
    char basis = 'Z';  // Measure only

    static Gate rx(int q, double theta, double dur) {
        Gate g;
        g.kind = GateKind::RX;
        g.qubits = {q, -1};
        g.params = {theta, 0, 0};
        g.duration = dur;
        return g;
    }
    static Gate rz(int q, double theta) {
        Gate g;
        g.kind = GateKind::RZ;
        g.qubits = {q, -1};
        g.params = {theta, 0, 0};
        g.duration = 0;
        return g;
    }
    static Gate u3(int q, double theta, double phi, double lambda, double dur) {
        Gate g;
        g.kind = GateKind::U3;
        g.qubits = {q, -1};
        g.params = {theta, phi, lambda};
        g.duration = dur;
        return g;
    }
    static Gate cnot(int control, int target, double dur) {
        Gate g;
        g.kind = GateKind::CNOT;
        g.qubits = {control, target};
        g.arity = 2;
        g.duration = dur;
        return g;
    }
    static Gate rzz(int a, int b, double theta, double dur) {
        Gate g;
        g.kind = GateKind::RZZ;
        g.qubits = {a, b};
        g.arity = 2;
        g.params = {theta, 0, 0};
        g.duration = dur;
        return g;
    }
    static Gate delay(int q, double time) {
        if (time < 0) throw std::invalid_argument("negative delay");
        Gate g;
        g.kind = GateKind::Delay;
        g.qubits = {q, -1};
        g.duration = time;
        return g;
    }
    static Gate measure(int q, char basis, double dur) {
        Gate g;
        g.kind = GateKind::Measure;
        g.qubits = {q, -1};
        g.duration = dur;
        g.stretchable = false;
        g.basis = basis;
        return g;
    }

    bool is_unitary_gate() const {
        return kind != GateKind::Delay && kind != GateKind::Measure;
    }
    bool is_two_qubit() const { return arity == 2; }

    void validate() const {
        if (arity != 1 && arity != 2) throw std::invalid_argument("gate arity");
        if ((kind == GateKind::CNOT || kind == GateKind::RZZ) != (arity == 2))
            throw std::invalid_argument("gate arity does not match kind");
        if (arity == 2 && qubits[0] == qubits[1]) throw std::invalid_argument("duplicate qubit");
        for (int i = 0; i < arity; ++i)
            if (qubits[i] < 0) throw std::invalid_argument("bad qubit index");
        for (double p : params)
            if (!std::isfinite(p)) throw std::invalid_argument("non-finite angle");
        if (duration < 0 || !std::isfinite(duration)) throw std::invalid_argument("bad duration");
    }
};

inline Eigen::Matrix2cd rx_matrix(double t) {
    const cplx i(0, 1);
    Eigen::Matrix2cd m;
    m << std::cos(t / 2), -i * std::sin(t / 2), -i * std::sin(t / 2), std::cos(t / 2);
    return m;
}

inline Eigen::Matrix2cd ry_matrix(double t) {
    Eigen::Matrix2cd m;
    m << std::cos(t / 2), -std::sin(t / 2), std::sin(t / 2), std::cos(t / 2);
    return m;
}

inline Eigen::Matrix2cd rz_matrix(double t) {
    Eigen::Matrix2cd m;
    m << std::exp(cplx(0, -t / 2)), 0, 0, std::exp(cplx(0, t / 2));
    return m;
}

inline Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda) {
    return rz_matrix(phi) * ry_matrix(theta) * rz_matrix(lambda);
}

inline Eigen::Matrix4cd cnot_matrix() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
    return m;
}

inline Eigen::Matrix4cd rzz_matrix(double t) {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    const cplx minus = std::exp(cplx(0, -t / 2)), plus = std::exp(cplx(0, t / 2));
    m(0, 0) = minus;
    m(1, 1) = plus;
    m(2, 2) = plus;
    m(3, 3) = minus;
    return m;
}

// Dense matrix of a unitary gate (1q -> 2x2, 2q -> 4x4).
inline Eigen::MatrixXcd gate_matrix(const Gate& g) {
    switch (g.kind) {
        case GateKind::RX: return rx_matrix(g.params[0]);
        case GateKind::RZ: return rz_matrix(g.params[0]);
        case GateKind::U3: return u3_matrix(g.params[0], g.params[1], g.params[2]);
        case GateKind::CNOT: return cnot_matrix();
        case GateKind::RZZ: return rzz_matrix(g.params[0]);
        case GateKind::Delay: return Eigen::Matrix2cd::Identity();
        case GateKind::Measure: break;
    }
    throw std::invalid_argument("gate has no unitary matrix");
}

// ZYZ Euler angles (theta, phi, lambda) with U(theta,phi,lambda) equal to the
// input up to a global phase.
inline std::array<double, 3> u3_params_from_matrix(const Eigen::Matrix2cd& v) {
    cplx det = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
    cplx scale = std::sqrt(det);
    if (std::abs(scale) < 1e-300) throw std::invalid_argument("singular matrix");
    Eigen::Matrix2cd w = v / scale;  // SU(2) up to sign
    double theta = 2.0 * std::atan2(std::abs(w(1, 0)), std::abs(w(0, 0)));
    double phi = 0, lambda = 0;
    const double eps = 1e-14;
    if (std::abs(w(0, 0)) > eps && std::abs(w(1, 0)) > eps) {
        double sum = -2.0 * std::arg(w(0, 0));
        double diff = 2.0 * std::arg(w(1, 0));
        phi = (sum + diff) / 2;
        lambda = (sum - diff) / 2;
    } else if (std::abs(w(0, 0)) > eps) {
        phi = -2.0 * std::arg(w(0, 0));  // theta ~ 0: only phi+lambda fixed
    } else {
        phi = 2.0 * std::arg(w(1, 0));  // theta ~ pi: only phi-lambda fixed
    }
    return {theta, phi, lambda};
}

// Pauli gates used by twirling, realised inside the declared gate set.
// All are zero duration: they merge into neighbouring pulses.
inline Gate pauli_gate(int q, Pauli p) {
    switch (p) {
        case Pauli::I: throw std::invalid_argument("identity has no gate");
        case Pauli::X: return Gate::rx(q, kPi, 0.0);
        case Pauli::Y: return Gate::u3(q, kPi, 0.0, 0.0, 0.0);
        case Pauli::Z: return Gate::rz(q, kPi);
    }
    throw std::logic_error("unreachable");
}

}  // namespace qemlab
