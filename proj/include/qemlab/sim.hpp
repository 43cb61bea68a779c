#pragma once

// Circuit execution under the noise model.
//
// Three tiers share one event plan derived from the schedule:
//   * evolve_exact        - noiseless statevector reference (N <= 24);
//   * evolve_density      - density-matrix evolution with channels applied
//                           as superoperators (N <= 10);
//   * evolve_trajectories - Monte-Carlo wavefunction sampling for Pauli and
//                           amplitude-damping noise, producing measurement
//                           counts through the readout confusion.
//
// State-index convention: qubit q is bit q of the basis index, and bitstrings
// print qubit 0 first.  A density matrix rho is stored flat with
// index = (row << N) | col, so ket bits live at positions N+q and bra bits at
// positions q; channels act on (ket, bra) bit pairs as small superoperators.
//
// Event plan ordering: gates run at their scheduled start times; coherent ZZ
// crosstalk accrues over every interval in which both endpoints of an edge
// are simultaneously idle (inside Delay gates or schedule gaps) and is
// inserted as an RZZ rotation at the interval start; the decoherence of an
// idle window is applied at the window's end.  Ties are broken
// idle-decoherence < crosstalk slice < gate < measure.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qemlab/circuit.hpp"
#include "qemlab/noise.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

// ---------------------------------------------------------------------------
// Bit-indexed dense kernels
// ---------------------------------------------------------------------------

namespace kernel {

// Applies the dim x dim matrix m (row-major) to the amplitudes selected by
// the bit positions bpos (bit t of the local index = global bit bpos[t]).
// Complex arithmetic is written out on raw doubles: the NaN-propagating
// __muldc3 path of std::complex multiplication costs an order of magnitude
// in this loop.  complex<double> is layout-compatible with double[2].
inline void apply_dense(std::vector<cplx>& v, const std::vector<int>& bpos,
                        const std::vector<cplx>& m) {
    const int k = static_cast<int>(bpos.size());
    const size_t dim = size_t(1) << k;
    if (dim > 16 || m.size() != dim * dim) throw std::invalid_argument("kernel: bad matrix");
    std::vector<int> sorted = bpos;
    std::sort(sorted.begin(), sorted.end());
    std::array<size_t, 16> off{};
    for (size_t r = 0; r < dim; ++r) {
        size_t o = 0;
        for (int t = 0; t < k; ++t)
            if ((r >> t) & 1) o |= size_t(1) << bpos[t];
        off[r] = o;
    }
    double mre[256], mim[256];
    for (size_t i = 0; i < dim * dim; ++i) {
        mre[i] = m[i].real();
        mim[i] = m[i].imag();
    }
    double* base_ptr = reinterpret_cast<double*>(v.data());
    const size_t groups = v.size() >> k;
    double ire[16], iim[16], ore[16], oim[16];
    for (size_t g = 0; g < groups; ++g) {
        size_t base = g;
        for (int t = 0; t < k; ++t) {
            const size_t mask = (size_t(1) << sorted[t]) - 1;
            base = ((base & ~mask) << 1) | (base & mask);
        }
        for (size_t r = 0; r < dim; ++r) {
            const size_t at = 2 * (base | off[r]);
            ire[r] = base_ptr[at];
            iim[r] = base_ptr[at + 1];
        }
        for (size_t r = 0; r < dim; ++r) {
            double are = 0, aim = 0;
            const double* rre = &mre[r * dim];
            const double* rim = &mim[r * dim];
            for (size_t cidx = 0; cidx < dim; ++cidx) {
                are += rre[cidx] * ire[cidx] - rim[cidx] * iim[cidx];
                aim += rre[cidx] * iim[cidx] + rim[cidx] * ire[cidx];
            }
            ore[r] = are;
            oim[r] = aim;
        }
        for (size_t r = 0; r < dim; ++r) {
            const size_t at = 2 * (base | off[r]);
            base_ptr[at] = ore[r];
            base_ptr[at + 1] = oim[r];
        }
    }
}

inline void apply_diag(std::vector<cplx>& v, const std::vector<int>& bpos,
                       const std::vector<cplx>& d) {
    const int k = static_cast<int>(bpos.size());
    double dre[16], dim_[16];
    const size_t dd = size_t(1) << k;
    for (size_t i = 0; i < dd; ++i) {
        dre[i] = d[i].real();
        dim_[i] = d[i].imag();
    }
    double* p = reinterpret_cast<double*>(v.data());
    const size_t n = v.size();
    for (size_t idx = 0; idx < n; ++idx) {
        size_t r = 0;
        for (int t = 0; t < k; ++t) r |= ((idx >> bpos[t]) & 1) << t;
        const double re = p[2 * idx], im = p[2 * idx + 1];
        p[2 * idx] = re * dre[r] - im * dim_[r];
        p[2 * idx + 1] = re * dim_[r] + im * dre[r];
    }
}

inline bool nearly_diagonal(const Eigen::MatrixXcd& m, double tol = 1e-15) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && std::abs(m(i, j)) > tol) return false;
    return true;
}

inline std::vector<cplx> flatten(const Eigen::MatrixXcd& m) {
    std::vector<cplx> out(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
    return out;
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

struct Statevector {
    int num_qubits = 0;
    std::vector<cplx> amps;

    static Statevector zero_state(int n) {
        Statevector s;
        s.num_qubits = n;
        s.amps.assign(size_t(1) << n, 0.0);
        s.amps[0] = 1.0;
        return s;
    }

    double norm() const {
        double t = 0;
        for (const cplx& a : amps) t += std::norm(a);
        return std::sqrt(t);
    }

    // ket-side bit positions for a gate
    std::vector<int> gate_bits(const Gate& g) const {
        if (g.arity == 1) return {g.qubits[0]};
        // local index 2*x_first + x_second: bit0 = second qubit
        return {g.qubits[1], g.qubits[0]};
    }

    void apply_unitary(const Gate& g) {
        Eigen::MatrixXcd u = gate_matrix(g);
        if (kernel::nearly_diagonal(u)) {
            std::vector<cplx> d(u.rows());
            for (Eigen::Index i = 0; i < u.rows(); ++i) d[i] = u(i, i);
            kernel::apply_diag(amps, gate_bits(g), d);
        } else {
            kernel::apply_dense(amps, gate_bits(g), kernel::flatten(u));
        }
    }

    void apply_matrix(const std::vector<int>& qubits, const Eigen::MatrixXcd& m) {
        std::vector<int> bits(qubits.rbegin(), qubits.rend());
        kernel::apply_dense(amps, bits, kernel::flatten(m));
    }
};

// <psi|P|psi> ; pauli character i acts on qubit i.
inline double expectation(const Statevector& sv, const std::string& pauli) {
    if (static_cast<int>(pauli.size()) != sv.num_qubits)
        throw std::invalid_argument("pauli length must equal qubit count");
    size_t flip = 0;
    for (int q = 0; q < sv.num_qubits; ++q) {
        char p = pauli[q];
        if (p == 'X' || p == 'Y') flip |= size_t(1) << q;
        else if (p != 'I' && p != 'Z')
            throw std::invalid_argument("bad pauli letter");
    }
    // P|i> = phase(i) |i ^ flip>   (Y|0> = i|1>, Y|1> = -i|0>)
    cplx acc = 0;
    for (size_t i = 0; i < sv.amps.size(); ++i) {
        if (sv.amps[i] == cplx(0, 0)) continue;
        cplx phase = 1.0;
        for (int q = 0; q < sv.num_qubits; ++q) {
            const bool bit = (i >> q) & 1;
            switch (pauli[q]) {
                case 'Y': phase *= bit ? cplx(0, -1) : cplx(0, 1); break;
                case 'Z': phase *= bit ? -1.0 : 1.0; break;
                default: break;
            }
        }
        acc += std::conj(sv.amps[i ^ flip]) * phase * sv.amps[i];
    }
    return acc.real();
}

// All single-qubit <Z_q> in one pass.
inline std::vector<double> all_z_expectations(const Statevector& sv) {
    std::vector<double> z(sv.num_qubits, 0.0);
    for (size_t i = 0; i < sv.amps.size(); ++i) {
        const double p = std::norm(sv.amps[i]);
        if (p == 0) continue;
        for (int q = 0; q < sv.num_qubits; ++q) z[q] += ((i >> q) & 1) ? -p : p;
    }
    return z;
}

inline double fidelity(const Statevector& a, const Statevector& b) {
    if (a.amps.size() != b.amps.size()) throw std::invalid_argument("size mismatch");
    cplx ov = 0;
    for (size_t i = 0; i < a.amps.size(); ++i) ov += std::conj(a.amps[i]) * b.amps[i];
    return std::norm(ov);
}

struct DensityMatrix {
    int num_qubits = 0;
    std::vector<cplx> a;  // index = (row << N) | col

    static DensityMatrix zero_state(int n) {
        DensityMatrix d;
        d.num_qubits = n;
        d.a.assign(size_t(1) << (2 * n), 0.0);
        d.a[0] = 1.0;
        return d;
    }

    static DensityMatrix from_statevector(const Statevector& s) {
        DensityMatrix d;
        d.num_qubits = s.num_qubits;
        const size_t dim = s.amps.size();
        d.a.resize(dim * dim);
        for (size_t i = 0; i < dim; ++i)
            for (size_t j = 0; j < dim; ++j) d.a[(i << s.num_qubits) | j] = s.amps[i] * std::conj(s.amps[j]);
        return d;
    }

    size_t dim() const { return size_t(1) << num_qubits; }

    cplx entry(size_t row, size_t col) const { return a[(row << num_qubits) | col]; }

    double trace() const {
        double t = 0;
        for (size_t i = 0; i < dim(); ++i) t += entry(i, i).real();
        return t;
    }

    // (ket bits, bra bits) of a gate, ordered to match superoperator layout:
    // local index = ket_idx * gate_dim + bra_idx.
    std::vector<int> superop_bits(const Gate& g) const {
        if (g.arity == 1) return {g.qubits[0], num_qubits + g.qubits[0]};
        return {g.qubits[1], g.qubits[0], num_qubits + g.qubits[1], num_qubits + g.qubits[0]};
    }

    void apply_superop(const Gate& g, const Eigen::MatrixXcd& s) {
        if (kernel::nearly_diagonal(s)) {
            std::vector<cplx> d(s.rows());
            for (Eigen::Index i = 0; i < s.rows(); ++i) d[i] = s(i, i);
            kernel::apply_diag(a, superop_bits(g), d);
        } else {
            kernel::apply_dense(a, superop_bits(g), kernel::flatten(s));
        }
    }

    void apply_unitary(const Gate& g) {
        Eigen::MatrixXcd u = gate_matrix(g);
        apply_superop(g, kron(u, u.conjugate()));
    }

    std::vector<double> diagonal_probs() const {
        std::vector<double> p(dim());
        for (size_t i = 0; i < dim(); ++i) p[i] = std::max(0.0, entry(i, i).real());
        return p;
    }

    Eigen::MatrixXcd dense() const {
        Eigen::MatrixXcd m(dim(), dim());
        for (size_t i = 0; i < dim(); ++i)
            for (size_t j = 0; j < dim(); ++j) m(i, j) = entry(i, j);
        return m;
    }
};

// tr(rho P) via the permutation representation of P: O(2^N).
inline double expectation(const DensityMatrix& rho, const std::string& pauli) {
    if (static_cast<int>(pauli.size()) != rho.num_qubits)
        throw std::invalid_argument("pauli length must equal qubit count");
    size_t flip = 0;
    for (int q = 0; q < rho.num_qubits; ++q)
        if (pauli[q] == 'X' || pauli[q] == 'Y') flip |= size_t(1) << q;
    cplx acc = 0;
    for (size_t i = 0; i < rho.dim(); ++i) {
        // <i| rho P |i> = phase(i) rho[i, sigma(i)] with P|i> = phase|i ^ flip>
        cplx phase = 1.0;
        for (int q = 0; q < rho.num_qubits; ++q) {
            const bool bit = (i >> q) & 1;
            switch (pauli[q]) {
                case 'Y': phase *= bit ? cplx(0, -1) : cplx(0, 1); break;
                case 'Z': phase *= bit ? -1.0 : 1.0; break;
                default: break;
            }
        }
        acc += phase * rho.entry(i, i ^ flip);
    }
    return acc.real();
}

inline double pure_fidelity(const DensityMatrix& rho, const Statevector& psi) {
    if (rho.num_qubits != psi.num_qubits) throw std::invalid_argument("size mismatch");
    cplx acc = 0;
    for (size_t i = 0; i < rho.dim(); ++i) {
        cplx row = 0;
        for (size_t j = 0; j < rho.dim(); ++j) row += rho.entry(i, j) * psi.amps[j];
        acc += std::conj(psi.amps[i]) * row;
    }
    return acc.real();
}

// ---------------------------------------------------------------------------
// Event plan
// ---------------------------------------------------------------------------

enum class EventType { gate, idle_noise, crosstalk, measure };

struct PlanEvent {
    EventType type = EventType::gate;
    Gate gate;          // gate/crosstalk: operation; idle: pseudo delay
    GateChannel noise;  // channels applied after the unitary
    double time = 0;
    int prio = 0;
    long long seq = 0;
};

struct ExecutionPlan {
    int num_qubits = 0;
    std::vector<PlanEvent> events;
    std::vector<int> measured_qubits;
    std::string basis;  // one letter per measured qubit
    double total_time = 0;
};

namespace detail {

struct Interval {
    double start, end;
};

inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (!out.empty() && iv.start <= out.back().end + 1e-15)
            out.back().end = std::max(out.back().end, iv.end);
        else
            out.push_back(iv);
    }
    return out;
}

inline std::vector<Interval> intersect_intervals(const std::vector<Interval>& a,
                                                 const std::vector<Interval>& b) {
    std::vector<Interval> out;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double lo = std::max(a[i].start, b[j].start);
        double hi = std::min(a[i].end, b[j].end);
        if (hi > lo + 1e-15) out.push_back({lo, hi});
        if (a[i].end < b[j].end)
            ++i;
        else
            ++j;
    }
    return out;
}

}  // namespace detail

inline ExecutionPlan build_plan(const Circuit& c, const NoiseModel* nm, double stretch_c,
                                const Topology* topo = nullptr) {
    c.validate();
    Schedule sched = schedule_circuit(c);
    ExecutionPlan plan;
    plan.num_qubits = c.qubit_count;
    plan.total_time = sched.total_time;
    long long seq = 0;

    std::vector<std::vector<detail::Interval>> delay_like(c.qubit_count);
    std::vector<char> measured(c.qubit_count, 0);
    std::vector<char> basis(c.qubit_count, 'Z');

    for (const auto& sg : sched.gates) {
        const Gate& g = sg.gate;
        if (g.kind == GateKind::Measure) {
            if (measured[g.qubits[0]]) throw std::invalid_argument("qubit measured twice");
            measured[g.qubits[0]] = 1;
            basis[g.qubits[0]] = g.basis;
            PlanEvent ev;
            ev.type = EventType::measure;
            ev.gate = g;
            ev.time = sg.start;
            ev.prio = 3;
            ev.seq = seq++;
            plan.events.push_back(ev);
            continue;
        }
        PlanEvent ev;
        ev.type = EventType::gate;
        ev.gate = g;
        ev.time = sg.start;
        ev.prio = 2;
        ev.seq = seq++;
        if (nm) ev.noise = channel_for_gate(*nm, g, stretch_c);
        plan.events.push_back(ev);
        if (g.kind == GateKind::Delay && g.duration > 0)
            delay_like[g.qubits[0]].push_back({sg.start, sg.end});
    }

    if (nm) {
        for (const auto& w : sched.idles) {
            if (w.length() <= 1e-15) continue;
            delay_like[w.qubit].push_back({w.start, w.end});
            // idle decoherence applied at the window end (no Delay gate-error
            // term: implicit idles are not gate instances)
            GateChannel gc;
            double gamma = nm->damping_gamma(w.qubit, stretch_c * w.length());
            if (gamma > 0) gc.factors.push_back({{w.qubit}, Channel::amplitude_damping(gamma)});
            double p = nm->dephasing_prob(w.qubit, stretch_c * w.length());
            if (p > 0) gc.factors.push_back({{w.qubit}, Channel::dephasing(p)});
            if (gc.empty()) continue;
            PlanEvent ev;
            ev.type = EventType::idle_noise;
            ev.gate = Gate::delay(w.qubit, w.length());
            ev.noise = std::move(gc);
            ev.time = w.end;
            ev.prio = 0;
            ev.seq = seq++;
            plan.events.push_back(ev);
        }
        if (nm->has_crosstalk()) {
            if (!topo) throw std::invalid_argument("crosstalk requires the topology");
            for (const auto& [edge, zeta] : nm->zz_crosstalk) {
                if (zeta == 0.0) continue;
                if (edge.second >= c.qubit_count) continue;
                auto overlaps = detail::intersect_intervals(
                    detail::merge_intervals(delay_like[edge.first]),
                    detail::merge_intervals(delay_like[edge.second]));
                for (const auto& iv : overlaps) {
                    const double angle = zeta * stretch_c * (iv.end - iv.start);
                    PlanEvent ev;
                    ev.type = EventType::crosstalk;
                    ev.gate = Gate::rzz(edge.first, edge.second, angle, 0.0);
                    ev.time = iv.start;
                    ev.prio = 1;
                    ev.seq = seq++;
                    plan.events.push_back(ev);
                }
            }
        }
    }

    std::stable_sort(plan.events.begin(), plan.events.end(),
                     [](const PlanEvent& a, const PlanEvent& b) {
                         if (a.time != b.time) return a.time < b.time;
                         if (a.prio != b.prio) return a.prio < b.prio;
                         return a.seq < b.seq;
                     });
    for (int q = 0; q < c.qubit_count; ++q)
        if (measured[q]) {
            plan.measured_qubits.push_back(q);
            plan.basis.push_back(basis[q]);
        }
    return plan;
}

// ---------------------------------------------------------------------------
// Exact statevector tier
// ---------------------------------------------------------------------------

inline Statevector evolve_exact(const Circuit& c, int max_qubits = 24) {
    if (c.qubit_count > max_qubits)
        throw std::invalid_argument("evolve_exact: qubit count exceeds limit");
    ExecutionPlan plan = build_plan(c, nullptr, 1.0);
    Statevector sv = Statevector::zero_state(c.qubit_count);
    for (const auto& ev : plan.events)
        if (ev.type == EventType::gate && ev.gate.is_unitary_gate()) sv.apply_unitary(ev.gate);
    return sv;
}

// ---------------------------------------------------------------------------
// Density-matrix tier
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXcd channel_superop(const Channel& ch) {
    const int d = ch.dim();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d * d, d * d);
    for (const auto& k : ch.kraus) s += kron(k, k.conjugate());
    return s;
}

// total error probability p when the channel is 2-qubit depolarizing
// (all 15 non-identity probabilities equal); -1 otherwise
inline double uniform_depolarizing_prob(const Channel& ch) {
    if (!ch.is_pauli || ch.num_qubits != 2) return -1;
    double p = ch.pauli_probs[1];
    for (size_t a = 2; a < 16; ++a)
        if (std::abs(ch.pauli_probs[a] - p) > 1e-15) return -1;
    return 15.0 * p;
}

// rho -> (1-lam) rho + lam (I/4 x tr_ab rho) locally on the (a, b) pair
inline void depolarize_pair(DensityMatrix& rho, int a, int b, double lam) {
    std::vector<int> bits = rho.superop_bits(Gate::rzz(a, b, 0, 0));
    std::vector<int> sorted = bits;
    std::sort(sorted.begin(), sorted.end());
    std::array<size_t, 16> off{};
    for (size_t r = 0; r < 16; ++r) {
        size_t o = 0;
        for (int t = 0; t < 4; ++t)
            if ((r >> t) & 1) o |= size_t(1) << bits[t];
        off[r] = o;
    }
    const size_t groups = rho.a.size() >> 4;
    for (size_t g = 0; g < groups; ++g) {
        size_t base = g;
        for (int t = 0; t < 4; ++t) {
            const size_t mask = (size_t(1) << sorted[t]) - 1;
            base = ((base & ~mask) << 1) | (base & mask);
        }
        cplx tr = 0;
        for (size_t j = 0; j < 4; ++j) tr += rho.a[base | off[j * 4 + j]];
        tr *= 0.25 * lam;
        for (size_t r = 0; r < 16; ++r) {
            cplx& x = rho.a[base | off[r]];
            x *= (1.0 - lam);
            if ((r >> 2) == (r & 3)) x += tr;
        }
    }
}

}  // namespace detail

inline DensityMatrix evolve_density(const Circuit& c, const NoiseModel& nm, double stretch_c,
                                    const Topology* topo = nullptr, int max_qubits = 10) {
    if (c.qubit_count > max_qubits)
        throw std::invalid_argument("evolve_density: qubit count exceeds limit");
    nm.validate();
    ExecutionPlan plan = build_plan(c, &nm, stretch_c, topo);
    DensityMatrix rho = DensityMatrix::zero_state(c.qubit_count);

    // Consecutive single-qubit superoperators compose into one 4x4 per qubit
    // and hit the state in a single pass when flushed.
    std::vector<Eigen::Matrix4cd> pending(c.qubit_count);
    std::vector<char> has_pending(c.qubit_count, 0);
    auto push_1q = [&](int q, const Eigen::Matrix4cd& s) {
        pending[q] = has_pending[q] ? Eigen::Matrix4cd(s * pending[q]) : s;
        has_pending[q] = 1;
    };
    auto flush = [&](int q) {
        if (!has_pending[q]) return;
        rho.apply_superop(Gate::rz(q, 0), pending[q]);
        has_pending[q] = 0;
    };

    for (const auto& ev : plan.events) {
        if (ev.type == EventType::measure) continue;
        if (ev.type == EventType::crosstalk) {
            flush(ev.gate.qubits[0]);
            flush(ev.gate.qubits[1]);
            rho.apply_unitary(ev.gate);  // diagonal fast path
            continue;
        }
        const int arity = ev.gate.arity;
        if (arity == 1) {
            const int q = ev.gate.qubits[0];
            Eigen::Matrix4cd s;
            if (ev.gate.is_unitary_gate()) {
                Eigen::Matrix2cd u = gate_matrix(ev.gate);
                s = kron(u, u.conjugate());
            } else {
                s = Eigen::Matrix4cd::Identity();
            }
            for (const auto& f : ev.noise.factors)
                s = Eigen::Matrix4cd(detail::channel_superop(f.channel) * s);
            push_1q(q, s);
            continue;
        }
        const int qa = ev.gate.qubits[0], qb = ev.gate.qubits[1];
        flush(qa);
        flush(qb);
        if (ev.gate.is_unitary_gate()) {
            Eigen::MatrixXcd u = gate_matrix(ev.gate);
            rho.apply_superop(ev.gate, kron(u, u.conjugate()));
        }
        std::vector<int> gq{qa, qb};
        for (const auto& f : ev.noise.factors) {
            if (f.qubits.size() == 1) {
                push_1q(f.qubits[0], detail::channel_superop(f.channel));
                continue;
            }
            flush(qa);
            flush(qb);
            double p = detail::uniform_depolarizing_prob(f.channel);
            if (p >= 0) {
                detail::depolarize_pair(rho, qa, qb, 16.0 * p / 15.0);
            } else {
                rho.apply_superop(ev.gate, detail::channel_superop(GateChannel::lift(f, gq)));
            }
        }
    }
    for (int q = 0; q < c.qubit_count; ++q) flush(q);
    return rho;
}

// ---------------------------------------------------------------------------
// Trajectory tier
// ---------------------------------------------------------------------------

struct Counts {
    std::map<std::string, long long> shots;  // bitstring (qubit 0 first) -> count
    long long total = 0;
    uint64_t seed = 0;
    std::string basis;  // one letter per qubit

    void add(const std::string& bits) {
        ++shots[bits];
        ++total;
    }
};

struct TrajectoryResult {
    Counts counts;
    std::vector<double> mean_z;  // per-qubit <Z> averaged over trajectories
};

namespace detail {

inline void sample_factor(Statevector& sv, const NoiseFactor& f, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Channel& ch = f.channel;
    if (ch.is_pauli) {
        double u = unif(rng);
        double acc = 0;
        size_t pick = 0;
        for (size_t a = 0; a < ch.pauli_probs.size(); ++a) {
            acc += ch.pauli_probs[a];
            if (u < acc) {
                pick = a;
                break;
            }
        }
        if (pick == 0) return;
        std::string s = pauli_string_from_index(pick, ch.num_qubits);
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == 'I') continue;
            Eigen::MatrixXcd p = pauli_matrix(pauli_from_char(s[i]));
            sv.apply_matrix({f.qubits[i]}, p);
        }
        return;
    }
    // amplitude damping: jump / no-jump unravelling
    if (ch.is_damping) {
        const double gamma = std::norm(ch.kraus[1](0, 1));
        const int q = f.qubits[0];
        const size_t bit = size_t(1) << q;
        double p1 = 0;
        for (size_t i = 0; i < sv.amps.size(); ++i)
            if (i & bit) p1 += std::norm(sv.amps[i]);
        const double pjump = gamma * p1;
        if (unif(rng) < pjump) {
            const double inv = 1.0 / std::sqrt(p1);
            for (size_t i = 0; i < sv.amps.size(); ++i) {
                if (i & bit) {
                    sv.amps[i ^ bit] = sv.amps[i] * inv;
                    sv.amps[i] = 0.0;
                }
            }
        } else {
            const double keep = std::sqrt(1.0 - gamma);
            const double inv = 1.0 / std::sqrt(1.0 - pjump);
            for (size_t i = 0; i < sv.amps.size(); ++i)
                sv.amps[i] *= (i & bit) ? keep * inv : inv;
        }
        return;
    }
    throw std::invalid_argument("channel not unravelable by trajectories");
}

inline size_t sample_index(const Statevector& sv, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    double acc = 0;
    for (size_t i = 0; i < sv.amps.size(); ++i) {
        acc += std::norm(sv.amps[i]);
        if (u < acc) return i;
    }
    return sv.amps.size() - 1;
}

}  // namespace detail

inline TrajectoryResult evolve_trajectories(const Circuit& c, const NoiseModel& nm,
                                            double stretch_c, long long shots, uint64_t seed,
                                            const Topology* topo = nullptr, int workers = 1,
                                            int max_qubits = 20) {
    if (c.qubit_count > max_qubits)
        throw std::invalid_argument("evolve_trajectories: qubit count exceeds limit");
    if (shots < 1) throw std::invalid_argument("shots must be positive");
    nm.validate();
    ExecutionPlan plan = build_plan(c, &nm, stretch_c, topo);
    if (plan.measured_qubits.empty())
        throw std::invalid_argument("trajectories need measurements");
    // All qubits must be read out so counts describe full bitstrings.
    if (static_cast<int>(plan.measured_qubits.size()) != c.qubit_count)
        throw std::invalid_argument("trajectories require all qubits measured");

    auto run_range = [&](long long lo, long long hi, Counts& counts,
                         std::vector<double>& zsum) {
        for (long long t = lo; t < hi; ++t) {
            auto rng = make_rng(seed, seed_stream::trajectory, static_cast<uint64_t>(t));
            Statevector sv = Statevector::zero_state(c.qubit_count);
            for (const auto& ev : plan.events) {
                if (ev.type == EventType::measure) continue;
                if (ev.gate.is_unitary_gate()) sv.apply_unitary(ev.gate);
                for (const auto& f : ev.noise.factors) detail::sample_factor(sv, f, rng);
            }
            std::vector<double> z = all_z_expectations(sv);
            for (int q = 0; q < c.qubit_count; ++q) zsum[q] += z[q];
            size_t idx = detail::sample_index(sv, rng);
            std::string bits(c.qubit_count, '0');
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (int q = 0; q < c.qubit_count; ++q) {
                int truth = (idx >> q) & 1;
                double p_report1 = nm.readout[q](1, truth);
                bits[q] = (unif(rng) < p_report1) ? '1' : '0';
            }
            counts.add(bits);
        }
    };

    TrajectoryResult res;
    res.counts.seed = seed;
    res.counts.basis = plan.basis;
    res.mean_z.assign(c.qubit_count, 0.0);
    workers = std::max(1, workers);
    if (workers == 1) {
        run_range(0, shots, res.counts, res.mean_z);
    } else {
        std::vector<Counts> counts(workers);
        std::vector<std::vector<double>> zsums(workers, std::vector<double>(c.qubit_count, 0.0));
        std::vector<std::thread> threads;
        const long long chunk = (shots + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            long long lo = w * chunk, hi = std::min<long long>(shots, lo + chunk);
            if (lo >= hi) break;
            threads.emplace_back([&, w, lo, hi] { run_range(lo, hi, counts[w], zsums[w]); });
        }
        for (auto& th : threads) th.join();
        for (int w = 0; w < workers; ++w) {
            for (const auto& [k, v] : counts[w].shots) res.counts.shots[k] += v;
            res.counts.total += counts[w].total;
            for (int q = 0; q < c.qubit_count; ++q) res.mean_z[q] += zsums[w][q];
        }
    }
    for (double& z : res.mean_z) z /= double(shots);
    return res;
}

// ---------------------------------------------------------------------------
// Expectations from counts and probability vectors
// ---------------------------------------------------------------------------

struct EstimatedValue {
    double value = 0;
    double stderr_ = 0;
    long long shots = 0;
};

// Checks the Pauli is diagonal in the measured basis (non-identity letters
// must match the per-qubit measurement axes).
inline void check_basis(const std::string& pauli, const std::string& basis) {
    if (pauli.size() != basis.size())
        throw std::invalid_argument("pauli/basis length mismatch");
    for (size_t q = 0; q < pauli.size(); ++q)
        if (pauli[q] != 'I' && pauli[q] != basis[q])
            throw std::invalid_argument("observable " + pauli +
                                        " not measurable in basis " + basis);
}

inline EstimatedValue expectation(const Counts& counts, const std::string& pauli) {
    check_basis(pauli, counts.basis);
    if (counts.total <= 0) throw std::invalid_argument("empty counts");
    long long signed_sum = 0;
    for (const auto& [bits, n] : counts.shots) {
        int parity = 0;
        for (size_t q = 0; q < pauli.size(); ++q)
            if (pauli[q] != 'I' && bits[q] == '1') parity ^= 1;
        signed_sum += parity ? -n : n;
    }
    EstimatedValue ev;
    ev.shots = counts.total;
    ev.value = double(signed_sum) / double(counts.total);
    ev.stderr_ = std::sqrt(std::max(0.0, 1.0 - ev.value * ev.value) / double(counts.total));
    return ev;
}

// Expectation of a Z-type product on a (quasi-)probability vector over
// bitstrings, e.g. after readout correction.
inline double probs_expectation(const std::vector<double>& probs, const std::string& pauli,
                                const std::string& basis) {
    check_basis(pauli, basis);
    size_t mask = 0;
    for (size_t q = 0; q < pauli.size(); ++q)
        if (pauli[q] != 'I') mask |= size_t(1) << q;
    double acc = 0;
    for (size_t i = 0; i < probs.size(); ++i)
        acc += (std::popcount(i & mask) % 2) ? -probs[i] : probs[i];
    return acc;
}

// Multinomial sample of a probability vector into Counts (used by the
// density tier when finite shots are requested).
inline Counts sample_counts(const std::vector<double>& probs, const std::string& basis,
                            long long shots, uint64_t seed) {
    Counts counts;
    counts.seed = seed;
    counts.basis = basis;
    auto rng = make_rng(seed, seed_stream::readout, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    size_t n = 0;
    while ((size_t(1) << n) < probs.size()) ++n;
    std::vector<double> cum(probs.size());
    double acc = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += std::max(0.0, probs[i]);
        cum[i] = acc;
    }
    for (long long s = 0; s < shots; ++s) {
        double u = unif(rng) * acc;
        size_t pick = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
        if (pick >= probs.size()) pick = probs.size() - 1;
        std::string bits(n, '0');
        for (size_t q = 0; q < n; ++q)
            if ((pick >> q) & 1) bits[q] = '1';
        counts.add(bits);
    }
    return counts;
}

// Density-path helper: basis-rotated copy (X: RY(-pi/2), Y: RX(pi/2)).
inline DensityMatrix rotate_to_basis(const DensityMatrix& rho, const std::string& basis) {
    if (static_cast<int>(basis.size()) != rho.num_qubits)
        throw std::invalid_argument("basis length mismatch");
    DensityMatrix out = rho;
    for (int q = 0; q < rho.num_qubits; ++q) {
        if (basis[q] == 'Z') continue;
        if (basis[q] == 'X')
            out.apply_unitary(Gate::u3(q, -kPi / 2, 0.0, 0.0, 0.0));
        else if (basis[q] == 'Y')
            out.apply_unitary(Gate::rx(q, kPi / 2, 0.0));
        else
            throw std::invalid_argument("bad basis letter");
    }
    return out;
}

inline nlohmann::json counts_to_json(const Counts& c) {
    nlohmann::json j;
    j["total"] = c.total;
    j["seed"] = c.seed;
    j["basis"] = c.basis;
    auto& js = j["shots"] = nlohmann::json::object();
    for (const auto& [bits, n] : c.shots) js[bits] = n;
    return j;
}

}  // namespace qemlab
