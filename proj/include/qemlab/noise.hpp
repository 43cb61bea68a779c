#pragma once

// Noise channel algebra.
//
// A Channel is a CPTP map on one or two qubits, stored either as an explicit
// Kraus list or as a Pauli probability map (probabilities indexed like the
// PTM basis, lexicographic I<X<Y<Z per qubit).  A NoiseModel holds the
// per-qubit decoherence times, per-gate-kind Pauli error rates, per-edge
// coherent ZZ crosstalk rates and per-qubit readout confusion matrices, and
// produces the composite channel attached after each gate's ideal unitary.
//
// Conventions fixed here and relied on elsewhere:
//   * channels are applied after the gate's unitary;
//   * confusion matrices are column-stochastic with columns indexed by the
//     true state and rows by the reported state;
//   * the stretch factor c multiplies gate durations inside the
//     duration-derived rates (1 - exp(-c d / T)) and scales explicit Pauli
//     rates linearly (c * lambda_scale * p), erroring out if a probability
//     leaves [0, 1].

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qemlab/gates.hpp"
#include "qemlab/linalg.hpp"
#include "qemlab/pauli.hpp"
#include "qemlab/topology.hpp"

namespace qemlab {

struct Channel {
    int num_qubits = 1;
    bool is_pauli = false;
    bool is_damping = false;
    std::vector<Eigen::MatrixXcd> kraus;  // Kraus form (always populated)
    std::vector<double> pauli_probs;      // 4^n entries when is_pauli

    int dim() const { return 1 << num_qubits; }

    // sum K^dag K = I to 1e-12
    void check_complete(double tol = 1e-12) const {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(dim(), dim());
        for (const auto& k : kraus) s += k.adjoint() * k;
        if ((s - Eigen::MatrixXcd::Identity(dim(), dim())).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("Kraus operators not trace preserving");
    }

    static Channel identity(int nq) {
        Channel ch;
        ch.num_qubits = nq;
        ch.is_pauli = true;
        ch.kraus = {Eigen::MatrixXcd::Identity(1 << nq, 1 << nq)};
        ch.pauli_probs.assign(size_t(1) << (2 * nq), 0.0);
        ch.pauli_probs[0] = 1.0;
        return ch;
    }

    static Channel from_kraus(std::vector<Eigen::MatrixXcd> ops) {
        if (ops.empty()) throw std::invalid_argument("empty Kraus list");
        Channel ch;
        ch.num_qubits = ops[0].rows() == 2 ? 1 : 2;
        if (ops[0].rows() != (1 << ch.num_qubits))
            throw std::invalid_argument("Kraus dimension must be 2 or 4");
        ch.kraus = std::move(ops);
        ch.check_complete();
        return ch;
    }

    // probs indexed by Pauli string index; missing tail treated as zero.
    static Channel from_pauli_probs(int nq, std::vector<double> probs) {
        const size_t count = size_t(1) << (2 * nq);
        probs.resize(count, 0.0);
        double sum = 0;
        for (double p : probs) {
            if (p < -1e-12 || p > 1 + 1e-12)
                throw std::invalid_argument("Pauli probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("Pauli probabilities must sum to 1");
        Channel ch;
        ch.num_qubits = nq;
        ch.is_pauli = true;
        ch.pauli_probs = std::move(probs);
        for (size_t a = 0; a < count; ++a) {
            if (ch.pauli_probs[a] <= 0) continue;
            std::string s = pauli_string_from_index(a, nq);
            // qubit 0 of the channel = first string character = local bit 0;
            // pauli_string_matrix puts character i on bit i, matching the
            // 2*x_first + x_second gate-matrix convention only after reversal.
            Eigen::MatrixXcd m = std::sqrt(ch.pauli_probs[a]) *
                                 detail_channel_string_matrix(s);
            ch.kraus.push_back(m);
        }
        ch.check_complete(1e-9);
        return ch;
    }

    // Pauli string matrix in the channel's local index convention: the first
    // character acts on the high bit, matching two-qubit gate matrices.
    static Eigen::MatrixXcd detail_channel_string_matrix(const std::string& s) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
        for (char c : s) m = kron(m, pauli_matrix(pauli_from_char(c)));
        return m;
    }

    static Channel amplitude_damping(double gamma) {
        if (gamma < 0 || gamma > 1) throw std::invalid_argument("damping gamma outside [0,1]");
        Eigen::MatrixXcd k0 = Eigen::MatrixXcd::Zero(2, 2), k1 = Eigen::MatrixXcd::Zero(2, 2);
        k0(0, 0) = 1;
        k0(1, 1) = std::sqrt(1 - gamma);
        k1(0, 1) = std::sqrt(gamma);
        Channel ch;
        ch.num_qubits = 1;
        ch.is_damping = true;
        ch.kraus = {k0, k1};
        return ch;
    }

    static Channel dephasing(double p) {
        return from_pauli_probs(1, {1 - p, 0, 0, p});
    }

    static Channel depolarizing(int nq, double p) {
        const size_t count = size_t(1) << (2 * nq);
        std::vector<double> probs(count, p / double(count - 1));
        probs[0] = 1 - p;
        return from_pauli_probs(nq, probs);
    }

    // Composition other-after-this: rho -> other(this(rho)).
    Channel then(const Channel& other) const {
        if (num_qubits != other.num_qubits) throw std::invalid_argument("channel arity mismatch");
        Channel out;
        out.num_qubits = num_qubits;
        for (const auto& b : other.kraus)
            for (const auto& a : kraus) out.kraus.push_back(b * a);
        out.check_complete(1e-9);
        if (is_pauli && other.is_pauli) {
            // compose distributions through Pauli multiplication
            const size_t count = pauli_probs.size();
            out.is_pauli = true;
            out.pauli_probs.assign(count, 0.0);
            for (size_t a = 0; a < count; ++a) {
                if (pauli_probs[a] == 0) continue;
                for (size_t b = 0; b < count; ++b) {
                    if (other.pauli_probs[b] == 0) continue;
                    std::string sa = pauli_string_from_index(a, num_qubits);
                    std::string sb = pauli_string_from_index(b, num_qubits);
                    std::string sc(sa.size(), 'I');
                    for (size_t i = 0; i < sa.size(); ++i)
                        sc[i] = pauli_char(
                            pauli_mul(pauli_from_char(sb[i]), pauli_from_char(sa[i])).result);
                    out.pauli_probs[pauli_index(sc)] += pauli_probs[a] * other.pauli_probs[b];
                }
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Pauli transfer matrices
// ---------------------------------------------------------------------------

struct PTM {
    int num_qubits = 1;
    Eigen::MatrixXd matrix;  // 4^n x 4^n, R[a,b] = tr(P_a L(P_b)) / 2^n
};

inline PTM to_ptm(const Channel& ch) {
    if (ch.num_qubits > 2) throw std::invalid_argument("dense PTM limited to 2 qubits");
    const int n = ch.num_qubits;
    const size_t count = size_t(1) << (2 * n);
    PTM r;
    r.num_qubits = n;
    r.matrix.resize(count, count);
    std::vector<Eigen::MatrixXcd> paulis(count);
    for (size_t a = 0; a < count; ++a)
        paulis[a] = Channel::detail_channel_string_matrix(pauli_string_from_index(a, n));
    const double norm = 1.0 / double(1 << n);
    for (size_t b = 0; b < count; ++b) {
        Eigen::MatrixXcd image = Eigen::MatrixXcd::Zero(ch.dim(), ch.dim());
        for (const auto& k : ch.kraus) image += k * paulis[b] * k.adjoint();
        for (size_t a = 0; a < count; ++a)
            r.matrix(a, b) = ((paulis[a] * image).trace() * norm).real();
    }
    return r;
}

// Diagonal Pauli-channel eigenvalues from probabilities:
//   mu_a = sum_b q_b * (-1)^{<a,b anticommute>}
inline std::vector<double> pauli_eigenvalues(const Channel& ch) {
    if (!ch.is_pauli) throw std::invalid_argument("not a Pauli channel");
    const size_t count = ch.pauli_probs.size();
    const int n = ch.num_qubits;
    std::vector<double> mu(count, 0.0);
    for (size_t a = 0; a < count; ++a) {
        std::string sa = pauli_string_from_index(a, n);
        for (size_t b = 0; b < count; ++b) {
            if (ch.pauli_probs[b] == 0) continue;
            std::string sb = pauli_string_from_index(b, n);
            mu[a] += commutes(sa, sb) ? ch.pauli_probs[b] : -ch.pauli_probs[b];
        }
    }
    return mu;
}

// Inverse transform: probabilities from PTM diagonal.  Errors out when the
// diagonal does not correspond to a physical Pauli channel.
inline Channel pauli_channel_from_eigenvalues(int nq, const std::vector<double>& mu,
                                              double tol = 1e-10) {
    const size_t count = size_t(1) << (2 * nq);
    if (mu.size() != count) throw std::invalid_argument("eigenvalue count mismatch");
    std::vector<double> probs(count, 0.0);
    for (size_t b = 0; b < count; ++b) {
        std::string sb = pauli_string_from_index(b, nq);
        double q = 0;
        for (size_t a = 0; a < count; ++a) {
            std::string sa = pauli_string_from_index(a, nq);
            q += commutes(sa, sb) ? mu[a] : -mu[a];
        }
        q /= double(count);
        if (q < -tol)
            throw std::invalid_argument("PTM diagonal implies negative Pauli probability");
        probs[b] = std::max(q, 0.0);
    }
    double sum = 0;
    for (double p : probs) sum += p;
    for (double& p : probs) p /= sum;
    return Channel::from_pauli_probs(nq, probs);
}

// Pauli channel whose PTM is the diagonal of the input's PTM; equals the
// uniform average over Pauli conjugations.
inline Channel pauli_twirl_channel(const Channel& ch) {
    PTM r = to_ptm(ch);
    std::vector<double> mu(r.matrix.rows());
    for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) mu[i] = r.matrix(i, i);
    return pauli_channel_from_eigenvalues(ch.num_qubits, mu);
}

// Average of P^dag L(P rho P^dag) P over the given Pauli strings (uniform).
inline Channel twirl_average(const Channel& ch, const std::vector<std::string>& paulis) {
    Channel out;
    out.num_qubits = ch.num_qubits;
    const double w = 1.0 / std::sqrt(double(paulis.size()));
    for (const auto& s : paulis) {
        Eigen::MatrixXcd p = Channel::detail_channel_string_matrix(s);
        for (const auto& k : ch.kraus) out.kraus.push_back(w * (p.adjoint() * k * p));
    }
    out.check_complete(1e-9);
    return out;
}

// ---------------------------------------------------------------------------
// Identity-insertion noise amplification audit
// ---------------------------------------------------------------------------

// Per-Pauli amplification coefficients of the noisy-CNOT power
// (CNOT after a Pauli channel, applied 2k+1 times): `actual` is the
// composite's transfer coefficient from P_{cnot(a)} to P_a, `desired` the
// single-application coefficient raised to the 2k+1 power.
struct InsertionAudit {
    std::vector<std::string> paulis;
    std::vector<double> actual;
    std::vector<double> desired;
};

inline InsertionAudit identity_insertion_map(const Channel& pauli_channel, int k) {
    if (!pauli_channel.is_pauli || pauli_channel.num_qubits != 2)
        throw std::invalid_argument("identity insertion audit needs a 2-qubit Pauli channel");
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    Eigen::MatrixXcd cx = cnot_matrix();
    Channel noisy;
    noisy.num_qubits = 2;
    for (const auto& kr : pauli_channel.kraus) noisy.kraus.push_back(cx * kr);
    PTM single = to_ptm(noisy);
    Eigen::MatrixXd comp = single.matrix;
    for (int rep = 0; rep < 2 * k; ++rep) comp = single.matrix * comp;

    InsertionAudit audit;
    audit.paulis = all_pauli_strings(2);
    for (size_t a = 0; a < audit.paulis.size(); ++a) {
        // sigma(a): image letter pair under CNOT conjugation
        auto [qc, qt] = [&] {
            Eigen::MatrixXcd img = cx * Channel::detail_channel_string_matrix(audit.paulis[a]) * cx;
            for (const auto& s : all_pauli_strings(2)) {
                Eigen::MatrixXcd ps = Channel::detail_channel_string_matrix(s);
                if (dist_up_to_phase(ps, img) < 1e-9)
                    return std::pair<Pauli, Pauli>{pauli_from_char(s[0]), pauli_from_char(s[1])};
            }
            throw std::logic_error("CNOT conjugation image not a Pauli");
        }();
        std::string sigma{pauli_char(qc), pauli_char(qt)};
        size_t row = a, col = pauli_index(sigma);
        double single_coeff = single.matrix(row, col);
        audit.actual.push_back(comp(row, col));
        audit.desired.push_back(std::pow(single_coeff, 2 * k + 1));
    }
    return audit;
}

// ---------------------------------------------------------------------------
// Readout confusion
// ---------------------------------------------------------------------------

inline void check_confusion(const Eigen::Matrix2d& a) {
    for (int c = 0; c < 2; ++c) {
        double sum = a(0, c) + a(1, c);
        if (std::abs(sum - 1.0) > 1e-9 || a(0, c) < -1e-12 || a(1, c) < -1e-12)
            throw std::invalid_argument("confusion matrix not column-stochastic");
    }
}

// Applies the tensor product of per-qubit confusion matrices to a
// distribution over bitstrings (qubit q = bit q of the index), without
// materialising the 2^N matrix.
inline std::vector<double> apply_readout_confusion(std::vector<double> probs,
                                                   const std::vector<Eigen::Matrix2d>& confusion) {
    const size_t dim = probs.size();
    size_t n = 0;
    while ((size_t(1) << n) < dim) ++n;
    if ((size_t(1) << n) != dim) throw std::invalid_argument("probability vector not 2^n long");
    if (confusion.size() != n) throw std::invalid_argument("confusion matrix count mismatch");
    double total = 0;
    for (double p : probs) total += p;
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("probabilities must sum to 1");
    for (size_t q = 0; q < n; ++q) {
        check_confusion(confusion[q]);
        const size_t stride = size_t(1) << q;
        for (size_t base = 0; base < dim; ++base) {
            if (base & stride) continue;
            double p0 = probs[base], p1 = probs[base | stride];
            probs[base] = confusion[q](0, 0) * p0 + confusion[q](0, 1) * p1;
            probs[base | stride] = confusion[q](1, 0) * p0 + confusion[q](1, 1) * p1;
        }
    }
    return probs;
}

// ---------------------------------------------------------------------------
// Noise model
// ---------------------------------------------------------------------------

// One elementary factor of the noise attached to a gate.
struct NoiseFactor {
    std::vector<int> qubits;  // absolute qubit indices
    Channel channel;
};

// Ordered factors applied after a gate's ideal unitary.
struct GateChannel {
    std::vector<NoiseFactor> factors;

    bool empty() const { return factors.empty(); }

    // Dense composition on the gate's qubit list (for PTM-level checks).
    Channel combined(const std::vector<int>& gate_qubits) const {
        Channel out = Channel::identity(static_cast<int>(gate_qubits.size()));
        for (const auto& f : factors) {
            Channel lifted = lift(f, gate_qubits);
            out = out.then(lifted);
        }
        return out;
    }

    static Channel lift(const NoiseFactor& f, const std::vector<int>& gate_qubits) {
        if (f.qubits.size() == gate_qubits.size()) return f.channel;
        if (f.qubits.size() != 1 || gate_qubits.size() != 2)
            throw std::invalid_argument("unsupported factor lift");
        // embed a 1q channel into the 2q space (first listed qubit = high bit)
        bool on_first = f.qubits[0] == gate_qubits[0];
        Channel out;
        out.num_qubits = 2;
        Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(2, 2);
        for (const auto& k : f.channel.kraus)
            out.kraus.push_back(on_first ? kron(k, eye) : kron(eye, k));
        return out;
    }
};

struct NoiseModel {
    // per-qubit decoherence times in microseconds; inf disables the term
    std::vector<double> t1;
    std::vector<double> t2;
    // per gate kind, an n-qubit Pauli probability vector (without identity
    // normalisation: entries are the error probabilities, identity filled in)
    std::map<std::string, std::vector<double>> gate_error;
    // coherent always-on ZZ rate during simultaneous idles, rad/us, per edge
    std::map<Edge, double> zz_crosstalk;
    // per-qubit 2x2 column-stochastic confusion matrices
    std::vector<Eigen::Matrix2d> readout;
    double lambda_scale = 1.0;

    int num_qubits() const { return static_cast<int>(t1.size()); }

    static NoiseModel ideal(int n) {
        NoiseModel nm;
        nm.t1.assign(n, std::numeric_limits<double>::infinity());
        nm.t2.assign(n, std::numeric_limits<double>::infinity());
        nm.readout.assign(n, Eigen::Matrix2d::Identity());
        return nm;
    }

    void validate() const {
        if (t2.size() != t1.size() || readout.size() != t1.size())
            throw std::invalid_argument("noise model per-qubit arrays disagree");
        for (size_t q = 0; q < t1.size(); ++q) {
            if (t1[q] <= 0 || t2[q] <= 0) throw std::invalid_argument("T1/T2 must be positive");
            if (t2[q] > 2.0 * t1[q] + 1e-12)
                throw std::invalid_argument("T2 exceeds 2*T1 on qubit " + std::to_string(q));
            check_confusion(readout[q]);
        }
    }

    double zz_rate(int a, int b) const {
        auto it = zz_crosstalk.find(make_edge(a, b));
        return it == zz_crosstalk.end() ? 0.0 : it->second;
    }

    bool has_crosstalk() const {
        for (const auto& [e, z] : zz_crosstalk)
            if (z != 0.0) return true;
        return false;
    }

    // Pure-dephasing probability over time d from 1/T_phi = 1/T2 - 1/(2 T1).
    double dephasing_prob(int q, double d) const {
        double inv_tphi = 1.0 / t2[q] - 0.5 / t1[q];
        if (inv_tphi <= 0) return 0.0;
        return 0.5 * (1.0 - std::exp(-d * inv_tphi));
    }

    double damping_gamma(int q, double d) const {
        if (!std::isfinite(t1[q])) return 0.0;
        return 1.0 - std::exp(-d / t1[q]);
    }
};

// Composite channel attached after the gate's ideal unitary: amplitude
// damping and pure dephasing accumulated over the (stretched) duration on
// every operand, then the gate kind's Pauli channel with probabilities
// scaled by c * lambda_scale.
inline GateChannel channel_for_gate(const NoiseModel& nm, const Gate& g, double c) {
    if (c < 1.0) throw std::invalid_argument("stretch factor must be >= 1");
    GateChannel out;
    const double d = c * g.duration;
    for (int i = 0; i < g.arity; ++i) {
        int q = g.qubits[i];
        if (q >= nm.num_qubits()) throw std::invalid_argument("noise model too small for gate");
        double gamma = nm.damping_gamma(q, d);
        if (gamma > 0) out.factors.push_back({{q}, Channel::amplitude_damping(gamma)});
        double p = nm.dephasing_prob(q, d);
        if (p > 0) out.factors.push_back({{q}, Channel::dephasing(p)});
    }
    auto it = nm.gate_error.find(gate_kind_name(g.kind));
    if (it != nm.gate_error.end()) {
        std::vector<double> probs = it->second;
        const size_t want = size_t(1) << (2 * g.arity);
        probs.resize(want, 0.0);
        double scale = c * nm.lambda_scale;
        double sum = 0;
        for (size_t a = 1; a < want; ++a) {
            probs[a] *= scale;
            if (probs[a] < 0 || probs[a] > 1)
                throw std::invalid_argument("scaled gate error rate outside [0,1]");
            sum += probs[a];
        }
        if (sum > 1)
            throw std::invalid_argument("scaled gate error rates exceed 1 (invalid stretch)");
        if (sum > 0) {
            probs[0] = 1 - sum;
            std::vector<int> qs(g.qubits.begin(), g.qubits.begin() + g.arity);
            out.factors.push_back({qs, Channel::from_pauli_probs(g.arity, probs)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON loading
// ---------------------------------------------------------------------------

inline std::vector<double> per_qubit_array(const nlohmann::json& j, int n) {
    if (j.is_number()) return std::vector<double>(n, j.get<double>());
    auto v = j.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("per-qubit array has wrong length");
    return v;
}

// Schema:
// {
//   "qubits": N,
//   "t1_us": 120.0 | [..],           (optional; omitted = no decay)
//   "t2_us": 100.0 | [..],
//   "gate_error": {"RZZ": {"depolarizing": p} | {"pauli": {"XI": p, ...}}},
//   "zz_crosstalk_rad_per_us": z | [[a, b, z], ...],
//   "readout": [[p00, p01], [p10, p11]] | [per-qubit matrices],
//   "lambda_scale": 1.0
// }
inline NoiseModel noise_model_from_json(const nlohmann::json& j, const Topology* topo = nullptr) {
    const int n = j.at("qubits").get<int>();
    NoiseModel nm = NoiseModel::ideal(n);
    if (j.contains("t1_us")) nm.t1 = per_qubit_array(j["t1_us"], n);
    if (j.contains("t2_us")) nm.t2 = per_qubit_array(j["t2_us"], n);
    if (j.contains("gate_error")) {
        for (auto it = j["gate_error"].begin(); it != j["gate_error"].end(); ++it) {
            GateKind kind = gate_kind_from_name(it.key());
            int arity = (kind == GateKind::CNOT || kind == GateKind::RZZ) ? 2 : 1;
            const size_t count = size_t(1) << (2 * arity);
            std::vector<double> probs(count, 0.0);
            if (it.value().contains("depolarizing")) {
                double p = it.value()["depolarizing"].get<double>();
                for (size_t a = 1; a < count; ++a) probs[a] = p / double(count - 1);
            }
            if (it.value().contains("pauli")) {
                for (auto pit = it.value()["pauli"].begin(); pit != it.value()["pauli"].end();
                     ++pit) {
                    if (static_cast<int>(pit.key().size()) != arity)
                        throw std::invalid_argument("pauli key arity mismatch");
                    probs[pauli_index(pit.key())] += pit.value().get<double>();
                }
            }
            nm.gate_error[it.key()] = probs;
        }
    }
    if (j.contains("zz_crosstalk_rad_per_us")) {
        const auto& z = j["zz_crosstalk_rad_per_us"];
        if (z.is_number()) {
            if (!topo) throw std::invalid_argument("uniform crosstalk needs a topology");
            for (const auto& e : topo->edges) nm.zz_crosstalk[e] = z.get<double>();
        } else {
            for (const auto& entry : z)
                nm.zz_crosstalk[make_edge(entry.at(0), entry.at(1))] = entry.at(2).get<double>();
        }
    }
    if (j.contains("readout")) {
        const auto& r = j["readout"];
        auto parse_one = [](const nlohmann::json& m) {
            Eigen::Matrix2d a;
            a << m.at(0).at(0).get<double>(), m.at(0).at(1).get<double>(),
                m.at(1).at(0).get<double>(), m.at(1).at(1).get<double>();
            return a;
        };
        if (r.size() == 2 && r.at(0).size() == 2 && r.at(0).at(0).is_number()) {
            Eigen::Matrix2d a = parse_one(r);
            nm.readout.assign(n, a);
        } else {
            if (static_cast<int>(r.size()) != n)
                throw std::invalid_argument("readout matrix count mismatch");
            for (int q = 0; q < n; ++q) nm.readout[q] = parse_one(r.at(q));
        }
    }
    if (j.contains("lambda_scale")) nm.lambda_scale = j["lambda_scale"].get<double>();
    nm.validate();
    return nm;
}

}  // namespace qemlab
