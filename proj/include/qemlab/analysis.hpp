#pragma once

// Observable bookkeeping and analytic models: the GHZ X-error location
// model, magnetization vectors and the d_avg / e_avg error metrics.
//
// GHZ location counting (chain of N, CNOT cascade head -> tail): a location
// is a possible X fault after a two-qubit gate (rate p2), after a one-qubit
// or idle slot (rate p1), or at initialisation (rate p0).  An observable
// sensitive to E2 / E1 / E0 such locations has expectation
//     (1-2 p2)^E2 (1-2 p1)^E1 (1-2 p0)^E0 .

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qemlab/pauli.hpp"

namespace qemlab {

struct ErrorLocationCount {
    long long e0 = 0, e1 = 0, e2 = 0;
    long long total() const { return e0 + e1 + e2; }
};

inline double ghz_model(double p0, double p1, double p2, const ErrorLocationCount& counts) {
    for (double p : {p0, p1, p2})
        if (p < 0 || p > 0.5) throw std::invalid_argument("probabilities must lie in [0, 1/2]");
    if (counts.e0 < 0 || counts.e1 < 0 || counts.e2 < 0)
        throw std::invalid_argument("negative location count");
    return std::pow(1 - 2 * p2, double(counts.e2)) * std::pow(1 - 2 * p1, double(counts.e1)) *
           std::pow(1 - 2 * p0, double(counts.e0));
}

enum class GhzObservable { local, nonlocal };  // Z_{j-1} Z_j  |  Z_0 Z_j

// Closed-form location counts for the cascade circuit.
//
// Local Z_{j-1}Z_j:  E0 = 1, E2 = 3 (2 when j = N-1), E1 = 2(N-j) - E2.
// Non-local Z_0Z_j:  E0 = j, E2 = 2+j (j+1 when j = N-1),
//                    E1 = 2(N-1) - E2.
// The j = N-1 edge of the non-local family uses E2 = j+1: the last qubit has
// a single post-gate location, which also keeps the E1+E2 = 2(N-1) sum rule
// realisable by an actual fault placement.
inline ErrorLocationCount ghz_locations(int n, GhzObservable kind, int j) {
    if (j < 1 || j > n - 1) throw std::invalid_argument("observable index out of range");
    ErrorLocationCount out;
    if (kind == GhzObservable::local) {
        out.e0 = 1;
        out.e2 = (j < n - 1) ? 3 : 2;
        out.e1 = 2LL * (n - j) - out.e2;
    } else {
        out.e0 = j;
        out.e2 = (j < n - 1) ? (2 + j) : (j + 1);
        out.e1 = 2LL * (n - 1) - out.e2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Magnetization
// ---------------------------------------------------------------------------

struct MagnetizationRecord {
    int step = 0;
    std::array<double, 3> m{0, 0, 0};  // (avg <X>, avg <Y>, avg <Z>)
    std::string source;                // exact | tn_simple_update_D{D} | ...
    bool unphysical = false;           // any component outside [-1, 1]
};

// Component-wise average over the per-qubit expectation table
// basis -> per-qubit values; every basis must cover all qubits.
inline MagnetizationRecord magnetization(const std::map<char, std::vector<double>>& table,
                                         int step = 0, const std::string& source = "") {
    MagnetizationRecord rec;
    rec.step = step;
    rec.source = source;
    const char axes[3] = {'X', 'Y', 'Z'};
    size_t n = 0;
    for (int k = 0; k < 3; ++k) {
        auto it = table.find(axes[k]);
        if (it == table.end() || it->second.empty())
            throw std::invalid_argument(std::string("missing basis ") + axes[k]);
        if (n == 0) n = it->second.size();
        if (it->second.size() != n) throw std::invalid_argument("per-axis qubit counts differ");
        double sum = 0;
        for (double v : it->second) sum += v;
        rec.m[k] = sum / double(n);
        if (std::abs(rec.m[k]) > 1.0 + 1e-9) rec.unphysical = true;
    }
    return rec;
}

inline double vec_norm(const std::array<double, 3>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// |m_ideal - m_method| / |m_ideal|
inline double d_avg(const std::array<double, 3>& m_ideal, const std::array<double, 3>& m_method) {
    const double denom = vec_norm(m_ideal);
    if (denom <= 0) throw std::invalid_argument("d_avg undefined for zero ideal magnetization");
    std::array<double, 3> diff{m_ideal[0] - m_method[0], m_ideal[1] - m_method[1],
                               m_ideal[2] - m_method[2]};
    return vec_norm(diff) / denom;
}

// Relative error of the adjacency-averaged weight-2 observable.
inline double e_avg_zz(double zz_ideal, double zz_method) {
    if (zz_ideal == 0) throw std::invalid_argument("e_avg undefined for zero ideal value");
    return std::abs(zz_ideal - zz_method) / std::abs(zz_ideal);
}

// ---------------------------------------------------------------------------
// Observable specifications
// ---------------------------------------------------------------------------

enum class ObservableKind { weight1, local_zz, nonlocal_zz, custom };

struct ObservableSpec {
    std::string pauli;
    ObservableKind kind = ObservableKind::custom;

    static ObservableSpec weight1(int n, int q, char axis) {
        ObservableSpec s;
        s.pauli.assign(n, 'I');
        s.pauli[q] = axis;
        s.kind = ObservableKind::weight1;
        return s;
    }
    static ObservableSpec zz_pair(int n, int a, int b, bool local) {
        ObservableSpec s;
        s.pauli.assign(n, 'I');
        s.pauli[a] = 'Z';
        s.pauli[b] = 'Z';
        s.kind = local ? ObservableKind::local_zz : ObservableKind::nonlocal_zz;
        return s;
    }
};

}  // namespace qemlab
