#pragma once

// Pauli algebra shared by the noise, twirling and analysis code.
//
// Conventions used across the whole project:
//   * single-qubit Paulis are ordered I < X < Y < Z;
//   * an n-qubit Pauli string is a std::string over "IXYZ" whose character i
//     acts on qubit i;
//   * Pauli-basis (PTM) indices enumerate strings lexicographically in that
//     order, i.e. index = sum_i 4^(n-1-i) * pauli(char i).

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qemlab {

using cplx = std::complex<double>;

enum class Pauli : uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

inline Pauli pauli_from_char(char c) {
    switch (c) {
        case 'I': return Pauli::I;
        case 'X': return Pauli::X;
        case 'Y': return Pauli::Y;
        case 'Z': return Pauli::Z;
        default: throw std::invalid_argument(std::string("not a Pauli letter: ") + c);
    }
}

inline const Eigen::Matrix2cd& pauli_matrix(Pauli p) {
    static const std::array<Eigen::Matrix2cd, 4> mats = [] {
        std::array<Eigen::Matrix2cd, 4> m;
        const cplx i(0, 1);
        m[0] << 1, 0, 0, 1;
        m[1] << 0, 1, 1, 0;
        m[2] << 0, -i, i, 0;
        m[3] << 1, 0, 0, -1;
        return m;
    }();
    return mats[static_cast<int>(p)];
}

inline bool commutes(Pauli a, Pauli b) {
    return a == Pauli::I || b == Pauli::I || a == b;
}

// True when the n-qubit strings commute (even number of anticommuting sites).
inline bool commutes(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pauli length mismatch");
    int anti = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (!commutes(pauli_from_char(a[i]), pauli_from_char(b[i]))) ++anti;
    return (anti % 2) == 0;
}

struct PauliProduct {
    cplx phase;
    Pauli result;
};

inline PauliProduct pauli_mul(Pauli a, Pauli b) {
    const cplx i(0, 1);
    if (a == Pauli::I) return {1.0, b};
    if (b == Pauli::I) return {1.0, a};
    if (a == b) return {1.0, Pauli::I};
    // XY=iZ, YZ=iX, ZX=iY; reversed orders pick up a minus sign.
    static const int next[4] = {0, 2, 3, 1};  // X->Y->Z->X
    int third = 0;
    for (int r = 1; r <= 3; ++r)
        if (r != static_cast<int>(a) && r != static_cast<int>(b)) third = r;
    const bool forward = next[static_cast<int>(a)] == static_cast<int>(b);
    return {forward ? i : -i, static_cast<Pauli>(third)};
}

inline int pauli_weight(const std::string& s) {
    int w = 0;
    for (char c : s)
        if (c != 'I') ++w;
    return w;
}

inline size_t pauli_index(const std::string& s) {
    size_t idx = 0;
    for (char c : s) idx = idx * 4 + static_cast<size_t>(pauli_from_char(c));
    return idx;
}

inline std::string pauli_string_from_index(size_t idx, int n) {
    std::string s(n, 'I');
    for (int i = n - 1; i >= 0; --i) {
        s[i] = "IXYZ"[idx % 4];
        idx /= 4;
    }
    return s;
}

inline std::vector<std::string> all_pauli_strings(int n) {
    size_t count = 1;
    for (int i = 0; i < n; ++i) count *= 4;
    std::vector<std::string> out;
    out.reserve(count);
    for (size_t idx = 0; idx < count; ++idx) out.push_back(pauli_string_from_index(idx, n));
    return out;
}

// Dense matrix of an n-qubit Pauli string; qubit 0 is the least significant
// bit of the basis index.  Intended for small n (tests, channel algebra).
inline Eigen::MatrixXcd pauli_string_matrix(const std::string& s) {
    const int n = static_cast<int>(s.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    // kron(p_q, m) makes qubit q the most significant block, so ascending q
    // leaves qubit 0 on the least significant bit.
    for (int q = 0; q < n; ++q) {
        const Eigen::Matrix2cd& p = pauli_matrix(pauli_from_char(s[q]));
        Eigen::MatrixXcd out(m.rows() * 2, m.cols() * 2);
        out.block(0, 0, m.rows(), m.cols()) = p(0, 0) * m;
        out.block(0, m.cols(), m.rows(), m.cols()) = p(0, 1) * m;
        out.block(m.rows(), 0, m.rows(), m.cols()) = p(1, 0) * m;
        out.block(m.rows(), m.cols(), m.rows(), m.cols()) = p(1, 1) * m;
        m = std::move(out);
    }
    return m;
}

}  // namespace qemlab
