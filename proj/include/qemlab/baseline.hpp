#pragma once

// Graph tensor-network time evolution with simple-update gate application:
// per-site tensors with one physical leg and one bond leg per incident edge,
// plus a positive weight vector on every edge.  Two-site gates absorb the
// neighbouring weights, contract the gate, split by SVD truncated to the
// bond dimension D, and restore the inverse weights.  Local expectations use
// diagonal (squared-weight) environments: exact on trees in canonical form,
// a mean-field approximation on loopy graphs.
//
// Outputs produced from this module are labelled "tn_simple_update_D{D}".

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "qemlab/analysis.hpp"
#include "qemlab/gates.hpp"
#include "qemlab/topology.hpp"

namespace qemlab {

struct SiteTensor {
    std::vector<int> dims;       // dims[0] = 2 (physical), dims[1+i] = bond i
    std::vector<Edge> bonds;     // sorted incident edges, aligned with dims[1:]
    std::vector<cplx> data;      // row-major

    size_t size() const {
        size_t s = 1;
        for (int d : dims) s *= size_t(d);
        return s;
    }

    int bond_axis(const Edge& e) const {
        for (size_t i = 0; i < bonds.size(); ++i)
            if (bonds[i] == e) return static_cast<int>(i) + 1;
        throw std::invalid_argument("tensor has no such bond");
    }

    std::vector<size_t> strides() const {
        std::vector<size_t> st(dims.size());
        size_t s = 1;
        for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
            st[a] = s;
            s *= size_t(dims[a]);
        }
        return st;
    }

    // multiply data by f(coordinate) along one axis
    template <typename F>
    void scale_axis(int axis, F&& f) {
        auto st = strides();
        const size_t n = size();
        for (size_t idx = 0; idx < n; ++idx) {
            size_t coord = (idx / st[axis]) % size_t(dims[axis]);
            data[idx] *= f(coord);
        }
    }

    SiteTensor permuted(const std::vector<int>& order) const {
        SiteTensor out;
        out.dims.resize(dims.size());
        for (size_t a = 0; a < order.size(); ++a) out.dims[a] = dims[order[a]];
        out.bonds = bonds;  // caller fixes bond bookkeeping if axes moved
        out.data.assign(size(), 0.0);
        auto src_st = strides();
        SiteTensor tmp;
        tmp.dims = out.dims;
        auto dst_st = tmp.strides();
        const size_t n = size();
        std::vector<size_t> coord(dims.size());
        for (size_t idx = 0; idx < n; ++idx) {
            size_t rem = idx;
            for (size_t a = 0; a < dims.size(); ++a) {
                coord[a] = rem / src_st[a];
                rem %= src_st[a];
            }
            size_t dst = 0;
            for (size_t a = 0; a < order.size(); ++a) dst += coord[order[a]] * dst_st[a];
            out.data[dst] = data[idx];
        }
        return out;
    }
};

struct TensorNetworkState {
    Topology topo;
    std::vector<SiteTensor> sites;               // by node id; inactive nodes empty
    std::map<Edge, std::vector<double>> weights;  // descending, unit 2-norm
    double cumulative_truncation = 0.0;
    double last_truncation = 0.0;
};

inline TensorNetworkState tn_init_product(const Topology& topo, int bond_dim) {
    if (bond_dim < 1) throw std::invalid_argument("bond dimension must be >= 1");
    TensorNetworkState st;
    st.topo = topo;
    st.sites.resize(topo.node_count);
    for (int n : topo.active_nodes()) {
        SiteTensor& t = st.sites[n];
        for (const auto& e : topo.edges)
            if (e.first == n || e.second == n) t.bonds.push_back(e);
        std::sort(t.bonds.begin(), t.bonds.end());
        t.dims.assign(1 + t.bonds.size(), 1);
        t.dims[0] = 2;
        t.data.assign(2, 0.0);
        t.data[0] = 1.0;  // |0>
    }
    for (const auto& e : topo.edges) st.weights[e] = {1.0};
    return st;
}

inline void tn_apply_single(TensorNetworkState& st, int node, const Eigen::Matrix2cd& u) {
    SiteTensor& t = st.sites[node];
    if (t.data.empty()) throw std::invalid_argument("node has no tensor");
    const size_t rest = t.size() / 2;
    for (size_t r = 0; r < rest; ++r) {
        cplx a = t.data[r], b = t.data[rest + r];
        t.data[r] = u(0, 0) * a + u(0, 1) * b;
        t.data[rest + r] = u(1, 0) * a + u(1, 1) * b;
    }
}

namespace detail_tn {

// Tensor as a matrix with the chosen bond axis last (rows = phys x other
// bonds, cols = bond) or first (rows = bond, cols = phys x other bonds).
inline Eigen::MatrixXcd matrix_bond_last(const SiteTensor& t, int axis) {
    std::vector<int> order;
    for (size_t a = 0; a < t.dims.size(); ++a)
        if (static_cast<int>(a) != axis) order.push_back(static_cast<int>(a));
    order.push_back(axis);
    SiteTensor p = t.permuted(order);
    const int cols = t.dims[axis];
    const int rows = static_cast<int>(t.size()) / cols;
    Eigen::MatrixXcd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = p.data[size_t(i) * cols + j];
    return m;
}

// Rebuild a site tensor from the matrix with the bond axis last.
inline void tensor_from_bond_last(SiteTensor& t, int axis, const Eigen::MatrixXcd& m) {
    std::vector<int> perm_dims;
    std::vector<int> order;
    for (size_t a = 0; a < t.dims.size(); ++a)
        if (static_cast<int>(a) != axis) order.push_back(static_cast<int>(a));
    order.push_back(axis);
    t.dims[axis] = static_cast<int>(m.cols());
    SiteTensor tmp;
    for (int a : order) perm_dims.push_back(t.dims[a]);
    tmp.dims = perm_dims;
    tmp.data.resize(t.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) tmp.data[size_t(i) * m.cols() + j] = m(i, j);
    // inverse permutation back to canonical axis order
    std::vector<int> inv(order.size());
    for (size_t a = 0; a < order.size(); ++a) inv[order[a]] = static_cast<int>(a);
    SiteTensor back = tmp.permuted(inv);
    t.data = std::move(back.data);
}

inline void absorb_outer_weights(TensorNetworkState& st, int node, const Edge& skip,
                                 bool invert) {
    SiteTensor& t = st.sites[node];
    for (size_t b = 0; b < t.bonds.size(); ++b) {
        if (t.bonds[b] == skip) continue;
        const auto& w = st.weights.at(t.bonds[b]);
        t.scale_axis(static_cast<int>(b) + 1, [&](size_t i) {
            double v = i < w.size() ? w[i] : 0.0;
            if (!invert) return v;
            return v > 1e-14 ? 1.0 / v : 0.0;
        });
    }
}

}  // namespace detail_tn

// Applies a two-qubit gate (4x4, index 2*x_u + x_v for edge (u, v)) across an
// edge, truncating the new bond to `bond_dim` singular values (and dropping
// values below a 1e-12 relative cutoff).  Returns the discarded weight
// fraction of this gate application.
inline double tn_apply_two_site(TensorNetworkState& st, const Edge& edge,
                                const Eigen::Matrix4cd& gate, int bond_dim) {
    const int u = edge.first, v = edge.second;
    if (!st.topo.has_edge(u, v)) throw std::invalid_argument("gate on missing edge");
    SiteTensor& tu = st.sites[u];
    SiteTensor& tv = st.sites[v];

    detail_tn::absorb_outer_weights(st, u, edge, false);
    detail_tn::absorb_outer_weights(st, v, edge, false);
    // absorb the shared weight once (into u's bond leg)
    {
        const auto& w = st.weights.at(edge);
        tu.scale_axis(tu.bond_axis(edge), [&](size_t i) { return i < w.size() ? w[i] : 0.0; });
    }

    Eigen::MatrixXcd a = detail_tn::matrix_bond_last(tu, tu.bond_axis(edge));  // (2 Ru) x de
    Eigen::MatrixXcd b = detail_tn::matrix_bond_last(tv, tv.bond_axis(edge));  // (2 Rv) x de
    const int ru = static_cast<int>(a.rows()) / 2;
    const int rv = static_cast<int>(b.rows()) / 2;
    Eigen::MatrixXcd theta = a * b.transpose();  // rows (pu, ru), cols (pv, rv)

    // gate on the physical pair
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(theta.rows(), theta.cols());
    for (int pu = 0; pu < 2; ++pu)
        for (int pv = 0; pv < 2; ++pv)
            for (int qu = 0; qu < 2; ++qu)
                for (int qv = 0; qv < 2; ++qv) {
                    cplx g = gate(2 * pu + pv, 2 * qu + qv);
                    if (g == cplx(0, 0)) continue;
                    out.block(pu * ru, pv * rv, ru, rv) +=
                        g * theta.block(qu * ru, qv * rv, ru, rv);
                }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double total = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) total += sv(i) * sv(i);
    int keep = 0;
    for (Eigen::Index i = 0; i < sv.size() && keep < bond_dim; ++i) {
        if (keep > 0 && sv(i) <= sv(0) * 1e-12) break;
        ++keep;
    }
    double kept = 0;
    for (int i = 0; i < keep; ++i) kept += sv(i) * sv(i);
    const double truncation = total > 0 ? std::max(0.0, 1.0 - kept / total) : 0.0;

    Eigen::MatrixXcd uu = svd.matrixU().leftCols(keep);
    Eigen::MatrixXcd vv = svd.matrixV().leftCols(keep);
    std::vector<double> wnew(keep);
    double norm2 = 0;
    for (int i = 0; i < keep; ++i) norm2 += sv(i) * sv(i);
    const double inv_norm = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 1.0;
    for (int i = 0; i < keep; ++i) wnew[i] = sv(i) * inv_norm;

    detail_tn::tensor_from_bond_last(tu, tu.bond_axis(edge), uu);
    detail_tn::tensor_from_bond_last(tv, tv.bond_axis(edge), vv.conjugate());
    st.weights[edge] = std::move(wnew);

    detail_tn::absorb_outer_weights(st, u, edge, true);
    detail_tn::absorb_outer_weights(st, v, edge, true);

    st.last_truncation = truncation;
    st.cumulative_truncation += truncation;
    return truncation;
}

// Local expectation with squared-weight diagonal environments:
// <P> = tr(P M) / tr(M), M[p,p'] = sum_bonds T w^2 T^dag.
inline double tn_measure_local(const TensorNetworkState& st, int node, char pauli) {
    if (pauli != 'X' && pauli != 'Y' && pauli != 'Z')
        throw std::invalid_argument("pauli must be X, Y or Z");
    SiteTensor t = st.sites[node];  // copy: weights absorbed destructively
    for (size_t b = 0; b < t.bonds.size(); ++b) {
        const auto& w = st.weights.at(t.bonds[b]);
        t.scale_axis(static_cast<int>(b) + 1, [&](size_t i) { return i < w.size() ? w[i] : 0.0; });
    }
    const size_t rest = t.size() / 2;
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    for (size_t r = 0; r < rest; ++r)
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                m(p, q) += t.data[size_t(p) * rest + r] * std::conj(t.data[size_t(q) * rest + r]);
    const Eigen::Matrix2cd& op = pauli_matrix(pauli_from_char(pauli));
    const double denom = m.real().trace();
    if (denom <= 0) throw std::runtime_error("vanishing tensor norm");
    return ((op * m).trace()).real() / denom;
}

// <Z_u Z_v> on an edge from the exact two-site patch (outer weights as
// diagonal environments).
inline double tn_measure_zz(const TensorNetworkState& st, const Edge& edge) {
    TensorNetworkState tmp = st;  // local copies with weights absorbed
    const int u = edge.first, v = edge.second;
    detail_tn::absorb_outer_weights(tmp, u, edge, false);
    detail_tn::absorb_outer_weights(tmp, v, edge, false);
    {
        const auto& w = tmp.weights.at(edge);
        tmp.sites[u].scale_axis(tmp.sites[u].bond_axis(edge),
                                [&](size_t i) { return i < w.size() ? w[i] : 0.0; });
    }
    Eigen::MatrixXcd a = detail_tn::matrix_bond_last(tmp.sites[u], tmp.sites[u].bond_axis(edge));
    Eigen::MatrixXcd b = detail_tn::matrix_bond_last(tmp.sites[v], tmp.sites[v].bond_axis(edge));
    const int ru = static_cast<int>(a.rows()) / 2;
    const int rv = static_cast<int>(b.rows()) / 2;
    Eigen::MatrixXcd theta = a * b.transpose();
    double num = 0, den = 0;
    for (int pu = 0; pu < 2; ++pu)
        for (int pv = 0; pv < 2; ++pv) {
            double blk = theta.block(pu * ru, pv * rv, ru, rv).squaredNorm();
            den += blk;
            num += ((pu + pv) % 2 ? -blk : blk);
        }
    if (den <= 0) throw std::runtime_error("vanishing tensor norm");
    return num / den;
}

struct TnStepRecord {
    MagnetizationRecord magnetization;
    std::map<Edge, double> zz;  // adjacent-pair <ZZ>
    double cumulative_truncation = 0.0;
};

// Runs the identical Trotter sequence as the circuit builder (RX layer, then
// one RZZ layer per colour class) through the simple-update engine,
// recording per-step magnetization, adjacent <ZZ> and truncation.
inline std::vector<TnStepRecord> tn_evolve_trotter(const Topology& topo,
                                                   const EdgeColoring& coloring, double j_coupling,
                                                   double h_field, double dt, int steps,
                                                   int bond_dim) {
    if (steps < 0) throw std::invalid_argument("negative steps");
    validate_coloring(topo, coloring);
    TensorNetworkState st = tn_init_product(topo, bond_dim);
    const Eigen::Matrix2cd ux = rx_matrix(2.0 * h_field * dt);
    const Eigen::Matrix4cd uzz = rzz_matrix(-2.0 * j_coupling * dt);
    std::vector<TnStepRecord> records;
    const std::string label = "tn_simple_update_D" + std::to_string(bond_dim);
    for (int s = 1; s <= steps; ++s) {
        for (int n : topo.active_nodes()) tn_apply_single(st, n, ux);
        for (const auto& cls : coloring.classes)
            for (const auto& e : cls) tn_apply_two_site(st, e, uzz, bond_dim);
        TnStepRecord rec;
        std::map<char, std::vector<double>> table;
        for (char axis : {'X', 'Y', 'Z'}) {
            std::vector<double> vals;
            for (int n : topo.active_nodes()) vals.push_back(tn_measure_local(st, n, axis));
            table[axis] = vals;
        }
        rec.magnetization = magnetization(table, s, label);
        for (const auto& e : topo.edges) rec.zz[e] = tn_measure_zz(st, e);
        rec.cumulative_truncation = st.cumulative_truncation;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace qemlab
