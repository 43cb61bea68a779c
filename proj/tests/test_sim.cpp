#include <catch2/catch.hpp>

#include "qemlab/builders.hpp"
#include "qemlab/sim.hpp"
#include "qemlab/transforms.hpp"

using namespace qemlab;

namespace {

Topology chain_topology(int n) {
    Topology t;
    t.node_count = n;
    t.active.assign(n, 1);
    for (int i = 0; i + 1 < n; ++i) t.edges.push_back({i, i + 1});
    return t;
}

std::string z_on(int n, int q) {
    std::string s(n, 'I');
    s[q] = 'Z';
    return s;
}

}  // namespace

TEST_CASE("exact evolution basics", "[sim]") {
    Circuit empty(3);
    Statevector sv = evolve_exact(empty);
    REQUIRE(std::abs(sv.amps[0] - cplx(1, 0)) < 1e-14);

    // single RX(2ht) on |0>: <Z> = cos(2ht)
    double h = 1.0, t = 0.37;
    Circuit rabi(1);
    rabi.append(Gate::rx(0, 2 * h * t, 0.035));
    REQUIRE(expectation(evolve_exact(rabi), "Z") == Approx(std::cos(2 * h * t)).margin(1e-12));

    // Trotter with J=0: decoupled qubits, <Z> = cos(2 h t)
    Topology top = chain_topology(4);
    EdgeColoring col = color_edges(top);
    Circuit c = build_trotter(top, col, 0.0, 1.0, kPi / 8, 2, DecompositionMode::native_rzz);
    Statevector s2 = evolve_exact(c);
    for (int q = 0; q < 4; ++q)
        REQUIRE(expectation(s2, z_on(4, q)) == Approx(std::cos(kPi / 2)).margin(1e-12));

    REQUIRE_THROWS_AS(evolve_exact(Circuit(25)), std::invalid_argument);
}

TEST_CASE("density: zero noise equals pure state", "[sim]") {
    Topology top = chain_topology(3);
    Circuit c = build_ghz(top, {0, 1, 2});
    NoiseModel nm = NoiseModel::ideal(3);
    DensityMatrix rho = evolve_density(c, nm, 1.0);
    Statevector sv = evolve_exact(c);
    REQUIRE(pure_fidelity(rho, sv) == Approx(1.0).margin(1e-12));
    REQUIRE(rho.trace() == Approx(1.0).margin(1e-12));
}

TEST_CASE("density: t1 closed form", "[sim]") {
    // X(pi) prep (instant), delay t, damping only: <Z> = 1 - 2 exp(-c t / T1)
    const double t1 = 80.0, delay = 30.0;
    NoiseModel nm = NoiseModel::ideal(1);
    nm.t1 = {t1};
    nm.t2 = {2 * t1};  // no pure dephasing
    GateDurations dur;
    dur.single_qubit = 0.0;
    dur.measure = 0.0;
    Circuit c = build_t1({0}, delay, 1.0, 1, dur);
    for (double cf : {1.0, 1.5, 2.0}) {
        DensityMatrix rho = evolve_density(c, nm, cf);
        REQUIRE(expectation(rho, "Z") ==
                Approx(1.0 - 2.0 * std::exp(-cf * delay / t1)).margin(1e-12));
    }
}

TEST_CASE("density: trace preserved through heavy sequences", "[sim]") {
    Topology top = chain_topology(4);
    EdgeColoring col = color_edges(top);
    Circuit c = build_trotter(top, col, 0.5236, 1.0, 0.5, 3, DecompositionMode::native_rzz);
    NoiseModel nm = NoiseModel::ideal(4);
    nm.t1.assign(4, 90.0);
    nm.t2.assign(4, 70.0);
    std::vector<double> dp(16, 0.002 / 15);
    nm.gate_error["RZZ"] = dp;
    for (const auto& e : top.edges) nm.zz_crosstalk[e] = 0.03;
    Circuit dd = insert_dd(c, DDSequence::x2);
    DensityMatrix rho = evolve_density(dd, nm, 1.6, &top);
    REQUIRE(rho.trace() == Approx(1.0).margin(1e-10));
    // physical expectations
    for (int q = 0; q < 4; ++q) {
        double z = expectation(rho, z_on(4, q));
        REQUIRE(z >= -1.0 - 1e-9);
        REQUIRE(z <= 1.0 + 1e-9);
    }
}

TEST_CASE("density matches statevector on noiseless random circuits", "[sim]") {
    Topology top = chain_topology(3);
    EdgeColoring col = color_edges(top);
    Circuit c = build_trotter(top, col, 0.31, 0.7, 0.4, 2, DecompositionMode::cnot_pair);
    NoiseModel nm = NoiseModel::ideal(3);
    DensityMatrix rho = evolve_density(c, nm, 1.0);
    Statevector sv = evolve_exact(c);
    for (const auto& p : {"ZII", "IZI", "XXI", "IYZ", "ZZZ"})
        REQUIRE(expectation(rho, p) == Approx(expectation(sv, p)).margin(1e-10));
}

TEST_CASE("measurement bases agree with direct pauli expectations", "[sim]") {
    Topology top = chain_topology(2);
    Circuit base = build_trotter(top, color_edges(top), 0.5, 0.8, 0.45, 1,
                                 DecompositionMode::native_rzz);
    NoiseModel nm = NoiseModel::ideal(2);
    nm.t1 = {50.0, 60.0};
    nm.t2 = {40.0, 50.0};
    DensityMatrix rho = evolve_density(base, nm, 1.0);
    for (char b : {'X', 'Y', 'Z'}) {
        DensityMatrix rot = rotate_to_basis(rho, std::string(2, b));
        auto probs = rot.diagonal_probs();
        for (int q = 0; q < 2; ++q) {
            std::string pauli(2, 'I');
            pauli[q] = b;
            std::string meas(2, 'I');
            meas[q] = b;
            double via_probs = probs_expectation(probs, meas, std::string(2, b));
            REQUIRE(via_probs == Approx(expectation(rho, pauli)).margin(1e-10));
        }
    }
}

TEST_CASE("trajectories: zero noise and determinism", "[sim]") {
    Circuit c(2);
    c.append(Gate::rx(0, 0.0, 0.035));
    append_measurement(c, {0, 1}, 'Z');
    NoiseModel nm = NoiseModel::ideal(2);
    TrajectoryResult r = evolve_trajectories(c, nm, 1.0, 1000, 99);
    REQUIRE(r.counts.total == 1000);
    REQUIRE(r.counts.shots.at("00") == 1000);

    // bit-identical across runs and across worker counts
    Topology top = chain_topology(2);
    Circuit g = build_ghz(top, {0, 1});
    append_measurement(g, {0, 1}, 'Z');
    NoiseModel noisy = NoiseModel::ideal(2);
    noisy.t1 = {60.0, 60.0};
    noisy.t2 = {50.0, 50.0};
    TrajectoryResult a = evolve_trajectories(g, noisy, 1.0, 2000, 1234);
    TrajectoryResult b = evolve_trajectories(g, noisy, 1.0, 2000, 1234);
    REQUIRE(a.counts.shots == b.counts.shots);
    TrajectoryResult c4 = evolve_trajectories(g, noisy, 1.0, 2000, 1234, nullptr, 4);
    REQUIRE(a.counts.shots == c4.counts.shots);
    TrajectoryResult other = evolve_trajectories(g, noisy, 1.0, 2000, 4321);
    REQUIRE(a.counts.shots != other.counts.shots);
}

TEST_CASE("trajectories agree with density evolution", "[sim]") {
    Topology top = chain_topology(3);
    EdgeColoring col = color_edges(top);
    Circuit c = build_trotter(top, col, 0.5236, 1.0, 0.5, 2, DecompositionMode::native_rzz);
    append_measurement(c, {0, 1, 2}, 'Z');
    NoiseModel nm = NoiseModel::ideal(3);
    nm.t1.assign(3, 40.0);
    nm.t2.assign(3, 30.0);
    std::vector<double> dp(16, 0.01 / 15);
    nm.gate_error["RZZ"] = dp;
    for (const auto& e : top.edges) nm.zz_crosstalk[e] = 0.05;

    DensityMatrix rho = evolve_density(c, nm, 1.0, &top);
    const long long shots = 40000;
    TrajectoryResult tr = evolve_trajectories(c, nm, 1.0, shots, 7, &top, 2);

    for (int q = 0; q < 3; ++q) {
        double want = expectation(rho, z_on(3, q));
        // mean_z is the trajectory average before readout sampling
        double sigma = 1.0 / std::sqrt(double(shots));
        REQUIRE(std::abs(tr.mean_z[q] - want) < 5 * sigma);
        // counts-based estimate (identity readout here)
        EstimatedValue est = expectation(tr.counts, z_on(3, q));
        REQUIRE(std::abs(est.value - want) < 5 * est.stderr_);
    }
    // weight-2 observable through counts
    EstimatedValue zz = expectation(tr.counts, "ZZI");
    REQUIRE(std::abs(zz.value - expectation(rho, "ZZI")) < 5 * zz.stderr_);
}

TEST_CASE("trajectories sample readout confusion", "[sim]") {
    Circuit c(1);
    c.append(Gate::rx(0, 0.0, 0.0));
    append_measurement(c, {0}, 'Z');
    NoiseModel nm = NoiseModel::ideal(1);
    nm.readout[0] << 0.9, 0.2, 0.1, 0.8;
    TrajectoryResult r = evolve_trajectories(c, nm, 1.0, 50000, 5);
    double p1 = double(r.counts.shots.count("1") ? r.counts.shots.at("1") : 0) / 50000.0;
    REQUIRE(p1 == Approx(0.1).margin(0.01));
}

TEST_CASE("counts expectation validates basis", "[sim]") {
    Counts counts;
    counts.basis = "XZ";
    counts.add("00");
    counts.add("10");
    REQUIRE(expectation(counts, "XI").value == Approx(0.0).margin(1e-12));
    REQUIRE(expectation(counts, "IZ").value == Approx(1.0));
    REQUIRE_THROWS_AS(expectation(counts, "ZI"), std::invalid_argument);
}

TEST_CASE("maximally mixed two-qubit state has zero pauli expectations", "[sim]") {
    DensityMatrix rho = DensityMatrix::zero_state(2);
    rho.a.assign(rho.a.size(), 0.0);
    for (size_t i = 0; i < 4; ++i) rho.a[(i << 2) | i] = 0.25;
    for (const auto& s : all_pauli_strings(2)) {
        if (s == "II") continue;
        REQUIRE(expectation(rho, s) == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("ghz-21 exact: nonlocal ZZ expectations are +1", "[sim]") {
    Topology t = heavy_hex_27();
    std::vector<int> chain = longest_chain(t, 21);
    auto [sub, ids] = compact(induced_subgraph(t, chain));
    // remap the chain onto compact indices
    std::vector<int> to_new(t.node_count, -1);
    for (size_t i = 0; i < ids.size(); ++i) to_new[ids[i]] = static_cast<int>(i);
    std::vector<int> cchain;
    for (int n : chain) cchain.push_back(to_new[n]);
    Circuit c = build_ghz(sub, cchain);
    Statevector sv = evolve_exact(c);
    std::string p(21, 'I');
    p[cchain[0]] = 'Z';
    p[cchain[20]] = 'Z';
    REQUIRE(expectation(sv, p) == Approx(1.0).margin(1e-10));
    std::string q(21, 'I');
    q[cchain[4]] = 'Z';
    q[cchain[5]] = 'Z';
    REQUIRE(expectation(sv, q) == Approx(1.0).margin(1e-10));
}

TEST_CASE("trajectories match density across circuit families", "[sim]") {
    const long long shots = 20000;
    NoiseModel nm = NoiseModel::ideal(4);
    nm.t1.assign(4, 60.0);
    nm.t2.assign(4, 50.0);
    std::vector<double> dp(16, 0.008 / 15);
    nm.gate_error["CNOT"] = dp;

    // GHZ family
    Topology top = chain_topology(4);
    Circuit ghz = build_ghz(top, {0, 1, 2, 3});
    append_measurement(ghz, {0, 1, 2, 3}, 'Z');
    DensityMatrix rho = evolve_density(ghz, nm, 1.3, &top);
    TrajectoryResult tr = evolve_trajectories(ghz, nm, 1.3, shots, 31, &top, 2);
    for (const auto& pauli : {"ZIII", "ZZII", "ZIIZ"}) {
        EstimatedValue est = expectation(tr.counts, pauli);
        REQUIRE(std::abs(est.value - expectation(rho, pauli)) < 5 * est.stderr_);
    }

    // T1 family (damping-dominated)
    Circuit t1c = build_t1({0, 1, 2, 3}, 25.0, 1.0, 4);
    DensityMatrix rho_t1 = evolve_density(t1c, nm, 1.5, &top);
    TrajectoryResult tr_t1 = evolve_trajectories(t1c, nm, 1.5, shots, 32, &top, 2);
    for (const auto& pauli : {"ZIII", "IZII", "ZZII"}) {
        EstimatedValue est = expectation(tr_t1.counts, pauli);
        REQUIRE(std::abs(est.value - expectation(rho_t1, pauli)) < 5 * est.stderr_);
    }
}

TEST_CASE("density matrices stay hermitian, unit-trace, psd", "[sim]") {
    Topology top = chain_topology(3);
    EdgeColoring col = color_edges(top);
    Circuit c = build_trotter(top, col, 0.5236, 1.0, 0.5, 3, DecompositionMode::cnot_pair);
    Circuit dd = insert_dd(c, DDSequence::xy4);
    NoiseModel nm = NoiseModel::ideal(3);
    nm.t1.assign(3, 50.0);
    nm.t2.assign(3, 60.0);
    std::vector<double> dp(16, 0.02 / 15);
    nm.gate_error["CNOT"] = dp;
    for (const auto& e : top.edges) nm.zz_crosstalk[e] = 0.05;
    DensityMatrix rho = evolve_density(dd, nm, 2.0, &top);
    Eigen::MatrixXcd m = rho.dense();
    REQUIRE((m - m.adjoint().eval()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(rho.trace() == Approx(1.0).margin(1e-10));
    REQUIRE(min_eigenvalue_hermitian(m) > -1e-8);
}

TEST_CASE("gate matrices are unitary", "[sim]") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 10; ++i) {
        REQUIRE(is_unitary(rx_matrix(ang(rng))));
        REQUIRE(is_unitary(rz_matrix(ang(rng))));
        REQUIRE(is_unitary(u3_matrix(ang(rng), ang(rng), ang(rng))));
        REQUIRE(is_unitary(rzz_matrix(ang(rng))));
    }
    REQUIRE(is_unitary(cnot_matrix()));
}
