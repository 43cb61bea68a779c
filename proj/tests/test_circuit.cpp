#include <catch2/catch.hpp>

#include "qemlab/builders.hpp"
#include "qemlab/sim.hpp"
#include "qemlab/transforms.hpp"

using namespace qemlab;

namespace {

// Dense unitary of the whole circuit, for small-N equivalence checks.
Eigen::MatrixXcd circuit_unitary(const Circuit& c) {
    const size_t dim = size_t(1) << c.qubit_count;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
    for (size_t col = 0; col < dim; ++col) {
        Statevector sv;
        sv.num_qubits = c.qubit_count;
        sv.amps.assign(dim, 0.0);
        sv.amps[col] = 1.0;
        ExecutionPlan plan = build_plan(c, nullptr, 1.0);
        for (const auto& ev : plan.events)
            if (ev.type == EventType::gate && ev.gate.is_unitary_gate()) sv.apply_unitary(ev.gate);
        for (size_t row = 0; row < dim; ++row) u(row, col) = sv.amps[row];
    }
    return u;
}

Topology chain_topology(int n) {
    Topology t;
    t.node_count = n;
    t.active.assign(n, 1);
    for (int i = 0; i + 1 < n; ++i) t.edges.push_back({i, i + 1});
    return t;
}

}  // namespace

TEST_CASE("t1 circuit structure and stretching", "[circuit]") {
    Circuit c = build_t1({0}, 50.0, 2.0, 1);
    REQUIRE(c.count_kind(GateKind::Delay) == 1);
    for (const auto& m : c.moments)
        for (const auto& g : m)
            if (g.kind == GateKind::Delay) REQUIRE(g.duration == Approx(100.0));

    Circuit five = build_t1({0, 1, 2, 3, 4}, 10.0, 1.0, 5);
    REQUIRE(five.count_kind(GateKind::RX) == 5);
    REQUIRE(five.count_kind(GateKind::Measure) == 5);

    Circuit zero = build_t1({0}, 0.0, 1.0, 1);
    REQUIRE(zero.count_kind(GateKind::Delay) == 0);
    REQUIRE_THROWS_AS(build_t1({0}, -1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("ghz circuit: cascade length and exact state", "[circuit]") {
    Topology t = chain_topology(3);
    Circuit c = build_ghz(t, {0, 1, 2});
    REQUIRE(c.count_kind(GateKind::CNOT) == 2);

    Statevector sv = evolve_exact(c);
    REQUIRE(expectation(sv, "ZZI") == Approx(1.0).margin(1e-12));
    REQUIRE(expectation(sv, "ZIZ") == Approx(1.0).margin(1e-12));
    REQUIRE(expectation(sv, "ZII") == Approx(0.0).margin(1e-12));
    // |<000|psi>|^2 = 1/2
    REQUIRE(std::norm(sv.amps[0]) == Approx(0.5).margin(1e-12));

    Circuit bell = build_ghz(chain_topology(2), {0, 1});
    Statevector b = evolve_exact(bell);
    REQUIRE(expectation(b, "ZZ") == Approx(1.0).margin(1e-12));

    Circuit single = build_ghz(chain_topology(1), {0});
    REQUIRE(expectation(evolve_exact(single), "Z") == Approx(0.0).margin(1e-12));

    REQUIRE_THROWS_AS(build_ghz(t, {0, 2}), std::invalid_argument);
}

TEST_CASE("trotter gate counts follow closed forms", "[circuit]") {
    Topology t = heavy_hex_sublattice(10);
    auto [dense, ids] = compact(t);
    EdgeColoring col = color_edges(dense);
    const int steps = 4;
    Circuit nat = build_trotter(dense, col, 0.5, 1.0, 0.5, steps, DecompositionMode::native_rzz);
    REQUIRE(nat.count_kind(GateKind::RZZ) == steps * dense.edges.size());
    REQUIRE(nat.count_kind(GateKind::RX) == size_t(steps) * 10);
    Circuit cx = build_trotter(dense, col, 0.5, 1.0, 0.5, steps, DecompositionMode::cnot_pair);
    REQUIRE(cx.count_kind(GateKind::CNOT) == 2 * steps * dense.edges.size());
    REQUIRE(cx.count_kind(GateKind::RZZ) == 0);

    Circuit empty = build_trotter(dense, col, 0.5, 1.0, 0.5, 0, DecompositionMode::native_rzz);
    Statevector sv = evolve_exact(empty);
    for (int q = 0; q < 10; ++q) {
        std::string z(10, 'I');
        z[q] = 'Z';
        REQUIRE(expectation(sv, z) == Approx(1.0));
    }
}

TEST_CASE("cnot_pair and native decompositions agree", "[circuit]") {
    Topology t = chain_topology(3);
    EdgeColoring col = color_edges(t);
    Circuit nat = build_trotter(t, col, 0.5236, 1.0, 0.5, 2, DecompositionMode::native_rzz);
    Circuit cx = build_trotter(t, col, 0.5236, 1.0, 0.5, 2, DecompositionMode::cnot_pair);
    REQUIRE(dist_up_to_phase(circuit_unitary(nat), circuit_unitary(cx)) < 1e-12);
}

TEST_CASE("schedule: asap per qubit, measurement barrier, idle windows", "[circuit]") {
    Circuit c(2);
    c.add_moment({Gate::rx(0, kPi, 0.1)});
    c.add_moment({Gate::cnot(0, 1, 0.4)});
    append_measurement(c, {0, 1}, 'Z');
    Schedule s = schedule_circuit(c);
    // qubit 1 idles while qubit 0 runs its pulse
    bool found = false;
    for (const auto& w : s.idles)
        if (w.qubit == 1 && w.start == Approx(0.0) && w.end == Approx(0.1)) found = true;
    REQUIRE(found);
    REQUIRE(s.total_time == Approx(0.1 + 0.4 + 0.7));
}

TEST_CASE("stretch scales durations only", "[circuit]") {
    Topology t = chain_topology(4);
    Circuit c = build_trotter(t, color_edges(t), 0.3, 1.0, 0.5, 2, DecompositionMode::native_rzz);
    Circuit s = stretch(c, 1.6);
    REQUIRE(total_time(s) == Approx(1.6 * total_time(c)));
    REQUIRE(dist_up_to_phase(circuit_unitary(c), circuit_unitary(s)) < 1e-12);
    REQUIRE_THROWS_AS(stretch(c, 0.9), std::invalid_argument);
    Circuit same = stretch(c, 1.0);
    REQUIRE(total_time(same) == Approx(total_time(c)));
    // measurement pulses are not stretched
    Circuit m(1);
    append_measurement(m, {0}, 'Z');
    REQUIRE(total_time(stretch(m, 2.0)) == Approx(total_time(m)));
}

TEST_CASE("merge_single_qubit collapses runs and preserves the unitary", "[circuit]") {
    // RZ(a) RZ(b) -> RZ(a+b)
    Circuit c(1);
    c.append(Gate::rz(0, 0.3));
    c.append(Gate::rz(0, 0.5));
    Circuit m = merge_single_qubit(c);
    REQUIRE(m.gate_count() == 1);
    REQUIRE(m.moments[0][0].kind == GateKind::RZ);
    REQUIRE(m.moments[0][0].params[0] == Approx(0.8));

    // X(pi) X(-pi) cancels entirely
    Circuit x(1);
    x.append(Gate::rx(0, kPi, 0.035));
    x.append(Gate::rx(0, -kPi, 0.035));
    REQUIRE(merge_single_qubit(x).gate_count() == 0);

    // a random 5-gate run folds into a single gate with the same 2x2 matrix
    Circuit r(1);
    r.append(Gate::rx(0, 0.3, 0.035));
    r.append(Gate::rz(0, -1.1));
    r.append(Gate::u3(0, 0.7, 0.2, -0.4, 0.035));
    r.append(Gate::rx(0, -2.0, 0.035));
    r.append(Gate::rz(0, 0.9));
    Circuit rm = merge_single_qubit(r);
    REQUIRE(rm.gate_count() == 1);
    REQUIRE(dist_up_to_phase(circuit_unitary(r), circuit_unitary(rm)) < 1e-12);

    // runs do not merge across two-qubit gates
    Circuit b(2);
    b.append(Gate::rx(0, 0.3, 0.035));
    b.append(Gate::cnot(0, 1, 0.45));
    b.append(Gate::rx(0, 0.4, 0.035));
    Circuit bm = merge_single_qubit(b);
    REQUIRE(bm.count_kind(GateKind::CNOT) == 1);
    REQUIRE(bm.count_kind(GateKind::RX) == 2);
    REQUIRE(dist_up_to_phase(circuit_unitary(b), circuit_unitary(bm)) < 1e-12);
}

TEST_CASE("u3 recovers arbitrary single-qubit unitaries", "[circuit]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Matrix2cd v = rx_matrix(ang(rng)) * rz_matrix(ang(rng)) * rx_matrix(ang(rng));
        auto [th, ph, la] = u3_params_from_matrix(v);
        REQUIRE(dist_up_to_phase(v, u3_matrix(th, ph, la)) < 1e-12);
    }
    // hadamard as U(pi/2, 0, pi)
    Eigen::Matrix2cd h;
    h << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
    REQUIRE(dist_up_to_phase(h, u3_matrix(kPi / 2, 0, kPi)) < 1e-12);
}

TEST_CASE("insert_dd fills idle windows and keeps timing and unitary", "[circuit]") {
    Topology t = chain_topology(4);
    Circuit ghz = build_ghz(t, {0, 1, 2, 3});
    append_measurement(ghz, {0, 1, 2, 3}, 'Z');
    Circuit dd = insert_dd(ghz, DDSequence::x2);
    REQUIRE(dd.gate_count() > ghz.gate_count());
    REQUIRE(total_time(dd) == Approx(total_time(ghz)));
    REQUIRE(dist_up_to_phase(circuit_unitary(ghz), circuit_unitary(dd)) < 1e-10);

    // noiseless states agree up to global phase
    Statevector a = evolve_exact(ghz), b = evolve_exact(dd);
    Eigen::MatrixXcd ma(a.amps.size(), 1), mb(b.amps.size(), 1);
    for (size_t i = 0; i < a.amps.size(); ++i) {
        ma(i, 0) = a.amps[i];
        mb(i, 0) = b.amps[i];
    }
    REQUIRE(dist_up_to_phase(ma, mb) < 1e-10);

    // a circuit with no idle time is unchanged
    Circuit tight(1);
    tight.append(Gate::rx(0, 1.0, 0.035));
    tight.append(Gate::rx(0, 0.5, 0.035));
    Circuit tight_dd = insert_dd(tight, DDSequence::x2);
    REQUIRE(tight_dd.gate_count() == tight.gate_count());

    // explicit delays are left alone
    Circuit t1c = build_t1({0}, 10.0, 1.0, 1);
    REQUIRE(insert_dd(t1c, DDSequence::x2).gate_count() == t1c.gate_count());
}

TEST_CASE("dd sequences xy4 and xy8 are identity-equivalent", "[circuit]") {
    for (DDSequence seq : {DDSequence::x2, DDSequence::xy4, DDSequence::xy8}) {
        Circuit c(2);
        c.append(Gate::rx(0, 0.7, 0.035));
        c.add_moment({Gate::delay(0, 5.0)});  // protected explicit delay on 0
        c.add_moment({Gate::rx(0, 0.1, 0.035), Gate::rx(1, 0.2, 0.035)});
        // qubit 1 then idles while qubit 0 works
        c.add_moment({Gate::rx(0, 0.3, 2.0)});
        c.add_moment({Gate::rx(1, -0.2, 0.035)});
        Circuit dd = insert_dd(c, seq);
        REQUIRE(total_time(dd) == Approx(total_time(c)));
        REQUIRE(dist_up_to_phase(circuit_unitary(c), circuit_unitary(dd)) < 1e-10);
        if (seq != DDSequence::x2) REQUIRE(dd.gate_count() > insert_dd(c, DDSequence::x2).gate_count() - 1);
    }
}

TEST_CASE("twirl preserves the unitary and is seeded", "[circuit]") {
    Topology t = chain_topology(3);
    EdgeColoring col = color_edges(t);
    Circuit c = build_trotter(t, col, 0.5236, 1.0, 0.5, 2, DecompositionMode::native_rzz);

    auto instances = twirl(c, 42, 4);
    REQUIRE(instances.size() == 4);
    Eigen::MatrixXcd ref = circuit_unitary(c);
    for (const auto& inst : instances)
        REQUIRE(dist_up_to_phase(ref, circuit_unitary(inst)) < 1e-10);

    // deterministic under the same seed
    auto again = twirl(c, 42, 4);
    REQUIRE(circuit_to_json(again[2]) == circuit_to_json(instances[2]));
    auto other = twirl(c, 43, 4);
    bool any_diff = false;
    for (int k = 0; k < 4; ++k)
        if (circuit_to_json(other[k]) != circuit_to_json(instances[k])) any_diff = true;
    REQUIRE(any_diff);

    // cnot twirling too
    Circuit cx = build_trotter(t, col, 0.5236, 1.0, 0.5, 1, DecompositionMode::cnot_pair);
    for (const auto& inst : twirl(cx, 7, 3))
        REQUIRE(dist_up_to_phase(circuit_unitary(cx), circuit_unitary(inst)) < 1e-10);

    // merging the twirl gates adds no circuit time
    Circuit merged = merge_single_qubit(instances[0]);
    REQUIRE(total_time(merged) == Approx(total_time(c)));
    REQUIRE(dist_up_to_phase(ref, circuit_unitary(merged)) < 1e-10);
}

TEST_CASE("cnot conjugation table matches matrix conjugation", "[circuit]") {
    Eigen::MatrixXcd cx = cnot_matrix();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            Pauli pa = static_cast<Pauli>(a), pb = static_cast<Pauli>(b);
            auto [qa, qb] = cnot_conjugate(pa, pb);
            Eigen::MatrixXcd lhs = cx * kron(pauli_matrix(pa), pauli_matrix(pb)) * cx;
            Eigen::MatrixXcd rhs = kron(pauli_matrix(qa), pauli_matrix(qb));
            REQUIRE(dist_up_to_phase(lhs, rhs) < 1e-12);
        }
}

TEST_CASE("circuit json round trip", "[circuit]") {
    Topology t = chain_topology(3);
    Circuit c = build_trotter(t, color_edges(t), 0.3, 1.0, 0.5, 1, DecompositionMode::cnot_pair);
    append_measurement(c, {0, 1, 2}, 'X');
    Circuit back = circuit_from_json(circuit_to_json(c));
    REQUIRE(circuit_to_json(back) == circuit_to_json(c));
}
