import itertools

import numpy as np
import pytest

from gabor_polar.core import inner, phase_distance, tf_shift
from gabor_polar.framegen import (
    Lattice,
    MeasurementVector,
    assemble_frame,
    build_auxiliary,
    frame_coefficients,
    full_spark_check,
    measure,
    random_window,
)
from gabor_polar.phasegraph import build_edges, connected_components
from gabor_polar.recover import (
    EdgeUndefinedError,
    OrderingError,
    RankDeficientError,
    SubspacePrior,
    angular_sync,
    polarization_product,
    propagate_phases,
    reconstruct,
    reconstruct_subspace,
    relative_phase,
    solve_coefficients,
    weighted_graph,
)
from gabor_polar.settools import IndexSet, beta, difference_set

from conftest import crandn


def aux_measurements(x, g, k, l, q, p):
    return np.array([abs(inner(x, tf_shift(build_auxiliary(g, q, p, t), (k, l)))) ** 2
                     for t in range(3)])


@pytest.mark.parametrize("M", [3, 4, 6, 8])
def test_polarization_recovers_coefficient_products(M, rng):
    g = random_window(M, M).values
    x = crandn(rng, M)
    worst = 0.0
    for k, l, q, p in itertools.product(range(M), repeat=4):
        lhs = inner(x, tf_shift(g, (k, l))) * np.conj(inner(x, tf_shift(g, (k + q, l + p))))
        rhs = polarization_product(aux_measurements(x, g, k, l, q, p), k, p, M)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    assert worst <= 1e-10


def test_polarization_weight_sign_matters(rng):
    """Weighting by exp(+2 pi i t/3) yields a different quantity, not a conj(b)."""
    M = 8
    g = random_window(M, 0).values
    x = crandn(rng, M)
    k, l, q, p = 2, 3, 1, 5
    meas = aux_measurements(x, g, k, l, q, p)
    lhs = inner(x, tf_shift(g, (k, l))) * np.conj(inner(x, tf_shift(g, (k + q, l + p))))
    plus = np.exp(2j * np.pi * k * p / M) / 3 * sum(
        np.exp(2j * np.pi * t / 3) * meas[t] for t in range(3))
    assert abs(plus - lhs) > 1e-3 * abs(lhs)
    assert abs(polarization_product(meas, k, p, M) - lhs) <= 1e-12 * abs(lhs)


def test_polarization_scalar_instances():
    def meas(a, b):
        return np.array([abs(a + np.exp(-2j * np.pi * t / 3) * b) ** 2 for t in range(3)])

    assert polarization_product(meas(1, 1), 0, 0, 5) == pytest.approx(1, abs=1e-15)
    assert polarization_product(meas(1, 0), 0, 0, 5) == pytest.approx(0, abs=1e-15)
    a, b = 0.3 - 2j, 1.1 + 0.4j
    assert polarization_product(meas(a, b), 0, 0, 5) == pytest.approx(a * np.conj(b), abs=1e-14)


@pytest.mark.parametrize("M", [4, 8])
def test_relative_phase_consistency(M, rng):
    g = random_window(M, 1).values
    x = crandn(rng, M)
    for k, l, q, p in itertools.product(range(M), range(M), (1, M - 1), (0, 3)):
        a = inner(x, tf_shift(g, (k, l)))
        b = inner(x, tf_shift(g, (k + q, l + p)))
        omega, raw = relative_phase(aux_measurements(x, g, k, l, q, p), abs(a), abs(b), k, p, M)
        assert abs(abs(omega) - 1) <= 1e-12
        assert abs(omega * abs(a) * abs(b) - a * np.conj(b)) <= 1e-9 * abs(a * b)
        assert raw == pytest.approx(1, abs=1e-9)


def test_relative_phase_undefined():
    with pytest.raises(EdgeUndefinedError):
        relative_phase(np.ones(3), 0.0, 1.0, 0, 0, 4)


def _truth_graph(M, Q, P, seed):
    """Phase graph weighted with exact relative phases of a random x."""
    frame = assemble_frame(random_window(M, seed), Lattice.full(M), Q, P)
    x = crandn(np.random.default_rng(seed), M)
    c = frame_coefficients(frame, x)[: M * M]
    graph = build_edges(frame.lattice, Q, P)
    u = c / np.abs(c)
    w = u[graph.edges[:, 0]] * np.conj(u[graph.edges[:, 1]])
    return graph.with_weights(w), u


def test_propagate_two_vertices():
    lat = Lattice(IndexSet(3, (0, 1)), IndexSet(3, (0,)))
    graph = build_edges(lat, IndexSet(3, (1,)), IndexSet(3, (0,)))
    assert graph.n_edges == 1
    w = np.exp(0.7j)
    phases = propagate_phases(graph.with_weights([w]), (0, 0))
    # omega_(a,b) = phase(a) conj(phase(b)), so phase(b) = conj(omega)
    assert phases[(0, 0)] == 1
    assert phases[(1, 0)] == pytest.approx(np.conj(w))
    with pytest.raises(KeyError):
        propagate_phases(graph.with_weights([w]), (0, 0))[(2, 0)]


@pytest.mark.parametrize("M", [5, 8])
def test_propagate_and_sync_match_truth(M):
    Q = P = beta(M, 5).witness
    graph, u = _truth_graph(M, Q, P, seed=M)
    prop = propagate_phases(graph, (0, 0))
    est = np.array([prop[v] for v in graph.vertices])
    assert phase_distance(est, u) <= 1e-8 * np.sqrt(M * M)
    sync = angular_sync(graph)
    assert sync.converged
    est2 = np.array([sync.phases[v] for v in graph.vertices])
    assert phase_distance(est2, est) <= 1e-6


def test_cycle_consistency():
    M = 6
    graph, _ = _truth_graph(M, IndexSet(M, (0, 1, 2)), IndexSet(M, (0, 1)), seed=3)
    adj = {}
    for e, (a, b) in enumerate(graph.edges):
        adj[(a, b)] = graph.weights[e]
        adj[(b, a)] = np.conj(graph.weights[e])
    triangles = 0
    for (a, b), wab in adj.items():
        for c in range(graph.n_vertices):
            if (b, c) in adj and (c, a) in adj:
                assert abs(wab * adj[(b, c)] * adj[(c, a)] - 1) <= 1e-8
                triangles += 1
    assert triangles > 0


def test_sync_single_vertex():
    lat = Lattice(IndexSet(4, (1,)), IndexSet(4, (2,)))
    graph = build_edges(lat, IndexSet(4, (0,)), IndexSet(4, (0,))).with_weights([])
    assert angular_sync(graph).phases == {(1, 2): 1}


def test_sync_rank_one_eigenvalue(rng):
    M = 4
    n = M * M
    graph = build_edges(Lattice.full(M), IndexSet.full(M), IndexSet.full(M))
    z = np.exp(2j * np.pi * rng.random(n))
    graph = graph.with_weights(z[graph.edges[:, 0]] * np.conj(z[graph.edges[:, 1]]))
    sync = angular_sync(graph)
    # H = z z^* with zero diagonal on a complete component: top eigenvalue n - 1
    assert sync.eigenvalue == pytest.approx(n - 1, abs=1e-9)
    assert np.linalg.eigvalsh(np.outer(z, z.conj()))[-1] == pytest.approx(n)
    est = np.array([sync.phases[v] for v in graph.vertices])
    assert phase_distance(est, z) <= 1e-8


def test_solve_round_trip(rng):
    M = 6
    g = random_window(M, 2)
    x = crandn(rng, M)
    verts = [(k, l) for k in range(M) for l in range(M)]
    pick = [verts[i] for i in rng.choice(len(verts), size=M, replace=False)]
    coeffs = [inner(x, tf_shift(g.values, v)) for v in pick]
    sol = solve_coefficients(g, pick, coeffs)
    assert np.max(np.abs(sol.x - x)) <= 1e-8
    rot = solve_coefficients(g, pick, np.exp(0.4j) * np.array(coeffs))
    np.testing.assert_allclose(rot.x, np.exp(0.4j) * sol.x, atol=1e-10)
    many = solve_coefficients(g, verts, [inner(x, tf_shift(g.values, v)) for v in verts])
    assert many.residual <= 1e-10
    assert many.rank == M


def test_solve_rank_deficient():
    M = 4
    g = random_window(M, 0)
    with pytest.raises(RankDeficientError) as info:
        solve_coefficients(g, [(0, 0)] * 5, np.ones(5))
    assert info.value.condition_number > 1e10 or np.isinf(info.value.condition_number)
    with pytest.raises(RankDeficientError):
        solve_coefficients(g, [(0, 0)], np.ones(1))


def _frame(M, seed=0):
    Q = P = beta(M, 4).witness
    return assemble_frame(random_window(M, seed), Lattice.full(M), Q, P)


@pytest.mark.parametrize("method", ["sync", "propagate"])
def test_reconstruct_round_trip(method, rng):
    frame = _frame(8)
    x = crandn(rng, 8)
    res = reconstruct(frame, measure(frame, x), method=method, truth=x)
    assert res.success
    assert res.component_size == 64
    assert phase_distance(res.estimate, x) <= 1e-6
    assert res.residual == phase_distance(res.estimate, x)


def test_reconstruct_zero_signal():
    frame = _frame(8)
    res = reconstruct(frame, measure(frame, np.zeros(8)))
    assert res.success
    np.testing.assert_array_equal(res.estimate, 0)


def test_reconstruct_global_phase_class(rng):
    frame = _frame(8, seed=3)
    x = crandn(rng, 8)
    a = reconstruct(frame, measure(frame, x))
    b = reconstruct(frame, measure(frame, np.exp(2.1j) * x))
    assert phase_distance(a.estimate, b.estimate) <= 1e-9


def test_reconstruct_refuses_without_edges(rng):
    M = 8
    frame = assemble_frame(random_window(M, 0), Lattice.full(M), IndexSet(M, (0,)),
                           IndexSet(M, (0,)))
    res = reconstruct(frame, measure(frame, crandn(rng, M)))
    assert res.status == "component_too_small"
    assert res.estimate is None
    assert res.component_size == 1


def test_reconstruct_ordering_contract(rng):
    frame = _frame(4)
    b = measure(frame, crandn(rng, 4))
    perm = rng.permutation(len(b))
    shuffled = MeasurementVector(b.values[perm], tuple(b.index[i] for i in perm))
    with pytest.raises(OrderingError):
        reconstruct(frame, shuffled)
    keep = [i for i, (tag, _, _) in enumerate(b.index) if tag != "q1p0t2"]
    missing = MeasurementVector(b.values[keep], tuple(b.index[i] for i in keep))
    with pytest.raises(OrderingError, match=r"\(1, 0, 2\)"):
        reconstruct(frame, missing)


def test_weighted_graph_phases_exact(rng):
    frame = _frame(8, seed=5)
    x = crandn(rng, 8)
    graph, mags, raw = weighted_graph(frame, measure(frame, x))
    c = frame_coefficients(frame, x)[:64]
    np.testing.assert_allclose(mags, np.abs(c), rtol=1e-12)
    u = c / np.abs(c)
    expect = u[graph.edges[:, 0]] * np.conj(u[graph.edges[:, 1]])
    assert np.max(np.abs(graph.weights - expect)) <= 1e-9
    assert np.max(np.abs(raw - 1)) <= 1e-9


def _subspace_setup(seed, M=32, d=4):
    T = IndexSet(M, (0, 1, 2, 5, 12))
    lat = Lattice(T, T)
    frame = assemble_frame(random_window(M, seed), lat, difference_set(T), difference_set(T))
    rng = np.random.default_rng(seed)
    W = crandn(rng, M, d)
    return frame, W, W @ crandn(rng, d)


def test_subspace_round_trip():
    frame, W, x = _subspace_setup(7)
    assert 4 * 4 < len(frame.lattice) < 4 * 32
    res = reconstruct_subspace(frame, SubspacePrior(W), measure(frame, x), truth=x)
    assert res.success and res.dimension == 4
    assert phase_distance(res.estimate, x) <= 1e-6


def test_subspace_identity_prior_matches_reconstruct(rng):
    frame = _frame(8, seed=2)
    x = crandn(rng, 8)
    b = measure(frame, x)
    full = reconstruct(frame, b)
    sub = reconstruct_subspace(frame, SubspacePrior(np.eye(8)), b)
    assert sub.status == full.status and sub.component_size == full.component_size
    np.testing.assert_allclose(sub.estimate, full.estimate, atol=1e-12)


def test_subspace_rank_certificate(rng):
    W = crandn(rng, 8, 3)
    W[:, 2] = W[:, 0] + W[:, 1]
    with pytest.raises(RankDeficientError):
        SubspacePrior(W)
    with pytest.raises(ValueError):
        SubspacePrior(crandn(rng, 3, 5))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_projected_gabor_system_full_spark(d, rng):
    M = 6
    lat = Lattice(IndexSet(M, (0, 3)), IndexSet(M, (0, 1, 2, 4, 5)))
    assert len(lat) <= 10
    g = random_window(M, d)
    assert full_spark_check(g, lat).full_spark
    W = crandn(rng, M, d)
    rep = full_spark_check(g, lat, basis=W)
    assert rep.size == d and rep.full_spark
    from math import comb
    assert rep.checked == comb(len(lat), d)


def test_component_size_reported(rng):
    frame = _frame(12, seed=1)
    x = crandn(rng, 12)
    res = reconstruct(frame, measure(frame, x))
    graph, _, _ = weighted_graph(frame, measure(frame, x))
    assert res.component_size == connected_components(graph).max_size == 144
