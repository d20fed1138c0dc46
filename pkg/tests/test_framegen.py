import itertools

import numpy as np
import pytest

from gabor_polar.core import inner, tf_shift
from gabor_polar.framegen import (
    FrameValidationError,
    Lattice,
    MeasurementVector,
    Window,
    WindowError,
    assemble_frame,
    auxiliary_mask,
    build_auxiliary,
    full_spark_check,
    measure,
    parse_window_tag,
    random_window,
    window_tag,
)
from gabor_polar.settools import BudgetExceededError, IndexSet, difference_set

from conftest import crandn


def test_random_window_contract():
    g = random_window(12, 5)
    assert abs(g.norm - 1) <= 1e-12
    np.testing.assert_array_equal(g.values, random_window(12, 5).values)
    assert g.min_modulus >= 1e-8


def test_random_window_rejection_threshold():
    M = 6
    g = random_window(M, 1, min_modulus=0.25)
    assert np.abs(g.values).min() >= 0.25


def test_random_window_mean_is_zero():
    M, n = 4, 10_000
    vals = np.array([random_window(M, s).values for s in range(n)])
    # each real/imag part has variance 1/(2M) on the unit sphere
    sigma = np.sqrt(1 / (2 * M) / n)
    assert np.all(np.abs(vals.real.mean(axis=0)) <= 5 * sigma)
    assert np.all(np.abs(vals.imag.mean(axis=0)) <= 5 * sigma)


def test_window_rejects_zero_coordinate():
    with pytest.raises(WindowError, match="coordinate 2"):
        Window([1, 1, 0, 1])
    e1 = np.zeros(5)
    e1[0] = 1
    with pytest.raises(WindowError):
        Window(e1 / np.linalg.norm(e1))


def test_build_auxiliary_zero_shift(rng):
    g = Window(crandn(rng, 7))
    np.testing.assert_allclose(build_auxiliary(g, 0, 0, 0), 2 * g.values, atol=1e-15)
    for t in range(3):
        np.testing.assert_allclose(build_auxiliary(g, 0, 0, t),
                                   (1 + np.exp(2j * np.pi * t / 3)) * g.values, atol=1e-14)


def test_build_auxiliary_division_error():
    with pytest.raises(WindowError, match=r"g\(1\)"):
        build_auxiliary(np.array([1, 0, 1, 1]), 1, 1, 0)
    with pytest.raises(WindowError, match=r"g\(3\)"):
        auxiliary_mask(np.array([1, 1, 1, 0]), 1, 1, 0)


@pytest.mark.parametrize("M", [1, 2, 3, 5, 8])
def test_auxiliary_is_masked_window_and_shift_sum(M, rng):
    g = Window(crandn(rng, M))
    for q, p, t in itertools.product(range(M), range(M), range(3)):
        aux = build_auxiliary(g, q, p, t)
        np.testing.assert_allclose(aux, g.values * auxiliary_mask(g, q, p, t), atol=1e-12)
        for k, l in [(0, 0), (1 % M, 2 % M), (M - 1, M - 1)]:
            # as vectors the phases are conjugate to those in the inner-product identity:
            # pi(k,l) g_qpt = pi(k,l) g + e^{2 pi i t/3} e^{-2 pi i k p/M} pi(k+q, l+p) g
            lhs = tf_shift(aux, (k, l))
            rhs = tf_shift(g.values, (k, l)) + np.exp(2j * np.pi * t / 3) * np.exp(
                -2j * np.pi * k * p / M) * tf_shift(g.values, (k + q, l + p))
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("M", [4, 6, 8])
def test_auxiliary_inner_product_identity(M, rng):
    g = Window(crandn(rng, M))
    x = crandn(rng, M)
    worst = 0.0
    for q, p, t, k, l in itertools.product(range(M), range(M), range(3), range(M), range(M)):
        lhs = inner(x, tf_shift(build_auxiliary(g, q, p, t), (k, l)))
        rhs = inner(x, tf_shift(g.values, (k, l))) + np.exp(-2j * np.pi * t / 3) * np.exp(
            2j * np.pi * k * p / M) * inner(x, tf_shift(g.values, (k + q, l + p)))
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    assert worst <= 1e-10


def test_frame_cardinality_and_norms(rng):
    M = 4
    g = random_window(M, 0)
    frame = assemble_frame(g, Lattice.full(M), IndexSet(M, (1,)), IndexSet(M, (3,)))
    assert len(frame) == 64 == 16 * (1 + 3)
    V = frame.vectors()
    assert V.shape == (64, M)
    assert np.all(np.isfinite(V))
    np.testing.assert_allclose(np.linalg.norm(V[:16], axis=1), g.norm, rtol=1e-13)
    assert frame.aux.shape == (1, 1, 3, M)


def test_frame_cardinality_general(rng):
    M = 10
    T = IndexSet(M, (0, 3, 4))
    F = IndexSet(M, (1, 2, 5, 9))
    Q = IndexSet(M, (0, 1, 7))
    P = IndexSet(M, (3, 4))
    frame = assemble_frame(random_window(M, 2), Lattice(T, F), Q, P)
    assert len(frame) == 12 * (1 + 3 * 3 * 2) == len(frame.index()) == frame.vectors().shape[0]


def test_frame_validation():
    M = 8
    g = random_window(M, 0)
    T = IndexSet(M, (0, 1))
    lat = Lattice(T, IndexSet.full(M))
    with pytest.raises(FrameValidationError, match="T - T"):
        assemble_frame(g, lat, IndexSet(M, (2,)), IndexSet(M, (1,)))
    assert difference_set(T).members == (0, 1, 7)
    assemble_frame(g, lat, IndexSet(M, (7,)), IndexSet(M, (1,)))
    with pytest.raises(WindowError):
        assemble_frame(np.r_[0.0, np.ones(M - 1)], lat, IndexSet(M, (1,)), IndexSet(M, (1,)))
    with pytest.raises(FrameValidationError):
        Lattice(IndexSet(M, ()), IndexSet.full(M))
    with pytest.raises(FrameValidationError):
        Lattice(IndexSet.full(4), IndexSet.full(5))


def test_frame_index_is_canonical():
    M = 5
    T, F = IndexSet(M, (0, 2)), IndexSet(M, (1, 3, 4))
    Q, P = IndexSet(M, (0, 2)), IndexSet(M, (2,))
    frame = assemble_frame(random_window(M, 1), Lattice(T, F), Q, P)
    idx = frame.index()
    assert len(set(idx)) == len(idx)
    assert idx[:6] == [("g", k, l) for k in (0, 2) for l in (1, 3, 4)]
    tags = [tag for tag, _, _ in idx[6::6]]
    assert tags == ["q0p2t0", "q0p2t1", "q0p2t2", "q2p2t0", "q2p2t1", "q2p2t2"]
    assert [parse_window_tag(t) for t in tags][3] == (2, 2, 0)
    assert parse_window_tag(window_tag()) is None
    with pytest.raises(ValueError):
        parse_window_tag("x1p2t3")


@pytest.mark.parametrize("M", [3, 6, 8])
def test_measure_matches_brute_force(M, rng):
    T = IndexSet(M, (0, 1))
    F = IndexSet(M, tuple(range(0, M, 2)))
    Q = difference_set(T)
    P = IndexSet(M, (0, 2 % M))
    frame = assemble_frame(random_window(M, 4), Lattice(T, F), Q, P)
    x = crandn(rng, M)
    b = measure(frame, x)
    brute = np.abs(frame.vectors().conj() @ x) ** 2
    np.testing.assert_allclose(b.values, brute, rtol=1e-12, atol=1e-14)
    assert list(b.index) == frame.index()


def test_measure_zero_and_phase_invariance(rng):
    M = 8
    frame = assemble_frame(random_window(M, 0), Lattice.full(M), IndexSet(M, (0, 1, 3)),
                           IndexSet(M, (0, 5)))
    np.testing.assert_array_equal(measure(frame, np.zeros(M)).values, 0)
    x = crandn(rng, M)
    base = measure(frame, x).values
    for theta in (np.pi / 3, 1.0, 2.5):
        rot = measure(frame, np.exp(1j * theta) * x).values
        assert np.max(np.abs(rot - base)) <= 1e-12 * base.max()


@pytest.mark.parametrize("M", [2, 4, 5, 8])
def test_full_gabor_system_is_tight(M, rng):
    g = crandn(rng, M)
    x = crandn(rng, M)
    frame = assemble_frame(g, Lattice.full(M), IndexSet(M, (0,)), IndexSet(M, (0,)))
    primary = measure(frame, x).values[: M * M]
    brute = sum(abs(inner(x, tf_shift(g, (k, l)))) ** 2 for k in range(M) for l in range(M))
    expect = M * np.linalg.norm(x) ** 2 * np.linalg.norm(g) ** 2
    assert primary.sum() == pytest.approx(expect, rel=1e-12)
    assert brute == pytest.approx(expect, rel=1e-12)


def test_measurement_vector_validation():
    with pytest.raises(ValueError):
        MeasurementVector(np.array([1.0, -1.0]), (("g", 0, 0), ("g", 0, 1)))
    with pytest.raises(ValueError):
        MeasurementVector(np.array([1.0, 1.0]), (("g", 0, 0), ("g", 0, 0)))


def test_full_spark_small_example():
    M = 4
    lat = Lattice(IndexSet(M, (0, 1)), IndexSet.full(M))
    rep = full_spark_check(random_window(M, 11), lat)
    assert rep.checked == 70
    assert rep.full_spark and rep.failures == []
    assert rep.min_margin > 1e-10


def test_full_spark_reports_failures():
    # constant window: pi(0,l) 1 and pi(1,l) 1 coincide
    M = 4
    lat = Lattice(IndexSet(M, (0, 1)), IndexSet.full(M))
    rep = full_spark_check(np.ones(M), lat)
    assert not rep.full_spark
    assert (0, 4, 1, 2) not in rep.failures  # subsets are sorted tuples
    assert (0, 1, 2, 4) in rep.failures
    assert rep.min_margin <= 1e-10


def test_full_spark_budget_and_montecarlo(monkeypatch):
    M = 6
    lat = Lattice.full(M)
    g = random_window(M, 0)
    with pytest.raises(BudgetExceededError, match="montecarlo"):
        full_spark_check(g, lat, budget=1000)
    rep = full_spark_check(g, lat, mode="montecarlo", trials=500, seed=3)
    assert rep.checked == 500 and rep.mode == "montecarlo"
    again = full_spark_check(g, lat, mode="montecarlo", trials=500, seed=3)
    assert rep.min_margin == again.min_margin
    monkeypatch.setenv("GABOR_POLAR_BUDGET", "10")
    with pytest.raises(BudgetExceededError):
        full_spark_check(random_window(4, 0), Lattice(IndexSet(4, (0, 1)), IndexSet.full(4)))
