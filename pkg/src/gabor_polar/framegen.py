"""Windows, lattices, the multi-window Gabor frame and its phaseless measurements.

Frame vectors are enumerated in a fixed order: the primary block
``pi(k, l) g`` over ``T x F`` (lexicographic in ``(k, l)``), then one block per
auxiliary window ``g_qpt`` ordered by ``(q, p, t)`` and, inside each block,
again by ``(k, l)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .core import DimensionError, as_signal, make_rng, tf_shift
from .settools import BudgetExceededError, IndexSet, difference_set, search_budget

__all__ = [
    "MIN_WINDOW_MODULUS",
    "SPARK_THRESHOLD",
    "DEFAULT_SPARK_BUDGET",
    "WindowError",
    "FrameValidationError",
    "Window",
    "Lattice",
    "MultiWindowGaborFrame",
    "MeasurementVector",
    "SparkReport",
    "random_window",
    "auxiliary_mask",
    "build_auxiliary",
    "assemble_frame",
    "measure",
    "frame_coefficients",
    "full_spark_check",
    "window_tag",
    "parse_window_tag",
]

MIN_WINDOW_MODULUS = 1e-8
SPARK_THRESHOLD = 1e-10
DEFAULT_SPARK_BUDGET = 10**6

PRIMARY_TAG = "g"


class WindowError(ValueError):
    """A primary window vanishes somewhere or is otherwise malformed."""


class FrameValidationError(ValueError):
    """Shift sets or lattice are inconsistent with the frame construction."""


def window_tag(q=None, p=None, t=None) -> str:
    """``"g"`` for the primary window, ``"q{q}p{p}t{t}"`` for ``g_qpt``."""
    if q is None:
        return PRIMARY_TAG
    return f"q{q}p{p}t{t}"


def parse_window_tag(tag: str):
    """Inverse of :func:`window_tag`; returns ``None`` or ``(q, p, t)``."""
    if tag == PRIMARY_TAG:
        return None
    try:
        assert tag[0] == "q"
        q, rest = tag[1:].split("p", 1)
        p, t = rest.split("t", 1)
        return int(q), int(p), int(t)
    except (AssertionError, IndexError, ValueError):
        raise ValueError(f"malformed window tag {tag!r}") from None


@dataclass(frozen=True)
class Window:
    """Nowhere-vanishing primary window."""

    values: np.ndarray
    min_modulus: float = field(init=False)

    def __post_init__(self):
        g = as_signal(self.values).copy()
        mod = np.abs(g)
        zero = np.flatnonzero(mod == 0)
        if zero.size:
            raise WindowError(f"window vanishes at coordinate {int(zero[0])}")
        g.setflags(write=False)
        object.__setattr__(self, "values", g)
        object.__setattr__(self, "min_modulus", float(mod.min()))

    @property
    def M(self) -> int:
        return self.values.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class Lattice:
    """Lambda = T x F inside Z_M x Z_M."""

    T: IndexSet
    F: IndexSet

    def __post_init__(self):
        if self.T.modulus != self.F.modulus:
            raise FrameValidationError("T and F must share the modulus M")
        if len(self.T) == 0 or len(self.F) == 0:
            raise FrameValidationError("lattice must be nonempty")

    @classmethod
    def full(cls, M):
        return cls(IndexSet.full(M), IndexSet.full(M))

    @property
    def M(self) -> int:
        return self.T.modulus

    @property
    def shape(self):
        return len(self.T), len(self.F)

    def __len__(self):
        return len(self.T) * len(self.F)

    def points(self) -> list:
        return [(k, l) for k in self.T for l in self.F]

    def position(self):
        """Map (k, l) -> vertex index in lexicographic order."""
        nF = len(self.F)
        ti = {k: i for i, k in enumerate(self.T)}
        fi = {l: j for j, l in enumerate(self.F)}
        return lambda k, l: ti[k % self.M] * nF + fi[l % self.M]


def random_window(M: int, seed, min_modulus: float = MIN_WINDOW_MODULUS) -> Window:
    """Unit vector drawn uniformly from the complex sphere in C^M.

    Draws are rejected while some coordinate has modulus below ``min_modulus``.
    """
    rng = make_rng(seed)
    while True:
        g = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        g /= np.linalg.norm(g)
        if np.abs(g).min() >= min_modulus:
            return Window(g)


def auxiliary_mask(g, q: int, p: int, t: int) -> np.ndarray:
    """s_qpt(m) = 1 + exp(2 pi i (m p / M + t / 3)) g(m - q) / g(m)."""
    g = g.values if isinstance(g, Window) else as_signal(g)
    zero = np.flatnonzero(g == 0)
    if zero.size:
        raise WindowError(f"cannot divide by g({int(zero[0])}) = 0")
    M = g.size
    m = np.arange(M)
    phase = np.exp(2j * np.pi * ((m * p) % M / M + t / 3))
    return 1.0 + phase * np.roll(g, q % M) / g


def build_auxiliary(g, q: int, p: int, t: int) -> np.ndarray:
    """Auxiliary window g_qpt = g * s_qpt.

    Evaluated as ``g(m) + exp(2 pi i (m p / M + t / 3)) g(m - q)``, which equals
    the masked product exactly but avoids the division. The result is not
    normalized and may vanish at some coordinates.
    """
    g = g.values if isinstance(g, Window) else as_signal(g)
    zero = np.flatnonzero(g == 0)
    if zero.size:
        raise WindowError(f"cannot divide by g({int(zero[0])}) = 0")
    M = g.size
    m = np.arange(M)
    phase = np.exp(2j * np.pi * ((m * p) % M / M + t / 3))
    return g + phase * np.roll(g, q % M)


@dataclass(frozen=True)
class MultiWindowGaborFrame:
    g: Window
    lattice: Lattice
    Q: IndexSet
    P: IndexSet
    aux: np.ndarray = field(repr=False)  # (|Q|, |P|, 3, M)

    @property
    def M(self) -> int:
        return self.g.M

    @property
    def n_windows(self) -> int:
        return 1 + 3 * len(self.Q) * len(self.P)

    def __len__(self):
        return len(self.lattice) * self.n_windows

    def windows(self):
        """Yield ``(tag, window_values)`` in canonical block order."""
        yield window_tag(), self.g.values
        for (i, q), (j, p) in itertools.product(enumerate(self.Q), enumerate(self.P)):
            for t in range(3):
                yield window_tag(q, p, t), self.aux[i, j, t]

    def index(self) -> list:
        """``(window_tag, k, l)`` for every frame vector, in canonical order."""
        pts = self.lattice.points()
        return [(tag, k, l) for tag, _ in self.windows() for k, l in pts]

    def vectors(self) -> np.ndarray:
        """All frame vectors as rows, canonical order. Brute-force path."""
        pts = self.lattice.points()
        return np.array([tf_shift(w, lam) for _, w in self.windows() for lam in pts])

    def split(self, values):
        """Reshape a flat measurement array into primary and auxiliary blocks.

        Returns ``(primary, aux)`` with shapes ``(|T|, |F|)`` and
        ``(|Q|, |P|, 3, |T|, |F|)``.
        """
        values = np.asarray(values)
        nT, nF = self.lattice.shape
        if values.shape != (len(self),):
            raise DimensionError(f"expected {len(self)} measurements, got {values.shape}")
        primary = values[: nT * nF].reshape(nT, nF)
        aux = values[nT * nF:].reshape(len(self.Q), len(self.P), 3, nT, nF)
        return primary, aux


def assemble_frame(g, lattice: Lattice, Q: IndexSet, P: IndexSet) -> MultiWindowGaborFrame:
    """Multi-window frame {g} together with g_qpt for q in Q, p in P, t in {0,1,2}."""
    if not isinstance(g, Window):
        g = Window(g)
    M = g.M
    if lattice.M != M or Q.modulus != M or P.modulus != M:
        raise FrameValidationError("window, lattice, Q and P must share the modulus M")
    if len(Q) == 0 or len(P) == 0:
        raise FrameValidationError("Q and P must be nonempty")
    if not Q.issubset(difference_set(lattice.T)):
        bad = sorted(set(Q) - set(difference_set(lattice.T)))
        raise FrameValidationError(f"Q is not inside T - T (offending {bad})")
    if not P.issubset(difference_set(lattice.F)):
        bad = sorted(set(P) - set(difference_set(lattice.F)))
        raise FrameValidationError(f"P is not inside F - F (offending {bad})")
    aux = np.empty((len(Q), len(P), 3, M), dtype=np.complex128)
    for (i, q), (j, p) in itertools.product(enumerate(Q), enumerate(P)):
        for t in range(3):
            aux[i, j, t] = build_auxiliary(g, q, p, t)
    aux.setflags(write=False)
    return MultiWindowGaborFrame(g, lattice, Q, P, aux)


@dataclass(frozen=True)
class MeasurementVector:
    values: np.ndarray
    index: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != len(self.index):
            raise ValueError("values and index must align")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("measurements must be finite and nonnegative")
        if len(set(self.index)) != len(self.index):
            raise ValueError("duplicate measurement index")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "index", tuple(tuple(i) for i in self.index))

    def __len__(self):
        return self.values.size


def _coefficients(x, w, lattice: Lattice) -> np.ndarray:
    """<x, pi(k, l) w> for (k, l) in T x F as a (|T|, |F|) array.

    <x, M_l T_k w> = sum_m x(m) conj(w(m - k)) exp(-2 pi i l m / M), an
    unnormalized DFT in m for each time shift k.
    """
    T = np.asarray(lattice.T.members)
    F = np.asarray(lattice.F.members)
    M = x.size
    m = np.arange(M)
    shifted = np.conj(w[(m[None, :] - T[:, None]) % M])
    return np.fft.fft(x[None, :] * shifted, axis=1)[:, F]


def frame_coefficients(frame: MultiWindowGaborFrame, x) -> np.ndarray:
    """All <x, phi_j> in canonical order."""
    x = as_signal(x, frame.M)
    return np.concatenate([_coefficients(x, w, frame.lattice).ravel()
                           for _, w in frame.windows()])


def measure(frame: MultiWindowGaborFrame, x) -> MeasurementVector:
    """Phaseless measurements |<x, phi_j>|^2 in canonical order."""
    c = frame_coefficients(frame, x)
    return MeasurementVector(np.abs(c) ** 2, tuple(frame.index()))


@dataclass
class SparkReport:
    full_spark: bool
    mode: str
    size: int
    checked: int
    failures: list
    min_margin: float
    threshold: float = SPARK_THRESHOLD

    def to_json(self) -> dict:
        return {
            "full_spark": self.full_spark,
            "mode": self.mode,
            "size": self.size,
            "checked": self.checked,
            "failures": [list(f) for f in self.failures],
            "min_margin": self.min_margin,
            "threshold": self.threshold,
        }


def _spark_vectors(g, lattice, basis):
    vecs = np.array([tf_shift(g.values, lam) for lam in lattice.points()]).T
    if basis is not None:
        basis = np.asarray(basis, dtype=np.complex128)
        vecs = basis.conj().T @ vecs
    return vecs  # columns


def _margins(vecs, subsets):
    cols = vecs[:, subsets]  # (n, batch, n)
    cols = np.moveaxis(cols, 1, 0)
    dets = np.abs(np.linalg.det(cols))
    scale = np.prod(np.linalg.norm(cols, axis=1), axis=1)
    return dets / scale


def full_spark_check(g, lattice: Lattice, mode: str = "exhaustive", trials: int = 1000,
                     seed=0, budget: int | None = None, basis=None,
                     threshold: float = SPARK_THRESHOLD, chunk: int = 4096) -> SparkReport:
    """Test whether every n-subset of {pi(lambda) g} is linearly independent.

    ``n`` is M, or d when a basis ``W`` (M x d) is given, in which case the
    vectors checked are ``W^* pi(lambda) g``. A subset fails when
    ``|det| <= threshold * prod(column norms)``. Exhaustive mode refuses if the
    number of subsets exceeds ``budget``; Monte Carlo mode samples ``trials``
    subsets.
    """
    if not isinstance(g, Window):
        g = Window(g)
    vecs = _spark_vectors(g, lattice, basis)
    n, N = vecs.shape
    if N < n:
        raise FrameValidationError(f"need at least {n} lattice points, got {N}")
    if mode == "exhaustive":
        limit = search_budget(DEFAULT_SPARK_BUDGET) if budget is None else budget
        total = comb(N, n)
        if total > limit:
            raise BudgetExceededError(
                f"{total} subsets exceed the exhaustive budget {limit}; use mode='montecarlo'"
            )
        source = itertools.combinations(range(N), n)
    elif mode == "montecarlo":
        rng = make_rng(seed)
        total = int(trials)
        source = (tuple(sorted(rng.choice(N, size=n, replace=False).tolist()))
                  for _ in range(total))
    else:
        raise ValueError(f"unknown spark mode {mode!r}")
    failures = []
    min_margin = np.inf
    checked = 0
    while True:
        block = list(itertools.islice(source, chunk))
        if not block:
            break
        margins = _margins(vecs, np.array(block, dtype=np.intp))
        min_margin = min(min_margin, float(margins.min()))
        failures.extend(block[i] for i in np.flatnonzero(margins <= threshold))
        checked += len(block)
    return SparkReport(not failures, mode, n, checked, failures, min_margin, threshold)
