"""Subsets of Z_M: density, Fourier bias, difference sets and beta(M, C)."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np

from .core import dft, make_rng

__all__ = [
    "IndexSet",
    "BetaResult",
    "BudgetExceededError",
    "density",
    "fourier_bias",
    "check_pseudorandom",
    "bias_constant",
    "beta",
    "difference_set",
    "random_subset",
    "search_budget",
]

# slack for float comparisons of bias against c * density
BIAS_TOL = 1e-12
DEFAULT_BETA_BUDGET = 2**20 - 1


class BudgetExceededError(RuntimeError):
    """An exhaustive search would exceed its enumeration budget."""


def search_budget(default: int) -> int:
    """Budget override from ``GABOR_POLAR_BUDGET``, else ``default``."""
    raw = os.environ.get("GABOR_POLAR_BUDGET")
    if raw is None or raw.strip() == "":
        return default
    value = int(raw)
    if value <= 0:
        raise ValueError("GABOR_POLAR_BUDGET must be a positive integer")
    return value


@dataclass(frozen=True)
class IndexSet:
    """Sorted, duplicate-free subset of Z_M."""

    modulus: int
    members: tuple

    def __post_init__(self):
        M = int(self.modulus)
        if M < 1:
            raise ValueError(f"modulus must be positive, got {self.modulus}")
        mem = tuple(int(m) for m in self.members)
        if any(b <= a for a, b in zip(mem, mem[1:])):
            raise ValueError("members must be strictly increasing")
        if mem and (mem[0] < 0 or mem[-1] >= M):
            raise ValueError(f"members must lie in [0, {M})")
        object.__setattr__(self, "modulus", M)
        object.__setattr__(self, "members", mem)

    @classmethod
    def from_iterable(cls, modulus, values):
        """Reduce ``values`` mod ``modulus``, dropping duplicates."""
        M = int(modulus)
        return cls(M, tuple(sorted({int(v) % M for v in values})))

    @classmethod
    def full(cls, modulus):
        return cls(int(modulus), tuple(range(int(modulus))))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, item):
        return int(item) % self.modulus in set(self.members)

    def indicator(self) -> np.ndarray:
        ind = np.zeros(self.modulus)
        ind[list(self.members)] = 1.0
        return ind

    def issubset(self, other: "IndexSet") -> bool:
        return self.modulus == other.modulus and set(self.members) <= set(other.members)

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "members": list(self.members)}

    @classmethod
    def from_json(cls, obj) -> "IndexSet":
        if not isinstance(obj, dict) or "modulus" not in obj or "members" not in obj:
            raise ValueError('index set must be {"modulus": M, "members": [...]}')
        members = obj["members"]
        if not isinstance(members, list) or not all(
            isinstance(m, int) and not isinstance(m, bool) for m in members
        ):
            raise ValueError("members must be a list of integers")
        return cls(obj["modulus"], tuple(members))


def density(A: IndexSet) -> float:
    return len(A) / A.modulus


def fourier_bias(A: IndexSet) -> float:
    """max over m != 0 of |F(1_A)(m)| with the 1/M-normalized DFT."""
    if A.modulus == 1:
        return 0.0
    return float(np.max(np.abs(dft(A.indicator())[1:])))


def check_pseudorandom(A: IndexSet, c: float) -> bool:
    """True iff ``fourier_bias(A) <= c * density(A)``; the empty set is rejected."""
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    if len(A) == 0:
        raise ValueError("pseudorandomness is undefined for the empty set")
    return fourier_bias(A) <= c * density(A) + BIAS_TOL


def bias_constant(C: float) -> float:
    """c = (C - 3) / (C - 1), the bias ratio that goes with constant C > 3."""
    if not C > 3:
        raise ValueError(f"C must exceed 3, got {C}")
    return (C - 3) / (C - 1)


def difference_set(T: IndexSet) -> IndexSet:
    if len(T) == 0:
        raise ValueError("difference set of the empty set")
    t = np.asarray(T.members)
    return IndexSet.from_iterable(T.modulus, (t[:, None] - t[None, :]).ravel())


def random_subset(M: int, rate: float, seed) -> IndexSet:
    """Each element of Z_M kept independently with probability ``rate``."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    keep = make_rng(seed).random(int(M)) < rate
    return IndexSet(int(M), tuple(np.flatnonzero(keep).tolist()))


@dataclass(frozen=True)
class BetaResult:
    """Outcome of a beta(M, C) search.

    ``status`` is ``"exact"`` for exhaustive search, ``"upper_bound"`` when a
    randomized search found a witness and ``"unknown"`` when it found none.
    """

    M: int
    C: float
    c: float
    value: int | None
    witness: IndexSet | None
    status: str
    mode: str
    checked: int

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "C": self.C,
            "c": self.c,
            "beta": self.value,
            "witness": None if self.witness is None else self.witness.to_json(),
            "status": self.status,
            "mode": self.mode,
            "checked": self.checked,
        }


def _biases(indicators: np.ndarray) -> np.ndarray:
    M = indicators.shape[1]
    if M == 1:
        return np.zeros(indicators.shape[0])
    return np.abs(np.fft.fft(indicators, axis=1)[:, 1:]).max(axis=1) / M


def _beta_exhaustive(M, c, chunk=1 << 16):
    checked = 0
    for k in range(1, M + 1):
        combos = itertools.combinations(range(M), k)
        while True:
            block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
            if block.size == 0:
                break
            ind = np.zeros((block.shape[0], M))
            np.put_along_axis(ind, block, 1.0, axis=1)
            ok = np.flatnonzero(_biases(ind) <= c * k / M + BIAS_TOL)
            if ok.size:
                checked += int(ok[0]) + 1
                # combinations() is lexicographic, so the first hit is the minimum
                return k, IndexSet(M, tuple(block[ok[0]].tolist())), checked
            checked += block.shape[0]
    raise AssertionError("Z_M itself always satisfies the bias bound")


def _beta_randomized(M, c, trials, seed):
    rng = make_rng(seed)
    # rate ladder from about one element per draw up to the full group
    rates = np.unique(np.geomspace(1.0 / M, 1.0, num=min(16, max(2, M))))
    per_rate = max(1, trials // rates.size)
    best = None
    checked = 0
    for rate in rates:
        ind = (rng.random((per_rate, M)) < rate).astype(float)
        sizes = ind.sum(axis=1)
        nonempty = sizes > 0
        ind, sizes = ind[nonempty], sizes[nonempty]
        checked += per_rate
        if ind.size == 0:
            continue
        ok = _biases(ind) <= c * sizes / M + BIAS_TOL
        for row in np.flatnonzero(ok):
            cand = (int(sizes[row]), tuple(np.flatnonzero(ind[row]).tolist()))
            if best is None or cand < best:
                best = cand
    return best, checked


def beta(M: int, C: float, mode: str = "exhaustive", trials: int = 4096, seed=0,
         budget: int | None = None) -> BetaResult:
    """Smallest nonempty P in Z_M with ``fourier_bias(P) <= c * density(P)``.

    Here ``c = (C - 3) / (C - 1)``. Exhaustive mode enumerates subsets by
    cardinality then lexicographically and returns the lexicographically
    smallest minimizer; it refuses when ``2**M - 1`` exceeds ``budget``.
    Randomized mode samples Bernoulli subsets over a ladder of rates and
    returns the best witness as an upper bound, or status ``"unknown"``.
    """
    M = int(M)
    if M < 1:
        raise ValueError("M must be positive")
    c = bias_constant(C)
    if mode == "exhaustive":
        limit = search_budget(DEFAULT_BETA_BUDGET) if budget is None else budget
        if 2**M - 1 > limit:
            raise BudgetExceededError(
                f"exhaustive beta over 2^{M} - 1 subsets exceeds budget {limit}; "
                "use mode='randomized'"
            )
        k, witness, checked = _beta_exhaustive(M, c)
        return BetaResult(M, float(C), c, k, witness, "exact", mode, checked)
    if mode == "randomized":
        best, checked = _beta_randomized(M, c, int(trials), seed)
        if best is None:
            return BetaResult(M, float(C), c, None, None, "unknown", mode, checked)
        return BetaResult(M, float(C), c, best[0], IndexSet(M, best[1]),
                          "upper_bound", mode, checked)
    raise ValueError(f"unknown beta mode {mode!r}")

