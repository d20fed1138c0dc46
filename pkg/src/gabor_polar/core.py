"""Finite signals on Z_M, time-frequency shifts and the phase-blind metric.

Signals are plain one-dimensional complex numpy arrays. Every index in Z_M is
reduced to ``[0, M)`` before use.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "as_signal",
    "make_rng",
    "translate",
    "modulate",
    "tf_shift",
    "dft",
    "inverse_dft",
    "inner",
    "phase_distance",
    "coordwise_product",
    "DimensionError",
]


class DimensionError(ValueError):
    """Two signals that must live in the same C^M do not."""


def as_signal(x, dim=None) -> np.ndarray:
    """Validate ``x`` as a finite complex vector and return it as complex128.

    Parameters
    ----------
    x : array_like
        One-dimensional sequence of complex numbers.
    dim : int, optional
        Required length.
    """
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a nonempty 1-d signal, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected length {dim}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal has non-finite entries")
    return arr


def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 generator; split with ``rng.spawn`` or ``SeedSequence.spawn``."""
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(seed))


def translate(x, k: int) -> np.ndarray:
    """T_k x (m) = x(m - k)."""
    x = as_signal(x)
    return np.roll(x, int(k) % x.size)


def modulate(x, l: int) -> np.ndarray:
    """M_l x (m) = exp(2 pi i l m / M) x(m)."""
    x = as_signal(x)
    M = x.size
    m = np.arange(M)
    return np.exp(2j * np.pi * ((int(l) % M) * m % M) / M) * x


def tf_shift(x, lam) -> np.ndarray:
    """pi(k, l) x = M_l T_k x."""
    k, l = lam
    return modulate(translate(x, k), l)


def dft(x) -> np.ndarray:
    """Forward DFT with 1/M normalization, so ``dft(ones)`` is e_0."""
    x = as_signal(x)
    return np.fft.fft(x) / x.size


def inverse_dft(X) -> np.ndarray:
    X = as_signal(X)
    return np.fft.ifft(X) * X.size


def inner(x, y) -> complex:
    """<x, y> = sum_m x(m) conj(y(m)), linear in the first slot."""
    return complex(np.vdot(y, x))


def _same_dim(x, y):
    x = as_signal(x)
    y = as_signal(y)
    if x.size != y.size:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    return x, y


def phase_distance(x, y) -> float:
    """min over theta of ||x - exp(i theta) y||_2."""
    x, y = _same_dim(x, y)
    # the optimal rotation aligns y with x; evaluating the norm directly avoids
    # the cancellation in sqrt(|x|^2 + |y|^2 - 2|<x,y>|)
    c = np.vdot(y, x)
    rot = c / abs(c) if c != 0 else 1.0
    return float(np.linalg.norm(x - rot * y))


def coordwise_product(x, y) -> np.ndarray:
    x, y = _same_dim(x, y)
    return x * y
