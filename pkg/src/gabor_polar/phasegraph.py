"""The relative-phase graph on the lattice and its connectivity.

Vertices are the lattice points in lexicographic order. A vertex ``u = (k, l)``
is joined to ``u + (q, p)`` for every shift ``(q, p)`` in ``Q x P`` that stays
inside the lattice. The zero shift would be a self-loop and is not an edge; an
unordered pair reached by two shifts is stored once, under the first shift in
enumeration order.
"""
from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass

import numpy as np

from .framegen import Lattice
from .settools import IndexSet, density, fourier_bias

__all__ = [
    "VANISH_TOL",
    "PhaseGraph",
    "SpectralReport",
    "Components",
    "NotRegularError",
    "build_edges",
    "shift_adjacency",
    "spectral_gap",
    "prune_edges",
    "connected_components",
    "component_bound",
]

VANISH_TOL = 1e-10


class NotRegularError(ValueError):
    """The spectral gap is only defined here for regular graphs."""


@dataclass(frozen=True)
class PhaseGraph:
    """Edge list over the lattice with optional unit-modulus weights.

    ``edges[e] = (a, b)`` are vertex indices with ``b = a + shift``; the
    weight ``weights[e]`` is the relative phase omega_(a, b), and
    omega_(b, a) is its conjugate. ``shifts[e]`` holds the positions of the
    generating ``(q, p)`` inside ``Q`` and ``P``.
    """

    lattice: Lattice
    Q: IndexSet
    P: IndexSet
    edges: np.ndarray
    shifts: np.ndarray
    weights: np.ndarray | None = None
    pruned: np.ndarray | None = None
    flagged: np.ndarray | None = None

    def __post_init__(self):
        n_e = self.edges.shape[0]
        if self.pruned is None:
            object.__setattr__(self, "pruned", np.zeros(n_e, dtype=bool))
        if self.flagged is None:
            object.__setattr__(self, "flagged", np.zeros(self.n_vertices, dtype=bool))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.complex128)
            if w.shape != (n_e,):
                raise ValueError("one weight per edge required")
            live = ~self.pruned
            if np.any(np.abs(np.abs(w[live]) - 1.0) > 1e-12):
                raise ValueError("edge weights must have unit modulus")
            object.__setattr__(self, "weights", w)

    @property
    def vertices(self) -> list:
        return self.lattice.points()

    @property
    def n_vertices(self) -> int:
        return len(self.lattice)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def removed(self) -> int:
        return int(self.pruned.sum())

    def active_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.pruned)

    def with_weights(self, weights) -> "PhaseGraph":
        return dataclasses.replace(self, weights=weights)

    def out_degrees(self) -> np.ndarray:
        """Number of non-zero shifts in Q x P leading from each vertex into the lattice."""
        A = shift_adjacency(self.lattice, self.Q, self.P)
        return (A.sum(axis=1) - np.diag(A)).astype(int)


def _shift_pairs(Q: IndexSet, P: IndexSet):
    return [(i, j, q, p) for i, q in enumerate(Q) for j, p in enumerate(P)]


def build_edges(lattice: Lattice, Q: IndexSet, P: IndexSet) -> PhaseGraph:
    """Unweighted graph joining (k, l) to (k + q, l + p) for (q, p) in Q x P."""
    M = lattice.M
    pos = lattice.position()
    T, F = set(lattice.T), set(lattice.F)
    seen = set()
    edges, shifts = [], []
    for a, (k, l) in enumerate(lattice.points()):
        for i, j, q, p in _shift_pairs(Q, P):
            k2, l2 = (k + q) % M, (l + p) % M
            if k2 not in T or l2 not in F:
                continue
            b = pos(k2, l2)
            if a == b:
                continue
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            edges.append((a, b))
            shifts.append((i, j))
    edges = np.array(edges, dtype=np.intp).reshape(-1, 2)
    shifts = np.array(shifts, dtype=np.intp).reshape(-1, 2)
    return PhaseGraph(lattice, Q, P, edges, shifts)


def shift_adjacency(lattice: Lattice, Q: IndexSet, P: IndexSet) -> np.ndarray:
    """A[u, v] = #{(q, p) in Q x P : v = u + (q, p)}, restricted to the lattice.

    On the full lattice this is Circ(1_Q) kron Circ(1_P), with the zero shift
    on the diagonal.
    """
    M = lattice.M
    pos = lattice.position()
    T, F = set(lattice.T), set(lattice.F)
    n = len(lattice)
    A = np.zeros((n, n))
    for a, (k, l) in enumerate(lattice.points()):
        for q in Q:
            k2 = (k + q) % M
            if k2 not in T:
                continue
            for p in P:
                l2 = (l + p) % M
                if l2 in F:
                    A[a, pos(k2, l2)] += 1
    return A


@dataclass
class SpectralReport:
    gap: float
    lambda_max: float
    method: str
    eigenvalues: np.ndarray | None = None

    def to_json(self) -> dict:
        out = {"gap": self.gap, "lambda_max": self.lambda_max, "method": self.method}
        if self.eigenvalues is not None:
            out["eigenvalues"] = [[float(z.real), float(z.imag)] for z in self.eigenvalues]
        return out


def _is_full(lattice: Lattice) -> bool:
    M = lattice.M
    return len(lattice.T) == M and len(lattice.F) == M


def spectral_gap(graph: PhaseGraph, structure: str = "auto") -> SpectralReport:
    """Spectral gap 1 - max_{j != 0} |lambda_j| / d of the shift adjacency.

    ``structure="auto"`` uses the closed form through the Fourier biases of
    Q and P when the lattice is all of Z_M x Z_M; otherwise, or with
    ``structure="dense"``, the adjacency is built and diagonalized. Dense
    eigenvalues are returned sorted by decreasing modulus.
    """
    if structure not in ("auto", "dense"):
        raise ValueError(f"unknown structure {structure!r}")
    Q, P = graph.Q, graph.P
    if structure == "auto" and _is_full(graph.lattice):
        ratio = max(fourier_bias(Q) / density(Q), fourier_bias(P) / density(P))
        gap = min(max(1.0 - ratio, 0.0), 1.0)
        return SpectralReport(gap, float(len(Q) * len(P)), "circulant-fast-path")

    A = shift_adjacency(graph.lattice, Q, P)
    rows, cols = A.sum(axis=1), A.sum(axis=0)
    if np.ptp(rows) != 0 or np.ptp(cols) != 0 or rows[0] != cols[0]:
        raise NotRegularError(
            f"shift graph is not regular (degrees {rows.min():g}..{rows.max():g})"
        )
    d = float(rows[0])
    if d == 0:
        raise NotRegularError("graph has no shifts")
    eig = np.linalg.eigvals(A)
    eig = eig[np.lexsort((-eig.real, -np.abs(eig)))]
    top = int(np.argmin(np.abs(eig - d)))
    rest = np.delete(eig, top)
    second = float(np.abs(rest).max()) if rest.size else 0.0
    gap = min(max(1.0 - second / d, 0.0), 1.0)
    return SpectralReport(gap, d, "dense", eig)


def prune_edges(graph: PhaseGraph, coeffs, eps: float = VANISH_TOL, scale=None) -> PhaseGraph:
    """Drop every edge touching a vertex whose coefficient is numerically zero.

    A vertex is flagged when ``|coeff| <= eps * scale``. ``scale`` should be
    ``||x|| ||g||``; when unknown it defaults to the largest ``|coeff|``.
    ``coeffs`` is an array aligned with the vertices or a mapping from
    ``(k, l)`` to the coefficient.
    """
    if isinstance(coeffs, dict):
        coeffs = [coeffs[v] for v in graph.vertices]
    mags = np.abs(np.asarray(coeffs))
    if mags.shape != (graph.n_vertices,):
        raise ValueError("one coefficient per vertex required")
    if scale is None:
        scale = float(mags.max()) if mags.size else 0.0
    flagged = mags <= eps * scale
    hit = flagged[graph.edges[:, 0]] | flagged[graph.edges[:, 1]] if graph.n_edges else \
        np.zeros(0, dtype=bool)
    return dataclasses.replace(graph, pruned=graph.pruned | hit, flagged=flagged)


@dataclass
class Components:
    """Labels are the smallest vertex index of each component."""

    labels: np.ndarray
    sizes: dict

    @property
    def largest(self):
        """``(label, size)`` of the largest component, smallest label on ties."""
        return min(self.sizes.items(), key=lambda kv: (-kv[1], kv[0]))

    @property
    def max_size(self) -> int:
        return self.largest[1]

    def members(self, label) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def _neighbours(graph: PhaseGraph):
    nbrs = [[] for _ in range(graph.n_vertices)]
    for e in graph.active_edges():
        a, b = graph.edges[e]
        nbrs[a].append((b, e))
        nbrs[b].append((a, e))
    return nbrs


def connected_components(graph: PhaseGraph) -> Components:
    nbrs = _neighbours(graph)
    labels = np.full(graph.n_vertices, -1, dtype=np.intp)
    sizes = {}
    for s in range(graph.n_vertices):
        if labels[s] >= 0:
            continue
        labels[s] = s
        queue = deque([s])
        count = 0
        while queue:
            u = queue.popleft()
            count += 1
            for v, _ in nbrs[u]:
                if labels[v] < 0:
                    labels[v] = s
                    queue.append(v)
        sizes[s] = count
    return Components(labels, sizes)


def component_bound(lattice_size: int, gap: float, deleted_vertices: int) -> float:
    """Guaranteed size of some component after deleting edges at vanishing vertices.

    Returns ``(1 - 2 D / (|Lambda| gap)) |Lambda|`` with ``D`` the number of
    vertices whose incident edges were removed.
    """
    if not gap > 0:
        raise ValueError("component bound needs a positive spectral gap")
    return (1.0 - 2.0 * deleted_vertices / (lattice_size * gap)) * lattice_size
