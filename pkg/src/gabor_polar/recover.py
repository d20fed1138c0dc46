"""Phase retrieval through the auxiliary windows.

The auxiliary measurements at ``(k, l)`` for a shift ``(q, p)`` determine the
product ``a conj(b)`` of the primary coefficients ``a = <x, pi(k, l) g>`` and
``b = <x, pi(k + q, l + p) g>``:

    a conj(b) = exp(2 pi i k p / M) / 3 * sum_t exp(-2 pi i t / 3) |<x, pi(k, l) g_qpt>|^2

Dividing by ``|a| |b|`` gives the relative phase of the edge. Relative phases
are turned into absolute phases (up to one global factor) on a connected
component of the phase graph, the coefficients are rebuilt from magnitudes and
phases, and ``x`` is recovered by least squares.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import as_signal, phase_distance, tf_shift
from .framegen import MeasurementVector, MultiWindowGaborFrame, Window, parse_window_tag
from .phasegraph import (
    VANISH_TOL,
    PhaseGraph,
    build_edges,
    connected_components,
    prune_edges,
)

__all__ = [
    "RANK_TOL",
    "SYNC_MAX_ITER",
    "SYNC_TOL",
    "EdgeUndefinedError",
    "RankDeficientError",
    "OrderingError",
    "SubspacePrior",
    "LeastSquaresSolution",
    "ReconstructionResult",
    "polarization_product",
    "relative_phase",
    "relative_phases",
    "propagate_phases",
    "angular_sync",
    "solve_coefficients",
    "reconstruct",
    "reconstruct_subspace",
]

RANK_TOL = 1e-10
SYNC_MAX_ITER = 1000
SYNC_TOL = 1e-12
UNRESOLVED_TOL = 1e-12

_THIRD_ROOTS = np.exp(-2j * np.pi * np.arange(3) / 3)


class EdgeUndefinedError(ValueError):
    """A relative phase was requested at a (numerically) vanishing coefficient."""


class RankDeficientError(np.linalg.LinAlgError):
    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number


class OrderingError(ValueError):
    """Measurements do not follow the frame's canonical ordering."""


def polarization_product(aux_measurements, k, p, M):
    """Recover ``<x, pi(k,l)g> conj(<x, pi(k+q,l+p)g>)`` from the three g_qpt measurements.

    ``aux_measurements`` has the t = 0, 1, 2 values on its first axis; ``k``
    and ``p`` broadcast against the remaining axes.
    """
    b = np.asarray(aux_measurements, dtype=float)
    s = np.tensordot(_THIRD_ROOTS, b, axes=(0, 0))
    kp = (np.asarray(k) * np.asarray(p)) % M
    return np.exp(2j * np.pi * kp / M) * s / 3.0


def relative_phases(aux_measurements, r1, r2, k, p, M):
    """Vectorized relative phases; returns ``(omega, raw_modulus)``.

    ``raw_modulus`` is ``|a conj(b)| / (r1 r2)`` before renormalization and
    equals 1 on exact data.
    """
    z = polarization_product(aux_measurements, k, p, M) / (np.asarray(r1) * np.asarray(r2))
    raw = np.abs(z)
    with np.errstate(invalid="ignore", divide="ignore"):
        omega = np.where(raw > 0, z / raw, 1.0)
    return omega, raw


def relative_phase(aux_measurements, r1, r2, k, p, M, eps=VANISH_TOL):
    """Relative phase omega = phase(a) conj(phase(b)) for one edge.

    Raises :class:`EdgeUndefinedError` if either magnitude is at most ``eps``.
    """
    if r1 <= eps or r2 <= eps:
        raise EdgeUndefinedError(f"edge undefined: magnitudes {r1:.3g}, {r2:.3g}")
    omega, raw = relative_phases(aux_measurements, r1, r2, k, p, M)
    return complex(omega), float(raw)


def _edge_phase(graph: PhaseGraph, e, toward_b: bool):
    w = graph.weights[e]
    return np.conj(w) if toward_b else w


def propagate_phases(graph: PhaseGraph, root) -> dict:
    """Spanning-tree phase assignment from ``root`` with phase(root) = 1.

    Returns ``{(k, l): phase}`` for the vertices reachable through unpruned
    edges; other vertices are absent.
    """
    if graph.weights is None:
        raise ValueError("graph carries no edge weights")
    verts = graph.vertices
    r = verts.index(tuple(root)) if not isinstance(root, (int, np.integer)) else int(root)
    nbrs = [[] for _ in range(graph.n_vertices)]
    for e in graph.active_edges():
        a, b = graph.edges[e]
        nbrs[a].append((b, e, True))
        nbrs[b].append((a, e, False))
    phase = {r: 1.0 + 0j}
    queue = deque([r])
    while queue:
        u = queue.popleft()
        for v, e, toward_b in nbrs[u]:
            if v not in phase:
                # phase(v) = omega_(v, u) phase(u)
                phase[v] = _edge_phase(graph, e, toward_b) * phase[u]
                queue.append(v)
    return {verts[v]: complex(z) for v, z in sorted(phase.items())}


@dataclass
class SyncResult:
    phases: dict
    eigenvalue: float
    iterations: int
    converged: bool
    unresolved: list = field(default_factory=list)


def _hermitian_weights(graph: PhaseGraph, members: np.ndarray) -> np.ndarray:
    local = {int(v): i for i, v in enumerate(members)}
    H = np.zeros((members.size, members.size), dtype=np.complex128)
    for e in graph.active_edges():
        a, b = graph.edges[e]
        if a in local and b in local:
            H[local[a], local[b]] = graph.weights[e]
            H[local[b], local[a]] = np.conj(graph.weights[e])
    return H


def angular_sync(graph: PhaseGraph, members=None, max_iter: int = SYNC_MAX_ITER,
                 tol: float = SYNC_TOL) -> SyncResult:
    """Leading eigenvector of the Hermitian edge-weight matrix, normalized entrywise.

    Power iteration from the all-ones vector on ``H + d I`` with ``d`` the
    largest vertex degree, so that no negative eigenvalue can dominate. Stops
    once ``||H v - (v^* H v) v|| <= tol ||H||``; if the iteration budget runs out
    the leading eigenvector is taken from a dense Hermitian eigensolve instead.
    ``members`` restricts the problem to a vertex subset (default: largest
    component).
    """
    if graph.weights is None:
        raise ValueError("graph carries no edge weights")
    if members is None:
        comps = connected_components(graph)
        members = comps.members(comps.largest[0])
    members = np.asarray(members, dtype=np.intp)
    verts = graph.vertices
    n = members.size
    if n == 1:
        return SyncResult({verts[members[0]]: 1.0 + 0j}, 0.0, 0, True)
    H = _hermitian_weights(graph, members)
    shift = float(np.abs(H).sum(axis=1).max())
    scale = max(shift, 1.0)
    v = np.ones(n, dtype=np.complex128) / np.sqrt(n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Hv = H @ v
        lam = np.vdot(v, Hv).real
        if np.linalg.norm(Hv - lam * v) <= tol * scale:
            converged = True
            break
        w = Hv + shift * v
        v = w / np.linalg.norm(w)
    if not converged:
        vals, vecs = np.linalg.eigh(H)
        v = vecs[:, -1]
    lam = float(np.vdot(v, H @ v).real)
    mod = np.abs(v)
    bad = mod < UNRESOLVED_TOL * mod.max()
    u = np.where(bad, 0.0, v / np.where(mod > 0, mod, 1.0))
    ref = u[0] if not bad[0] else 1.0
    u = u * np.conj(ref)  # first member gets phase 1, as in propagation
    phases = {verts[m]: complex(u[i]) for i, m in enumerate(members) if not bad[i]}
    unresolved = [verts[m] for i, m in enumerate(members) if bad[i]]
    return SyncResult(phases, lam, it, converged, unresolved)


@dataclass
class LeastSquaresSolution:
    x: np.ndarray
    residual: float
    condition_number: float
    rank: int


def _analysis_rows(g, vertices, basis=None) -> np.ndarray:
    """Rows conj(pi(lambda) g)^T (W), so that row @ h = <W h, pi(lambda) g>."""
    g = g.values if isinstance(g, Window) else as_signal(g)
    rows = np.conj(np.array([tf_shift(g, lam) for lam in vertices]))
    if basis is not None:
        rows = rows @ basis
    return rows


def solve_coefficients(g, vertices, coeffs, basis=None, rank_tol: float = RANK_TOL
                       ) -> LeastSquaresSolution:
    """Least-squares signal from frame coefficients ``<x, pi(lambda) g>``.

    With ``basis`` (an M x d matrix ``W``) the unknown is ``h`` in
    ``x = W h``. Raises :class:`RankDeficientError` when the system has
    numerical rank below the unknown dimension.
    """
    A = _analysis_rows(g, vertices, basis)
    c = np.asarray(coeffs, dtype=np.complex128)
    n = A.shape[1]
    if A.shape[0] < n:
        raise RankDeficientError(f"{A.shape[0]} equations for {n} unknowns", np.inf)
    sol, _, rank, sv = np.linalg.lstsq(A, c, rcond=rank_tol)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if rank < n:
        raise RankDeficientError(f"system rank {rank} < {n} (condition number {cond:.3g})",
                                 cond)
    resid = float(np.linalg.norm(A @ sol - c))
    return LeastSquaresSolution(sol, resid, cond, int(rank))


@dataclass
class SubspacePrior:
    """Known subspace ``{W h}``; ``W`` is stored as an M x d matrix."""

    W: np.ndarray
    rank_tol: float = RANK_TOL
    singular_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.complex128)
        if W.ndim != 2 or W.shape[1] > W.shape[0]:
            raise ValueError(f"W must be M x d with d <= M, got shape {W.shape}")
        sv = np.linalg.svd(W, compute_uv=False)
        if sv[0] == 0 or sv[-1] / sv[0] <= self.rank_tol:
            raise RankDeficientError(
                f"W fails the rank certificate (sigma_d / sigma_1 = {sv[-1] / max(sv[0], 1e-300):.3g})",
                np.inf,
            )
        self.W = W
        self.singular_values = sv

    @property
    def M(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]


@dataclass
class ReconstructionResult:
    """Output of the reconstruction pipeline.

    ``status`` is ``"success"``, ``"component_too_small"`` or
    ``"unresolved_phases"``; ``estimate`` is ``None`` unless successful.
    """

    estimate: np.ndarray | None
    status: str
    component_size: int
    dimension: int
    method: str
    residual: float | None = None
    solve_residual: float | None = None
    condition_number: float | None = None
    n_vertices: int = 0
    n_edges: int = 0
    flagged_vertices: int = 0
    removed_edges: int = 0
    max_phase_defect: float | None = None
    coefficients: np.ndarray | None = field(default=None, repr=False)
    timing: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status == "success"

    def to_json(self) -> dict:
        est = None if self.estimate is None else [[float(z.real), float(z.imag)]
                                                  for z in self.estimate]
        return {
            "status": self.status,
            "component_size": self.component_size,
            "dimension": self.dimension,
            "method": self.method,
            "residuals": {
                "phase_distance": self.residual,
                "least_squares": self.solve_residual,
                "max_phase_defect": self.max_phase_defect,
            },
            "condition_number": self.condition_number,
            "graph": {
                "vertices": self.n_vertices,
                "edges": self.n_edges,
                "flagged_vertices": self.flagged_vertices,
                "removed_edges": self.removed_edges,
            },
            "estimate": est,
            "timing": self.timing,
        }


def check_ordering(frame: MultiWindowGaborFrame, b: MeasurementVector):
    expected = frame.index()
    present = {i[0] for i in b.index}
    for tag, _ in frame.windows():
        if tag not in present:
            block = parse_window_tag(tag)
            what = "primary block" if block is None else "auxiliary block (q,p,t)=%s" % (block,)
            raise OrderingError(f"missing {what}")
    if len(b.index) != len(expected):
        raise OrderingError(f"expected {len(expected)} measurements, got {len(b.index)}")
    for j, (got, want) in enumerate(zip(b.index, expected)):
        if tuple(got) != tuple(want):
            raise OrderingError(f"measurement {j} is {got}, expected {want}")


def weighted_graph(frame: MultiWindowGaborFrame, b: MeasurementVector,
                   eps: float = VANISH_TOL) -> tuple:
    """Phase graph with relative phases from the auxiliary blocks, pruned.

    Returns ``(graph, magnitudes, raw_moduli)``; ``magnitudes`` are the primary
    magnitudes per vertex.
    """
    primary, aux = frame.split(b.values)
    nF = len(frame.lattice.F)
    mags = np.sqrt(primary).ravel()
    graph = build_edges(frame.lattice, frame.Q, frame.P)
    graph = prune_edges(graph, mags, eps=eps)
    weights = np.ones(graph.n_edges, dtype=np.complex128)
    raw = np.full(graph.n_edges, np.nan)
    live = graph.active_edges()
    if live.size:
        a, c = graph.edges[live, 0], graph.edges[live, 1]
        qi, pi = graph.shifts[live, 0], graph.shifts[live, 1]
        ti, fi = np.divmod(a, nF)
        meas = aux[qi, pi, :, ti, fi].T  # (3, n_live)
        k = np.asarray(frame.lattice.T.members)[ti]
        p = np.asarray(frame.P.members)[pi]
        omega, raw_live = relative_phases(meas, mags[a], mags[c], k, p, frame.M)
        weights[live] = omega
        raw[live] = raw_live
    return graph.with_weights(weights), mags, raw


def _pipeline(frame, b, basis, method, eps, truth):
    t0 = time.perf_counter()
    check_ordering(frame, b)
    dim = frame.M if basis is None else basis.shape[1]
    graph, mags, raw = weighted_graph(frame, b, eps)
    t1 = time.perf_counter()
    common = dict(dimension=dim, method=method, n_vertices=graph.n_vertices,
                  n_edges=graph.n_edges)

    if mags.max() == 0:
        est = np.zeros(frame.M, dtype=np.complex128)
        res = None if truth is None else phase_distance(est, truth)
        return ReconstructionResult(est, "success", graph.n_vertices, residual=res,
                                    solve_residual=0.0, **common)

    comps = connected_components(graph)
    label, size = comps.largest
    common.update(flagged_vertices=int(graph.flagged.sum()), removed_edges=graph.removed)
    if size < dim:
        return ReconstructionResult(None, "component_too_small", size, **common)

    members = comps.members(label)
    if method == "propagate":
        phases = propagate_phases(graph, int(members[0]))
        unresolved = []
    elif method == "sync":
        sync = angular_sync(graph, members)
        phases, unresolved = sync.phases, sync.unresolved
    else:
        raise ValueError(f"unknown method {method!r}")
    verts = [v for v in graph.vertices if v in phases]
    if unresolved and len(verts) < dim:
        return ReconstructionResult(None, "unresolved_phases", len(verts), **common)
    t2 = time.perf_counter()

    pos = frame.lattice.position()
    coeffs = np.array([mags[pos(*v)] * phases[v] for v in verts])
    try:
        sol = solve_coefficients(frame.g, verts, coeffs, basis=basis)
    except RankDeficientError as err:
        return ReconstructionResult(None, "unresolved_phases", len(verts),
                                    condition_number=err.condition_number, **common)
    est = sol.x if basis is None else basis @ sol.x
    t3 = time.perf_counter()
    live = np.isfinite(raw)
    defect = float(np.abs(raw[live] - 1.0).max()) if live.any() else None
    return ReconstructionResult(
        est, "success", size,
        residual=None if truth is None else phase_distance(est, truth),
        solve_residual=sol.residual, condition_number=sol.condition_number,
        max_phase_defect=defect, coefficients=coeffs,
        timing={"graph": t1 - t0, "phases": t2 - t1, "solve": t3 - t2},
        **common,
    )


def reconstruct(frame: MultiWindowGaborFrame, b: MeasurementVector, method: str = "sync",
                eps: float = VANISH_TOL, truth=None) -> ReconstructionResult:
    """Recover ``x`` up to a global phase from ``b = measure(frame, x)``.

    ``truth``, if given, is only used to report the phase distance of the
    estimate; it does not influence the reconstruction.
    """
    if truth is not None:
        truth = as_signal(truth, frame.M)
    return _pipeline(frame, b, None, method, eps, truth)


def reconstruct_subspace(frame: MultiWindowGaborFrame, prior: SubspacePrior,
                         b: MeasurementVector, method: str = "sync",
                         eps: float = VANISH_TOL, truth=None) -> ReconstructionResult:
    """Recover ``x = W h`` from its measurements, solving for ``h`` in C^d.

    The component threshold is ``d`` instead of ``M``; the returned estimate is
    ``W h_hat``.
    """
    if prior.M != frame.M:
        raise ValueError(f"prior lives in C^{prior.M}, frame in C^{frame.M}")
    if truth is not None:
        truth = as_signal(truth, frame.M)
    return _pipeline(frame, b, prior.W, method, eps, truth)
