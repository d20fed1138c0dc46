"""Spectral gap of the shift graph and the component-size guarantee.

Vanishing frame coefficients delete edges from the graph; a positive spectral
gap keeps a large component alive anyway.
"""
import numpy as np

from gabor_polar import (IndexSet, Lattice, beta, build_edges, component_bound,
                         connected_components, prune_edges, spectral_gap)
from gabor_polar.core import tf_shift
from gabor_polar.framegen import random_window

M = 12
lat = Lattice.full(M)
w = beta(M, 4).witness
graph = build_edges(lat, w, w)
fast, dense = spectral_gap(graph), spectral_gap(graph, structure="dense")
print(f"gap: closed form {fast.gap:.6f}, dense eigensolve {dense.gap:.6f}")

half = IndexSet.from_iterable(M, [0, M // 2])
print("subgroup shifts give gap", spectral_gap(build_edges(lat, half, half)).gap)

# worst case: x orthogonal to M - 1 of the frame vectors
g = random_window(M, seed=3).values
pts = lat.points()
rng = np.random.default_rng(4)
chosen = rng.choice(len(pts), M - 1, replace=False)
V = np.array([tf_shift(g, pts[i]) for i in chosen])
x = np.linalg.svd(V.conj())[2][-1].conj()  # <x, v> = 0 for every chosen v
coeffs = np.array([np.vdot(tf_shift(g, lam), x) for lam in pts])
pruned = prune_edges(graph, coeffs)
comp = connected_components(pruned)
D = int(pruned.flagged.sum())
print(f"{D} vanishing coefficients, {pruned.removed} edges removed")
print(f"largest component {comp.max_size}, guaranteed {component_bound(len(lat), fast.gap, D):.1f}")
