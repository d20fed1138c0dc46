"""Signals from a known d-dimensional subspace need far fewer lattice points.

Here M = 32 and d = 4. The lattice has only 25 points, which is below C M = 128.
"""
import numpy as np

from gabor_polar import (IndexSet, Lattice, SubspacePrior, assemble_frame, make_rng,
                         measure, phase_distance, random_window, reconstruct_subspace)
from gabor_polar.settools import difference_set

M, d = 32, 4
T = IndexSet.from_iterable(M, [0, 1, 2, 5, 12])
Q = difference_set(T)
frame = assemble_frame(random_window(M, seed=0), Lattice(T, T), Q, Q)
print(f"|Lambda| = {len(frame.lattice)}, |Q| = |P| = {len(Q)}, {len(frame)} measurements")

rng = make_rng(5)
W = rng.standard_normal((M, d)) + 1j * rng.standard_normal((M, d))
x = W @ (rng.standard_normal(d) + 1j * rng.standard_normal(d))
res = reconstruct_subspace(frame, SubspacePrior(W), measure(frame, x))
print(f"status={res.status} component={res.component_size} "
      f"error={phase_distance(res.estimate, x):.2e}")
