"""Recover a signal in C^12, up to a global phase, from phaseless measurements.

The frame uses the full time-frequency lattice Z_12 x Z_12. The shift sets Q
and P are the smallest pseudorandom sets that the exhaustive beta search finds
for C = 4.
"""
import numpy as np

from gabor_polar import (Lattice, assemble_frame, beta, make_rng, measure,
                         phase_distance, random_window, reconstruct)

M = 12
witness = beta(M, 4).witness
print(f"shift set Q = P = {list(witness.members)} (beta(12, 4) = {len(witness)})")

frame = assemble_frame(random_window(M, seed=0), Lattice.full(M), witness, witness)
print(f"{frame.n_windows} windows, {len(frame)} measurements")

rng = make_rng(1)
x = rng.standard_normal(M) + 1j * rng.standard_normal(M)
b = measure(frame, x)

for method in ("propagate", "sync"):
    res = reconstruct(frame, b, method=method)
    print(f"{method:>9}: status={res.status} component={res.component_size}/{M * M} "
          f"error={phase_distance(res.estimate, x):.2e}")

# the same signal multiplied by a unit phase gives identical measurements
y = np.exp(0.7j) * x
print("measurements invariant under a global phase:",
      np.allclose(measure(frame, y).values, b.values))
