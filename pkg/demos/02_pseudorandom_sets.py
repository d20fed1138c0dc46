"""Fourier bias, pseudorandom sets and the beta search."""
from gabor_polar import IndexSet, beta, check_pseudorandom, density, fourier_bias

M = 16
subgroup = IndexSet.from_iterable(M, [0, 4, 8, 12])
print("subgroup {0,4,8,12}: density", density(subgroup), "bias", round(fourier_bias(subgroup), 12))

spread = IndexSet.from_iterable(M, [0, 1, 3, 7, 12])
print("spread set:", list(spread.members), "bias", round(fourier_bias(spread), 4),
      "pseudorandom at c=1/3:", check_pseudorandom(spread, 1 / 3))

print("\nbeta(M, C): smallest size of a set with bias <= c(C) |A| / M")
for C in (4, 5, 8):
    row = [beta(m, C).value for m in (4, 8, 12, 16)]
    print(f"  C={C}: M=4,8,12,16 -> {row}")

res = beta(40, 4, mode="randomized", trials=2000, seed=0)
print(f"\nrandomized search, M=40: {res.value} ({res.status.replace('_', ' ')})")
