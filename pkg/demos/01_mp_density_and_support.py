"""Limiting spectral density of the spatial-sign covariance matrix.

Solves the generalized Marchenko-Pastur equation for a two-atom population
spectrum, locates the support edges, evaluates the density on a grid, and
compares the first moments of the limit with eigenvalues of a simulated
matrix.  Run with:  python demos/01_mp_density_and_support.py
"""

import numpy as np

from sscm import DiscreteMeasure, SpectralModel, lsd_density, lsd_moments, lsd_support, sscm

c = 0.5
H = DiscreteMeasure(atoms=((0.5, 0.5), (1.5, 0.5)))

print("population spectrum:", H.atoms)
print("aspect ratio c =", c)

model = SpectralModel(c=c, H=H)
intervals = lsd_support(model)
print("\nsupport intervals of the limiting ESD:")
for lo, hi in intervals:
    print(f"  [{lo:.6f}, {hi:.6f}]")

lo = min(i[0] for i in intervals)
hi = max(i[1] for i in intervals)
grid = np.linspace(lo - 0.1, hi + 0.1, 400)
dens = lsd_density(model, grid)
mass = np.trapezoid(dens, grid)
print(f"\ndensity integrates to {mass:.6f} (should be ~1)")

moments = lsd_moments(model, 3)
print("first three moments of the limit:", np.round(moments, 6))

# Compare with a finite simulation: Gaussian data mixed by sqrt(T).
rng = np.random.default_rng(7)
p, n = 300, 600
t = np.repeat([0.5, 1.5], p // 2)
X = rng.standard_normal((n, p)) * np.sqrt(t)
B = sscm(X)
eigs = np.linalg.eigvalsh(B.matrix)
emp = [np.mean(eigs**k) for k in (1, 2, 3)]
print("empirical SSCM moments (p=300, n=600):", np.round(emp, 6))
