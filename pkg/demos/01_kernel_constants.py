"""Kernel normalization and the scaling constant C(delta).

For each mollifier family the radial profile is normalized to unit mass in R^d.
The second moment of mu = rho/r^2 then collapses to 1/(2d), so sigma*C = 1 for
every horizon.  This script prints both numbers and shows the profile shape.
"""
import numpy as np

from nonlocal_plate import kernel as K

for family in ("bump", "polynomial"):
    for dim in (2, 3):
        for delta in (0.2, 0.05):
            spec = K.KernelSpec(family, delta, dim)
            c = K.c_delta(spec)
            print(f"{family:<10} d={dim} delta={delta:<5} mass={K.mass(spec):.12f} "
                  f"C={c:.12f} sigma*C={spec.sigma * c:.12f}")

# the profile vanishes smoothly at the horizon; mu carries the 1/r^2 singularity
spec = K.KernelSpec("bump", 0.1)
r = np.linspace(0.01, 0.1, 10)
print("\n   r        rho(r)        mu(r)")
for ri, a, b in zip(r, K.rho(spec, r), K.mu(spec, r)):
    print(f"{ri:.3f}  {a:12.5e}  {b:12.5e}")
