"""Smallest Rayleigh quotients of the reduced forms on a delta ladder.

Inverse power iteration with a sparse LU gives the estimates; on small grids
a dense eigensolver confirms them.  The Poisson form is roughly stable while
the plate forms grow as the constrained collar eats a larger share of the
square at coarse delta.
"""
from nonlocal_plate import solver as S
from nonlocal_plate.geometry import build_grid, unit_square
from nonlocal_plate.kernel import KernelSpec
from nonlocal_plate.operators import assemble_laplacian

print(f"{'kind':<18}" + "".join(f"delta={d:<10}" for d in (0.2, 0.1, 0.05)) + "max/min")
for kind in S.COERCIVITY_KINDS:
    vals = []
    for delta in (0.2, 0.1, 0.05):
        disc = build_grid(unit_square(), delta / 3, delta)
        vals.append(S.estimate_coercivity(disc, assemble_laplacian(disc, KernelSpec("bump", delta)), kind))
    print(f"{kind:<18}" + "".join(f"{v:<16.4g}" for v in vals) + f"{max(vals) / min(vals):.1f}")

disc = build_grid(unit_square(), 1 / 15, 0.2)
op = assemble_laplacian(disc, KernelSpec("bump", 0.2))
print("\n15x15 grid, inverse iteration vs dense:")
for kind in S.COERCIVITY_KINDS:
    print(f"  {kind:<18} {S.estimate_coercivity(disc, op, kind):.10g}  {S.dense_coercivity(disc, op, kind):.10g}")
