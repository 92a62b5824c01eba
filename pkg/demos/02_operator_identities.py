"""Structural identities of the assembled nonlocal Laplacian.

The matrix is symmetric, kills constants and is negative semidefinite; the
discrete Green identity <Lu, w> = -E(u, w) holds to round-off.  Switching the
debug asymmetry on shows what a broken assembly looks like.
"""
import numpy as np

from nonlocal_plate import assemble_laplacian, build_grid, unit_square
from nonlocal_plate.cli import identity_checks
from nonlocal_plate.kernel import KernelSpec
from nonlocal_plate.operators import ibp_residual

disc = build_grid(unit_square(), 0.025, 0.15)
op = assemble_laplacian(disc, KernelSpec("bump", 0.15))
print(f"grid {disc.nx}x{disc.ny}, m={disc.m}, {op.n} nodes, {op.matrix.nnz} nonzeros")

for name, ok, detail in identity_checks(op, seed=0, pairs=20, fields=200):
    print(f"  {name:<22} {'ok' if ok else 'FAILED'}  {detail}")

rng = np.random.default_rng(1)
u, w = rng.standard_normal((2, op.n))
print(f"single ibp residual: {ibp_residual(op, u, w):.2e}")

bad = assemble_laplacian(disc, KernelSpec("bump", 0.15), break_symmetry=True)
print("\nwith a perturbed entry:")
for name, ok, detail in identity_checks(bad, seed=0, pairs=5, fields=50):
    print(f"  {name:<22} {'ok' if ok else 'FAILED'}")
