import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from nonlocal_plate import kernel as K
from nonlocal_plate.errors import ConfigurationError
from nonlocal_plate.geometry import OMEGA_DELTA, RegionLabel, build_grid, unit_disk, unit_square
from nonlocal_plate.operators import (apply, apply_biharmonic, assemble_biharmonic,
                                      assemble_laplacian, gradient_energy, ibp_residual,
                                      lipschitz_probe, nonlocal_normal, stencil_weights,
                                      write_matrix_market)


@pytest.fixture(scope="module")
def square_op():
    disc = build_grid(unit_square(), 0.025, 0.15)
    return assemble_laplacian(disc, K.KernelSpec("bump", 0.15))


@pytest.fixture(scope="module")
def disk_op():
    disc = build_grid(unit_disk(), 0.05, 0.2)
    return assemble_laplacian(disc, K.KernelSpec("polynomial", 0.2), "midpoint_skip")


def continuum_sine_factor(spec):
    """L[sin(pi x) sin(pi y)] = factor * u away from the boundary.

    sin*sin is a Helmholtz eigenfunction with k = pi*sqrt(2), so its circle mean is
    J0(k r) u(x); the operator reduces to one radial integral.
    """
    k = math.pi * math.sqrt(2)
    val = integrate.quad(lambda r: K.rho(spec, r) / r * (special.j0(k * r) - 1), 0, spec.delta,
                         epsabs=1e-14, epsrel=1e-13)[0]
    return spec.sigma * 2 * math.pi * val


@pytest.mark.parametrize("op_name", ["square_op", "disk_op"])
def test_matrix_bit_exactly_symmetric_with_zero_row_sums(op_name, request):
    op = request.getfixturevalue(op_name)
    A = op.matrix
    D = (A - A.T).tocsr()
    D.eliminate_zeros()
    assert D.nnz == 0
    scale = abs(A).sum(axis=1).max()
    assert np.abs(A @ np.ones(op.n)).max() <= 1e-13 * scale
    assert np.all(op.pairs.data > 0)


@pytest.mark.parametrize("op_name", ["square_op", "disk_op"])
def test_constants_map_to_exact_zero(op_name, request):
    op = request.getfixturevalue(op_name)
    assert np.all(apply(op, np.full(op.n, 3.7)) == 0.0)
    assert np.all(apply_biharmonic(op, np.full(op.n, -1.25)) == 0.0)


def test_apply_matches_matrix(square_op):
    u = np.random.default_rng(1).standard_normal(square_op.n)
    np.testing.assert_allclose(apply(square_op, u), square_op.matrix @ u, rtol=0, atol=1e-10)


@pytest.mark.parametrize("quadrature", ["ring_corrected", "midpoint_skip"])
def test_stencil_counts_and_positivity(quadrature):
    spec = K.KernelSpec("bump", 0.3)
    offs, w = stencil_weights(spec, 0.1, quadrature)
    assert len(offs) == 24
    assert np.all(w > 0)


@pytest.mark.parametrize("family", ["bump", "polynomial"])
@pytest.mark.parametrize("m", range(3, 17))
def test_ring_corrected_matches_moments(family, m):
    spec = K.KernelSpec(family, 1.0)
    h = 1.0 / m
    offs, w = stencil_weights(spec, h, "ring_corrected")
    zx, zy = offs[:, 0] * h, offs[:, 1] * h
    w = w / spec.sigma
    assert np.sum(w * zx ** 2) == pytest.approx(0.5 * K.mass(spec), rel=1e-12)
    assert np.sum(w * zx ** 2 * zy ** 2) == pytest.approx(0.25 * math.pi * K.radial_moment(spec, 3),
                                                          rel=1e-12)
    assert np.all(w > 0)


def test_midpoint_skip_second_moment_is_off():
    spec = K.KernelSpec("bump", 1.0)
    offs, w = stencil_weights(spec, 1 / 8, "midpoint_skip")
    m2 = np.sum(w / spec.sigma * (offs[:, 0] / 8) ** 2)
    assert abs(m2 / 0.5 - 1) > 1e-3


def test_quadratic_reproduced_in_interior(square_op):
    disc = square_op.disc
    Lu = apply(square_op, disc.xs ** 2 + disc.ys ** 2)
    sel = disc.field_dist > disc.delta
    np.testing.assert_allclose(Lu[sel], 4.0, rtol=0, atol=1e-10)


@pytest.mark.parametrize("family", ["bump", "polynomial"])
def test_discrete_matches_continuum_operator_at_five_points(family):
    delta = 0.1
    spec = K.KernelSpec(family, delta)
    disc = build_grid(unit_square(), delta / 8, delta)
    op = assemble_laplacian(disc, spec)
    u = np.sin(np.pi * disc.xs) * np.sin(np.pi * disc.ys)
    Lu = apply(op, u)
    factor = continuum_sine_factor(spec)
    pts = [(0.5, 0.5), (0.30625, 0.50625), (0.70625, 0.25625), (0.15625, 0.84375), (0.45625, 0.15625)]
    for x, y in pts:
        i = int(np.argmin((disc.xs - x) ** 2 + (disc.ys - y) ** 2))
        assert disc.field_dist[i] > delta
        cont = factor * u[i]
        assert abs(Lu[i] - cont) <= 1e-4 * abs(cont)
        # the continuum operator itself is off from the Laplacian by O(delta^2)
        assert abs(cont + 2 * math.pi ** 2 * u[i]) > 10 * abs(Lu[i] - cont)


def test_integration_by_parts_random_pairs(square_op):
    rng = np.random.default_rng(7)
    for _ in range(20):
        u, w = rng.standard_normal((2, square_op.n))
        assert ibp_residual(square_op, u, w) <= 1e-12


def test_gradient_energy_properties(disk_op):
    rng = np.random.default_rng(3)
    u = rng.standard_normal(disk_op.n)
    assert gradient_energy(disk_op, u, u) > 0
    assert gradient_energy(disk_op, np.ones(disk_op.n), u) == 0.0
    w = rng.standard_normal(disk_op.n)
    assert gradient_energy(disk_op, u, w) == pytest.approx(gradient_energy(disk_op, w, u), rel=1e-12)
    assert ibp_residual(disk_op, np.zeros(disk_op.n), w) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_semidefinite_and_ibp_property(seed):
    disc = build_grid(unit_square(), 1 / 15, 0.2)
    op = assemble_laplacian(disc, K.KernelSpec("bump", 0.2))
    rng = np.random.default_rng(seed)
    u, w = rng.standard_normal((2, op.n))
    assert float(apply(op, u) @ u) <= 1e-12 * float(u @ u)
    assert ibp_residual(op, u, w) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_linearity(a, b, seed):
    disc = build_grid(unit_square(), 1 / 15, 0.2)
    op = assemble_laplacian(disc, K.KernelSpec("polynomial", 0.2))
    u, w = np.random.default_rng(seed).standard_normal((2, op.n))
    np.testing.assert_allclose(apply(op, a * u + b * w), a * apply(op, u) + b * apply(op, w),
                               atol=1e-9 * (1 + abs(a) + abs(b)) * op.degree.max())


def test_symmetry_break_flag():
    disc = build_grid(unit_square(), 1 / 15, 0.2)
    op = assemble_laplacian(disc, K.KernelSpec("bump", 0.2), break_symmetry=True)
    D = (op.matrix - op.matrix.T).tocsr()
    D.eliminate_zeros()
    assert D.nnz == 2


def test_assembly_rejects_mismatch_and_under_resolution():
    disc = build_grid(unit_square(), 0.05, 0.15)
    with pytest.raises(ConfigurationError):
        assemble_laplacian(disc, K.KernelSpec("bump", 0.2))
    with pytest.raises(ConfigurationError):
        stencil_weights(K.KernelSpec("bump", 0.1), 0.05)
    with pytest.raises(ConfigurationError):
        stencil_weights(K.KernelSpec("bump", 0.3), 0.1, "trapezoid")
    with pytest.raises(ConfigurationError):
        stencil_weights(K.KernelSpec("bump", 0.3, dim=3), 0.1)


def test_biharmonic_assembly_matches_composition():
    disc = build_grid(unit_square(), 0.025, 0.1)
    op = assemble_laplacian(disc, K.KernelSpec("bump", 0.1))
    B = assemble_biharmonic(op)
    u = np.random.default_rng(0).standard_normal(op.n)
    np.testing.assert_allclose(B @ u, apply_biharmonic(op, u), rtol=1e-10,
                               atol=1e-10 * np.abs(B @ u).max())
    big = build_grid(unit_square(), 1 / 60, 0.05)
    with pytest.raises(ConfigurationError):
        assemble_biharmonic(assemble_laplacian(big, K.KernelSpec("bump", 0.05)))


def test_nonlocal_normal_vanishes_for_clamped_fields():
    disc = build_grid(unit_square(), 0.025, 0.1)
    op = assemble_laplacian(disc, K.KernelSpec("bump", 0.1))
    # u vanishing on the extended collar: zero flux across the inner boundary
    u = np.where(disc.field_dist > 0.2, np.sin(np.pi * disc.xs) * np.sin(np.pi * disc.ys), 0.0)
    N = nonlocal_normal(op, u)
    inner = disc.mask(OMEGA_DELTA)
    assert np.all(N[~inner] == 0)
    assert np.all(N[disc.mask({RegionLabel.INTERIOR_2D})] == 0)
    # a field that is nonzero out to the boundary has nonzero flux on the inner collar
    v = np.sin(np.pi * disc.xs) * np.sin(np.pi * disc.ys)
    assert np.abs(nonlocal_normal(op, v)[disc.mask({RegionLabel.COLLAR_INNER})]).max() > 0


def test_nonlocal_normal_brute_force():
    disc = build_grid(unit_square(), 0.05, 0.15)
    op = assemble_laplacian(disc, K.KernelSpec("polynomial", 0.15))
    u = np.cos(disc.xs) + disc.ys ** 3
    N = nonlocal_normal(op, u)
    A = op.matrix.toarray()
    outer = disc.field_labels == RegionLabel.COLLAR_OUTER
    inner = disc.mask(OMEGA_DELTA)
    expected = np.zeros(op.n)
    for i in np.flatnonzero(inner):
        expected[i] = np.sum(A[i, outer] * (u[outer] - u[i]))
    np.testing.assert_allclose(N, expected, rtol=1e-12, atol=1e-12)


def test_lipschitz_probe_bounded_across_h():
    vals = []
    for m in (4, 8, 16):
        disc = build_grid(unit_square(), 0.2 / m, 0.2)
        op = assemble_laplacian(disc, K.KernelSpec("bump", 0.2))
        vals.append(lipschitz_probe(op, disc.xs ** 2 + disc.ys ** 2))
    assert max(vals) / min(vals) < 2
    assert min(vals) > 0


def test_matrix_market_output(tmp_path):
    disc = build_grid(unit_square(), 0.1, 0.3)
    op = assemble_laplacian(disc, K.KernelSpec("bump", 0.3))
    path = tmp_path / "A.mtx"
    write_matrix_market(op, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "%%MatrixMarket matrix coordinate real general"
    n, _, nnz = map(int, lines[2].split())
    assert n == op.n and nnz == op.matrix.nnz == len(lines) - 3
    triples = [tuple(map(int, l.split()[:2])) for l in lines[3:]]
    assert triples == sorted(triples)
    from scipy.io import mmread
    np.testing.assert_array_equal(mmread(str(path)).toarray(), op.matrix.toarray())
