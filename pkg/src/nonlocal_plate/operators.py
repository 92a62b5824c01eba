"""Discrete scaled nonlocal Laplacian, its biharmonic composition and energy identities.

The operator acts on fields over the in-domain nodes of a :class:`Discretization`::

    (L u)_i = sum_j w_ij (u_j - u_i),   w_ij = sigma * mu(|x_i - x_j|) * h**2

with the sum over in-domain nodes ``j`` inside the horizon, so integrals are
truncated to the domain.  Pair weights depend only on the lattice offset, and each
unordered pair is written to both triangle entries, so the matrix is bit-exactly
symmetric.

Two quadratures handle the 1/r singularity of the integrand at ``y = x``:

``midpoint_skip``
    midpoint rule on every lattice cell except the centre cell, which is dropped.
``ring_corrected``
    midpoint weights for offsets with ``max(|ox|, |oy|) >= 2``; the eight weights
    of the innermost ring are replaced by values that make the stencil reproduce
    the kernel's second moment and mixed fourth moment exactly.  The target
    moments are computed in polar coordinates (adaptive radial quadrature times the
    exact angular integral).  Quadratics are then reproduced to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import kernel as kern
from .errors import ConfigurationError
from .geometry import IN_DOMAIN, OMEGA_DELTA, RegionLabel, horizon_offsets

QUADRATURES = ("midpoint_skip", "ring_corrected")
MAX_BIHARMONIC_NODES = 50 * 50


def stencil_weights(spec, h, quadrature="ring_corrected"):
    """Lattice offsets inside the horizon and their scaled weights ``sigma*mu*h^2``.

    Returns ``(offsets, weights)`` with ``offsets`` of shape (K, 2).
    """
    if quadrature not in QUADRATURES:
        raise ConfigurationError(f"unknown quadrature {quadrature!r}; expected one of {QUADRATURES}")
    if spec.dim != 2:
        raise ConfigurationError("grid operators are implemented for dim = 2 only")
    if spec.delta / h < 3 - 1e-9:
        raise ConfigurationError(
            f"quadrature {quadrature} needs delta/h >= 3, got {spec.delta / h:.4g}")
    offs = horizon_offsets(spec.delta, h)
    ox, oy = offs[:, 0].astype(float), offs[:, 1].astype(float)
    r = np.hypot(ox, oy) * h
    w = kern.mu(spec, r) * h * h

    if quadrature == "ring_corrected":
        ring = np.maximum(np.abs(offs[:, 0]), np.abs(offs[:, 1])) == 1
        axis = ring & ((offs[:, 0] == 0) | (offs[:, 1] == 0))
        diag = ring & ~axis
        outer = ~ring
        # int z_x^2 mu dz = mass/2 ; int z_x^2 z_y^2 mu dz = (pi/4) int rho r^3 dr
        m2 = 0.5 * kern.mass(spec)
        m22 = 0.25 * math.pi * kern.radial_moment(spec, 3)
        m2_out = np.sum(w[outer] * (ox[outer] * h) ** 2)
        m22_out = np.sum(w[outer] * (ox[outer] * oy[outer] * h * h) ** 2)
        b = (m22 - m22_out) / (4 * h ** 4)
        a = ((m2 - m2_out) / h ** 2 - 4 * b) / 2
        if not (a > 0 and b > 0):
            raise ConfigurationError(
                f"ring correction produced non-positive weights (a={a:.3e}, b={b:.3e})")
        w = w.copy()
        w[axis] = a
        w[diag] = b
    return offs, spec.sigma * w


@dataclass(eq=False)
class NonlocalOperator:
    """Sparse symmetric scaled nonlocal Laplacian on a discretization.

    ``pairs`` holds the off-diagonal weights ``w_ij >= 0`` (CSR, sorted indices);
    the full matrix with diagonal ``-sum_j w_ij`` is available as :attr:`matrix`.
    """

    disc: object
    spec: object
    quadrature: str
    sigma: float
    pairs: sp.csr_matrix

    @property
    def n(self):
        return self.disc.n

    @cached_property
    def rows(self):
        return np.repeat(np.arange(self.n, dtype=np.int32), np.diff(self.pairs.indptr))

    @cached_property
    def degree(self):
        """Row sums of the pair weights (minus the diagonal of the matrix)."""
        return np.bincount(self.rows, weights=self.pairs.data, minlength=self.n)

    @cached_property
    def matrix(self):
        A = (self.pairs - sp.diags(self.degree, format="csr")).tocsr()
        A.sort_indices()
        return A

    @cached_property
    def _upper(self):
        m = self.pairs.indices > self.rows
        return self.rows[m], self.pairs.indices[m], self.pairs.data[m]

    def apply(self, u):
        """L u, evaluated in difference form so constants map to exactly zero."""
        u = self.disc.check_field(u, "u")
        diff = u[self.pairs.indices] - u[self.rows]
        diff *= self.pairs.data
        return np.bincount(self.rows, weights=diff, minlength=self.n)

    def apply_biharmonic(self, u):
        return self.apply(self.apply(u))

    def submatrix(self, rows, cols):
        return self.matrix[rows][:, cols].tocsr()


def assemble_laplacian(disc, spec, quadrature="ring_corrected", *, break_symmetry=False):
    """Assemble the scaled nonlocal Laplacian on ``disc``.

    ``break_symmetry`` perturbs a single entry on one side only; it exists to
    exercise the failure path of the identity checks.
    """
    if not math.isclose(spec.delta, disc.delta, rel_tol=1e-12):
        raise ConfigurationError(f"kernel delta {spec.delta} != grid delta {disc.delta}")
    offs, weights = stencil_weights(spec, disc.h, quadrature)
    F = disc.field_index
    ny, nx = F.shape
    half = (offs[:, 0] > 0) | ((offs[:, 0] == 0) & (offs[:, 1] > 0))
    src_parts, dst_parts, w_parts = [], [], []
    for (ox, oy), w in zip(offs[half], weights[half]):
        ys, yd = slice(max(0, -oy), ny - max(0, oy)), slice(max(0, oy), ny - max(0, -oy))
        xs, xd = slice(max(0, -ox), nx - max(0, ox)), slice(max(0, ox), nx - max(0, -ox))
        a = F[ys, xs].ravel()
        b = F[yd, xd].ravel()
        ok = (a >= 0) & (b >= 0)
        src_parts.append(a[ok].astype(np.int32))
        dst_parts.append(b[ok].astype(np.int32))
        w_parts.append(np.full(int(ok.sum()), w))
    src = np.concatenate(src_parts) if src_parts else np.zeros(0, np.int32)
    dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, np.int32)
    w = np.concatenate(w_parts) if w_parts else np.zeros(0)
    P = sp.csr_matrix((np.concatenate([w, w]), (np.concatenate([src, dst]),
                                                np.concatenate([dst, src]))),
                      shape=(disc.n, disc.n))
    P.sort_indices()
    if break_symmetry and P.nnz:
        P.data[0] *= 1.0 + 1e-9
    return NonlocalOperator(disc=disc, spec=spec, quadrature=quadrature,
                            sigma=spec.sigma, pairs=P)


def apply(op, u):
    return op.apply(u)


def apply_biharmonic(op, u):
    return op.apply_biharmonic(u)


def assemble_biharmonic(op):
    """Explicit sparse L @ L; only for grids with at most 50 x 50 nodes."""
    if op.disc.nx * op.disc.ny > MAX_BIHARMONIC_NODES:
        raise ConfigurationError("assembled biharmonic is limited to grids of at most 50x50 nodes")
    A = op.matrix
    return (A @ A).tocsr()


def gradient_energy(op, u, w):
    """Pairwise form sum_{i<j} w_ij (u_i - u_j)(w_i - w_j); equals -<L u, w>."""
    u = op.disc.check_field(u, "u")
    w = op.disc.check_field(w, "w")
    i, j, c = op._upper
    return float(np.dot(c, (u[i] - u[j]) * (w[i] - w[j])))


def ibp_residual(op, u, w):
    """Relative mismatch of <L u, w> h^2 = -((u, w)) h^2."""
    hd = op.disc.cell_volume
    lhs = float(np.dot(op.apply(u), w)) * hd
    rhs = gradient_energy(op, u, w) * hd
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else abs(lhs + rhs) / scale


def nonlocal_normal(op, u, region=OMEGA_DELTA):
    """Nonlocal normal derivative of the two-point gradient of ``u``.

    At nodes in ``region`` (the inner subdomain) returns
    ``sum_{j outside region} w_ij (u_j - u_i)``; zero at all other nodes.
    """
    u = op.disc.check_field(u, "u")
    region = frozenset(RegionLabel(r) for r in region)
    in_region = op.disc.mask(region)
    outside = op.disc.mask(IN_DOMAIN - region)
    cols = op.pairs.indices
    sel = in_region[op.rows] & outside[cols]
    rows = op.rows[sel]
    vals = op.pairs.data[sel] * (u[cols[sel]] - u[rows])
    return np.bincount(rows, weights=vals, minlength=op.n)


def lipschitz_probe(op, u, region=None):
    """max |L u(x_i) - L u(x_j)| / h over grid-adjacent in-domain node pairs."""
    Lu = op.apply(u)
    disc = op.disc
    F = disc.field_index
    keep = np.ones(disc.n, bool) if region is None else disc.mask(region)
    best = 0.0
    for a, b in ((F[:, :-1], F[:, 1:]), (F[:-1, :], F[1:, :])):
        a, b = a.ravel(), b.ravel()
        ok = (a >= 0) & (b >= 0)
        a, b = a[ok], b[ok]
        ok = keep[a] & keep[b]
        if ok.any():
            best = max(best, float(np.max(np.abs(Lu[a[ok]] - Lu[b[ok]]))))
    return best / disc.h


def write_matrix_market(op, path):
    """Write the full matrix as sorted 1-based ``i j value`` triples (MatrixMarket coordinate)."""
    A = op.matrix.tocoo()
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"% nonlocal Laplacian, quadrature={op.quadrature}, delta={op.spec.delta!r}, "
                 f"h={op.disc.h!r}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for k in order:
            fh.write(f"{A.row[k] + 1} {A.col[k] + 1} {float(A.data[k])!r}\n")
