"""Domains, cell-centred uniform grids and collar labelling.

Nodes sit at cell centres of a uniform grid covering the bounding box of the domain
and are ordered row-major (``index = iy * nx + ix``).  Each node is labelled by its
signed distance ``s`` to the boundary::

    INTERIOR_2D    s > 2*delta
    COLLAR_INNER   delta < s <= 2*delta
    COLLAR_OUTER   0 < s <= delta
    EXTERIOR       s <= 0          (carries no unknown)

Fields are 1-D arrays over the in-domain nodes (labels other than EXTERIOR), in
the same row-major order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

MIN_HORIZON_CELLS = 3


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigurationError("rectangle needs x1 > x0 and y1 > y0")

    @property
    def bounds(self):
        return self.x0, self.y0, self.x1, self.y1

    def signed_distance(self, x, y):
        # min over the four faces; exact inside, negative outside
        return np.minimum(np.minimum(x - self.x0, self.x1 - x),
                          np.minimum(y - self.y0, self.y1 - y))


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigurationError("disk radius must be positive")

    @property
    def bounds(self):
        return self.cx - self.R, self.cy - self.R, self.cx + self.R, self.cy + self.R

    def signed_distance(self, x, y):
        return self.R - np.hypot(x - self.cx, y - self.cy)


def unit_square():
    return Rectangle(0.0, 0.0, 1.0, 1.0)


def unit_disk():
    return Disk(0.0, 0.0, 1.0)


def signed_distance(domain, p):
    """Signed distance from point ``p = (x, y)`` to the boundary (positive inside)."""
    d = domain.signed_distance(np.asarray(p[0], float), np.asarray(p[1], float))
    return float(d) if np.ndim(d) == 0 else d


class RegionLabel(IntEnum):
    INTERIOR_2D = 0
    COLLAR_INNER = 1
    COLLAR_OUTER = 2
    EXTERIOR = 3


# the unknown sets used by the problems
OMEGA_DELTA = frozenset({RegionLabel.INTERIOR_2D, RegionLabel.COLLAR_INNER})
OMEGA_2DELTA = frozenset({RegionLabel.INTERIOR_2D})
IN_DOMAIN = frozenset({RegionLabel.INTERIOR_2D, RegionLabel.COLLAR_INNER,
                       RegionLabel.COLLAR_OUTER})


def classify(dist, delta):
    """Region labels from signed distances (vectorized, no tolerance band)."""
    dist = np.asarray(dist, float)
    lab = np.full(dist.shape, RegionLabel.EXTERIOR, dtype=np.int8)
    lab[dist > 0] = RegionLabel.COLLAR_OUTER
    lab[dist > delta] = RegionLabel.COLLAR_INNER
    lab[dist > 2 * delta] = RegionLabel.INTERIOR_2D
    return lab


def horizon_offsets(delta, h):
    """Integer lattice offsets ``o != 0`` with ``|o| * h < delta``.

    Membership is decided in lattice units so that offsets lying exactly on the
    horizon circle (e.g. ``|o| = m`` when ``h = delta/m``) are excluded regardless
    of rounding in ``delta / h``.
    """
    ratio = delta / h
    n = int(math.ceil(ratio))
    k = np.arange(-n, n + 1)
    ox, oy = np.meshgrid(k, k, indexing="xy")
    ox, oy = ox.ravel(), oy.ravel()
    r2 = ox * ox + oy * oy
    rounded = round(ratio)
    if abs(ratio - rounded) < 1e-9 * max(1.0, ratio):
        keep = (r2 > 0) & (r2 < rounded * rounded)
    else:
        keep = (r2 > 0) & (r2 < ratio * ratio)
    return np.column_stack([ox[keep], oy[keep]])


@dataclass(frozen=True, eq=False)
class Discretization:
    """Uniform cell-centred grid with per-node region labels.

    Arrays ``x``, ``y``, ``dist``, ``labels`` cover every grid node (row-major).
    ``inside`` lists the grid indices of in-domain nodes; field arrays are indexed
    by position in ``inside``.
    """

    domain: object
    h: float
    delta: float
    m: int
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    dist: np.ndarray
    labels: np.ndarray
    inside: np.ndarray

    @property
    def cell_volume(self):
        return self.h * self.h

    @property
    def n(self):
        """Number of in-domain nodes (length of a field)."""
        return len(self.inside)

    @cached_property
    def field_index(self):
        """(ny, nx) array mapping grid position to field index, -1 outside."""
        idx = np.full(self.nx * self.ny, -1, dtype=np.int64)
        idx[self.inside] = np.arange(self.n)
        return idx.reshape(self.ny, self.nx)

    @cached_property
    def xs(self):
        return self.x[self.inside]

    @cached_property
    def ys(self):
        return self.y[self.inside]

    @cached_property
    def field_dist(self):
        return self.dist[self.inside]

    @cached_property
    def field_labels(self):
        return self.labels[self.inside]

    @cached_property
    def grid_ij(self):
        """(ix, iy) grid coordinates of each in-domain node."""
        return self.inside % self.nx, self.inside // self.nx

    def mask(self, labels):
        """Boolean mask over field nodes whose label is in ``labels``."""
        return np.isin(self.field_labels, [int(l) for l in labels])

    def indices(self, labels):
        return np.flatnonzero(self.mask(labels))

    def sample(self, func):
        """Evaluate ``func(x, y)`` at the in-domain nodes."""
        return np.asarray(func(self.xs, self.ys), dtype=float) * np.ones(self.n)

    def label_counts(self):
        return {lab: int(np.sum(self.labels == lab)) for lab in RegionLabel}

    def check_field(self, u, name="field"):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"{name} has shape {u.shape}, expected ({self.n},)")
        return u


def build_grid(domain, h, delta):
    """Cell-centred grid over the bounding box of ``domain`` with spacing ``h``."""
    if not (h > 0 and delta > 0):
        raise ConfigurationError("h and delta must be positive")
    ratio = delta / h
    if ratio < MIN_HORIZON_CELLS - 1e-9:
        raise ConfigurationError(
            f"horizon under-resolved: delta/h = {ratio:.4g} < {MIN_HORIZON_CELLS}")
    x0, y0, x1, y1 = domain.bounds
    counts = []
    for length in (x1 - x0, y1 - y0):
        n = int(round(length / h))
        if n < 1 or abs(n * h - length) > 1e-8 * max(length, h):
            raise ConfigurationError(
                f"h = {h!r} does not divide the bounding-box side {length!r}")
        counts.append(n)
    nx, ny = counts
    gx = x0 + (np.arange(nx) + 0.5) * h
    gy = y0 + (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(gx, gy, indexing="xy")
    x, y = X.ravel(), Y.ravel()
    dist = domain.signed_distance(x, y)
    labels = classify(dist, delta)
    inside = np.flatnonzero(labels != RegionLabel.EXTERIOR)
    for arr in (x, y, dist, labels, inside):
        arr.setflags(write=False)
    return Discretization(domain=domain, h=float(h), delta=float(delta), m=int(round(ratio)),
                          nx=nx, ny=ny, x=x, y=y, dist=dist, labels=labels, inside=inside)


def neighbors_within_horizon(disc, i):
    """In-domain nodes ``j != i`` with ``|x_j - x_i| < delta`` as (field index, distance) pairs."""
    if not 0 <= i < disc.n:
        raise IndexError(f"node index {i} out of range")
    ix, iy = (int(a[i]) for a in disc.grid_ij)
    offs = horizon_offsets(disc.delta, disc.h)
    jx, jy = ix + offs[:, 0], iy + offs[:, 1]
    ok = (jx >= 0) & (jx < disc.nx) & (jy >= 0) & (jy < disc.ny)
    offs, jx, jy = offs[ok], jx[ok], jy[ok]
    j = disc.field_index[jy, jx]
    keep = j >= 0
    r = np.hypot(offs[keep, 0], offs[keep, 1]) * disc.h
    return list(zip(j[keep].tolist(), r.tolist()))


def write_nodes_csv(disc, path):
    """Dump every grid node as ``index,x,y,label``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y", "label"])
        for k in range(disc.nx * disc.ny):
            w.writerow([k, repr(float(disc.x[k])), repr(float(disc.y[k])),
                        RegionLabel(int(disc.labels[k])).name.lower()])
