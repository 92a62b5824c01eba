"""Radial compactly supported mollifiers and the scalar constants built from them.

The kernel of the nonlocal Laplacian is ``mu(r) = rho(r) / r**2`` where ``rho`` is a
nonnegative radial mollifier of unit mass supported in ``[0, delta)``.  Two concrete
profiles are provided:

``bump``
    ``rho(r) = c * delta**-d * exp(-1 / (1 - (r/delta)**2))`` (C-infinity, non-increasing)
``polynomial``
    ``rho(r) = c * delta**-d * (1 - (r/delta)**2)**4`` (C3 at the support edge)

The normalization ``c`` is computed once per (family, dim) by radial quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import KernelDomainError, QuadratureError, SingularityError

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-13
QUAD_LIMIT = 200
C_DELTA_EPS = 1e-10


class Family(str, Enum):
    BUMP = "bump"
    POLYNOMIAL = "polynomial"


def _profile(family, t):
    """Unnormalized profile phi(t), t = r/delta, vectorized; zero for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = t < 1.0
    ti = t[inside]
    if family is Family.BUMP:
        out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    else:
        out[inside] = (1.0 - ti * ti) ** 4
    return out


def _profile_scalar(family, t):
    if t >= 1.0:
        return 0.0
    if family is Family.BUMP:
        return math.exp(-1.0 / (1.0 - t * t))
    return (1.0 - t * t) ** 4


def sphere_measure(dim):
    """Surface measure of the unit sphere in R^dim (2*pi in the plane)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def _quad(f, a, b, what, eps=None, **kw):
    epsabs, epsrel = (QUAD_EPSABS, QUAD_EPSREL) if eps is None else (eps, eps)
    val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel,
                              limit=QUAD_LIMIT, full_output=1, **kw)[:2]
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"{what}: quadrature did not converge (estimate {err:.3e})",
                              achieved=err)
    return val


@lru_cache(maxsize=None)
def _normalization(family, dim):
    mass = sphere_measure(dim) * _quad(lambda t: _profile_scalar(family, t) * t ** (dim - 1),
                                       0.0, 1.0, "mollifier mass")
    return 1.0 / mass


@dataclass(frozen=True)
class KernelSpec:
    """Mollifier family, horizon ``delta`` and space dimension ``dim``."""

    family: Family
    delta: float
    dim: int = 2
    normalization: float = field(init=False, compare=False)

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            raise KernelDomainError(f"unknown kernel family {self.family!r}") from None
        object.__setattr__(self, "family", fam)
        if not (isinstance(self.delta, (int, float)) and math.isfinite(self.delta)
                and self.delta > 0):
            raise KernelDomainError(f"delta must be a positive number, got {self.delta!r}")
        object.__setattr__(self, "delta", float(self.delta))
        if int(self.dim) != self.dim or self.dim < 2:
            raise KernelDomainError(f"dim must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "normalization", _normalization(fam, self.dim))

    @property
    def sigma(self):
        return 2.0 * self.dim

    def with_delta(self, delta):
        return KernelSpec(self.family, delta, self.dim)


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(np.isnan(r)) or np.any(r < 0):
        raise KernelDomainError("radius must be nonnegative")
    return r


def rho(spec, r):
    """Mollifier rho_delta(r); exactly 0 for r >= delta.  Accepts scalars or arrays."""
    r_arr = _check_r(r)
    out = spec.normalization * spec.delta ** -spec.dim * _profile(spec.family, r_arr / spec.delta)
    return float(out) if np.ndim(r) == 0 else out


def mu(spec, r):
    """Singular kernel rho(r)/r**2.  Raises SingularityError at r == 0."""
    r_arr = _check_r(r)
    if np.any(r_arr == 0):
        raise SingularityError("mu is singular at r = 0; quadrature must exclude that point")
    out = rho(spec, r_arr) / (r_arr * r_arr)
    return float(out) if np.ndim(r) == 0 else out


def _rho_scalar(spec, s):
    return spec.normalization * spec.delta ** -spec.dim * _profile_scalar(spec.family, s / spec.delta)


@lru_cache(maxsize=4096)
def _pi_cached(spec, r):
    if r >= spec.delta:
        return 0.0
    if r == 0.0:
        # integral of rho(s)/s diverges logarithmically at 0 when rho(0) > 0
        return math.inf
    return _quad(lambda s: _rho_scalar(spec, s) / s, r, spec.delta, "pi_delta")


def pi_of(spec, r):
    """pi_delta(r) = int_r^delta s*mu(s) ds; zero for r >= delta, +inf at r = 0."""
    r_arr = _check_r(r)
    if np.ndim(r) == 0:
        return _pi_cached(spec, float(r_arr))
    return np.array([_pi_cached(spec, float(x)) for x in r_arr.ravel()]).reshape(r_arr.shape)


def mass(spec):
    """Quadrature value of int_{R^d} rho(|x|) dx (should be 1)."""
    return sphere_measure(spec.dim) * _quad(
        lambda r: _rho_scalar(spec, r) * r ** (spec.dim - 1), 0.0, spec.delta, "mass")


def radial_moment(spec, k):
    """int_0^delta rho(r) r**k dr."""
    return _quad(lambda r: _rho_scalar(spec, r) * r ** k, 0.0, spec.delta, f"moment {k}")


def c_delta(spec):
    """(omega/2) * int_0^delta pi(r) r^(d-1) dr by nested adaptive quadrature."""
    d = spec.dim
    # log singularity of pi at 0; splitting at delta/4 keeps the outer rule well resolved.
    # Each outer node costs an inner quadrature, so the outer tolerance is looser.
    breaks = [0.0, 1e-6 * spec.delta, 0.25 * spec.delta, spec.delta]
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        total += _quad(lambda r: _pi_cached(spec, r) * r ** (d - 1) if r > 0 else 0.0,
                       a, b, "C(delta)", eps=C_DELTA_EPS)
    return 0.5 * sphere_measure(d) * total


@dataclass(frozen=True)
class KernelScalars:
    sigma: float
    c_delta: float
    omega_dm1: float


def kernel_scalars(spec):
    return KernelScalars(sigma=spec.sigma, c_delta=c_delta(spec),
                         omega_dm1=sphere_measure(spec.dim))
