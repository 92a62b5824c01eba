"""Manufactured solutions, error norms, rate fitting and convergence studies."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .geometry import IN_DOMAIN, build_grid
from .kernel import KernelSpec
from .operators import assemble_laplacian
from . import solver as slv

FD_STEP = 1e-5
FD_RTOL = 1e-6
FLOOR_FACTOR = 1e-8
SOLUTION_FRACTION = 0.05


@dataclass(frozen=True)
class ManufacturedCase:
    """Analytic field with Laplacian and bi-Laplacian closures.

    Gradients of ``u`` and ``lap`` are carried along so that each derivative can be
    checked against a first-order central difference of the previous one; second
    differences at step 1e-5 would be swamped by round-off.
    """

    name: str
    u: object
    grad: object
    lap: object
    grad_lap: object
    bilap: object
    params: tuple = ()

    def __post_init__(self):
        verify_case(self)

    @property
    def label(self):
        return self.name if not self.params else f"{self.name}({','.join(map(str, self.params))})"


def _zero(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def sine_square(m=1, n=1):
    if int(m) != m or int(n) != n:
        raise ConfigurationError("sine_square needs integer wave numbers")
    a, b = m * math.pi, n * math.pi
    k2 = a * a + b * b

    def u(x, y):
        return np.sin(a * x) * np.sin(b * y)

    def grad(x, y):
        return a * np.cos(a * x) * np.sin(b * y), b * np.sin(a * x) * np.cos(b * y)

    return ManufacturedCase(
        "sine_square", u, grad,
        lap=lambda x, y: -k2 * u(x, y),
        grad_lap=lambda x, y: tuple(-k2 * g for g in grad(x, y)),
        bilap=lambda x, y: k2 * k2 * u(x, y),
        params=(int(m), int(n)))


def quadratic():
    return ManufacturedCase(
        "quadratic", lambda x, y: x * x + y * y, lambda x, y: (2 * x, 2 * y),
        lap=lambda x, y: 4.0 + _zero(x, y), grad_lap=lambda x, y: (_zero(x, y), _zero(x, y)),
        bilap=_zero)


def clamped_disk():
    """u = (1 - r^2)^2: zero value and normal derivative on the unit circle."""
    return ManufacturedCase(
        "clamped_disk", lambda x, y: (1 - x * x - y * y) ** 2,
        lambda x, y: (-4 * x * (1 - x * x - y * y), -4 * y * (1 - x * x - y * y)),
        lap=lambda x, y: 16 * (x * x + y * y) - 8.0,
        grad_lap=lambda x, y: (32 * x, 32 * y),
        bilap=lambda x, y: 64.0 + _zero(x, y))


def constant(c=1.0):
    return ManufacturedCase("constant", lambda x, y: c + _zero(x, y),
                            lambda x, y: (_zero(x, y), _zero(x, y)),
                            lap=_zero, grad_lap=lambda x, y: (_zero(x, y), _zero(x, y)),
                            bilap=_zero)


def linear(a=1.0, b=2.0):
    return ManufacturedCase("linear", lambda x, y: a * x + b * y + _zero(x, y),
                            lambda x, y: (a + _zero(x, y), b + _zero(x, y)),
                            lap=_zero, grad_lap=lambda x, y: (_zero(x, y), _zero(x, y)),
                            bilap=_zero)


CASES = {"sine_square": sine_square, "quadratic": quadratic, "clamped_disk": clamped_disk,
         "constant": constant, "linear": linear}


def make_case(spec):
    """Case from a name such as ``quadratic`` or ``sine_square(2,1)``."""
    spec = spec.strip()
    name, _, rest = spec.partition("(")
    name = name.strip()
    if name not in CASES:
        raise ConfigurationError(f"unknown case {name!r}; expected one of {sorted(CASES)}")
    args = ()
    if rest:
        if not rest.endswith(")"):
            raise ConfigurationError(f"malformed case {spec!r}")
        try:
            args = tuple(int(a) for a in rest[:-1].split(",") if a.strip())
        except ValueError:
            raise ConfigurationError(f"malformed case arguments in {spec!r}") from None
    return CASES[name](*args)


def verify_case(case, n_points=10, seed=12345):
    """Check grad, lap, grad_lap and bilap by central differences of the previous level."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.05, 0.95, size=(n_points, 2))
    h = FD_STEP

    def check(what, exact, approx):
        scale = max(abs(exact), 1.0)
        if abs(exact - approx) > FD_RTOL * scale:
            raise ConfigurationError(
                f"case {case.name}: analytic {what} disagrees with finite differences "
                f"({exact!r} vs {approx!r})")

    for x, y in pts:
        gx, gy = (float(g) for g in case.grad(x, y))
        check("d/dx u", gx, float(case.u(x + h, y) - case.u(x - h, y)) / (2 * h))
        check("d/dy u", gy, float(case.u(x, y + h) - case.u(x, y - h)) / (2 * h))
        div = (float(case.grad(x + h, y)[0] - case.grad(x - h, y)[0])
               + float(case.grad(x, y + h)[1] - case.grad(x, y - h)[1])) / (2 * h)
        check("laplacian", float(case.lap(x, y)), div)
        gx, gy = (float(g) for g in case.grad_lap(x, y))
        check("d/dx lap", gx, float(case.lap(x + h, y) - case.lap(x - h, y)) / (2 * h))
        check("d/dy lap", gy, float(case.lap(x, y + h) - case.lap(x, y - h)) / (2 * h))
        div = (float(case.grad_lap(x + h, y)[0] - case.grad_lap(x - h, y)[0])
               + float(case.grad_lap(x, y + h)[1] - case.grad_lap(x, y - h)[1])) / (2 * h)
        check("bi-laplacian", float(case.bilap(x, y)), div)


# --- norms and fits ---------------------------------------------------------

def l2_norm(disc, e, region=IN_DOMAIN):
    """sqrt(h^d * sum of e_i^2 over nodes in ``region``)."""
    e = disc.check_field(e, "error field")
    mask = disc.mask(region)
    if not mask.any():
        raise ValueError("l2_norm over an empty region")
    return math.sqrt(disc.cell_volume * float(np.sum(e[mask] ** 2)))


@dataclass(frozen=True)
class StudyRow:
    delta: float
    h: float
    m: int
    error_l2: float
    error_linf: float
    iterations: int


@dataclass
class StudyResult:
    rows: list
    fitted_order: float
    target_order: float | None
    passed: bool
    warnings: list = field(default_factory=list)
    failing_row: int | None = None
    reference_norm: float | None = None


def fit_order(rows, column="error_l2"):
    """Least-squares slope of log(error) against log(delta).

    Rows with zero error are dropped (with a warning); fewer than three usable rows
    is an error.
    """
    d = np.array([r.delta for r in rows], float)
    e = np.array([getattr(r, column) for r in rows], float)
    keep = e > 0
    if not keep.all():
        warnings.warn(f"fit_order: {int((~keep).sum())} zero-error row(s) excluded",
                      RuntimeWarning, stacklevel=2)
    if keep.sum() < 3:
        raise ValueError("fit_order needs at least 3 rows with positive error")
    slope = np.polyfit(np.log(d[keep]), np.log(e[keep]), 1)[0]
    return float(slope)


def _ladder(deltas):
    ds = sorted({float(d) for d in deltas}, reverse=True)
    if len(ds) != len(list(deltas)):
        raise ConfigurationError("delta ladder has repeated values")
    if any(d <= 0 for d in ds):
        raise ConfigurationError("delta ladder must be positive")
    return ds


def _grid(domain, delta, m, family, quadrature):
    disc = build_grid(domain, delta / m, delta)
    op = assemble_laplacian(disc, KernelSpec(family, delta), quadrature)
    return disc, op


def _pointwise(domain, case, deltas, m, quadrature, family, power, target):
    rows, floors = [], []
    for delta in _ladder(deltas):
        disc, op = _grid(domain, delta, m, family, quadrature)
        u = disc.sample(case.u)
        if power == 1:
            err = op.apply(u) - disc.sample(case.lap)
        else:
            err = op.apply_biharmonic(u) - disc.sample(case.bilap)
        region = disc.field_dist > power * delta
        if not region.any():
            raise ConfigurationError(f"no nodes farther than {power}*delta from the boundary "
                                     f"at delta={delta}")
        e = err[region]
        rows.append(StudyRow(delta, disc.h, m, math.sqrt(disc.cell_volume * float(e @ e)),
                             float(np.max(np.abs(e))), 0))
        # round-off scale of evaluating L^power u in floating point
        row_sum = 2.0 * float(op.degree.max())
        floors.append(FLOOR_FACTOR * max(float(np.max(np.abs(u))), 1e-300) * row_sum ** power)
    return _finish_pointwise(rows, floors, target)


def _finish_pointwise(rows, floors, target):
    at_floor = all(r.error_linf <= f for r, f in zip(rows, floors))
    notes = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            order = fit_order(rows, "error_linf")
    except ValueError as exc:
        order = float("nan")
        notes.append(str(exc))
    passed = at_floor or (np.isfinite(order) and order >= 0.9 * target)
    failing = None
    if not passed:
        failing = next((k for k, (r, f) in enumerate(zip(rows, floors)) if r.error_linf > f), 0)
    return StudyResult(rows, order, float(target), bool(passed), notes, failing)


def run_pointwise_laplacian_study(domain, case, deltas, m, quadrature="ring_corrected",
                                  family="bump"):
    """Sup and L2 error of L u - Lap u over nodes farther than delta from the boundary.

    The order is fitted to the sup-norm errors (the pointwise bound is a sup bound).
    Passes when the order reaches 0.9 * 2, or every error sits at the round-off floor
    ``1e-8 * |u|_inf * |A|_inf``.
    """
    return _pointwise(domain, case, deltas, m, quadrature, family, power=1, target=2.0)


def run_pointwise_biharmonic_study(domain, case, deltas, m, quadrature="ring_corrected",
                                   family="bump"):
    """As the Laplacian study for L L u - Lap^2 u over nodes farther than 2*delta; target 1."""
    return _pointwise(domain, case, deltas, m, quadrature, family, power=2, target=1.0)


def forcing_for(kind, case):
    return case.lap if kind == "poisson" else case.bilap


def run_solution_study(kind, domain, case, deltas, m, tol=slv.DEFAULT_TOL,
                       quadrature="ring_corrected", family="bump", preconditioner=None):
    """Solve on each delta and record the L2(Omega) and max errors against ``case.u``.

    Errors are measured on every in-domain node, collars included.  Passes when the
    L2 errors strictly decrease and the last one is at most 5% of |u_exact|_L2.  A
    non-monotone ladder whose last error passes only raises a warning.  The fitted
    order is informational.
    """
    if kind not in slv.PROBLEM_KINDS:
        raise ConfigurationError(f"unknown problem kind {kind!r}")
    rows = []
    ref = None
    for delta in _ladder(deltas):
        disc, op = _grid(domain, delta, m, family, quadrature)
        kw = {} if kind == "hinged_monolithic" else {"preconditioner": preconditioner}
        rep = slv.solve(kind, disc, op, forcing_for(kind, case), tol=tol, **kw)
        ue = disc.sample(case.u)
        err = rep.solution - ue
        rows.append(StudyRow(delta, disc.h, m, l2_norm(disc, err), float(np.max(np.abs(err))),
                             rep.iterations))
        ref = l2_norm(disc, ue)
    notes = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            order = fit_order(rows)
    except ValueError:
        order = float("nan")
    errs = [r.error_l2 for r in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    small = errs[-1] <= SOLUTION_FRACTION * ref
    failing = None
    if not decreasing:
        k = next(i for i in range(1, len(errs)) if errs[i] >= errs[i - 1])
        notes.append(f"errors not strictly decreasing at delta={rows[k].delta!r}")
        if small:
            warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
        else:
            failing = k
    if not small:
        notes.append(f"final error {errs[-1]:.4g} exceeds {SOLUTION_FRACTION:g} * "
                     f"|u_exact| = {SOLUTION_FRACTION * ref:.4g}")
        failing = len(rows) - 1 if failing is None else failing
    return StudyResult(rows, order, None, bool(small), notes, failing, ref)


def write_study_csv(result, path_or_file):
    """Study CSV: header, one row per delta, then ``# fitted_order=`` and ``# passed=``."""
    lines = ["delta,h,m,error_l2,error_linf,iterations"]
    for r in result.rows:
        lines.append(f"{r.delta!r},{r.h!r},{r.m},{r.error_l2!r},{r.error_linf!r},{r.iterations}")
    lines.append(f"# fitted_order={result.fitted_order!r}")
    lines.append(f"# passed={'true' if result.passed else 'false'}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
    return text
