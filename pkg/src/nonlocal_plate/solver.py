"""Nonlocal Poisson, hinged and clamped solves on collar-constrained node sets.

Constraints are imposed by elimination: the unknowns are the nodes of the free
set, all other in-domain nodes are held at exactly zero.

=================  ==================  =========================================
problem            unknowns            equations
=================  ==================  =========================================
poisson            Omega_delta or      (L u)_i = f_i
                   Omega_2delta
hinged             Omega_delta         (L L u)_i = f_i on Omega_2delta,
                                       (L u)_i = 0 on Omega_delta \\ Omega_2delta
clamped            Omega_2delta        (L L u)_i = f_i on Omega_2delta
=================  ==================  =========================================

``L`` is negative semidefinite, so Poisson solves use ``(-A) u = -f``.  The clamped
system matrix is ``C^T C`` with ``C`` the columns of ``A`` on the unknown set: the
inner application of ``L`` runs over every in-domain node.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, SolverError
from .geometry import OMEGA_2DELTA, OMEGA_DELTA, RegionLabel

DEFAULT_TOL = 1e-10
PRECONDITIONERS = ("none", "jacobi", "squared_laplacian")
PROBLEM_KINDS = ("poisson", "hinged_monolithic", "hinged_split", "clamped")
COLLARS = {"one_delta": OMEGA_DELTA, "two_delta": OMEGA_2DELTA}


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual: float
    coercivity_estimate: float | None = None
    residual_history: list = field(default_factory=list, repr=False)


def default_max_iter(n_unknowns):
    return min(20000, int(50 * math.ceil(math.sqrt(max(n_unknowns, 1)))))


def conjugate_gradient(A, b, tol=DEFAULT_TOL, max_iter=None, precond=None, x0=None,
                       max_restarts=10, callback=None):
    """Preconditioned CG for SPD ``A`` (matrix or anything with ``@``).

    ``precond`` is None, an array of inverse diagonal entries, or a callable r -> M^{-1} r.

    Stops when the true residual satisfies ``||b - A x|| <= tol * ||b||``.  When the
    recursive residual reaches tol but the true one has drifted above it, CG restarts
    from the true residual.  Returns ``(x, iterations, history)`` where ``history``
    holds relative residual norms.  ``callback(x)`` runs after every iteration.  Raises :class:`SolverError` after ``max_iter``
    iterations or ``max_restarts`` restarts.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    max_iter = default_max_iter(n) if max_iter is None else max_iter
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), 0, [0.0]
    if precond is None:
        apply_m = lambda v: v  # noqa: E731
    elif callable(precond):
        apply_m = precond
    else:
        apply_m = np.asarray(precond).__mul__

    r = b - A @ x
    history = [np.linalg.norm(r) / bnorm]
    restarts = 0
    k = 0
    while True:
        z = apply_m(r)
        p = np.array(z, dtype=float)
        rz = float(r @ z)
        while history[-1] > tol and k < max_iter:
            k += 1
            Ap = A @ p
            alpha = rz / float(p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            history.append(np.linalg.norm(r) / bnorm)
            if callback is not None:
                callback(x)
            z = apply_m(r)
            rz_new = float(r @ z)
            p *= rz_new / rz
            p += z
            rz = rz_new
        r = b - A @ x
        true_res = np.linalg.norm(r) / bnorm
        if true_res <= tol:
            return x, k, history
        if k >= max_iter:
            msg = f"CG did not reach tol={tol:g} in {max_iter} iterations"
            break
        if restarts >= max_restarts:
            msg = (f"CG stagnated after {restarts} restarts at the round-off floor of the "
                   f"operator; tol={tol:g} is not attainable, loosen it")
            break
        restarts += 1
        history.append(true_res)
    raise SolverError(f"{msg} (relative residual {true_res:.3e})", residual_history=history)


def _unknowns(disc, labels):
    idx = disc.indices(labels)
    if idx.size == 0:
        raise ConfigurationError("the unknown node set is empty")
    if idx.size == disc.n:
        raise ConfigurationError("the constrained node set is empty")
    return idx


def _forcing(disc, f):
    if callable(f):
        f = disc.sample(f)
    return disc.check_field(f, "forcing")


def _jacobi(diag, preconditioner):
    if preconditioner in (None, "none"):
        return None
    if preconditioner == "jacobi":
        return 1.0 / diag
    raise ConfigurationError(f"unknown preconditioner {preconditioner!r} for this problem")


def _relres(A, x, b):
    bn = np.linalg.norm(b)
    return 0.0 if bn == 0 else float(np.linalg.norm(b - A @ x) / bn)


def solve_poisson(disc, op, f, collar_width="one_delta", tol=DEFAULT_TOL, max_iter=None,
                  preconditioner=None, coercivity=False):
    """Solve L u = f on the free set, u = 0 on the collar of width delta or 2*delta."""
    if collar_width not in COLLARS:
        raise ConfigurationError(f"collar_width must be one of {tuple(COLLARS)}")
    f = _forcing(disc, f)
    U = _unknowns(disc, COLLARS[collar_width])
    K = -op.submatrix(U, U)
    b = -f[U]
    x, its, hist = conjugate_gradient(K, b, tol, max_iter,
                                      _jacobi(K.diagonal(), preconditioner))
    u = np.zeros(disc.n)
    u[U] = x
    report = SolveReport(u, its, _relres(K, x, b), residual_history=hist)
    if coercivity:
        report.coercivity_estimate = estimate_coercivity(
            disc, op, "poisson" if collar_width == "one_delta" else "poisson_two_delta")
    return report


def solve_hinged_split(disc, op, f, tol=DEFAULT_TOL, max_iter=None, preconditioner=None,
                       coercivity=False):
    """Hinged problem as two Poisson solves.

    Stage 1: L v = f on Omega_2delta, v = 0 outside.  Stage 2: L u = v on Omega_delta,
    u = 0 outside.  Then L u = v vanishes on the inner collar and L L u = f on Omega_2delta.
    """
    f = _forcing(disc, f)
    reports = []
    rhs = f
    for stage, collar in ((1, "two_delta"), (2, "one_delta")):
        try:
            rep = solve_poisson(disc, op, rhs, collar, tol, max_iter, preconditioner)
        except SolverError as exc:
            exc.stage = stage
            exc.args = (f"stage {stage}: {exc.args[0]}",)
            raise
        reports.append(rep)
        rhs = rep.solution
    report = SolveReport(reports[1].solution, sum(r.iterations for r in reports),
                         max(r.residual for r in reports),
                         residual_history=reports[0].residual_history + reports[1].residual_history)
    if coercivity:
        report.coercivity_estimate = estimate_coercivity(disc, op, "hinged")
    return report


def hinged_system(disc, op):
    """Coupled sparse system of the hinged problem with the auxiliary field w = L u.

    Unknowns are ``[u on Omega_delta, w on Omega_2delta]``; block rows::

        A[CI, U1] u          = 0     (L u vanishes on the inner collar)
        -A[U2, U1] u + w     = 0     (w is L u on Omega_2delta)
        A[U2, U2] w          = f     (L w = f on Omega_2delta)

    Rows of ``A`` on Omega_2delta only reach Omega_delta nodes and ``w = 0`` on the
    inner collar, so eliminating ``w`` gives the composed rows (L L u)_i = f_i.
    Returns ``(K, U1, U2, CI)``.
    """
    U1 = _unknowns(disc, OMEGA_DELTA)
    U2 = _unknowns(disc, OMEGA_2DELTA)
    CI = disc.indices({RegionLabel.COLLAR_INNER})
    A = op.matrix
    AU = A[:, U1]
    n1, n2 = len(U1), len(U2)
    K = sp.bmat([[AU[CI], sp.csr_matrix((len(CI), n2))],
                 [-AU[U2], sp.identity(n2, format="csr")],
                 [None, A[U2][:, U2]]], format="csc")
    assert K.shape == (n1 + n2, n1 + n2)
    return K, U1, U2, CI


def solve_hinged_monolithic(disc, op, f, tol=DEFAULT_TOL, coercivity=False):
    """Hinged problem as one coupled system, solved by sparse LU.

    Independent of the split route: no intermediate Poisson solve is formed.
    """
    f = _forcing(disc, f)
    K, U1, U2, CI = hinged_system(disc, op)
    rhs = np.concatenate([np.zeros(len(CI) + len(U2)), f[U2]])
    lu = spla.splu(K, permc_spec="MMD_ATA")
    x = lu.solve(rhs)
    history = [_relres(K, x, rhs)]
    if history[-1] > tol:
        # one step of iterative refinement
        x = x + lu.solve(rhs - K @ x)
        history.append(_relres(K, x, rhs))
    if history[-1] > tol:
        raise SolverError(f"hinged monolithic solve residual {history[-1]:.3e} above tol {tol:g}",
                          residual_history=history)
    u = np.zeros(disc.n)
    u[U1] = x[:len(U1)]
    report = SolveReport(u, len(history), history[-1], residual_history=history)
    if coercivity:
        report.coercivity_estimate = estimate_coercivity(disc, op, "hinged")
    return report


class _NormalOperator:
    """x -> C^T (C x) without forming C^T C."""

    def __init__(self, C):
        self.C = C
        self.CT = C.T.tocsr()

    def __matmul__(self, x):
        return self.CT @ (self.C @ x)


class _SquaredLaplacianInverse:
    """r -> A_22^{-1} A_22^{-1} r from one sparse LU of the Poisson block.

    ``C^T C = A_22^2 + (collar rows)``, so this leaves only a boundary-layer
    perturbation of the identity for CG to resolve.
    """

    def __init__(self, A22):
        self.lu = spla.splu(A22.tocsc(), permc_spec="MMD_AT_PLUS_A")

    def __call__(self, r):
        return self.lu.solve(self.lu.solve(r))


def solve_clamped(disc, op, f, tol=DEFAULT_TOL, max_iter=None, preconditioner=None,
                  coercivity=False):
    """Clamped problem: u = 0 off Omega_2delta, (L L u)_i = f_i on Omega_2delta.

    Intermediate values of L u are kept on every in-domain node, including collars.
    ``preconditioner`` is None, ``"jacobi"`` or ``"squared_laplacian"``.
    """
    f = _forcing(disc, f)
    U2 = _unknowns(disc, OMEGA_2DELTA)
    C = op.matrix[:, U2].tocsr()
    B = _NormalOperator(C)
    b = f[U2]
    if preconditioner == "squared_laplacian":
        M = _SquaredLaplacianInverse(C[U2])
    else:
        M = _jacobi(np.asarray(C.multiply(C).sum(axis=0)).ravel(), preconditioner)
    x, its, hist = conjugate_gradient(B, b, tol, max_iter, M)
    u = np.zeros(disc.n)
    u[U2] = x
    report = SolveReport(u, its, _relres(B, x, b), residual_history=hist)
    if coercivity:
        report.coercivity_estimate = estimate_coercivity(disc, op, "clamped")
    return report


def solve(kind, disc, op, f, tol=DEFAULT_TOL, **kw):
    """Dispatch on problem kind."""
    if kind == "poisson":
        return solve_poisson(disc, op, f, tol=tol, **kw)
    if kind == "hinged_split":
        return solve_hinged_split(disc, op, f, tol=tol, **kw)
    if kind == "hinged_monolithic":
        kw.pop("max_iter", None)
        kw.pop("preconditioner", None)
        return solve_hinged_monolithic(disc, op, f, tol=tol, **kw)
    if kind == "clamped":
        return solve_clamped(disc, op, f, tol=tol, **kw)
    raise ConfigurationError(f"unknown problem kind {kind!r}; expected one of {PROBLEM_KINDS}")


# --- coercivity -------------------------------------------------------------

COERCIVITY_KINDS = ("poisson", "poisson_two_delta", "hinged", "clamped")


def _reduced_forms(disc, op, kind):
    """Pieces defining the reduced SPD form for each kind.

    poisson / poisson_two_delta: K = -A_UU, form u.K.u.
    clamped:  K = C^T C with C = A[:, U2], form |A u|^2.
    hinged:   u = T g with T = A_11^{-1} E (E extends by zero from Omega_2delta to
              Omega_delta); form |chi_delta L u|^2 = |g|^2, restricted to the
              constrained space {L u = 0 on the inner collar}.
    """
    A = op.matrix
    if kind in ("poisson", "poisson_two_delta"):
        U = _unknowns(disc, OMEGA_DELTA if kind == "poisson" else OMEGA_2DELTA)
        return {"K": (-A[U][:, U]).tocsc()}
    if kind == "clamped":
        U2 = _unknowns(disc, OMEGA_2DELTA)
        C = A[:, U2].tocsc()
        return {"K": (C.T @ C).tocsc()}
    if kind == "hinged":
        U1 = _unknowns(disc, OMEGA_DELTA)
        U2 = _unknowns(disc, OMEGA_2DELTA)
        pos = np.searchsorted(U1, U2)
        return {"A11": A[U1][:, U1].tocsc(), "pos": pos, "n1": len(U1)}
    raise ConfigurationError(f"unknown coercivity kind {kind!r}; expected one of {COERCIVITY_KINDS}")


def estimate_coercivity(disc, op, kind, iterations=20, seed=0):
    """Smallest Rayleigh quotient of the reduced SPD form, by inverse power iteration.

    Each iteration applies the inverse of the form via a sparse LU factorization.
    Warns (RuntimeWarning) and returns the best estimate if the last iterations
    still move by more than 1e-6 relative.
    """
    forms = _reduced_forms(disc, op, kind)
    rng = np.random.default_rng(seed)
    lams = []
    if kind == "hinged":
        lu = spla.splu(forms["A11"])
        pos, n1 = forms["pos"], forms["n1"]

        def T(g):
            e = np.zeros(n1)
            e[pos] = g
            return lu.solve(e)

        def TT(y):  # T^T y, A11 symmetric
            return lu.solve(y)[pos]

        g = rng.standard_normal(len(pos))
        g /= np.linalg.norm(g)
        for _ in range(iterations):
            # power iteration on T^T T = inverse iteration on the hinged form
            y = TT(T(g))
            g = y / np.linalg.norm(y)
            u = T(g)
            lams.append(1.0 / float(u @ u))
    else:
        K = forms["K"]
        lu = spla.splu(K)
        x = rng.standard_normal(K.shape[0])
        x /= np.linalg.norm(x)
        for _ in range(iterations):
            y = lu.solve(x)
            x = y / np.linalg.norm(y)
            lams.append(float(x @ (K @ x)))
    lam = lams[-1]
    if len(lams) > 1 and abs(lams[-1] - lams[-2]) > 1e-6 * abs(lam):
        warnings.warn(f"coercivity estimate for {kind} not converged after {iterations} "
                      f"iterations; best estimate {lam:.6g}", RuntimeWarning, stacklevel=2)
    return lam


def dense_coercivity(disc, op, kind):
    """Dense eigensolve of the same reduced form (reference for small grids)."""
    forms = _reduced_forms(disc, op, kind)
    if kind == "hinged":
        A11 = forms["A11"].toarray()
        T = np.linalg.inv(A11)[:, forms["pos"]]
        smax = np.linalg.svd(T, compute_uv=False)[0]
        return 1.0 / smax ** 2
    return float(np.linalg.eigvalsh(forms["K"].toarray())[0])


def write_solution_csv(disc, u, path):
    """Solution dump ``index,x,y,u`` over in-domain nodes (index = grid index)."""
    u = disc.check_field(u, "u")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y", "u"])
        for k in range(disc.n):
            w.writerow([int(disc.inside[k]), repr(float(disc.xs[k])), repr(float(disc.ys[k])),
                        repr(float(u[k]))])
