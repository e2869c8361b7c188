"""Iterative and direct solvers for ``L x = b`` with residual tracking.

``cg_solve`` runs textbook conjugate gradients on the symmetric system
``H y = f`` (``H = D^{1/2} L D^{-1/2}``, ``f = D^{1/2} b``) and maps back with
``x = D^{-1/2} y``.  Because ``f - H y = D^{1/2} (b - L x)``, the two-norm
residual of the H-system is the D-norm residual of the original one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .graph import (
    Graph,
    _check_alpha,
    _check_vec,
    dense_laplacian,
    laplacian_apply,
    norm,
    symmetrized_apply,
    transition_apply,
    transition_transpose_apply,
)

DENSE_LIMIT = 4096
RESIDUAL_REFRESH = 25


@dataclass
class SolveOptions:
    rel_residual_tol: float = 1e-12
    max_iterations: int = 1000
    norm_kind: str | None = None  # None picks the solver's natural norm
    record_history: bool = True
    record_iterates: bool = False

    def __post_init__(self):
        if not self.rel_residual_tol > 0:
            raise ValueError("rel_residual_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    converged: bool
    residual_history: list[float]
    final_rel_residual: float
    norm_kind: str
    iterates: list[np.ndarray] = field(default_factory=list, repr=False)


def _nonzero_rhs(b: np.ndarray) -> None:
    if not np.any(b):
        raise ValueError("right-hand side must be nonzero")


def relative_residual(g: Graph, alpha: float, x, b, kind: str = "D", transpose: bool = False) -> float:
    r = b - laplacian_apply(g, alpha, x, transpose=transpose)
    return norm(r, kind, g.degrees) / norm(b, kind, g.degrees)


def cg_solve(g: Graph, alpha: float, b, opts: SolveOptions | None = None) -> SolveReport:
    """Conjugate gradients from a zero initial guess on an undirected graph.

    The convergence test uses ``opts.norm_kind`` (D-norm by default) on the
    residual ``b - L x``; the recursive residual is replaced by the true one
    every 25 iterations.
    """
    opts = opts or SolveOptions()
    if not g.is_symmetric:
        raise ValueError("cg_solve requires a symmetric adjacency; use richardson_solve")
    alpha = _check_alpha(alpha)
    b = _check_vec(g, b)
    _nonzero_rhs(b)
    kind = opts.norm_kind or "D"
    d = g.degrees
    s = np.sqrt(d)

    def resnorm(r_h):
        # r_h lives in H-coordinates; b - L x = D^{-1/2} r_h
        if kind == "D":
            return float(np.linalg.norm(r_h))
        return norm(r_h / s, kind, d)

    f = s * b
    bnorm = norm(b, kind, d)
    y = np.zeros(g.n)
    r = f.copy()
    p = r.copy()
    rr = float(r @ r)
    history = [resnorm(r) / bnorm] if opts.record_history else []
    iterates = [y / s] if opts.record_iterates else []
    rel = resnorm(r) / bnorm
    converged = rel <= opts.rel_residual_tol
    k = 0
    while not converged and k < opts.max_iterations:
        hp = symmetrized_apply(g, alpha, p)
        php = float(p @ hp)
        if php <= 0.0:
            break  # search direction vanished: residual already at rounding
        step = rr / php
        y += step * p
        k += 1
        if k % RESIDUAL_REFRESH == 0:
            r = f - symmetrized_apply(g, alpha, y)
        else:
            r -= step * hp
        rr_new = float(r @ r)
        rel = resnorm(r) / bnorm
        if opts.record_history:
            history.append(rel)
        if opts.record_iterates:
            iterates.append(y / s)
        if rel <= opts.rel_residual_tol:
            # confirm against the true residual before declaring success
            r = f - symmetrized_apply(g, alpha, y)
            rel = resnorm(r) / bnorm
            rr_new = float(r @ r)
            if opts.record_history:
                history[-1] = rel
            if rel <= opts.rel_residual_tol:
                converged = True
                break
        p = r + (rr_new / rr) * p
        rr = rr_new

    x = y / s
    final = relative_residual(g, alpha, x, b, kind)
    if opts.record_history and history:
        history[-1] = final
    return SolveReport(
        solution=x,
        iterations=k,
        converged=final <= opts.rel_residual_tol,
        residual_history=history,
        final_rel_residual=final,
        norm_kind=kind,
        iterates=iterates,
    )


def richardson_solve(
    g: Graph, alpha: float, b, transpose: bool = False, opts: SolveOptions | None = None
) -> SolveReport:
    """Fixed-point iteration ``x <- alpha P x + b`` from ``x = 0``.

    With ``transpose`` the column-stochastic action ``A^T D^{-1}`` replaces
    ``P = D^{-1} A``.  The iteration contracts by ``alpha`` per step in the
    inf-norm (plain) or one-norm (transpose), which are the default
    convergence norms.  Works on directed graphs.
    """
    opts = opts or SolveOptions()
    alpha = _check_alpha(alpha)
    b = _check_vec(g, b)
    _nonzero_rhs(b)
    kind = opts.norm_kind or ("one" if transpose else "inf")
    apply_p = transition_transpose_apply if transpose else transition_apply
    d = g.degrees
    bnorm = norm(b, kind, d)

    x = np.zeros(g.n)
    r = b.copy()
    rel = 1.0
    history = [rel] if opts.record_history else []
    iterates = [x.copy()] if opts.record_iterates else []
    k = 0
    while rel > opts.rel_residual_tol and k < opts.max_iterations:
        # x_{k+1} = alpha P x_k + b = x_k + r_k
        x = x + r
        k += 1
        r = b - (x - alpha * apply_p(g, x))
        rel = norm(r, kind, d) / bnorm
        if opts.record_history:
            history.append(rel)
        if opts.record_iterates:
            iterates.append(x.copy())
    return SolveReport(
        solution=x,
        iterations=k,
        converged=rel <= opts.rel_residual_tol,
        residual_history=history,
        final_rel_residual=rel,
        norm_kind=kind,
        iterates=iterates,
    )


def dense_solve(g: Graph, alpha: float, b, transpose: bool = False) -> np.ndarray:
    """LU with partial pivoting on the materialized ``L`` (or ``L^T``)."""
    if g.n > DENSE_LIMIT:
        raise ValueError(f"dense_solve limited to n <= {DENSE_LIMIT}, got {g.n}")
    alpha = _check_alpha(alpha)
    b = _check_vec(g, b)
    return solve_dense_matrix(dense_laplacian(g, alpha, transpose), b)


def solve_dense_matrix(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    if np.min(np.abs(np.diag(lu))) <= np.finfo(float).eps * M.shape[0] * np.abs(M).max():
        raise np.linalg.LinAlgError("matrix is numerically singular")
    x = scipy.linalg.lu_solve((lu, piv), b)
    if np.linalg.norm(M @ x - b) > 1e-10 * max(np.linalg.norm(b), np.finfo(float).tiny):
        raise np.linalg.LinAlgError("dense solve residual exceeds 1e-10 relative")
    return x
