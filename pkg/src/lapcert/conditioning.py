"""Condition-number bounds for discounted Laplacian systems and the
machinery to check observed error/residual ratios against them.

Classical bounds depend only on ``alpha``.  The data-dependent constant
``kappa_D(L, b)`` depends on how far the solution leans away from the
all-ones vector in the D-geometry; for right-hand sides of the form
``1 - 1_S`` it is further bounded through the degree-mass fraction of ``S``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
import math

import numpy as np

from .graph import Graph, _check_alpha, laplacian_apply, norm

SLACK = 1.0 + 1e-8


@dataclass(frozen=True)
class AngleReport:
    """D-orthogonal split ``x = gamma * 1 + w`` with ``w^T D 1 = 0``."""

    gamma: float
    cos_d: float
    sin_d: float
    w_norm_d: float
    x_norm_d: float


@dataclass
class ConditionReport:
    alpha: float
    norm_kind: str
    relerr: float
    relres: float
    observed_ratio: float
    degenerate: bool
    classical_lower: float
    classical_upper: float
    kappa_db: float
    kappa_db_is_bound: bool
    cos_d: float
    cos_lower_bound: float
    rho: float
    prop2_case: str
    prop2_bound: float
    rho_bound: float
    lower_ok: bool
    classical_upper_ok: bool
    kappa_db_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.lower_ok and self.classical_upper_ok and self.kappa_db_ok

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> dict:
        return asdict(self)


def classical_bounds(alpha: float, p: str = "D") -> tuple[float, float]:
    """``((1-alpha)/(1+alpha), (1+alpha)/(1-alpha))``, valid in the inf-norm for
    ``L``, the one-norm for ``L^T`` and the D-norm on undirected graphs."""
    if p not in ("one", "inf", "D"):
        raise ValueError(f"classical bound not available for norm {p!r}; use one, inf or D")
    alpha = _check_alpha(alpha)
    return (1.0 - alpha) / (1.0 + alpha), (1.0 + alpha) / (1.0 - alpha)


def d_angle(x, g: Graph) -> AngleReport:
    x = np.asarray(x, dtype=np.float64)
    d = g.degrees
    xnorm = norm(x, "D", d)
    if xnorm == 0.0:
        raise ValueError("angle undefined for the zero vector")
    vol = float(d.sum())
    gamma = float(d @ x) / vol
    w = x - gamma
    wnorm = norm(w, "D", d)
    cos = min(abs(gamma) * math.sqrt(vol) / xnorm, 1.0)
    sin = min(wnorm / xnorm, 1.0)
    return AngleReport(gamma=gamma, cos_d=cos, sin_d=sin, w_norm_d=wnorm, x_norm_d=xnorm)


def data_dependent_kappa(angle: AngleReport, alpha: float) -> float:
    """``sqrt(cos^2 + sin^2 * ((1+alpha)/(1-alpha))^2)`` from the solution's angle."""
    alpha = _check_alpha(alpha)
    upper = (1.0 + alpha) / (1.0 - alpha)
    k = math.sqrt(angle.cos_d**2 + (angle.sin_d * upper) ** 2)
    return min(max(k, 1.0), upper)


def kappa_from_sin(sin_d: float, alpha: float) -> float:
    sin_d = min(max(float(sin_d), 0.0), 1.0)
    return data_dependent_kappa(AngleReport(0.0, math.sqrt(1.0 - sin_d**2), sin_d, 0.0, 1.0), alpha)


def rho(g: Graph, omega_tilde) -> float:
    """Fraction of total degree carried by ``omega_tilde``."""
    ids = np.unique(np.asarray(list(omega_tilde), dtype=np.int64))
    if ids.size and (ids[0] < 0 or ids[-1] >= g.n):
        raise ValueError("vertex ids out of range")
    return float(g.degrees[ids].sum() / g.degrees.sum()) if ids.size else 0.0


@dataclass(frozen=True)
class Prop2Bound:
    case: str  # "small" when rho <= (1-alpha)^2, else "large"
    bound: float
    intermediate: float


def prop2_bound(rho_value: float, alpha: float) -> Prop2Bound:
    """Case bound on kappa_D for ``b = 1 - 1_S`` with degree mass fraction rho.

    ``intermediate`` is ``sqrt(1 + rho (1+alpha)^2/(1-alpha)^2)``, which
    follows from ``sin_D^2 <= rho`` and is never looser than the case bound.
    """
    alpha = _check_alpha(alpha)
    if not 0.0 <= rho_value <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    ratio2 = ((1.0 + alpha) / (1.0 - alpha)) ** 2
    intermediate = math.sqrt(1.0 + rho_value * ratio2)
    if rho_value <= (1.0 - alpha) ** 2:
        return Prop2Bound("small", math.sqrt(5.0), intermediate)
    return Prop2Bound("large", math.sqrt(1.0 + ratio2), intermediate)


def cos_lower_bound_indicator(g: Graph, omega_tilde) -> float:
    """Lower bound on ``cos_D(x, 1)`` for ``L x = 1 - 1_S`` computed from ``b``
    alone: the D-cosine between ``b`` and ``1``, which is ``sqrt(1 - rho)``."""
    ids = np.unique(np.asarray(list(omega_tilde), dtype=np.int64))
    if ids.size >= g.n:
        raise ValueError("omega_tilde covers every vertex; the right-hand side would vanish")
    b = np.ones(g.n)
    b[ids] = 0.0
    d = g.degrees
    return float(d @ b) / (math.sqrt(float(d.sum())) * norm(b, "D", d))


def verify_two_sided(
    g: Graph,
    alpha: float,
    b,
    x_ref,
    x_hat,
    norm_kind: str = "D",
    omega_tilde=None,
    transpose: bool = False,
    ref_tol: float = 1e-12,
    slack: float = SLACK,
) -> ConditionReport:
    """Compare the relative error of ``x_hat`` with its relative residual.

    ``x_ref`` is the reference solution (from a solve at ``ref_tol``).  The
    data-dependent bound uses the angle of ``x_ref`` and is only asserted in
    the D-norm on undirected graphs.  Pass ``omega_tilde`` when ``b`` is
    ``1 - 1_{omega_tilde}`` to fill in rho and the case bound.

    A residual at or below ``ref_tol`` cannot be resolved against the
    reference, so such cases are flagged degenerate with ratio 1.
    """
    alpha = _check_alpha(alpha)
    b = np.asarray(b, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if not np.any(b):
        raise ValueError("right-hand side must be nonzero")
    lower_c, upper_c = classical_bounds(alpha, norm_kind)
    d = g.degrees
    relres = norm(b - laplacian_apply(g, alpha, x_hat, transpose=transpose), norm_kind, d) / norm(b, norm_kind, d)
    relerr = norm(x_ref - x_hat, norm_kind, d) / norm(x_ref, norm_kind, d)
    degenerate = relres <= ref_tol
    ratio = 1.0 if degenerate else relerr / relres

    angle = d_angle(x_ref, g)
    use_kappa_db = norm_kind == "D" and g.is_symmetric and not transpose
    kappa_db = data_dependent_kappa(angle, alpha) if use_kappa_db else upper_c

    rho_value, case, bound, rho_bound, cos_lb = math.nan, "", math.nan, math.nan, math.nan
    if omega_tilde is not None:
        ids = list(omega_tilde)
        rho_value = rho(g, ids)
        pb = prop2_bound(rho_value, alpha)
        case, bound, rho_bound = pb.case, pb.bound, pb.intermediate
        cos_lb = cos_lower_bound_indicator(g, ids)

    if degenerate:
        lower_ok = upper_ok = kappa_ok = True
    else:
        lower_ok = lower_c * relres <= relerr * slack
        upper_ok = relerr <= upper_c * relres * slack
        kappa_ok = relerr <= kappa_db * relres * slack
    return ConditionReport(
        alpha=alpha, norm_kind=norm_kind, relerr=relerr, relres=relres, observed_ratio=ratio,
        degenerate=degenerate, classical_lower=lower_c, classical_upper=upper_c,
        kappa_db=kappa_db, kappa_db_is_bound=not use_kappa_db, cos_d=angle.cos_d,
        cos_lower_bound=cos_lb, rho=rho_value, prop2_case=case, prop2_bound=bound,
        rho_bound=rho_bound, lower_ok=bool(lower_ok), classical_upper_ok=bool(upper_ok),
        kappa_db_ok=bool(kappa_ok),
    )


def kappa_db_from_rhs(g: Graph, omega_tilde, alpha: float) -> float:
    """Upper bound on kappa_D available from ``b = 1 - 1_S`` alone, using
    the cosine lower bound in place of the solution's angle."""
    cos_lb = cos_lower_bound_indicator(g, omega_tilde)
    return kappa_from_sin(math.sqrt(max(1.0 - cos_lb**2, 0.0)), alpha)
