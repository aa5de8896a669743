"""Sub-threshold scaling fit ``p_L = C (p / p_th)^(a (d + 1) / 2)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .memory import SweepRow

NON_SCALING_A = 0.1


@dataclass(frozen=True)
class FitParams:
    basis: str
    C: float
    a: float
    p_th: float
    cov: tuple  # 2x2 covariance of (log C, a)
    chi2: float
    dof: int
    lambda_ref: float  # suppression per distance step d -> d + 2 at the smallest fitted p
    non_scaling: bool

    @property
    def a_err(self) -> float:
        return math.sqrt(self.cov[1][1])

    @property
    def C_err(self) -> float:
        return self.C * math.sqrt(self.cov[0][0])

    def to_dict(self) -> dict:
        return {"basis": self.basis, "C": self.C, "C_err": self.C_err, "a": self.a, "a_err": self.a_err,
                "p_th": self.p_th, "lambda_ref": self.lambda_ref, "chi2": self.chi2, "dof": self.dof,
                "non_scaling": self.non_scaling}


def fit_scaling(rows: list[SweepRow], p_th: float, basis: str | None = None) -> FitParams:
    """Weighted least squares of ``log p_L`` on ``((d + 1) / 2) log(p / p_th)``.

    The model is linear in ``(log C, a)``, so the solution is closed-form and
    needs no starting point.  Rows with zero failures carry no log-scale
    information and are skipped; rows above ``p_th`` are rejected.  The
    covariance is inflated by the reduced chi-square when that exceeds one.
    """
    if not 0 < p_th < 0.05:
        raise ValueError(f"p_th must lie in (0, 0.05), got {p_th}")
    if basis is not None:
        rows = [r for r in rows if r.basis == basis]
    elif len({r.basis for r in rows}) > 1:
        raise ValueError("rows mix bases; pass basis=")
    rows = [r for r in rows if r.failures > 0 and r.p_L > 0]
    if any(r.p >= p_th for r in rows):
        raise ValueError("scaling fit takes sub-threshold rows only")
    if len({r.d for r in rows}) < 2:
        raise ValueError("scaling fit is underdetermined: need rows from at least two distances")
    x = np.array([(r.d + 1) / 2 * math.log(r.p / p_th) for r in rows])
    y = np.array([math.log(r.p_L) for r in rows])
    sig = np.array([r.err / r.p_L if r.err > 0 else 1.0 for r in rows])
    A = np.column_stack([np.ones_like(x), x])
    w = 1.0 / sig**2
    normal = A.T @ (A * w[:, None])
    if np.linalg.matrix_rank(normal) < 2:
        raise ValueError("scaling fit is underdetermined: the design matrix is singular")
    cov = np.linalg.inv(normal)
    logC, a = cov @ (A.T @ (w * y))
    resid = (y - A @ np.array([logC, a])) / sig
    chi2 = float(resid @ resid)
    dof = len(rows) - 2
    if dof > 0 and chi2 / dof > 1:
        cov = cov * (chi2 / dof)
    p_min = min(r.p for r in rows)
    lam = (p_th / p_min) ** a
    basis = rows[0].basis
    return FitParams(basis, float(math.exp(logC)), float(a), float(p_th), tuple(map(tuple, cov.tolist())),
                     chi2, dof, float(lam), bool(a < NON_SCALING_A))
