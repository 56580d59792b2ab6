"""Linear least squares shared by all model fits.

Designs here are small (a handful of columns), so fits go through a thin QR decomposition with a
rank check on the diagonal of R.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from dailyyield.core import exceptions

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10  # Relative to the largest diagonal element of R


@dataclass(frozen=True)
class DesignRow:
    """One row of a regression: regressor values and the response."""

    regressors: tuple
    response: float


@dataclass(frozen=True)
class CoefEstimates:
    """Least squares estimates with their standard errors."""

    coefficients: np.ndarray
    standard_errors: np.ndarray
    residual_variance: float
    n: int
    names: tuple
    covariance: np.ndarray

    def __getitem__(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def se(self, name: str) -> float:
        return float(self.standard_errors[self.names.index(name)])

    def serialize(self):
        """Convert class data into dict."""
        return {
            "coefficients": dict(zip(self.names, map(float, self.coefficients))),
            "standard_errors": dict(zip(self.names, map(float, self.standard_errors))),
            "residual_variance": float(self.residual_variance),
            "n": self.n,
        }


def ols_fit(rows: Sequence[DesignRow], names: Optional[Sequence[str]] = None, **kwargs) -> CoefEstimates:
    """Fit a regression given as a collection of design rows."""
    if not len(rows):
        raise exceptions.DomainError("Cannot fit a regression without rows")
    X = np.array([r.regressors for r in rows], dtype=float)
    y = np.array([r.response for r in rows], dtype=float)
    return ols_matrix(X, y, names=names, **kwargs)


def ols_matrix(X: np.ndarray, y: np.ndarray, names: Optional[Sequence[str]] = None,
               center: Sequence[int] = (), intercepts: Sequence[int] = ()) -> CoefEstimates:
    """Ordinary least squares of y on the columns of X.

    Columns listed in center are centred before solving; their means are folded back into the
    columns listed in intercepts (indicator columns that jointly sum to one on every row) so the
    returned coefficients refer to the uncentred design.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))
    if len(names) != p:
        raise exceptions.UsageError(f"Got {len(names)} names for {p} columns")
    if n <= p:
        raise exceptions.SingularityError(f"Need more rows than regressors, got {n} rows for {p} columns")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise exceptions.DomainError("Design and response must be finite")

    means = np.zeros(p)
    if center:
        means[list(center)] = X[:, list(center)].mean(axis=0)
        X = X - means

    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    tol = RANK_TOL * diag.max() if diag.max() > 0 else RANK_TOL
    dependent = [names[i] for i in range(p) if diag[i] <= tol]
    if dependent:
        raise exceptions.SingularityError(f"Design is rank deficient, collinear columns: {', '.join(dependent)}")

    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    dof = n - p
    sigma2 = float(resid @ resid / dof)
    r_inv = np.linalg.inv(r)
    cov = sigma2 * (r_inv @ r_inv.T)

    if center:
        # theta = T theta_centred: intercepts absorb -sum(beta_c * mean_c)
        T = np.eye(p)
        for i in intercepts:
            for c in center:
                T[i, c] = -means[c]
        coef = T @ coef
        cov = T @ cov @ T.T

    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    return CoefEstimates(coef, se, sigma2, n, names, cov)


def origin_fit(xs, ys) -> float:
    """Slope of the least squares line through the origin."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sxx = float(xs @ xs)
    if not sxx > 0:
        raise exceptions.DomainError("Cannot fit a line through the origin when all x are zero")
    return float(xs @ ys) / sxx


def ratio_of_sums(xs, ys) -> float:
    """Ratio estimator sum(y) / sum(x)."""
    sx = float(np.sum(xs))
    if not sx > 0:
        raise exceptions.DomainError(f"Sum of x must be positive, got {sx}")
    return float(np.sum(ys)) / sx
