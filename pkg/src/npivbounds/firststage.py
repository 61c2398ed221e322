"""Series least-squares first stage: conditional means of Y and of the
regressor basis given the instrument.

Both regressions share one design matrix over the instrument basis and one
QR factorization; coefficients are never obtained through an explicit Gram
inverse.  A Gram condition number above 1e8 is logged, above 1e12 the fit
fails loudly rather than regularize (a ridge term would silently change the
estimand).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import splines
from .errors import InvalidInputError, SingularDesignError

__all__ = ["Sample", "FirstStageFit", "gram_matrix", "fit_first_stage", "predict", "predict_grid"]

logger = logging.getLogger(__name__)

CONDITION_FAIL = 1e12
CONDITION_WARN = 1e8


@dataclass(frozen=True, eq=False)
class Sample:
    """Observed triples (y, x, z) of equal length with finite entries."""

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("y", "x", "z"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 1:
                raise InvalidInputError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} contains non-finite entries")
            arrays[name] = arr
        n = arrays["y"].size
        if n < 1:
            raise InvalidInputError("sample must contain at least one observation")
        if arrays["x"].size != n or arrays["z"].size != n:
            raise InvalidInputError("y, x and z must have equal length")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.y.size


@dataclass(frozen=True, eq=False)
class FirstStageFit:
    """Fitted series regressions of Y and of each regressor-basis function
    on the instrument basis."""

    g_coef: np.ndarray
    pi_coef: np.ndarray
    gram_condition: float
    z_basis: splines.BSplineBasis = field(repr=False)
    x_basis: splines.BSplineBasis = field(repr=False)


def gram_matrix(z_basis: splines.BSplineBasis, z: np.ndarray) -> np.ndarray:
    """Empirical second-moment matrix of the instrument basis, (1/n) Psi'Psi."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    design = splines.basis_matrix(z_basis, z)
    return design.T @ design / z.size


def fit_first_stage(
    sample: Sample,
    z_basis: splines.BSplineBasis,
    x_basis: splines.BSplineBasis,
) -> FirstStageFit:
    """Regress Y and every regressor-basis function on the instrument basis.

    All right-hand sides share the QR factorization of the design matrix.
    Raises SingularDesignError when the Gram condition number exceeds 1e12.
    """
    n = sample.n
    l_dim = z_basis.dimension
    if n < l_dim:
        raise InvalidInputError(
            f"need at least as many observations ({n}) as instrument basis "
            f"functions ({l_dim})"
        )
    design = splines.basis_matrix(z_basis, sample.z)

    gram = design.T @ design / n
    eigs = np.linalg.eigvalsh(gram)
    if eigs[-1] <= 0.0:
        raise SingularDesignError(f"instrument design of dimension {l_dim} is null on n={n}")
    condition = float(eigs[-1] / eigs[0]) if eigs[0] > 0.0 else np.inf
    if condition > CONDITION_FAIL:
        raise SingularDesignError(
            f"instrument Gram matrix is numerically singular (condition "
            f"{condition:.3e} > {CONDITION_FAIL:.0e}) with L_n={l_dim}, n={n}; "
            f"reduce the instrument basis dimension"
        )
    if condition > CONDITION_WARN:
        logger.warning(
            "instrument Gram matrix poorly conditioned: %.3e (L_n=%d, n=%d)",
            condition,
            l_dim,
            n,
        )

    targets = np.column_stack([sample.y, splines.basis_matrix(x_basis, sample.x)])
    q, r = np.linalg.qr(design)
    coefs = scipy.linalg.solve_triangular(r, q.T @ targets)
    return FirstStageFit(
        g_coef=coefs[:, 0].copy(),
        pi_coef=coefs[:, 1:].copy(),
        gram_condition=condition,
        z_basis=z_basis,
        x_basis=x_basis,
    )


def predict(fit: FirstStageFit, z: float) -> tuple[float, np.ndarray]:
    """Fitted conditional mean of Y and of the regressor basis at one point."""
    psi = splines.eval_basis(fit.z_basis, z)
    return float(psi @ fit.g_coef), psi @ fit.pi_coef


def predict_grid(fit: FirstStageFit, z_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized predict: returns (g values, matrix of basis means) on a grid."""
    design = splines.basis_matrix(fit.z_basis, np.asarray(z_grid, dtype=float))
    return design @ fit.g_coef, design @ fit.pi_coef
