"""B-spline bases on a closed interval: construction, evaluation, derivatives.

The basis is represented by a clamped knot vector and evaluated with the
Cox-de Boor recurrence, which is numerically stable for dimensions well
beyond what truncated-power representations tolerate.  Interior knots are
evenly spaced between the domain endpoints.  Derivatives at interior knots
follow the right-limit convention; at the right endpoint the left limit is
used (the function is not defined beyond the domain).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfeasibleProblemError, InvalidConfigurationError, InvalidInputError

__all__ = [
    "BSplineBasis",
    "build_basis",
    "eval_basis",
    "eval_basis_deriv",
    "basis_matrix",
    "constrained_sup_approx",
]


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    """Immutable B-spline basis of a given order and dimension on [lo, hi].

    ``knots`` is the full clamped vector: the endpoints repeated ``order``
    times around ``dimension - order`` strictly increasing interior knots.
    Evaluation anywhere in the domain returns ``dimension`` values that are
    nonnegative and sum to one, with at most ``order`` of them nonzero.
    """

    order: int
    dimension: int
    domain_lo: float
    domain_hi: float
    knots: np.ndarray = field(repr=False)

    @property
    def interior_knots(self) -> np.ndarray:
        return self.knots[self.order : self.dimension]

    @property
    def span(self) -> float:
        return self.domain_hi - self.domain_lo


def build_basis(domain_lo: float, domain_hi: float, order: int, dimension: int) -> BSplineBasis:
    """Construct a clamped B-spline basis with evenly spaced interior knots.

    The ``dimension - order`` interior knots divide [lo, hi] into
    ``dimension - order + 1`` equal cells, so an order-4, dimension-10 basis
    on [0, 7] has interior knots 1, ..., 6.
    """
    if not isinstance(order, (int, np.integer)) or not isinstance(dimension, (int, np.integer)):
        raise InvalidConfigurationError("order and dimension must be integers")
    if order < 1:
        raise InvalidConfigurationError(f"order must be >= 1, got {order}")
    if dimension < order:
        raise InvalidConfigurationError(
            f"dimension ({dimension}) must be at least the order ({order})"
        )
    lo = float(domain_lo)
    hi = float(domain_hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidInputError("domain endpoints must be finite")
    if not lo < hi:
        raise InvalidInputError(f"degenerate domain: [{lo}, {hi}]")

    n_interior = dimension - order
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    knots = np.concatenate([np.full(order, lo), interior, np.full(order, hi)])
    return BSplineBasis(int(order), int(dimension), lo, hi, knots)


def _find_span(basis: BSplineBasis, x: float) -> int:
    """Index mu with knots[mu] <= x < knots[mu+1], right-continuous at knots.

    The last nonempty span is used at x == domain_hi.
    """
    p = basis.order
    k = basis.dimension
    mu = int(np.searchsorted(basis.knots, x, side="right")) - 1
    return min(max(mu, p - 1), k - 1)


def _check_in_domain(basis: BSplineBasis, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"evaluation point {x} is not finite")
    if x < basis.domain_lo or x > basis.domain_hi:
        raise DomainError(
            f"x={x} outside basis domain [{basis.domain_lo}, {basis.domain_hi}]"
        )
    return x


def _nonzero_values(basis: BSplineBasis, mu: int, x: float) -> np.ndarray:
    """Values of the ``order`` basis functions supported on span mu."""
    p = basis.order
    t = basis.knots
    values = np.zeros(p)
    values[0] = 1.0
    left = np.zeros(p)
    right = np.zeros(p)
    for j in range(1, p):
        left[j] = x - t[mu + 1 - j]
        right[j] = t[mu + j] - x
        saved = 0.0
        for r in range(j):
            tmp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        values[j] = saved
    return values


def _nonzero_derivs(basis: BSplineBasis, mu: int, x: float, n_der: int) -> np.ndarray:
    """Derivatives 0..n_der of the basis functions supported on span mu.

    Returns an array of shape (n_der+1, order); row d holds the d-th
    derivatives of basis functions mu-order+1 .. mu.  Classical triangular
    scheme over the knot-difference table.
    """
    p = basis.order
    deg = p - 1
    t = basis.knots
    ndu = np.zeros((p, p))
    ndu[0, 0] = 1.0
    left = np.zeros(p)
    right = np.zeros(p)
    for j in range(1, p):
        left[j] = x - t[mu + 1 - j]
        right[j] = t[mu + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            tmp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        ndu[j, j] = saved

    ders = np.zeros((n_der + 1, p))
    ders[0, :] = ndu[:, deg]
    a = np.zeros((2, p))
    for r in range(p):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n_der + 1):
            d = 0.0
            rk = r - k
            pk = deg - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else deg - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    fact = float(deg)
    for k in range(1, n_der + 1):
        ders[k, :] *= fact
        fact *= deg - k
    return ders


def eval_basis(basis: BSplineBasis, x: float) -> np.ndarray:
    """Evaluate all basis functions at a point of the domain.

    Returns a length-``dimension`` vector of nonnegative entries summing to
    one; at most ``order`` entries are nonzero.
    """
    x = _check_in_domain(basis, x)
    mu = _find_span(basis, x)
    out = np.zeros(basis.dimension)
    out[mu - basis.order + 1 : mu + 1] = _nonzero_values(basis, mu, x)
    return out


def eval_basis_deriv(basis: BSplineBasis, x: float, deriv_order: int) -> np.ndarray:
    """Evaluate the deriv_order-th derivative of every basis function at x.

    At interior knots, where a derivative may jump, the right limit is
    returned; at the right endpoint the left limit.  deriv_order must be
    below the spline order.
    """
    if deriv_order < 0 or deriv_order >= basis.order:
        raise InvalidConfigurationError(
            f"deriv_order must lie in [0, {basis.order - 1}], got {deriv_order}"
        )
    x = _check_in_domain(basis, x)
    if deriv_order == 0:
        return eval_basis(basis, x)
    mu = _find_span(basis, x)
    ders = _nonzero_derivs(basis, mu, x, deriv_order)
    out = np.zeros(basis.dimension)
    out[mu - basis.order + 1 : mu + 1] = ders[deriv_order]
    return out


def basis_matrix(basis: BSplineBasis, x: np.ndarray, deriv_order: int = 0) -> np.ndarray:
    """Design matrix of basis (or derivative) values, one row per point.

    Value rows (deriv_order 0) are computed with a vectorized recurrence;
    derivative rows fall back to the pointwise scheme, which is only used on
    evaluation grids, not on raw samples.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("basis_matrix expects a 1-d array of points")
    if x.size == 0:
        return np.zeros((0, basis.dimension))
    if not np.all(np.isfinite(x)):
        raise DomainError("evaluation points must be finite")
    if x.min() < basis.domain_lo or x.max() > basis.domain_hi:
        raise DomainError(
            f"points outside basis domain [{basis.domain_lo}, {basis.domain_hi}]"
        )

    if deriv_order != 0:
        rows = [eval_basis_deriv(basis, xi, deriv_order) for xi in x]
        return np.asarray(rows)

    p = basis.order
    t = basis.knots
    mu = np.searchsorted(t, x, side="right") - 1
    np.clip(mu, p - 1, basis.dimension - 1, out=mu)

    n = x.size
    values = np.zeros((n, p))
    values[:, 0] = 1.0
    left = np.zeros((n, p))
    right = np.zeros((n, p))
    for j in range(1, p):
        left[:, j] = x - t[mu + 1 - j]
        right[:, j] = t[mu + j] - x
        saved = np.zeros(n)
        for r in range(j):
            tmp = values[:, r] / (right[:, r + 1] + left[:, j - r])
            values[:, r] = saved + right[:, r + 1] * tmp
            saved = left[:, j - r] * tmp
        values[:, j] = saved

    out = np.zeros((n, basis.dimension))
    cols = mu[:, None] - p + 1 + np.arange(p)[None, :]
    np.put_along_axis(out, cols, values, axis=1)
    return out


def constrained_sup_approx(
    target_values: np.ndarray,
    basis: BSplineBasis,
    shape,
    fit_grid: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Best sup-norm approximation of a target subject to shape constraints.

    Minimizes the maximum absolute error between the spline and the target
    over ``fit_grid`` while every shape-restriction row holds on the same
    grid.  Solved as a linear program with one slack variable for the sup
    error.  Returns the coefficient vector and the attained sup error.
    """
    from . import lpsolve, shapes  # local import; shapes depends on this module

    fit_grid = np.asarray(fit_grid, dtype=float)
    target = np.asarray(target_values, dtype=float)
    if fit_grid.ndim != 1 or fit_grid.size == 0:
        raise InvalidInputError("fit_grid must be a nonempty 1-d array")
    if target.shape != fit_grid.shape:
        raise InvalidInputError("target values must align with fit_grid")
    if not np.all(np.isfinite(target)):
        raise InvalidInputError("target values must be finite")

    k = basis.dimension
    phi = basis_matrix(basis, fit_grid)
    # |phi beta - target| <= s  as two banks of rows over [beta; s]
    upper = np.hstack([phi, -np.ones((fit_grid.size, 1))])
    lower = np.hstack([-phi, -np.ones((fit_grid.size, 1))])
    shape_a, shape_r = shapes.materialize_rows(shape, basis, fit_grid)
    shape_a = np.hstack([shape_a, np.zeros((shape_a.shape[0], 1))])

    a = np.vstack([upper, lower, shape_a])
    r = np.concatenate([target, -target, shape_r])
    objective = np.zeros(k + 1)
    objective[k] = 1.0

    result = lpsolve.solve(lpsolve.LinearProgram(objective, "min", a, r))
    if result.status == lpsolve.INFEASIBLE:
        raise InfeasibleProblemError(
            "shape constraints are mutually contradictory on the fit grid"
        )
    if result.status != lpsolve.OPTIMAL:
        from .errors import SolverFailureError

        raise SolverFailureError(f"unexpected LP status {result.status}")
    beta = result.solution[:k].copy()
    return beta, max(0.0, float(result.value))
