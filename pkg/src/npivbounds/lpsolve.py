"""Dense linear programming: max/min of c'x subject to A x <= r, x free.

The solver runs a two-phase primal simplex on the dual program
``min r'y  s.t.  A'y = c, y >= 0``, which keeps free primal variables
native (no sign splitting anywhere) and yields Farkas infeasibility
certificates directly as unbounded dual rays.  The primal solution is
recovered from the optimal dual basis.  Pivoting is deterministic:
most-negative reduced cost with lowest-index tie-breaks, switching to
Bland's rule after ``10 * (m + k)`` pivots as the anti-cycling guard.

Problem sizes here are small and dense (tens of variables, hundreds of
constraints), so the tableau is kept as a plain ndarray.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, SolverFailureError

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "LinearProgram",
    "LPResult",
    "solve",
    "solve_many",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Numerical policy: the problems are well scaled, so these are absolute
# tolerances modulated only by data magnitude where noted.
_FEAS_TOL = 1e-7          # primal feasibility, per row, scaled by 1 + |rhs|
_OPT_TOL = 1e-8           # optimality; entering threshold is one order looser
_ENTER_TOL = 1e-9
_PIVOT_TOL = 1e-12        # below this a pivot element is numerical noise
_PIVOT_SAFE = 1e-9        # smallest pivot element accepted in the ratio test
_CERT_TOL = 1e-8          # Farkas certificate verification
_CS_TOL = 1e-6            # complementary slackness


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """maximize or minimize objective'x subject to constraint_matrix x <= rhs."""

    objective: np.ndarray
    sense: str
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        a = np.asarray(self.constraint_matrix, dtype=float)
        r = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if a.ndim != 2:
            raise InvalidInputError("constraint matrix must be two-dimensional")
        m, k = a.shape
        if m < 1 or k < 1:
            raise InvalidInputError("linear program needs at least one row and one variable")
        if c.shape != (k,):
            raise InvalidInputError(f"objective length {c.shape} does not match {k} variables")
        if r.shape != (m,):
            raise InvalidInputError(f"rhs length {r.shape} does not match {m} rows")
        if self.sense not in ("max", "min"):
            raise InvalidInputError(f"sense must be 'max' or 'min', got {self.sense!r}")
        for name, arr in (("objective", c), ("constraint matrix", a), ("rhs", r)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} contains non-finite entries")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", a)
        object.__setattr__(self, "rhs", r)

    @property
    def n_vars(self) -> int:
        return self.constraint_matrix.shape[1]

    @property
    def n_rows(self) -> int:
        return self.constraint_matrix.shape[0]


@dataclass(frozen=True, eq=False)
class LPResult:
    """Outcome of a solve: status plus value/solution/dual or a certificate.

    On ``optimal``, ``solution`` is primal-feasible within 1e-7 per row
    (scaled by 1 + |rhs|), ``value == objective @ solution``, and ``dual``
    holds the multipliers of the inequality rows.  On ``infeasible``,
    ``certificate`` is a verified Farkas vector: y >= 0, y'A = 0, y'r < 0.
    """

    status: str
    value: float | None = None
    solution: np.ndarray | None = None
    dual: np.ndarray | None = None
    certificate: np.ndarray | None = None


class _Basis:
    """Revised-simplex state for min q'y s.t. M y = h, y >= 0.

    Every iteration rebuilds the working tableau from the original data via
    one factorization of the current basis matrix, so pivot decisions never
    act on accumulated update drift.  The basis starts as the artificial
    identity block; phase one prices artificial columns out, after which the
    column space shrinks to the real variables.
    """

    def __init__(self, m_mat: np.ndarray, h: np.ndarray):
        sign = np.where(h < 0, -1.0, 1.0)
        self.n_rows, self.n_real = m_mat.shape
        self._m0 = m_mat * sign[:, None]
        self._h0 = h * sign
        self.with_artificials = True
        self.basis = list(range(self.n_real, self.n_real + self.n_rows))
        self.kept_rows = list(range(self.n_rows))
        self.pivots = 0
        self.body = self._fresh_body()

    def _columns(self) -> np.ndarray:
        m0 = self._m0[self.kept_rows]
        if self.with_artificials:
            return np.hstack([m0, np.eye(self.n_rows)])
        return m0

    def _fresh_body(self) -> np.ndarray:
        """Tableau [B^-1 M | B^-1 h] computed directly from original data."""
        cols = self._columns()
        full = np.hstack([cols, self._h0[self.kept_rows][:, None]])
        if self.n_rows == 0:
            return full
        basis_mat = cols[:, self.basis]
        try:
            return np.linalg.solve(basis_mat, full)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError("simplex basis matrix became singular") from exc

    @property
    def rhs(self) -> np.ndarray:
        return self.body[:, -1]

    def _lex_scan_order(self) -> list[int]:
        """Column scan order starting from the current basis, which makes the
        initial rows lexicographically positive for the ratio tie-break."""
        n_cols = self.body.shape[1] - 1
        basic = set(self.basis)
        return list(self.basis) + [j for j in range(n_cols) if j not in basic]

    def _leaving_row(self, col: np.ndarray, scan: list[int]) -> int | None:
        """Lexicographic ratio test; None when the column certifies
        unboundedness, SolverFailureError when only noise-level pivots exist."""
        usable = col > _PIVOT_SAFE
        if not usable.any():
            if float(np.max(col, initial=0.0)) > _PIVOT_TOL:
                raise SolverFailureError("pivot element below reliability threshold")
            return None
        ratios = np.full(self.n_rows, np.inf)
        ratios[usable] = np.maximum(self.rhs[usable], 0.0) / col[usable]
        best = float(ratios.min())
        tied = np.nonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))[0]
        for j in scan:
            if tied.size == 1:
                break
            vals = self.body[tied, j] / col[tied]
            low = float(vals.min())
            tied = tied[vals <= low + 1e-12 * (1.0 + abs(low))]
        return int(tied[0])

    def run(self, costs: np.ndarray, enter_tol: np.ndarray, bland_after: int, max_pivots: int):
        """Iterate to optimality.  Returns None, or the entering column index
        of an unbounded direction.  The verdict is always based on a tableau
        built fresh from the original data."""
        scan = self._lex_scan_order()
        while True:
            if self.pivots > max_pivots:
                raise SolverFailureError(
                    f"cycling guard exceeded after {self.pivots} pivots"
                )
            body = self.body
            if self.basis:
                reduced = costs - costs[self.basis] @ body[:, :-1]
                reduced[self.basis] = 0.0
            else:
                reduced = costs.copy()
            eligible = np.nonzero(reduced < -enter_tol)[0]
            if eligible.size == 0:
                return None
            if self.pivots > bland_after:
                enter = int(eligible[0])
            else:
                enter = int(eligible[np.argmin(reduced[eligible])])
            leave = self._leaving_row(body[:, enter], scan)
            if leave is None:
                return enter
            self.basis[leave] = enter
            self.pivots += 1
            self.body = self._fresh_body()

    def drop_artificials(self) -> None:
        """After phase one: swap basic artificials for real columns where the
        fresh tableau allows it, drop redundant rows, and shrink the column
        space to the real variables."""
        for i in range(self.n_rows):
            if self.basis[i] >= self.n_real:
                row = self.body[i, : self.n_real]
                nz = np.nonzero(np.abs(row) > _PIVOT_SAFE)[0]
                if nz.size:
                    self.basis[i] = int(nz[0])
                    self.body = self._fresh_body()
        keep = [i for i in range(self.n_rows) if self.basis[i] < self.n_real]
        if len(keep) < self.n_rows:
            self.basis = [self.basis[i] for i in keep]
            self.kept_rows = [self.kept_rows[i] for i in keep]
            self.n_rows = len(keep)
        self.with_artificials = False
        self.body = self._fresh_body()

    def solution(self) -> np.ndarray:
        y = np.zeros(self.n_real)
        y[self.basis] = np.maximum(self.rhs, 0.0)
        return y

    def ray(self, enter: int) -> np.ndarray:
        direction = np.zeros(self.n_real)
        direction[enter] = 1.0
        direction[self.basis] = -self.body[:, enter]
        return np.maximum(direction, 0.0)


def _solve_standard(m_mat: np.ndarray, h: np.ndarray, q: np.ndarray, enter_tol: np.ndarray):
    """Two-phase simplex for min q'y s.t. M y = h, y >= 0.

    ``enter_tol`` gives the per-column reduced-cost slack below which a
    column is not worth entering.  Returns (status, state, extra) where
    status is 'optimal' (extra None), 'infeasible' (extra None) or
    'unbounded' (extra is the ray over y).
    """
    state = _Basis(m_mat, h)
    n_total = state.n_real + state.n_rows
    bland_after = 10 * n_total
    max_pivots = max(20_000, 200 * n_total)

    phase1_cost = np.concatenate([np.zeros(state.n_real), np.ones(state.n_rows)])
    phase1_tol = np.full(phase1_cost.size, _ENTER_TOL)
    enter = state.run(phase1_cost, phase1_tol, bland_after, max_pivots)
    if enter is not None:
        # phase-one objective is bounded below by zero; cannot be unbounded
        raise SolverFailureError("phase-one simplex reported an unbounded direction")
    artificial = np.asarray(state.basis) >= state.n_real
    residual = float(np.abs(state.rhs[artificial]).sum())
    if residual > 1e-9 * (1.0 + float(np.abs(h).max())):
        return INFEASIBLE, state, None
    state.drop_artificials()

    enter = state.run(q, enter_tol, bland_after, max_pivots)
    if enter is not None:
        return UNBOUNDED, state, state.ray(enter)
    return OPTIMAL, state, None


def _farkas_certificate(a: np.ndarray, r: np.ndarray, ray: np.ndarray) -> np.ndarray:
    """Normalize and verify an infeasibility certificate y: y>=0, y'A=0, y'r<0."""
    peak = float(np.abs(ray).max())
    if peak <= 0.0:
        raise SolverFailureError("degenerate infeasibility ray")
    y = ray / peak
    combo = float(np.abs(a.T @ y).max())
    if combo > _CERT_TOL * (1.0 + float(np.abs(a).max())):
        raise SolverFailureError("infeasibility certificate failed verification (y'A != 0)")
    if float(y @ r) >= -1e-10 * (1.0 + float(np.abs(r).max())):
        raise SolverFailureError("infeasibility certificate failed verification (y'r >= 0)")
    return y


def _recover_primal(a, r, c, tab) -> tuple[np.ndarray, np.ndarray]:
    """Primal point and full dual vector from an optimal dual tableau."""
    kept = np.asarray(tab.kept_rows, dtype=int)
    basis = np.asarray(tab.basis, dtype=int)
    if basis.size != kept.size:
        raise SolverFailureError("dual basis size does not match surviving rows")
    x = np.zeros(a.shape[1])
    if basis.size:
        square = a[np.ix_(basis, kept)]
        rb = r[basis]
        try:
            v = np.linalg.solve(square, rb)
            v += np.linalg.solve(square, rb - square @ v)  # one refinement step
        except np.linalg.LinAlgError:
            v, *_ = np.linalg.lstsq(square, rb, rcond=None)
        x[kept] = v
    y = np.zeros(a.shape[0])
    y[basis] = tab.rhs
    return x, y


def _verify_optimal(a, r, c, x, y) -> None:
    slack = r - a @ x
    worst = slack + _FEAS_TOL * (1.0 + np.abs(r))
    if np.any(worst < 0.0):
        raise SolverFailureError("recovered solution violates primal feasibility")
    if np.any(y < -1e-9):
        raise SolverFailureError("negative dual multiplier")
    gap = abs(float(c @ x) - float(r @ y))
    if gap > _CS_TOL * (1.0 + abs(float(c @ x))):
        raise SolverFailureError(f"duality gap {gap:.3e} exceeds tolerance")
    cs = np.abs(y * slack)
    if np.any(cs > _CS_TOL * (1.0 + np.abs(r) + np.abs(y))):
        raise SolverFailureError("complementary slackness violated")


def _solve_inequality(a, r, c, known_feasible: bool = False) -> LPResult:
    """max c'x s.t. a x <= r via the dual standard form.

    Rows are equilibrated to unit max-coefficient internally (the feasible
    set is unchanged; dual quantities are unscaled on the way out), and the
    dual entering tolerances are chosen so the recovered solution meets the
    feasibility contract of the *original* rows.
    """
    scale = np.maximum(np.abs(a).max(axis=1), np.abs(r))
    scale = np.maximum(scale, 1.0)
    a_s = a / scale[:, None]
    r_s = r / scale
    # reduced costs in the dual equal primal row residuals (in scaled units)
    enter_tol = np.maximum(_ENTER_TOL, 0.5 * _FEAS_TOL * (1.0 + np.abs(r)) / scale)

    status, tab, ray = _solve_standard(a_s.T, c, r_s, enter_tol)
    if status == OPTIMAL:
        x, y_s = _recover_primal(a_s, r_s, c, tab)
        y = y_s / scale
        _verify_optimal(a, r, c, x, y)
        return LPResult(status=OPTIMAL, value=float(c @ x), solution=x, dual=y)
    if status == UNBOUNDED:
        # an unbounded dual ray is a Farkas certificate of primal infeasibility
        return LPResult(status=INFEASIBLE, certificate=_farkas_certificate(a, r, ray / scale))
    # dual infeasible: primal is unbounded or infeasible; decide with the
    # homogeneous dual (zero objective), whose value separates the two.
    if known_feasible:
        return LPResult(status=UNBOUNDED)
    status0, _, ray0 = _solve_standard(a_s.T, np.zeros(a.shape[1]), r_s, enter_tol)
    if status0 == UNBOUNDED:
        return LPResult(status=INFEASIBLE, certificate=_farkas_certificate(a, r, ray0 / scale))
    if status0 == OPTIMAL:
        return LPResult(status=UNBOUNDED)
    raise SolverFailureError("homogeneous dual reported infeasible; zero is always feasible")


def solve(lp: LinearProgram) -> LPResult:
    """Solve a dense LP with explicit optimal/infeasible/unbounded status.

    For minimization the objective is negated internally and the value
    restored; the reported dual always refers to the maximization
    orientation.  Raises SolverFailureError on numerical breakdown (cycling
    guard, pivot collapse, failed certificate or optimality verification);
    that error is distinct from an infeasible status.
    """
    a = lp.constraint_matrix
    r = lp.rhs
    if lp.sense == "max":
        return _solve_inequality(a, r, lp.objective)
    res = _solve_inequality(a, r, -lp.objective)
    if res.status != OPTIMAL:
        return res
    value = float(lp.objective @ res.solution)
    return LPResult(status=OPTIMAL, value=value, solution=res.solution, dual=res.dual)


def solve_many(lps: Sequence[LinearProgram]) -> list[LPResult]:
    """Solve LPs that share one constraint set, varying only the objective.

    Results are identical to independent ``solve`` calls; the shared
    feasibility phase is performed once.  All programs must reference the
    same constraint matrix and rhs.
    """
    if len(lps) == 0:
        return []
    first = lps[0]
    a, r = first.constraint_matrix, first.rhs
    for lp in lps[1:]:
        same = (lp.constraint_matrix is a or np.array_equal(lp.constraint_matrix, a)) and (
            lp.rhs is r or np.array_equal(lp.rhs, r)
        )
        if not same:
            raise InvalidInputError("solve_many requires a shared constraint set")

    feas = _solve_inequality(a, r, np.zeros(first.n_vars))
    if feas.status == INFEASIBLE:
        return [LPResult(status=INFEASIBLE, certificate=feas.certificate) for _ in lps]

    results = []
    for lp in lps:
        c = lp.objective if lp.sense == "max" else -lp.objective
        res = _solve_inequality(a, r, c, known_feasible=True)
        if res.status == OPTIMAL and lp.sense == "min":
            res = LPResult(
                status=OPTIMAL,
                value=float(lp.objective @ res.solution),
                solution=res.solution,
                dual=res.dual,
            )
        results.append(res)
    return results
