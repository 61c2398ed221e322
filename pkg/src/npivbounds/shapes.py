"""Linear shape restrictions: derivative-order rows with pointwise bounds.

A shape specification is a list of rows, each constraining a signed
derivative of the candidate function: ``sign * h^(deriv_order)(x) <= bound(x)``
at every point of an evaluation grid.  The stock Engel-curve specification
restricts the function to the unit interval with a curvature cap.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import splines
from .errors import InvalidConfigurationError, InvalidInputError

__all__ = [
    "ShapeRow",
    "ShapeSpec",
    "default_engel_spec",
    "materialize_rows",
    "shape_spec_from_config",
    "shape_spec_to_config",
    "load_shape_spec",
]

logger = logging.getLogger(__name__)

BoundLike = Union[float, Callable[[float], float]]

# Bounds below this are flagged: the theory behind envelope consistency wants
# every bound strictly positive, while the stock spec uses an exact zero.
MIN_POSITIVE_BOUND = 1e-8


@dataclass(frozen=True)
class ShapeRow:
    """One restriction: sign * h^(deriv_order) <= bound, pointwise."""

    deriv_order: int
    sign: int
    bound: BoundLike

    def __post_init__(self):
        if self.deriv_order not in (0, 1, 2):
            raise InvalidConfigurationError(
                f"deriv_order must be 0, 1 or 2, got {self.deriv_order}"
            )
        if self.sign not in (1, -1):
            raise InvalidConfigurationError(f"sign must be +1 or -1, got {self.sign}")
        if not callable(self.bound) and not math.isfinite(float(self.bound)):
            raise InvalidConfigurationError("constant bound must be finite")

    def bound_at(self, x: float) -> float:
        if callable(self.bound):
            return float(self.bound(x))
        return float(self.bound)


@dataclass(frozen=True)
class ShapeSpec:
    """An ordered collection of shape rows defining the parameter space."""

    rows: tuple[ShapeRow, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        if len(rows) == 0:
            raise InvalidConfigurationError("a shape spec needs at least one row")
        object.__setattr__(self, "rows", rows)
        low = [r for r in rows if not callable(r.bound) and float(r.bound) < MIN_POSITIVE_BOUND]
        if low:
            logger.info(
                "shape spec has %d bound(s) below %g; the strict-interior "
                "argument for envelope consistency then leans on the remaining rows",
                len(low),
                MIN_POSITIVE_BOUND,
            )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def bounds_function_uniformly(self) -> bool:
        """True when level rows of both signs are present, so every admissible
        function is uniformly bounded above and below."""
        signs = {r.sign for r in self.rows if r.deriv_order == 0}
        return signs == {1, -1}

    def require_uniform_bound(self) -> None:
        if not self.bounds_function_uniformly():
            raise InvalidConfigurationError(
                "shape spec must include deriv_order-0 rows of both signs; "
                "otherwise the candidate function is unbounded and the "
                "envelope programs have no finite optimum"
            )

    def bound_values(self, grid: np.ndarray) -> np.ndarray:
        """Bounds of every row evaluated on a grid, shape (n_rows, len(grid))."""
        grid = np.asarray(grid, dtype=float)
        values = np.empty((len(self.rows), grid.size))
        for i, row in enumerate(self.rows):
            if callable(row.bound):
                values[i] = [row.bound_at(x) for x in grid]
            else:
                values[i] = float(row.bound)
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("shape bounds must be finite on the grid")
        return values


def default_engel_spec(second_deriv_bound: float) -> ShapeSpec:
    """Functions into [0, 1] with second derivative bounded in magnitude.

    Rows, in order: h <= 1, -h <= 0 (so h >= 0), h'' <= c, -h'' <= c.
    """
    c = float(second_deriv_bound)
    if not math.isfinite(c) or c <= 0.0:
        raise InvalidConfigurationError(f"second_deriv_bound must be positive, got {c}")
    return ShapeSpec(
        rows=(
            ShapeRow(0, 1, 1.0),
            ShapeRow(0, -1, 0.0),
            ShapeRow(2, 1, c),
            ShapeRow(2, -1, c),
        )
    )


def materialize_rows(
    spec: ShapeSpec, basis: splines.BSplineBasis, x_grid: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Turn shape rows into linear inequalities a'beta <= r over the basis.

    Produces ``n_rows * len(x_grid)`` inequalities, grouped row-major by
    shape row: coefficient vectors are signed derivative evaluations of the
    basis, right-hand sides the bounds at each grid point.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size == 0:
        raise InvalidInputError("x_grid must be a nonempty 1-d array")

    bound_vals = spec.bound_values(x_grid)
    deriv_mats = {
        d: splines.basis_matrix(basis, x_grid, deriv_order=d)
        for d in sorted({row.deriv_order for row in spec.rows})
    }
    blocks = []
    rhs = []
    for i, row in enumerate(spec.rows):
        blocks.append(row.sign * deriv_mats[row.deriv_order])
        rhs.append(bound_vals[i])
    return np.vstack(blocks), np.concatenate(rhs)


def shape_spec_from_config(doc: Union[dict, Sequence]) -> ShapeSpec:
    """Build a ShapeSpec from the documented config schema.

    The document is ``{"rows": [...]}`` (or the bare list), where each item
    is either ``{"deriv_order": d, "sign": s, "bound": value}`` with a
    numeric bound, or the shorthand string ``"unit_interval"`` (also
    accepted as the value of ``bound``), which expands to the pair of level
    rows ``h <= 1`` and ``-h <= 0``.
    """
    items = doc.get("rows") if isinstance(doc, dict) else doc
    if not isinstance(items, (list, tuple)) or len(items) == 0:
        raise InvalidConfigurationError("shape config needs a nonempty 'rows' list")
    rows: list[ShapeRow] = []
    for item in items:
        if item == "unit_interval" or (
            isinstance(item, dict) and item.get("bound") == "unit_interval"
        ):
            rows.append(ShapeRow(0, 1, 1.0))
            rows.append(ShapeRow(0, -1, 0.0))
            continue
        if not isinstance(item, dict):
            raise InvalidConfigurationError(f"unrecognized shape row: {item!r}")
        try:
            rows.append(
                ShapeRow(int(item["deriv_order"]), int(item["sign"]), float(item["bound"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfigurationError(f"malformed shape row {item!r}: {exc}") from exc
    return ShapeSpec(rows=tuple(rows))


def shape_spec_to_config(spec: ShapeSpec) -> dict:
    """Inverse of shape_spec_from_config for constant-bound rows."""
    rows = []
    for row in spec.rows:
        if callable(row.bound):
            raise InvalidConfigurationError("callable bounds have no config representation")
        rows.append(
            {"deriv_order": row.deriv_order, "sign": row.sign, "bound": float(row.bound)}
        )
    return {"rows": rows}


def load_shape_spec(path: str) -> ShapeSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return shape_spec_from_config(json.load(fh))
