"""Envelope estimation for the set of structural functions compatible with a
bounded violation of instrumental validity and shape restrictions.

The pipeline: build cubic spline bases on the observed ranges, run the series
first stage, lay down evaluation grids (the instrument grid is trimmed to
central quantiles), assemble one shared bank of linear inequalities, check
feasibility once, then maximize and minimize the fitted function value at
every grid point.  The central curve is the midpoint of the two envelopes,
which minimizes the worst-case pointwise error over the estimated set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import firststage, lpsolve, shapes, splines
from .errors import (
    DegenerateDomainError,
    InvalidConfigurationError,
    InvalidInputError,
    SolverFailureError,
)

__all__ = [
    "BoundsConfig",
    "BandDiagnostics",
    "EnvelopeBand",
    "SweepResult",
    "build_grids",
    "assemble_program",
    "estimate_envelopes",
    "estimate_envelope_sweep",
    "worst_case_bias_of",
]

SPLINE_ORDER = 4  # cubic throughout


@dataclass(frozen=True)
class BoundsConfig:
    """Tuning constants of the envelope estimator.

    ``b`` bounds the conditional-moment deviation in outcome units; the
    shape spec defines the parameter space.  Defaults mirror the reference
    configuration: a 10-dimensional regressor basis, 6-dimensional
    instrument basis, 100-point grids, and 0.5% quantile trimming of the
    instrument grid.
    """

    b: float
    shape: shapes.ShapeSpec
    k_dim: int = 10
    l_dim: int = 6
    x_grid_size: int = 100
    z_grid_size: int = 100
    z_quantile_trim: float = 0.005

    def __post_init__(self):
        if not math.isfinite(self.b) or self.b < 0.0:
            raise InvalidConfigurationError(f"b must be finite and >= 0, got {self.b}")
        if self.x_grid_size < 2 or self.z_grid_size < 2:
            raise InvalidConfigurationError("grid sizes must be at least 2")
        if not 0.0 <= self.z_quantile_trim < 0.5:
            raise InvalidConfigurationError(
                f"z_quantile_trim must lie in [0, 0.5), got {self.z_quantile_trim}"
            )
        if self.k_dim < SPLINE_ORDER or self.l_dim < SPLINE_ORDER:
            raise InvalidConfigurationError(
                f"basis dimensions must be at least the spline order {SPLINE_ORDER}"
            )


@dataclass(frozen=True)
class BandDiagnostics:
    """Grid and first-stage health indicators recorded with every band."""

    d1_grid_gap: float
    d2_grid_gap: float
    gram_condition: float
    n_constraints: int


@dataclass(frozen=True, eq=False)
class EnvelopeBand:
    """Estimated lower/upper envelopes and their midpoint on the x grid.

    When the constraint set is infeasible (the estimated identified set is
    empty) ``feasible`` is False and the value vectors are empty.
    """

    x_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    central: np.ndarray
    feasible: bool
    diagnostics: BandDiagnostics


def build_grids(sample: firststage.Sample, config: BoundsConfig) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation grids: even over the observed x range, and over the
    trimmed quantile range of z (linear-interpolation quantiles)."""
    if sample.n < 2:
        raise InvalidInputError("need at least two observations to build grids")
    x_lo, x_hi = float(sample.x.min()), float(sample.x.max())
    if x_lo == x_hi:
        raise DegenerateDomainError("all regressor values identical; no x interval")
    x_grid = np.linspace(x_lo, x_hi, config.x_grid_size)

    trim = config.z_quantile_trim
    z_lo = float(np.quantile(sample.z, trim))
    z_hi = float(np.quantile(sample.z, 1.0 - trim))
    if z_lo == z_hi:
        raise DegenerateDomainError("trimmed instrument range is a single point")
    z_grid = np.linspace(z_lo, z_hi, config.z_grid_size)
    return x_grid, z_grid


def assemble_program(
    fit: firststage.FirstStageFit,
    shape_spec: shapes.ShapeSpec,
    config: BoundsConfig,
    grids: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Shared inequality bank over the spline coefficients.

    Two moment rows per instrument grid point (fitted mean within +-b) and
    one row per shape restriction per x grid point: in total
    ``2 * |z_grid| + n_shape_rows * |x_grid|`` inequalities.
    """
    x_grid, z_grid = grids
    g_hat, pi_hat = firststage.predict_grid(fit, z_grid)
    moment_a = np.vstack([pi_hat, -pi_hat])
    moment_r = np.concatenate([g_hat + config.b, config.b - g_hat])
    shape_a, shape_r = shapes.materialize_rows(shape_spec, fit.x_basis, x_grid)
    return np.vstack([moment_a, shape_a]), np.concatenate([moment_r, shape_r])


def _fit_pipeline(sample, config):
    x_basis = splines.build_basis(
        float(sample.x.min()), float(sample.x.max()), SPLINE_ORDER, config.k_dim
    )
    z_basis = splines.build_basis(
        float(sample.z.min()), float(sample.z.max()), SPLINE_ORDER, config.l_dim
    )
    fit = firststage.fit_first_stage(sample, z_basis, x_basis)
    grids = build_grids(sample, config)
    return fit, grids


def _solve_band(fit, config, grids) -> EnvelopeBand:
    config.shape.require_uniform_bound()
    x_grid, z_grid = grids
    a, r = assemble_program(fit, config.shape, config, grids)
    diagnostics = BandDiagnostics(
        d1_grid_gap=float(x_grid[1] - x_grid[0]) / 2.0,
        d2_grid_gap=float(z_grid[1] - z_grid[0]) / 2.0,
        gram_condition=fit.gram_condition,
        n_constraints=a.shape[0],
    )

    # feasibility does not depend on the objective point: check once
    probe = lpsolve.LinearProgram(np.zeros(config.k_dim), "max", a, r)
    if lpsolve.solve(probe).status == lpsolve.INFEASIBLE:
        empty = np.empty(0)
        return EnvelopeBand(x_grid, empty, empty, empty, False, diagnostics)

    phi = splines.basis_matrix(fit.x_basis, x_grid)
    programs = [lpsolve.LinearProgram(phi[t], "max", a, r) for t in range(x_grid.size)]
    programs += [lpsolve.LinearProgram(phi[t], "min", a, r) for t in range(x_grid.size)]
    results = lpsolve.solve_many(programs)
    for res in results:
        if res.status != lpsolve.OPTIMAL:
            raise SolverFailureError(
                f"envelope program ended with status {res.status} although the "
                f"constraint set is feasible and uniformly bounded"
            )
    upper = np.array([res.value for res in results[: x_grid.size]])
    lower = np.array([res.value for res in results[x_grid.size :]])
    if np.any(lower > upper + 1e-7):
        raise SolverFailureError("lower envelope exceeds upper beyond LP tolerance")
    central = (lower + upper) / 2.0
    return EnvelopeBand(x_grid, lower, upper, central, True, diagnostics)


def estimate_envelopes(sample: firststage.Sample, config: BoundsConfig) -> EnvelopeBand:
    """Full envelope estimation on one sample and configuration.

    Returns a band with ``feasible=False`` when no spline satisfies the
    moment and shape constraints (the estimated identified set is empty,
    i.e. ``b`` is too small for this data/shape combination).
    """
    fit, grids = _fit_pipeline(sample, config)
    return _solve_band(fit, config, grids)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Envelope bands for a (b, shape) grid plus the shared first stage."""

    bands: list[list[EnvelopeBand]]  # indexed [i_b][i_shape]
    fit: firststage.FirstStageFit
    x_grid: np.ndarray
    z_grid: np.ndarray


def estimate_envelope_sweep(
    sample: firststage.Sample,
    config: BoundsConfig,
    b_values,
    shape_specs,
) -> SweepResult:
    """Bands for every (b, shape) combination, sharing one first stage.

    Cells are independent given the fit and are evaluated in sweep order,
    so results do not depend on scheduling.
    """
    fit, grids = _fit_pipeline(sample, config)
    bands = []
    for b in b_values:
        row = []
        for spec in shape_specs:
            cell = replace(config, b=float(b), shape=spec)
            row.append(_solve_band(fit, cell, grids))
        bands.append(row)
    return SweepResult(bands=bands, fit=fit, x_grid=grids[0], z_grid=grids[1])


def worst_case_bias_of(point_estimate: np.ndarray, band: EnvelopeBand) -> np.ndarray:
    """Pointwise worst-case error of a candidate curve against the band:
    the larger of its distances to the two envelopes."""
    if not band.feasible:
        raise InvalidInputError("worst-case bias is undefined for an empty estimated set")
    estimate = np.asarray(point_estimate, dtype=float)
    if estimate.shape != band.x_grid.shape:
        raise InvalidInputError("point estimate must align with the band's x grid")
    return np.maximum(np.abs(estimate - band.lower), np.abs(estimate - band.upper))
