"""Synthetic continuous data generating processes with known structural
function, controllable endogeneity and controllable instrument invalidity.

The structural functions come from a fixed, versioned catalogue so that
convergence tests pin against stable curves.  The instrument is uniform,
the regressor is a convex mix of the instrument and a uniform endogenous
channel, and the outcome noise shares that channel, which makes the
regressor genuinely endogenous while the noise stays conditionally mean
zero given the instrument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate

from .errors import InvalidConfigurationError, InvalidInputError
from .firststage import Sample

__all__ = [
    "CATALOGUE_VERSION",
    "StructuralCurve",
    "H0_CATALOGUE",
    "U0_KINDS",
    "ContinuousDGP",
    "make_dgp",
    "generate",
    "population_reduced_form",
]

CATALOGUE_VERSION = 1

# Share of outcome-noise variance loaded on the endogenous channel.
_ENDOGENOUS_SHARE = 0.5
_QUAD_TOL = 1e-10  # adaptive quadrature tolerance; well under the 1e-8 contract


@dataclass(frozen=True)
class StructuralCurve:
    """A catalogued structural function with declared curvature bound."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    second_deriv: Callable[[np.ndarray], np.ndarray]
    curvature_bound: float


def _logistic(t: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-t))


def _logistic_dec(x):
    return 0.1 + 0.8 * _logistic(-4.0 * (np.asarray(x, dtype=float) - 0.5))


def _logistic_dec_d2(x):
    s = _logistic(-4.0 * (np.asarray(x, dtype=float) - 0.5))
    return 0.8 * 16.0 * s * (1.0 - s) * (1.0 - 2.0 * s)


H0_CATALOGUE: dict[str, StructuralCurve] = {
    "logistic_dec": StructuralCurve(
        "logistic_dec", _logistic_dec, _logistic_dec_d2, curvature_bound=1.25
    ),
    "sine": StructuralCurve(
        "sine",
        lambda x: 0.25 + 0.2 * np.sin(3.0 * np.asarray(x, dtype=float)),
        lambda x: -1.8 * np.sin(3.0 * np.asarray(x, dtype=float)),
        curvature_bound=1.8,
    ),
    "quadratic": StructuralCurve(
        "quadratic",
        lambda x: 0.3 + 0.4 * np.square(np.asarray(x, dtype=float)),
        lambda x: np.full_like(np.asarray(x, dtype=float), 0.8),
        curvature_bound=0.8,
    ),
    "constant": StructuralCurve(
        "constant",
        lambda x: np.full_like(np.asarray(x, dtype=float), 0.4),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        curvature_bound=0.0,
    ),
}

U0_KINDS = ("zero", "constant", "sine", "cosine")


def _u0_function(kind: str, amplitude: float, frequency: float):
    if kind == "zero":
        return lambda z: np.zeros_like(np.asarray(z, dtype=float)), 0.0
    if kind == "constant":
        return lambda z: np.full_like(np.asarray(z, dtype=float), amplitude), abs(amplitude)
    if kind == "sine":
        return (
            lambda z: amplitude * np.sin(frequency * np.asarray(z, dtype=float)),
            abs(amplitude),
        )
    if kind == "cosine":
        return (
            lambda z: amplitude * np.cos(frequency * np.asarray(z, dtype=float)),
            abs(amplitude),
        )
    raise InvalidConfigurationError(f"unknown u0 kind {kind!r}; options: {U0_KINDS}")


@dataclass(frozen=True, eq=False)
class ContinuousDGP:
    """A fully specified data generating process.

    Regressor: X = rho * Z + (1 - rho) * V with Z ~ U[z_lo, z_hi] and
    V ~ U[0, 1] the endogenous channel.  Outcome: Y = h0(X) + u0(Z) + eps
    where eps mixes the channel V with independent Gaussian noise and has
    standard deviation ``noise_sd``.
    """

    curve: StructuralCurve
    rho: float
    u0_fn: Callable[[np.ndarray], np.ndarray]
    u0_bound: float
    noise_sd: float
    z_lo: float = 0.0
    z_hi: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise InvalidConfigurationError(f"rho must lie in (0, 1], got {self.rho}")
        if self.noise_sd < 0.0 or not math.isfinite(self.noise_sd):
            raise InvalidConfigurationError("noise_sd must be finite and nonnegative")
        if not self.z_lo < self.z_hi:
            raise InvalidConfigurationError("need z_lo < z_hi")
        self._audit()

    def _audit(self) -> None:
        """Verify declared bounds numerically on a dense grid."""
        xs = np.linspace(*self.x_range(), 10_000)
        h = self.curve.fn(xs)
        if h.min() < -1e-12 or h.max() > 1.0 + 1e-12:
            raise InvalidConfigurationError(
                f"structural curve {self.curve.name!r} leaves [0, 1] on the regressor range"
            )
        d2 = np.abs(self.curve.second_deriv(xs))
        if d2.max() > self.curve.curvature_bound + 1e-9:
            raise InvalidConfigurationError(
                f"structural curve {self.curve.name!r} violates its declared "
                f"curvature bound: {d2.max():.6g} > {self.curve.curvature_bound}"
            )
        zs = np.linspace(self.z_lo, self.z_hi, 10_000)
        u = np.abs(self.u0_fn(zs))
        if u.max() > self.u0_bound + 1e-9:
            raise InvalidConfigurationError(
                f"instrument invalidity exceeds its declared bound: "
                f"{u.max():.6g} > {self.u0_bound}"
            )

    def x_range(self) -> tuple[float, float]:
        return self.rho * self.z_lo, self.rho * self.z_hi + (1.0 - self.rho)


def make_dgp(
    h0_name: str,
    rho: float = 0.6,
    u0_kind: str = "zero",
    u0_amplitude: float = 0.0,
    u0_frequency: float = 3.0,
    noise_sd: float = 0.1,
    z_lo: float = 0.0,
    z_hi: float = 1.0,
) -> ContinuousDGP:
    """Assemble a DGP from catalogue names and scalar knobs."""
    if h0_name not in H0_CATALOGUE:
        raise InvalidConfigurationError(
            f"unknown structural curve {h0_name!r}; options: {sorted(H0_CATALOGUE)}"
        )
    u0_fn, u0_bound = _u0_function(u0_kind, float(u0_amplitude), float(u0_frequency))
    return ContinuousDGP(
        curve=H0_CATALOGUE[h0_name],
        rho=float(rho),
        u0_fn=u0_fn,
        u0_bound=u0_bound,
        noise_sd=float(noise_sd),
        z_lo=float(z_lo),
        z_hi=float(z_hi),
    )


def generate(dgp: ContinuousDGP, n: int, seed: int) -> Sample:
    """Draw n iid observations; reproducible for a fixed seed."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    rng = np.random.default_rng(seed)
    z = rng.uniform(dgp.z_lo, dgp.z_hi, size=n)
    v = rng.uniform(0.0, 1.0, size=n)
    x = dgp.rho * z + (1.0 - dgp.rho) * v
    channel = (v - 0.5) / math.sqrt(1.0 / 12.0)
    eps = dgp.noise_sd * (
        math.sqrt(_ENDOGENOUS_SHARE) * channel
        + math.sqrt(1.0 - _ENDOGENOUS_SHARE) * rng.standard_normal(n)
    )
    y = dgp.curve.fn(x) + dgp.u0_fn(z) + eps
    return Sample(y=y, x=x, z=z)


def population_reduced_form(dgp: ContinuousDGP, z_grid: np.ndarray) -> np.ndarray:
    """Exact conditional mean of the outcome given the instrument.

    The conditional law of X given Z = z is uniform on an interval, so the
    structural part is a single adaptive quadrature per grid point (absolute
    and relative tolerance 1e-10).
    """
    z_grid = np.atleast_1d(np.asarray(z_grid, dtype=float))
    if z_grid.min() < dgp.z_lo - 1e-12 or z_grid.max() > dgp.z_hi + 1e-12:
        raise InvalidInputError("z_grid must lie within the instrument support")
    out = np.empty(z_grid.size)
    width = 1.0 - dgp.rho
    for t, z in enumerate(z_grid):
        if width == 0.0:
            out[t] = float(dgp.curve.fn(np.asarray(z)))
        else:
            lo = dgp.rho * z
            integral, _ = scipy.integrate.quad(
                lambda s: float(dgp.curve.fn(np.asarray(s))),
                lo,
                lo + width,
                epsabs=_QUAD_TOL,
                epsrel=_QUAD_TOL,
            )
            out[t] = integral / width
    return out + dgp.u0_fn(z_grid)
