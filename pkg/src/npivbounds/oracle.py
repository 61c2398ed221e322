"""Exact population computations on finite discrete instrument/regressor
distributions: identified-set envelopes, worst-case bias of linear
functionals, and a matching sampler.

These are verification oracles for the estimation pipeline, so the linear
programs here are solved with scipy's HiGHS backend: an independent route
from the package's own simplex.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import EmptyIdentifiedSetError, InvalidConfigurationError, InvalidInputError
from .firststage import Sample

__all__ = [
    "DiscreteModel",
    "discrete_envelopes",
    "functional_bias",
    "functional_bias_ellipsoid",
    "discrete_dgp_sampler",
    "discrete_model_from_dict",
    "discrete_model_to_dict",
    "load_discrete_model",
]


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Joint distribution of (Z, X) on finite supports plus the true
    conditional mean of the outcome given each instrument value.

    ``joint_pmf[j, i]`` is P(Z = z_j, X = x_i); ``g0[j]`` is E[Y | Z = z_j].
    """

    x_support: np.ndarray
    z_support: np.ndarray
    joint_pmf: np.ndarray
    g0: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x_support, dtype=float))
        z = np.atleast_1d(np.asarray(self.z_support, dtype=float))
        pmf = np.asarray(self.joint_pmf, dtype=float)
        g0 = np.atleast_1d(np.asarray(self.g0, dtype=float))
        if pmf.shape != (z.size, x.size):
            raise InvalidInputError(
                f"joint_pmf shape {pmf.shape} does not match supports "
                f"({z.size} instrument x {x.size} regressor points)"
            )
        if g0.shape != (z.size,):
            raise InvalidInputError("g0 must have one entry per instrument point")
        for name, arr in (("x_support", x), ("z_support", z), ("joint_pmf", pmf), ("g0", g0)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} contains non-finite entries")
        if np.any(pmf < 0.0):
            raise InvalidInputError("joint pmf entries must be nonnegative")
        total = float(pmf.sum())
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"joint pmf sums to {total}, not 1")
        if np.any(pmf.sum(axis=1) <= 0.0):
            raise InvalidInputError("every instrument point needs positive mass")
        if np.any(pmf.sum(axis=0) <= 0.0):
            raise InvalidInputError("every regressor point needs positive mass")
        object.__setattr__(self, "x_support", x)
        object.__setattr__(self, "z_support", z)
        object.__setattr__(self, "joint_pmf", pmf)
        object.__setattr__(self, "g0", g0)

    @property
    def mu_z(self) -> np.ndarray:
        return self.joint_pmf.sum(axis=1)

    @property
    def mu_x(self) -> np.ndarray:
        return self.joint_pmf.sum(axis=0)

    def x_given_z(self) -> np.ndarray:
        """Conditional matrix P(X = x_i | Z = z_j), rows summing to one."""
        return self.joint_pmf / self.mu_z[:, None]

    def z_given_x(self) -> np.ndarray:
        """Adjoint conditional matrix P(Z = z_j | X = x_i)."""
        return self.joint_pmf.T / self.mu_x[:, None]


def _curvature_rows(x_support: np.ndarray, bound: float) -> tuple[np.ndarray, np.ndarray]:
    m = x_support.size
    if m < 3:
        return np.zeros((0, m)), np.zeros(0)
    steps = np.diff(x_support)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(float(steps[0]))):
        raise InvalidConfigurationError(
            "second-difference curvature bound requires an evenly spaced regressor support"
        )
    delta = float(steps[0])
    rows = np.zeros((m - 2, m))
    idx = np.arange(m - 2)
    rows[idx, idx] = 1.0
    rows[idx, idx + 1] = -2.0
    rows[idx, idx + 2] = 1.0
    rhs = np.full(m - 2, bound * delta * delta)
    return np.vstack([rows, -rows]), np.concatenate([rhs, rhs])


def discrete_envelopes(
    model: DiscreteModel,
    b: float,
    h_bounds: tuple[float, float],
    second_diff_bound: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact envelopes of the identified set over functions on the support.

    For each support point, minimizes and maximizes the function value over
    all vectors h with |g0 - E[h(X)|Z]| <= b at every instrument point,
    lo <= h <= hi, and (optionally, for evenly spaced supports) discrete
    second differences bounded by ``second_diff_bound`` times the squared
    spacing.  Raises EmptyIdentifiedSetError when no such vector exists.
    """
    if not math.isfinite(b) or b < 0.0:
        raise InvalidInputError(f"b must be finite and >= 0, got {b}")
    lo, hi = float(h_bounds[0]), float(h_bounds[1])
    if not lo <= hi:
        raise InvalidInputError(f"empty function bounds [{lo}, {hi}]")
    m = model.x_support.size
    a_cond = model.x_given_z()

    blocks = [a_cond, -a_cond, np.eye(m), -np.eye(m)]
    rhs = [model.g0 + b, b - model.g0, np.full(m, hi), np.full(m, -lo)]
    if second_diff_bound is not None:
        if second_diff_bound < 0.0:
            raise InvalidInputError("second_diff_bound must be nonnegative")
        curve_a, curve_r = _curvature_rows(model.x_support, float(second_diff_bound))
        blocks.append(curve_a)
        rhs.append(curve_r)
    a_ub = np.vstack(blocks)
    b_ub = np.concatenate(rhs)

    lower = np.empty(m)
    upper = np.empty(m)
    free = [(None, None)] * m
    for i in range(m):
        c = np.zeros(m)
        c[i] = 1.0
        res_min = scipy.optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=free, method="highs")
        res_max = scipy.optimize.linprog(-c, A_ub=a_ub, b_ub=b_ub, bounds=free, method="highs")
        if res_min.status == 2 or res_max.status == 2:
            raise EmptyIdentifiedSetError(
                "no function satisfies the moment and shape constraints; "
                "the identified set is empty at this b"
            )
        if not (res_min.success and res_max.success):
            raise InvalidInputError(
                f"oracle LP failed: {res_min.message} / {res_max.message}"
            )
        lower[i] = res_min.fun
        upper[i] = -res_max.fun
    return lower, upper


def functional_bias(model: DiscreteModel, w: np.ndarray, b: float) -> float:
    """Worst-case bias of a robust estimator of the functional E[w(X) h(X)].

    Equals ``b`` times the minimum instrument-weighted L2 norm over vectors
    alpha with E[alpha(Z) | X] = w pointwise on the support.  When that
    linear system is inconsistent no such representer exists and the bias
    is infinite; ``math.inf`` is returned.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != model.x_support.shape:
        raise InvalidInputError("w must have one entry per regressor support point")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("w contains non-finite entries")
    if not math.isfinite(b) or b < 0.0:
        raise InvalidInputError(f"b must be finite and >= 0, got {b}")

    adjoint = model.z_given_x()
    whitened = adjoint / np.sqrt(model.mu_z)[None, :]
    alpha_w, *_ = np.linalg.lstsq(whitened, w, rcond=None)
    residual = float(np.linalg.norm(whitened @ alpha_w - w))
    if residual > 1e-9 * (1.0 + float(np.linalg.norm(w))):
        return math.inf
    return b * float(np.linalg.norm(alpha_w))


def functional_bias_ellipsoid(model: DiscreteModel, w: np.ndarray, b: float) -> float:
    """Independent cross-check of functional_bias for square full-rank models.

    Maximizes the functional's probability-limit error directly over moment
    deviations in the instrument-weighted ball of radius b: an explicit
    linear-functional-over-ellipsoid maximization via eigendecomposition of
    the weighting form.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    m = model.x_support.size
    p = model.z_support.size
    if m != p:
        raise InvalidConfigurationError("ellipsoid cross-check requires a square model")
    a_cond = model.x_given_z()
    q = np.linalg.inv(a_cond.T) @ (model.mu_x * w)
    weights, vectors = np.linalg.eigh(np.diag(model.mu_z))
    coords = vectors.T @ q
    return b * float(np.sqrt(np.sum(coords * coords / weights)))


def discrete_dgp_sampler(
    model: DiscreteModel,
    h0: np.ndarray,
    u0: np.ndarray,
    noise_sd: float,
    n: int,
    seed: int,
) -> Sample:
    """Draw an iid sample whose population moments equal the model's.

    (Z, X) pairs are drawn from the joint pmf; the outcome is the structural
    value at X plus an instrument-level mean shift u0 plus centered Gaussian
    noise, so E[Y - h0(X) | Z = z_j] equals u0[j] exactly.
    """
    h0 = np.atleast_1d(np.asarray(h0, dtype=float))
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    if h0.shape != model.x_support.shape:
        raise InvalidInputError("h0 must have one entry per regressor support point")
    if u0.shape != model.z_support.shape:
        raise InvalidInputError("u0 must have one entry per instrument support point")
    if n < 1:
        raise InvalidInputError("n must be positive")
    if noise_sd < 0.0 or not math.isfinite(noise_sd):
        raise InvalidInputError("noise_sd must be finite and nonnegative")

    rng = np.random.default_rng(seed)
    p, m = model.joint_pmf.shape
    flat = model.joint_pmf.ravel()
    cells = rng.choice(p * m, size=n, p=flat / flat.sum())
    j_idx, i_idx = np.divmod(cells, m)
    y = h0[i_idx] + u0[j_idx] + noise_sd * rng.standard_normal(n)
    return Sample(y=y, x=model.x_support[i_idx], z=model.z_support[j_idx])


def discrete_model_from_dict(doc: dict) -> DiscreteModel:
    """Build a model from the documented JSON schema
    {x_support, z_support, joint_pmf, g0}."""
    try:
        return DiscreteModel(
            x_support=np.asarray(doc["x_support"], dtype=float),
            z_support=np.asarray(doc["z_support"], dtype=float),
            joint_pmf=np.asarray(doc["joint_pmf"], dtype=float),
            g0=np.asarray(doc["g0"], dtype=float),
        )
    except KeyError as exc:
        raise InvalidInputError(f"discrete model document is missing field {exc}") from exc


def discrete_model_to_dict(model: DiscreteModel) -> dict:
    return {
        "x_support": model.x_support.tolist(),
        "z_support": model.z_support.tolist(),
        "joint_pmf": model.joint_pmf.tolist(),
        "g0": model.g0.tolist(),
    }


def load_discrete_model(path: str) -> DiscreteModel:
    with open(path, "r", encoding="utf-8") as fh:
        return discrete_model_from_dict(json.load(fh))
