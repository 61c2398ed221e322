"""Shared fixtures and reference constructions for the test suite."""

import itertools

import numpy as np
import pytest

import npivbounds as nb


def enumerate_lp_vertices(c, a, r):
    """Brute-force LP oracle: check every basis intersection, keep feasible
    vertices, return the best objective value (None when no feasible vertex).

    Only meaningful for problems whose feasible region is bounded, where a
    nonempty region necessarily has a vertex.
    """
    m, k = a.shape
    best = None
    for idx in itertools.combinations(range(m), k):
        sub = a[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        vertex = np.linalg.solve(sub, r[list(idx)])
        if np.all(a @ vertex <= r + 1e-9):
            value = float(c @ vertex)
            if best is None or value > best:
                best = value
    return best


def random_box_lp(rng, force_infeasible=False):
    """A random LP with a bounded feasible region: a box plus extra random
    cuts through an interior point, at most 4 variables and 8 rows."""
    k = int(rng.integers(1, 5))
    n_extra = int(rng.integers(0, 9 - 2 * k)) if 2 * k < 8 else 0
    lo = rng.uniform(-3.0, 0.0, k)
    hi = rng.uniform(0.5, 3.0, k)
    a = np.vstack([np.eye(k), -np.eye(k), rng.standard_normal((n_extra, k))])
    interior = rng.uniform(-0.5, 0.5, k)
    r = np.concatenate([hi, -lo, a[2 * k :] @ interior + rng.uniform(0.05, 1.0, n_extra)])
    if force_infeasible:
        j = int(rng.integers(0, k))
        r[j] = lo[j] - 1.0 - rng.uniform(0.0, 1.0)
    c = rng.standard_normal(k)
    return nb.LinearProgram(c, "max", a, r)


def comparable_discrete_model(tau=0.12, u0_amp=0.008):
    """Discrete model mirroring a smooth design: 34 evenly spaced support
    points shared by instrument and regressor, a Gaussian-kernel conditional
    law, a catalogued structural curve and a small periodic invalidity.

    The 34 support points land exactly on every third point of the default
    100-point evaluation grid, so estimated and oracle envelopes can be
    compared at the support.
    """
    atoms = np.linspace(0.05, 0.95, 34)
    diff = atoms[None, :] - atoms[:, None]
    kernel = np.exp(-(diff**2) / (2.0 * tau**2))
    cond = kernel / kernel.sum(axis=1, keepdims=True)
    joint = cond / cond.shape[0]
    h0 = nb.H0_CATALOGUE["logistic_dec"].fn(atoms)
    u0 = u0_amp * np.cos(2.0 * np.pi * atoms)
    g0 = cond @ h0 + u0
    model = nb.DiscreteModel(x_support=atoms, z_support=atoms, joint_pmf=joint, g0=g0)
    return model, h0, u0


@pytest.fixture(scope="session")
def engel_shape():
    return nb.default_engel_spec(2.0)


@pytest.fixture(scope="session")
def cubic_basis_unit():
    return nb.build_basis(0.0, 1.0, 4, 10)
