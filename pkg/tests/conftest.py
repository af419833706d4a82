"""Shared fixtures: worked grids, small providers, and trained models."""

import logging
from dataclasses import replace

import numpy as np
import pytest

from nirb.problems import affine_toy_provider, kernel_provider, sphere_cloud, ParameterDomain
from nirb.training import train_from_config

logging.getLogger("nirb").setLevel(logging.WARNING)

# the flagship configuration used by the acceptance suite: oscillation kept
# resolvable (wavenumber times cloud diameter <= 40)
ACCEPTANCE_KERNEL_CONFIG = {
    "problem": {"kind": "kernel", "n": 200, "seed": 7, "prng": {"algorithm": "pcg64"}},
    "domain": {
        "names": ["mu0", "mu1", "mu2", "mu3"],
        "lows": [14.0, 1.0, 1.0, 1.0],
        "highs": [20.0, 5.0, 5.0, 5.0],
        "resolutions": [40, 5, 5, 5],
    },
    "matrix_decomposition": {"n_terms": 13, "n_interp": 20, "location_points": 500},
    "rhs_decomposition": {"n_terms": 13, "n_interp": 13, "location_points": 500},
    "rbm": {"n_max": 20, "tol": 1e-8},
    "validation": {"n_samples": 200, "seed": 42},
}

SMALL_KERNEL_CONFIG = {
    "problem": {"kind": "kernel", "n": 40, "seed": 11, "prng": {"algorithm": "pcg64"}},
    "domain": {
        "names": ["mu0", "mu1", "mu2", "mu3"],
        "lows": [14.0, 1.0, 1.0, 1.0],
        "highs": [20.0, 5.0, 5.0, 5.0],
        "resolutions": [20, 3, 3, 3],
    },
    "matrix_decomposition": {"n_terms": 12, "n_interp": 20, "location_points": 300},
    "rhs_decomposition": {"n_terms": 12, "n_interp": 12, "location_points": 300},
    "rbm": {"n_max": 6, "tol": 1e-9},
    "validation": {"n_samples": 20, "seed": 2},
}

AFFINE_CONFIG = {
    "problem": {"kind": "affine_toy", "n": 40},
    "domain": {"names": ["mu"], "lows": [0.0], "highs": [2.0], "resolutions": [50]},
    "matrix_decomposition": {"n_terms": 2},
    "rhs_decomposition": {"n_terms": 1},
    "rbm": {"n_max": 12, "tol": 1e-6},
    "validation": {"n_samples": 20, "seed": 3},
}


@pytest.fixture(scope="session")
def worked_grid():
    """g(mu, x) = 1 + mu*x tabulated on {0,1,2} x {0,1,2}."""
    mu = np.array([0.0, 1.0, 2.0])
    x = np.array([0.0, 1.0, 2.0])
    return 1.0 + np.outer(mu, x)


@pytest.fixture(scope="session")
def affine_provider():
    return affine_toy_provider(40)


@pytest.fixture(scope="session")
def small_kernel_provider():
    cfg = sphere_cloud(40, seed=11)
    domain = ParameterDomain(("mu0", "mu1", "mu2", "mu3"), [14, 1, 1, 1], [20, 5, 5, 5], (20, 3, 3, 3))
    return kernel_provider(cfg, domain)


@pytest.fixture(scope="session")
def small_kernel_model():
    provider, solver, report = train_from_config(SMALL_KERNEL_CONFIG)
    return provider, solver, report


@pytest.fixture(scope="session")
def affine_model():
    provider, solver, report = train_from_config(AFFINE_CONFIG)
    return provider, solver, report


def count_assemblies(provider):
    """Wrap a provider so every truth assembly is counted (test double)."""
    counter = {"matrix": 0, "rhs": 0}
    inner_matrix = provider.assemble_matrix
    inner_rhs = provider.assemble_rhs

    def assemble_matrix(mu):
        counter["matrix"] += 1
        return inner_matrix(mu)

    def assemble_rhs(mu):
        counter["rhs"] += 1
        return inner_rhs(mu)

    wrapped = replace(provider, assemble_matrix=assemble_matrix, assemble_rhs=assemble_rhs)
    return wrapped, counter
