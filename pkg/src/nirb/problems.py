"""Parametrized-problem contract and the two built-in desk-scale problems.

A problem is a black box mapping a parameter point to a dense complex system
(A, c) plus a fixed output functional.  The two built-ins cover the two
regimes the reduction pipeline has to handle:

* an exactly affine operator (tridiagonal stiffness plus a scaled diagonal),
* an oscillatory point-cloud kernel operator with impedance-like rational
  parameter terms on the diagonal, which has no exact affine structure.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.linalg

from .exceptions import LengthMismatchError, SingularMatrixError, ZeroDistanceError

logger = logging.getLogger(__name__)

#: PRNG used for reproducible point clouds.  The identifier is written into
#: problem configuration files and checked on load, so a file pins the stream.
PRNG_ALGORITHM = "pcg64"

TRUTH_RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class ParameterDomain:
    """Box of admissible parameters with a Cartesian trial grid.

    Parameters
    ----------
    names : tuple of str
        One identifier per coordinate.
    lows, highs : array-like
        Closed interval bounds per coordinate, ``lows[i] < highs[i]``.
    resolutions : tuple of int
        Trial-grid points per coordinate (>= 2, endpoints included).
    """

    names: tuple
    lows: np.ndarray
    highs: np.ndarray
    resolutions: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lows", np.asarray(self.lows, dtype=float))
        object.__setattr__(self, "highs", np.asarray(self.highs, dtype=float))
        object.__setattr__(self, "resolutions", tuple(int(r) for r in self.resolutions))
        k = len(self.names)
        if not (self.lows.shape == self.highs.shape == (k,)) or len(self.resolutions) != k or k < 1:
            raise ValueError("names, bounds and resolutions must have equal length >= 1")
        if np.any(self.lows >= self.highs):
            raise ValueError("every interval needs lo < hi")
        if any(r < 2 for r in self.resolutions):
            raise ValueError("resolutions must be >= 2 so the grid contains both endpoints")

    @property
    def n_params(self):
        return len(self.names)

    def axis_values(self, i):
        return np.linspace(self.lows[i], self.highs[i], self.resolutions[i])

    def grid(self):
        """Full Cartesian trial grid, shape (prod(resolutions), n_params).

        Row order is C order with the last coordinate varying fastest; the
        greedy algorithms break argmax ties by this row order.
        """
        axes = [self.axis_values(i) for i in range(self.n_params)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def center(self):
        return 0.5 * (self.lows + self.highs)

    def contains(self, mu, rtol=1e-12):
        mu = np.atleast_2d(np.asarray(mu, dtype=float))
        pad = rtol * (self.highs - self.lows)
        ok = (mu >= self.lows - pad) & (mu <= self.highs + pad)
        return np.all(ok, axis=1)

    def clip(self, mu):
        return np.clip(np.asarray(mu, dtype=float), self.lows, self.highs)

    def point(self, values: Mapping[str, float]):
        """Build a coordinate array from named values, rejecting unknown names."""
        unknown = set(values) - set(self.names)
        if unknown:
            raise KeyError(f"unknown parameter name(s): {sorted(unknown)}")
        missing = set(self.names) - set(values)
        if missing:
            raise KeyError(f"missing parameter name(s): {sorted(missing)}")
        return np.array([float(values[n]) for n in self.names])

    def to_dict(self):
        return {
            "names": list(self.names),
            "lows": [float(v) for v in self.lows],
            "highs": [float(v) for v in self.highs],
            "resolutions": list(self.resolutions),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), d["lows"], d["highs"], tuple(d["resolutions"]))


@dataclass(frozen=True)
class ProblemProvider:
    """Black-box assembler contract.

    ``assemble_matrix`` and ``assemble_rhs`` must be pure: identical
    parameters give identical entries.  ``scalar_features`` exposes named
    analytic parameter functions available for coefficient-vector
    augmentation in the nonintrusive decomposition.
    """

    n: int
    domain: ParameterDomain
    assemble_matrix: Callable[[np.ndarray], np.ndarray]
    assemble_rhs: Callable[[np.ndarray], np.ndarray]
    output_functional: np.ndarray
    scalar_features: Mapping[str, Callable] = field(default_factory=dict)
    metadata: Mapping[str, object] = field(default_factory=dict)


def truth_solve(provider: ProblemProvider, mu) -> np.ndarray:
    """Solve the full-order system at one parameter point by dense LU.

    Raises ``SingularMatrixError`` if pivoting breaks down or the computed
    solution fails the relative-residual check ``||A u - c|| <= 1e-10 ||c||``.
    """
    mu = np.asarray(mu, dtype=float)
    if not provider.domain.contains(mu)[0]:
        raise ValueError(f"parameter {mu} outside the domain box")
    a = provider.assemble_matrix(mu)
    c = provider.assemble_rhs(mu)
    try:
        u = scipy.linalg.solve(a, c)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"LU pivoting broke down at mu={mu}") from exc
    resid = np.linalg.norm(a @ u - c) / np.linalg.norm(c)
    if not np.isfinite(resid) or resid > TRUTH_RESIDUAL_RTOL:
        raise SingularMatrixError(
            f"truth solve at mu={mu} has relative residual {resid:.3e} > {TRUTH_RESIDUAL_RTOL:.0e}"
        )
    return u


def cost_function_eval(qoi_values, weights, penalty: float) -> float:
    """Weighted squared-magnitude cost of a set of outputs plus a penalty.

    Returns ``sum_i weights[i] * |qoi_values[i]|^2 + penalty``.
    """
    qoi = np.asarray(qoi_values, dtype=complex)
    w = np.asarray(weights, dtype=float)
    if qoi.shape != w.shape or qoi.ndim != 1:
        raise LengthMismatchError(
            f"qoi_values and weights must be 1-D of equal length, got {qoi.shape} and {w.shape}"
        )
    value = float(np.sum(w * np.abs(qoi) ** 2) + penalty)
    if not np.isfinite(value):
        raise ValueError("cost function evaluated to a non-finite value")
    return value


def impedance_penalty(mu_imp, coefficients, exponents, scale=1.0 / 6.0, offset=-8.0) -> float:
    """Separable impedance-treatment penalty ``scale * sum_k c_k mu_k^{e_k} + offset``."""
    mu_imp = np.asarray(mu_imp, dtype=float)
    c = np.asarray(coefficients, dtype=float)
    e = np.asarray(exponents, dtype=float)
    if not (mu_imp.shape == c.shape == e.shape):
        raise LengthMismatchError("impedances, coefficients and exponents must have equal length")
    return float(scale * np.sum(c * mu_imp**e) + offset)


# ---------------------------------------------------------------------------
# Built-in problem 1: exactly affine operator
# ---------------------------------------------------------------------------


def affine_toy_provider(n: int, mu_dim: int = 1, domain: ParameterDomain | None = None) -> ProblemProvider:
    """Tridiagonal stiffness analog plus ``mu`` times a positive diagonal.

    ``A(mu) = A0 + mu * A1`` holds entrywise exactly, so any two assembled
    operators reproduce every other one through barycentric weights.  The
    right-hand side is a fixed real vector and the output is the mean of the
    solution.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if mu_dim != 1:
        raise ValueError("the affine toy problem has a single parameter")
    if domain is None:
        domain = ParameterDomain(("mu",), [0.0], [2.0], (50,))
    a0 = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)).astype(complex)
    # positive "mass" diagonal with mild variation so A1 is not a multiple of I
    a1 = np.diag(1.0 + np.arange(n) / n).astype(complex)
    rhs = np.ones(n, dtype=complex)
    ell = np.full(n, 1.0 / n, dtype=complex)

    def assemble_matrix(mu):
        mu = np.asarray(mu, dtype=float).ravel()
        return a0 + mu[0] * a1

    def assemble_rhs(mu):
        return rhs.copy()

    return ProblemProvider(
        n=n,
        domain=domain,
        assemble_matrix=assemble_matrix,
        assemble_rhs=assemble_rhs,
        output_functional=ell,
        scalar_features={},
        metadata={"kind": "affine_toy", "n": n},
    )


# ---------------------------------------------------------------------------
# Built-in problem 2: oscillatory point-cloud kernel with impedance diagonal
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelProblemConfig:
    """Point cloud on the unit sphere with quadrature weights and zone labels.

    ``zones`` holds labels in {1, 2, 3}; impedance parameter ``mu_k`` acts on
    the diagonal entries of zone k.  ``wavenumber_index`` says which
    coordinate of the parameter vector is the wavenumber.
    """

    points: np.ndarray
    weights: np.ndarray
    zones: np.ndarray
    wavenumber_index: int = 0
    impedance_indices: tuple = (1, 2, 3)
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "zones", np.asarray(self.zones, dtype=int))
        object.__setattr__(self, "impedance_indices", tuple(self.impedance_indices))
        n = self.points.shape[0]
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        if self.weights.shape != (n,) or self.zones.shape != (n,):
            raise LengthMismatchError("weights and zones must match the number of points")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if not np.all(np.isin(self.zones, (1, 2, 3))):
            raise ValueError("zone labels must be in {1, 2, 3}")
        if len(self.impedance_indices) != 3:
            raise ValueError("exactly three impedance coordinates are expected")

    @property
    def n(self):
        return self.points.shape[0]

    def validate_zones(self):
        """Require all three zones to be populated (always true for built clouds)."""
        counts = [int(np.sum(self.zones == z)) for z in (1, 2, 3)]
        if min(counts) == 0:
            raise ValueError(f"every zone must be non-empty, got counts {counts}")


def sphere_cloud(n: int, seed: int) -> KernelProblemConfig:
    """Reproducible unit-sphere cloud with equal-area weights and latitude zones.

    The cloud is a pure function of ``(n, seed)`` through the pcg64 stream, so
    the same configuration file always reproduces it bitwise.
    """
    if n < 3:
        raise ValueError("need at least 3 points so every zone is populated")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    pts = rng.standard_normal((n, 3))
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("degenerate sample from the sphere generator")
    pts = pts / norms
    weights = np.full(n, 4.0 * np.pi / n)
    zones = np.empty(n, dtype=int)
    order = np.argsort(pts[:, 2], kind="stable")
    for label, chunk in zip((1, 2, 3), np.array_split(order, 3)):
        zones[chunk] = label
    cfg = KernelProblemConfig(points=pts, weights=weights, zones=zones, seed=seed)
    cfg.validate_zones()
    return cfg


def kernel_provider(cfg: KernelProblemConfig, domain: ParameterDomain | None = None) -> ProblemProvider:
    """Dense oscillatory kernel operator on a point cloud.

    Off-diagonal entries are ``w_i w_j exp(i mu0 r_ij) / (4 pi r_ij)``; the
    diagonal carries the impedance terms
    ``w_i (1 + i mu0/mu_{z_i} + i mu_{z_i}/mu0)``.  The right-hand side is a
    plane wave ``w_i exp(i mu0 d.x_i)`` and the output functional is a
    far-field probe in the opposite direction, frozen at the band-center
    wavenumber so it stays parameter independent.
    """
    if domain is None:
        domain = ParameterDomain(
            ("mu0", "mu1", "mu2", "mu3"),
            [14.0, 1.0, 1.0, 1.0],
            [20.0, 5.0, 5.0, 5.0],
            (40, 5, 5, 5),
        )
    counts = [int(np.sum(cfg.zones == z)) for z in (1, 2, 3)]
    if min(counts) == 0:
        logger.warning("kernel cloud has empty zone(s), counts per zone: %s", counts)

    n = cfg.n
    diff = cfg.points[:, None, :] - cfg.points[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    off = ~np.eye(n, dtype=bool)
    if np.any(r[off] <= 0.0):
        i, j = np.argwhere((r <= 0.0) & off)[0]
        raise ZeroDistanceError(f"cloud points {i} and {j} coincide")
    r_safe = np.where(off, r, 1.0)
    w = cfg.weights
    amp = np.where(off, np.outer(w, w) / (4.0 * np.pi * r_safe), 0.0)

    kw = cfg.wavenumber_index
    imp = cfg.impedance_indices
    zone_param = np.array([imp[z - 1] for z in cfg.zones])

    direction = np.array([0.0, 0.0, 1.0])
    proj = cfg.points @ direction

    def assemble_matrix(mu):
        mu = np.asarray(mu, dtype=float).ravel()
        mu0 = mu[kw]
        a = amp * np.exp(1j * mu0 * r_safe)
        zz = mu[zone_param]
        a[np.diag_indices(n)] = w * (1.0 + 1j * (mu0 / zz) + 1j * (zz / mu0))
        return a

    def assemble_rhs(mu):
        mu = np.asarray(mu, dtype=float).ravel()
        return w * np.exp(1j * mu[kw] * proj)

    mu0_star = float(domain.center()[kw])
    ell = w * np.exp(-1j * mu0_star * (-proj))

    features = {}
    for k, idx in enumerate(imp, start=1):
        features[f"w_over_z{k}"] = _ratio_feature(kw, idx)
        features[f"z{k}_over_w"] = _ratio_feature(idx, kw)

    return ProblemProvider(
        n=n,
        domain=domain,
        assemble_matrix=assemble_matrix,
        assemble_rhs=assemble_rhs,
        output_functional=ell,
        scalar_features=features,
        metadata={
            "kind": "kernel",
            "n": n,
            "seed": cfg.seed,
            "diameter": float(r.max()),
            "projection_range": (float(proj.min()), float(proj.max())),
            "wavenumber_index": kw,
            "impedance_indices": imp,
        },
    )


def _ratio_feature(num_index, den_index):
    def feature(mu):
        mu = np.atleast_2d(np.asarray(mu, dtype=float))
        return (mu[:, num_index] / mu[:, den_index]).astype(complex)

    feature.descriptor = {"kind": "ratio", "num_index": int(num_index), "den_index": int(den_index)}
    return feature


# ---------------------------------------------------------------------------
# Problem configuration files
# ---------------------------------------------------------------------------


def load_problem_config(path):
    """Read and validate a problem configuration file (documented JSON)."""
    with open(path) as f:
        cfg = json.load(f)
    return parse_problem_config(cfg)


def parse_problem_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict) or "problem" not in cfg:
        raise ValueError("configuration must be a JSON object with a 'problem' section")
    prob = cfg["problem"]
    kind = prob.get("kind")
    if kind not in ("affine_toy", "kernel"):
        raise ValueError(f"unknown problem kind {kind!r}")
    if kind == "kernel":
        prng = prob.get("prng", {"algorithm": PRNG_ALGORITHM})
        if prng.get("algorithm") != PRNG_ALGORITHM:
            raise ValueError(
                f"unsupported prng algorithm {prng.get('algorithm')!r}; expected {PRNG_ALGORITHM!r}"
            )
        if "seed" not in prob:
            raise ValueError("kernel problems need a 'seed' for the point cloud")
    if "n" not in prob or int(prob["n"]) < 2:
        raise ValueError("problem needs a system dimension 'n' >= 2")
    if "domain" in cfg:
        ParameterDomain.from_dict(cfg["domain"])
    return cfg


def build_provider(cfg: dict) -> ProblemProvider:
    """Instantiate the provider described by a parsed configuration."""
    prob = cfg["problem"]
    domain = ParameterDomain.from_dict(cfg["domain"]) if "domain" in cfg else None
    if prob["kind"] == "affine_toy":
        return affine_toy_provider(int(prob["n"]), domain=domain)
    cloud = sphere_cloud(int(prob["n"]), int(prob["seed"]))
    return kernel_provider(cloud, domain=domain)
