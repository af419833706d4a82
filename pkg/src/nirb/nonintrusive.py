"""Nonintrusive affine decompositions of parametrized operators.

The goal is an approximation ``Q(mu) ~ sum_r beta_r(mu) Q(mu_r)`` for any
quantity assembled from known scalar kernels, using only fully assembled
operators at a handful of selected parameter values.  Two paths:

* the affine-available path interpolates the coefficient functions directly
  (one greedy interpolation over (parameter, coefficient index));
* the general path first builds separated interpolants of each scalar kernel,
  collects their parameter-dependent coefficients (plus optional analytic
  augmentation terms) into a coefficient vector ``z(mu)``, and runs a second
  greedy interpolation on ``(mu, p) -> z_p(mu)``.

Evaluating ``beta`` never touches the assembled operators, so the online
cost is independent of the system dimension.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .eim import EmpiricalInterpolation, SampleGrid
from .exceptions import RankDeficientError
from .validation import as_parameter_batch

logger = logging.getLogger(__name__)

VARIANTS = ("binverse", "delta")


@dataclass(frozen=True)
class ScalarFamily:
    """A scalar kernel ``g(mu, t)`` sampled on a fixed 1-D location grid.

    ``func(mu_batch, locations)`` must return the (m, len(locations)) complex
    sample matrix and must be pure.  ``descriptor`` optionally carries a
    numeric encoding of the function so the compiled online path can
    re-evaluate it without calling back into Python.
    """

    name: str
    locations: np.ndarray
    func: object
    descriptor: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "locations", np.asarray(self.locations, dtype=float))
        if self.locations.ndim != 1 or self.locations.size < 1:
            raise ValueError("locations must be a non-empty 1-D array")

    def sample(self, mu_batch, locations=None):
        locs = self.locations if locations is None else np.asarray(locations, dtype=float)
        out = np.asarray(self.func(np.atleast_2d(mu_batch), locs), dtype=complex)
        if out.shape != (np.atleast_2d(mu_batch).shape[0], locs.shape[0]):
            raise ValueError(f"family {self.name!r} returned shape {out.shape}")
        return out


@dataclass(frozen=True)
class ParameterFeature:
    """A named analytic parameter function appended to the coefficient vector."""

    name: str
    func: object
    descriptor: dict | None = None

    def evaluate(self, mu_batch):
        out = np.asarray(self.func(np.atleast_2d(mu_batch)), dtype=complex)
        return out.reshape(np.atleast_2d(mu_batch).shape[0])


def exp_power_family(param_index, power, locations, name=None) -> ScalarFamily:
    """Oscillatory kernel ``mu[p]^power * exp(i mu[p] t)`` on a location grid."""

    def func(mu, locs):
        mu = np.atleast_2d(mu)
        w = mu[:, param_index]
        return (w**power)[:, None].astype(complex) * np.exp(1j * np.outer(w, locs))

    return ScalarFamily(
        name=name or f"exp_power{power}",
        locations=locations,
        func=func,
        descriptor={"kind": "exp_power", "param_index": int(param_index), "power": int(power)},
    )


def monomial_feature(param_index, power, name=None) -> ParameterFeature:
    """Location-free coefficient function ``mu[p]^power`` (affine path building block)."""

    def func(mu):
        return (np.atleast_2d(mu)[:, param_index] ** power).astype(complex)

    return ParameterFeature(
        name=name or f"mu{param_index}^{power}",
        func=func,
        descriptor={"kind": "monomial", "param_index": int(param_index), "power": int(power)},
    )


def ratio_feature(num_index, den_index, name=None) -> ParameterFeature:
    """Coefficient ratio ``mu[a] / mu[b]`` as an augmentation feature."""

    def func(mu):
        mu = np.atleast_2d(mu)
        return (mu[:, num_index] / mu[:, den_index]).astype(complex)

    return ParameterFeature(
        name=name or f"mu{num_index}/mu{den_index}",
        func=func,
        descriptor={"kind": "ratio", "num_index": int(num_index), "den_index": int(den_index)},
    )


def features_from_provider(provider, names=None) -> list:
    """Wrap a provider's named scalar features for z-vector augmentation."""
    chosen = list(provider.scalar_features) if names is None else list(names)
    feats = []
    for name in chosen:
        fn = provider.scalar_features[name]
        feats.append(ParameterFeature(name=name, func=fn, descriptor=getattr(fn, "descriptor", None)))
    return feats


def _oriented_beta(zeta_model, selected_samples):
    """Interpolation weights on the selected parameter values.

    The weights satisfy ``sum_r beta_r(mu) z(mu_r, p) = (interpolant)(mu, p)``
    for either greedy orientation; which transpose of ``Delta`` applies
    depends on which variable was scanned first.  The inverse is applied
    through the two triangular factors: the assembled cross matrix can be
    very ill conditioned while the factors are not.
    """
    from scipy.linalg import solve_triangular

    b, gamma = zeta_model.B_, zeta_model.Gamma_
    if zeta_model.scan == "mu":
        # samples @ Delta
        t = solve_triangular(b, selected_samples.T, lower=True, unit_diagonal=True)
        return solve_triangular(gamma.T, t, lower=False).T
    # samples @ Delta.T
    t = solve_triangular(gamma, selected_samples.T, lower=True)
    return solve_triangular(b.T, t, lower=False, unit_diagonal=True).T


class AffineDecomposition(BaseEstimator):
    """Nonintrusive weights for an operator with known affine coefficients.

    Fit on the coefficient functions ``g_s(mu)`` themselves (seen as a
    two-variable function of ``(mu, s)``).  For any operator assembled from
    these coefficients, ``sum_r beta_r(mu) Q(mu_r)`` reproduces ``Q(mu)``
    exactly whenever the coefficient span has dimension <= ``n_terms``.

    Parameters
    ----------
    n_terms : int
        Interpolation rank, at most the number of coefficient functions.
    scan : {"mu", "x"}
        Greedy orientation; "mu" scans parameters first.
    score_norm : {"max", "rms"}
    """

    def __init__(self, n_terms=2, scan="mu", score_norm="max"):
        self.n_terms = n_terms
        self.scan = scan
        self.score_norm = score_norm

    def fit(self, coefficient_fns, mu_trial):
        fns = [f if isinstance(f, ParameterFeature) else ParameterFeature(f"g{i}", f) for i, f in enumerate(coefficient_fns)]
        if len(fns) < 1:
            raise ValueError("need at least one coefficient function")
        if self.n_terms > len(fns):
            raise ValueError("n_terms cannot exceed the number of coefficient functions")
        mu_trial = np.atleast_2d(np.asarray(mu_trial, dtype=float))
        grid = np.stack([f.evaluate(mu_trial) for f in fns], axis=1)
        model = EmpiricalInterpolation(self.n_terms, scan=self.scan, score_norm=self.score_norm)
        try:
            model.fit(grid)
        except RankDeficientError as exc:
            raise RankDeficientError(str(exc), exc.achieved_rank, model=exc.model, stage="affine") from exc
        self.coefficient_fns_ = fns
        self.model_ = model
        self.mu_trial_ = mu_trial
        self.selected_mu_ = mu_trial[model.mu_indices_]
        self.selected_fn_indices_ = list(model.x_indices_)
        self.n_interp_ = model.rank_
        self.n_params_ = mu_trial.shape[1]
        return self

    def beta(self, mu):
        """Interpolation weights, shape (m, n_interp) for a batch or (n_interp,)."""
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit first")
        batch, single = as_parameter_batch(mu, self.n_params_)
        samples = np.stack(
            [self.coefficient_fns_[s].evaluate(batch) for s in self.selected_fn_indices_], axis=1
        )
        out = _oriented_beta(self.model_, samples)
        return out[0] if single else out

    def to_dict(self):
        return {
            "kind": "affine",
            "scan": self.scan,
            "score_norm": self.score_norm,
            "coefficients": [f.descriptor for f in self.coefficient_fns_],
            "coefficient_names": [f.name for f in self.coefficient_fns_],
            "model": self.model_.to_dict(),
            "selected_mu": self.selected_mu_,
        }


class TwoStageDecomposition(BaseEstimator):
    """Nonintrusive weights for operators assembled from nonaffine kernels.

    Parameters
    ----------
    n_terms : int
        Rank of each first-stage kernel interpolation.
    n_interp : int
        Rank of the second-stage interpolation of the coefficient vector;
        the length of ``beta``.
    variant : {"binverse", "delta"}
        How the per-kernel coefficient entries are formed from magic-point
        samples: triangular solve against ``B`` or multiplication by
        ``Delta``.
    zeta_scan : {"mu", "x"}
        Greedy orientation of the second stage ("x" scans coefficient
        indices first).
    features : sequence of ParameterFeature
        Analytic augmentation terms appended after the kernel blocks.
    """

    def __init__(self, n_terms=13, n_interp=20, variant="binverse", zeta_scan="x",
                 score_norm="max", stage1_scan="mu", features=()):
        self.n_terms = n_terms
        self.n_interp = n_interp
        self.variant = variant
        self.zeta_scan = zeta_scan
        self.score_norm = score_norm
        self.stage1_scan = stage1_scan
        self.features = features

    def fit(self, families, mu_trial):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        families = list(families)
        if len(families) < 1:
            raise ValueError("need at least one scalar kernel family")
        feats = list(self.features)
        mu_trial = np.atleast_2d(np.asarray(mu_trial, dtype=float))
        z_len = self.n_terms * len(families) + len(feats)
        if self.n_interp > z_len:
            raise ValueError(
                f"n_interp={self.n_interp} exceeds the coefficient-vector length {z_len}"
            )

        stage1 = []
        magic_locations = []
        for fam in families:
            grid = SampleGrid(fam.sample(mu_trial), mu_values=mu_trial, locations=fam.locations)
            model = EmpiricalInterpolation(self.n_terms, scan=self.stage1_scan, score_norm=self.score_norm)
            try:
                model.fit(grid)
            except RankDeficientError as exc:
                # exhausted kernels keep their truncated block, zero padded
                model = exc.model
                logger.info(
                    "kernel %r exhausted at rank %d of %d; block is zero padded",
                    fam.name, exc.achieved_rank, self.n_terms,
                )
            stage1.append(model)
            magic_locations.append(fam.locations[model.x_indices_])

        self.families_ = families
        self.features_ = feats
        self.stage1_models_ = stage1
        self.magic_locations_ = magic_locations
        self.n_params_ = mu_trial.shape[1]
        self.z_dim_ = z_len

        z_trial = self.z_vector(mu_trial)
        zeta = EmpiricalInterpolation(self.n_interp, scan=self.zeta_scan, score_norm=self.score_norm)
        try:
            zeta.fit(SampleGrid(z_trial, mu_values=mu_trial))
        except RankDeficientError as exc:
            raise RankDeficientError(str(exc), exc.achieved_rank, model=exc.model, stage="zeta") from exc
        self.zeta_ = zeta
        self.mu_trial_ = mu_trial
        self.selected_mu_ = mu_trial[zeta.mu_indices_]
        self.selected_p_ = list(zeta.x_indices_)
        self.n_interp_ = zeta.rank_
        return self

    def z_vector(self, mu):
        """Coefficient vector ``z(mu)``, shape (m, z_dim) for a batch.

        Block ``s`` occupies columns ``s*n_terms .. (s+1)*n_terms``; the
        augmentation features follow in declared order.  Each block is
        computed from the ``n_terms`` magic-point samples of its kernel only.
        """
        batch, single = as_parameter_batch(mu, self.n_params_)
        blocks = []
        for fam, model, locs in zip(self.families_, self.stage1_models_, self.magic_locations_):
            samples = fam.sample(batch, locs)
            if self.variant == "binverse":
                block = model.coefficients(samples)
            else:
                block = samples @ model.Delta_
            if model.rank_ < self.n_terms:
                block = np.pad(block, ((0, 0), (0, self.n_terms - model.rank_)))
            blocks.append(block)
        for feat in self.features_:
            blocks.append(feat.evaluate(batch)[:, None])
        out = np.hstack(blocks)
        return out[0] if single else out

    def beta(self, mu):
        """Interpolation weights on the selected parameter values."""
        if not hasattr(self, "zeta_"):
            raise NotFittedError("call fit first")
        batch, single = as_parameter_batch(mu, self.n_params_)
        z_sel = self.z_vector(batch)[:, self.selected_p_]
        out = _oriented_beta(self.zeta_, z_sel)
        return out[0] if single else out

    def to_dict(self):
        return {
            "kind": "two_stage",
            "variant": self.variant,
            "zeta_scan": self.zeta_scan,
            "score_norm": self.score_norm,
            "stage1_scan": self.stage1_scan,
            "n_terms": int(self.n_terms),
            "families": [
                {
                    "name": fam.name,
                    "descriptor": fam.descriptor,
                    "magic_locations": locs,
                    "model": model.to_dict(),
                }
                for fam, model, locs in zip(self.families_, self.stage1_models_, self.magic_locations_)
            ],
            "features": [{"name": f.name, "descriptor": f.descriptor} for f in self.features_],
            "zeta": self.zeta_.to_dict(),
            "selected_mu": self.selected_mu_,
            "selected_p": [int(p) for p in self.selected_p_],
        }


@dataclass
class DecompositionReport:
    """Per-parameter reconstruction errors against freshly assembled operators."""

    parameter_names: tuple
    rows: list = field(default_factory=list)

    @property
    def max_matrix_error(self):
        return max((r["rel_err_matrix"] for r in self.rows), default=float("nan"))

    @property
    def max_rhs_error(self):
        return max((r["rel_err_rhs"] for r in self.rows), default=float("nan"))

    def to_csv(self, path):
        header = [f"mu_{n}" for n in self.parameter_names] + ["rel_err_matrix", "rel_err_rhs"]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for r in self.rows:
                writer.writerow(
                    [repr(float(v)) for v in r["mu"]]
                    + [repr(float(r["rel_err_matrix"])), repr(float(r["rel_err_rhs"]))]
                )


def validate_decomposition(matrix_decomp, rhs_decomp, provider, sample_mus, csv_path=None) -> DecompositionReport:
    """Compare reconstructed operators against fresh truth assembly.

    Matrix errors are relative Frobenius, right-hand-side errors relative
    Euclidean.  The per-parameter table can be persisted as CSV.
    """
    sample_mus = np.atleast_2d(np.asarray(sample_mus, dtype=float))
    a_snaps = np.array([provider.assemble_matrix(mu) for mu in matrix_decomp.selected_mu_])
    c_snaps = np.array([provider.assemble_rhs(mu) for mu in rhs_decomp.selected_mu_])
    report = DecompositionReport(parameter_names=tuple(provider.domain.names))
    if sample_mus.size:
        beta_a = np.atleast_2d(matrix_decomp.beta(sample_mus))
        beta_c = np.atleast_2d(rhs_decomp.beta(sample_mus))
        for t, mu in enumerate(sample_mus):
            a = provider.assemble_matrix(mu)
            c = provider.assemble_rhs(mu)
            a_rec = np.tensordot(beta_a[t], a_snaps, axes=1)
            c_rec = beta_c[t] @ c_snaps
            report.rows.append(
                {
                    "mu": np.asarray(mu, dtype=float),
                    "rel_err_matrix": float(np.linalg.norm(a - a_rec) / np.linalg.norm(a)),
                    "rel_err_rhs": float(np.linalg.norm(c - c_rec) / np.linalg.norm(c)),
                }
            )
    if csv_path is not None:
        report.to_csv(csv_path)
    return report
