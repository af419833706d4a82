"""Greedy empirical interpolation of bivariate sample grids.

Given samples ``G[i, j] = g(mu_i, x_j)`` of a function of a parameter and a
location, the greedy pass selects interpolation pairs ("magic points") one at
a time: the row with the largest residual score, then the column where that
row's residual peaks.  The selected rows and columns support a separated
rank-``d`` interpolant that is exact on every selected row and column.

Two symmetric variants exist, differing only in which variable is scanned
with the norm score first (``scan="mu"`` sweeps rows, ``scan="x"`` sweeps
columns).  With max-abs scores and lowest-index tie-breaking both variants
select the same points and build the same ``B`` and ``Gamma`` matrices.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator

from .exceptions import RankDeficientError
from .validation import as_complex_matrix, check_rank_request

logger = logging.getLogger(__name__)

#: Selected residual magnitudes below ``ATOL_FACTOR * max|G|`` stop the greedy.
ATOL_FACTOR = 1e-13

SCANS = ("mu", "x")
NORMS = ("max", "rms")


@dataclass(frozen=True)
class SampleGrid:
    """Tabulated samples of a bivariate function on a finite trial set.

    ``values[i, j]`` is the sample at the i-th parameter point and the j-th
    location.  ``mu_values`` and ``locations`` are optional coordinates kept
    for bookkeeping; the interpolation itself only uses ``values``.
    """

    values: np.ndarray
    mu_values: np.ndarray | None = None
    locations: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", as_complex_matrix(self.values))
        if self.mu_values is not None:
            mv = np.atleast_2d(np.asarray(self.mu_values, dtype=float))
            if mv.shape[0] != self.values.shape[0]:
                raise ValueError("mu_values must have one row per grid row")
            object.__setattr__(self, "mu_values", mv)
        if self.locations is not None:
            loc = np.asarray(self.locations, dtype=float)
            if loc.shape[0] != self.values.shape[1]:
                raise ValueError("locations must have one entry per grid column")
            object.__setattr__(self, "locations", loc)


def _scores(residual, norm):
    a = np.abs(residual)
    if norm == "max":
        return a.max(axis=1)
    return np.sqrt(np.mean(a * a, axis=1))


class EmpiricalInterpolation(BaseEstimator):
    """Greedy separated interpolation of a sampled bivariate function.

    Parameters
    ----------
    n_terms : int
        Number of interpolation pairs to select.
    scan : {"mu", "x"}
        Variable swept with the norm score.  ``"mu"`` scans grid rows and
        builds basis vectors along the location axis; ``"x"`` swaps the roles
        of the two variables.
    score_norm : {"max", "rms"}
        Norm used along the non-scanned axis when scoring candidates.
        ``"rms"`` is the root mean square, so thresholds do not depend on the
        grid resolution.

    Attributes
    ----------
    mu_indices_, x_indices_ : list of int
        Selected row / column indices, in selection order.
    q_ : ndarray, shape (n_terms, X) for scan="mu" or (n_terms, P) for scan="x"
        Normalized residual basis vectors along the non-scanned axis.
    B_ : ndarray (n_terms, n_terms)
        Unit lower-triangular interpolation matrix, ``B_[l, m] = q_m`` at the
        l-th selected point of the scanned axis.
    Gamma_ : ndarray (n_terms, n_terms)
        Lower-triangular change of basis: the selected snapshots satisfy
        ``Gamma_ @ q_ = snapshots_``.  Built by the recursion, so entries
        above the diagonal are exactly zero and ``Gamma_[k, k]`` is the k-th
        selected residual value.
    Delta_ : ndarray (n_terms, n_terms)
        ``inv(Gamma_ @ B_.T)`` (plain transpose, no conjugation): maps
        magic-point samples directly onto snapshot combinations.
    snapshots_ : ndarray (n_terms, X or P)
        Exact grid slices at the selected scanned-axis points.
    residual_history_ : list of float
        Magnitude of the selected residual at each rank, all strictly
        positive for a successful fit.
    final_score_ : float
        The score the greedy would select at rank ``n_terms + 1``, from one
        extra sweep of the residual.
    """

    def __init__(self, n_terms=1, scan="mu", score_norm="max"):
        self.n_terms = n_terms
        self.scan = scan
        self.score_norm = score_norm

    # -- offline stage ------------------------------------------------------

    def fit(self, grid, y=None):
        """Run the greedy selection on a :class:`SampleGrid` or a 2-D array.

        Raises
        ------
        RankDeficientError
            If the selected residual magnitude falls below
            ``1e-13 * max|G|`` before ``n_terms`` pairs are found.  The
            truncated model is attached to the error.
        """
        if self.scan not in SCANS:
            raise ValueError(f"scan must be one of {SCANS}")
        if self.score_norm not in NORMS:
            raise ValueError(f"score_norm must be one of {NORMS}")
        values = grid.values if isinstance(grid, SampleGrid) else grid
        values = as_complex_matrix(values)
        work = values if self.scan == "mu" else values.T.copy()
        n_rows, n_cols = work.shape
        d = check_rank_request(self.n_terms, min(n_rows, n_cols))

        gmax = float(np.abs(work).max())
        atol = ATOL_FACTOR * gmax
        rows, cols, history = [], [], []
        q_list = []
        b = np.zeros((0, 0), dtype=complex)
        gamma = np.zeros((0, 0), dtype=complex)
        residual = work.copy()

        for k in range(d):
            score = _scores(residual, self.score_norm)
            i = int(np.argmax(score))
            j = int(np.argmax(np.abs(residual[i])))
            val = residual[i, j]
            if abs(val) <= atol:
                self._finalize(work, rows, cols, q_list, b, gamma, history, residual)
                raise RankDeficientError(
                    f"residual {abs(val):.3e} below floor {atol:.3e} at rank {k}",
                    achieved_rank=k,
                    model=self,
                    stage="eim",
                )
            history.append(abs(val))
            q_new = residual[i] / val
            # grow B: new row of prior basis vectors at the new point, unit diagonal
            b_next = np.zeros((k + 1, k + 1), dtype=complex)
            b_next[:k, :k] = b
            for m in range(k):
                b_next[k, m] = q_list[m][j]
            b_next[k, k] = 1.0
            # grow Gamma by the recursion: kappa solves B kappa = exact samples
            gamma_next = np.zeros((k + 1, k + 1), dtype=complex)
            gamma_next[:k, :k] = gamma
            if k:
                kappa = solve_triangular(b, work[i, cols], lower=True, unit_diagonal=True)
                gamma_next[k, :k] = kappa
            gamma_next[k, k] = val
            rows.append(i)
            cols.append(j)
            q_list.append(q_new)
            b, gamma = b_next, gamma_next
            residual = self._stabilized_residual(work, rows, cols, b, gamma)

        self._finalize(work, rows, cols, q_list, b, gamma, history, residual)
        return self

    def _stabilized_residual(self, work, rows, cols, b, gamma):
        """Residual of the current interpolant, recomputed from exact snapshots.

        Uses the snapshot form (the triangular-solve realization of
        ``Delta``) rather than accumulated basis updates, followed by one
        re-subtraction pass, in the spirit of twice-is-enough
        reorthogonalization.
        """
        snapshots = work[rows, :]
        residual = work - _apply_delta(b, gamma, work[:, cols]) @ snapshots
        residual -= _apply_delta(b, gamma, residual[:, cols]) @ snapshots
        return residual

    def _finalize(self, work, rows, cols, q_list, b, gamma, history, residual):
        self.mu_indices_ = rows if self.scan == "mu" else cols
        self.x_indices_ = cols if self.scan == "mu" else rows
        self.q_ = np.array(q_list) if q_list else np.zeros((0, work.shape[1]), dtype=complex)
        self.B_ = b
        self.Gamma_ = gamma
        self.Delta_ = _delta_from(b, gamma) if len(rows) else np.zeros((0, 0), dtype=complex)
        self.snapshots_ = work[rows, :]
        self.sample_columns_ = list(cols)
        self.residual_history_ = list(history)
        self.rank_ = len(rows)
        self.final_score_ = float(_scores(residual, self.score_norm).max()) if len(rows) else float("nan")
        self.grid_shape_ = work.shape if self.scan == "mu" else work.shape[::-1]
        self.grid_max_ = float(np.abs(work).max())

    # -- online stage -------------------------------------------------------

    def coefficients(self, samples):
        """Interpolation coefficients: forward substitution on the unit-triangular B.

        ``samples`` holds the function values at the selected magic points of
        the scanned axis' companion variable (columns for ``scan="mu"``),
        one vector per row for batches.  Cost is O(rank^2) per point.
        """
        samples = np.asarray(samples, dtype=complex)
        single = samples.ndim == 1
        batch = np.atleast_2d(samples)
        if batch.shape[1] != self.rank_:
            raise ValueError(f"expected {self.rank_} magic-point samples, got {batch.shape[1]}")
        lam = solve_triangular(self.B_, batch.T, lower=True, unit_diagonal=True).T
        return lam[0] if single else lam

    def interpolate(self, samples, form="snapshot"):
        """Evaluate the interpolant along the non-scanned grid axis.

        ``form="snapshot"`` combines the stored exact grid slices through
        ``Delta_``; ``form="basis"`` combines the ``q_`` vectors through the
        triangular solve.  Both agree to round-off.
        """
        samples = np.asarray(samples, dtype=complex)
        single = samples.ndim == 1
        batch = np.atleast_2d(samples)
        if form == "snapshot":
            out = _apply_delta(self.B_, self.Gamma_, batch) @ self.snapshots_
        elif form == "basis":
            out = np.atleast_2d(self.coefficients(batch)) @ self.q_
        else:
            raise ValueError("form must be 'snapshot' or 'basis'")
        return out[0] if single else out

    def interpolate_grid(self, grid, form="snapshot"):
        """Interpolant of a full grid (same orientation as the fitted one)."""
        values = grid.values if isinstance(grid, SampleGrid) else grid
        values = as_complex_matrix(values)
        work = values if self.scan == "mu" else values.T
        out = self.interpolate(work[:, self.sample_columns_], form=form)
        return out if self.scan == "mu" else out.T

    def to_dict(self):
        """Serializable summary (grid-sized arrays are not included)."""
        return {
            "n_terms": int(self.rank_),
            "scan": self.scan,
            "score_norm": self.score_norm,
            "mu_indices": [int(i) for i in self.mu_indices_],
            "x_indices": [int(j) for j in self.x_indices_],
            "B": self.B_,
            "Gamma": self.Gamma_,
            "Delta": self.Delta_,
            "residual_history": [float(h) for h in self.residual_history_],
            "final_score": float(self.final_score_),
        }

    @classmethod
    def from_dict(cls, data):
        """Rebuild the online-relevant state (no grid-sized arrays)."""
        model = cls(n_terms=int(data["n_terms"]), scan=data["scan"], score_norm=data["score_norm"])
        model.mu_indices_ = [int(i) for i in data["mu_indices"]]
        model.x_indices_ = [int(j) for j in data["x_indices"]]
        model.B_ = np.asarray(data["B"], dtype=complex)
        model.Gamma_ = np.asarray(data["Gamma"], dtype=complex)
        model.Delta_ = np.asarray(data["Delta"], dtype=complex)
        model.residual_history_ = [float(h) for h in data["residual_history"]]
        model.final_score_ = float(data["final_score"])
        model.rank_ = len(model.mu_indices_)
        return model


def _delta_from(b, gamma):
    """``inv(Gamma B^t)`` through two triangular solves (plain transposes)."""
    k = b.shape[0]
    gamma_inv = solve_triangular(gamma, np.eye(k, dtype=complex), lower=True)
    return solve_triangular(b.T, gamma_inv, lower=False, unit_diagonal=True)


def _apply_delta(b, gamma, samples):
    """Rows ``samples @ Delta`` without forming the inverse.

    The cross matrix ``Gamma B^t`` is often badly conditioned while the two
    triangular factors individually are not, so solving against them keeps
    interpolation weights accurate where the formed inverse loses digits.
    """
    t = solve_triangular(b, samples.T, lower=True, unit_diagonal=True)
    return solve_triangular(gamma.T, t, lower=False).T


def gamma_recursion_check(model: EmpiricalInterpolation, grid) -> float:
    """Rebuild ``Gamma`` by its recursion and report the max deviation.

    The rebuild uses only the exact grid values at the selected points, the
    stored ``B_`` and the stored basis vectors; in particular the diagonal is
    recomputed as sample minus interpolant instead of reusing the residual
    value the greedy recorded, so the check exercises an independent path.
    """
    values = grid.values if isinstance(grid, SampleGrid) else grid
    values = as_complex_matrix(values)
    work = values if model.scan == "mu" else values.T
    rows = model.mu_indices_ if model.scan == "mu" else model.x_indices_
    cols = model.x_indices_ if model.scan == "mu" else model.mu_indices_
    d = model.rank_
    rebuilt = np.zeros((d, d), dtype=complex)
    rebuilt[0, 0] = work[rows[0], cols[0]]
    for k in range(1, d):
        sub = model.B_[:k, :k]
        kappa = solve_triangular(sub, work[rows[k], cols[:k]], lower=True, unit_diagonal=True)
        rebuilt[k, :k] = kappa
        interp_val = kappa @ model.q_[:k, cols[k]]
        rebuilt[k, k] = work[rows[k], cols[k]] - interp_val
    return float(np.abs(rebuilt - model.Gamma_).max())
