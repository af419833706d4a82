"""Model persistence.

A trained model is one JSON file: problem configuration echo, both
decompositions, the reduced-basis blocks, and a provenance record.  Every
number is written as a 17-significant-digit decimal string, which round-trips
IEEE doubles exactly and keeps the files diff-able.  The full-order basis is
excluded by default; the online stage only ever needs the reduced blocks.

Writes are atomic (temp file in the target directory, then rename).
"""

import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__ as _tool_version
from .eim import EmpiricalInterpolation
from .nonintrusive import (
    AffineDecomposition,
    ParameterFeature,
    ScalarFamily,
    TwoStageDecomposition,
    exp_power_family,
    monomial_feature,
    ratio_feature,
)
from .problems import ParameterDomain
from .rbm import ReducedBasisSolver

MODEL_FORMAT_VERSION = "1"


# -- decimal-string encoding -------------------------------------------------


def _enc(x) -> str:
    return format(float(x), ".17g")


def _enc_real(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return _enc(a)
    return [_enc_real(row) for row in a]


def _enc_complex(a):
    a = np.asarray(a, dtype=complex)
    return {"re": _enc_real(a.real), "im": _enc_real(a.imag)}


def _dec_real(nested) -> np.ndarray:
    return np.asarray(nested, dtype=str).astype(np.float64)


def _dec_complex(obj) -> np.ndarray:
    return _dec_real(obj["re"]) + 1j * _dec_real(obj["im"])


# -- decomposition sections ---------------------------------------------------


def _eim_to_json(d):
    out = dict(d)
    for key in ("B", "Gamma", "Delta"):
        out[key] = _enc_complex(d[key])
    return out


def _eim_from_json(d):
    data = dict(d)
    for key in ("B", "Gamma", "Delta"):
        data[key] = _dec_complex(d[key])
    return EmpiricalInterpolation.from_dict(data)


def _decomp_to_json(decomp):
    d = decomp.to_dict()
    if d["kind"] == "affine":
        if any(desc is None for desc in d["coefficients"]):
            raise ValueError("only descriptor-encodable coefficient functions can be saved")
        d["model"] = _eim_to_json(d["model"])
        d["selected_mu"] = _enc_real(d["selected_mu"])
        return d
    for fam in d["families"]:
        if fam["descriptor"] is None:
            raise ValueError(f"kernel {fam['name']!r} has no descriptor and cannot be saved")
        fam["magic_locations"] = _enc_real(fam["magic_locations"])
        fam["model"] = _eim_to_json(fam["model"])
    for feat in d["features"]:
        if feat["descriptor"] is None:
            raise ValueError(f"feature {feat['name']!r} has no descriptor and cannot be saved")
    d["zeta"] = _eim_to_json(d["zeta"])
    d["selected_mu"] = _enc_real(d["selected_mu"])
    return d


def _family_from_descriptor(desc, name, locations) -> ScalarFamily:
    if desc["kind"] == "exp_power":
        fam = exp_power_family(desc["param_index"], desc["power"], locations, name=name)
        return fam
    raise ValueError(f"unknown family descriptor kind {desc['kind']!r}")


def _feature_from_descriptor(desc, name) -> ParameterFeature:
    kind = desc["kind"]
    if kind == "ratio":
        f = ratio_feature(desc["num_index"], desc["den_index"], name=name)
    elif kind == "monomial":
        f = monomial_feature(desc["param_index"], desc["power"], name=name)
    else:
        raise ValueError(f"unknown feature descriptor kind {kind!r}")
    return f


def _decomp_from_json(d):
    if d["kind"] == "affine":
        decomp = AffineDecomposition.__new__(AffineDecomposition)
        decomp.scan = d["scan"]
        decomp.score_norm = d["score_norm"]
        model = _eim_from_json(d["model"])
        decomp.model_ = model
        decomp.n_terms = model.rank_
        decomp.coefficient_fns_ = [
            _feature_from_descriptor(desc, name)
            for desc, name in zip(d["coefficients"], d["coefficient_names"])
        ]
        decomp.selected_mu_ = _dec_real(d["selected_mu"])
        decomp.selected_fn_indices_ = list(model.x_indices_)
        decomp.n_interp_ = model.rank_
        decomp.n_params_ = decomp.selected_mu_.shape[1]
        return decomp
    decomp = TwoStageDecomposition.__new__(TwoStageDecomposition)
    decomp.variant = d["variant"]
    decomp.zeta_scan = d["zeta_scan"]
    decomp.score_norm = d["score_norm"]
    decomp.stage1_scan = d["stage1_scan"]
    decomp.n_terms = int(d["n_terms"])
    families, models, magic = [], [], []
    for fam in d["families"]:
        locs = _dec_real(fam["magic_locations"])
        families.append(_family_from_descriptor(fam["descriptor"], fam["name"], locs))
        models.append(_eim_from_json(fam["model"]))
        magic.append(locs)
    decomp.families_ = families
    decomp.stage1_models_ = models
    decomp.magic_locations_ = magic
    decomp.features_ = [
        _feature_from_descriptor(feat["descriptor"], feat["name"]) for feat in d["features"]
    ]
    decomp.features = tuple(decomp.features_)
    decomp.n_interp = int(len(d["zeta"]["mu_indices"]))
    decomp.zeta_ = _eim_from_json(d["zeta"])
    decomp.selected_mu_ = _dec_real(d["selected_mu"])
    decomp.selected_p_ = [int(p) for p in d["selected_p"]]
    decomp.n_interp_ = decomp.zeta_.rank_
    decomp.n_params_ = decomp.selected_mu_.shape[1]
    decomp.z_dim_ = decomp.n_terms * len(families) + len(decomp.features_)
    return decomp


# -- model bundle --------------------------------------------------------------


@dataclass
class ModelBundle:
    """A loaded model: online-ready solver plus configuration echo."""

    solver: ReducedBasisSolver
    config: dict
    provenance: dict
    format_version: str = MODEL_FORMAT_VERSION
    basis_included: bool = False


def model_to_dict(solver: ReducedBasisSolver, config: dict, include_basis=False) -> dict:
    rbm_section = {
        "projection": solver.projection,
        "n_hat": int(solver.basis_.shape[1]),
        "n": int(solver.n_),
        "beta_lb": _enc(solver.beta_lb_),
        "snapshot_mus": _enc_real(solver.snapshot_mus_),
        "reduced_operators": _enc_complex(solver.reduced_operators_),
        "reduced_rhs": _enc_complex(solver.reduced_rhs_),
        "gram_operator": _enc_complex(solver.gram_operator_),
        "gram_cross": _enc_complex(solver.gram_cross_),
        "gram_rhs": _enc_complex(solver.gram_rhs_),
        "output_functional": _enc_complex(solver.output_functional_),
        "trace": [
            {
                "step": row["step"],
                "mu": _enc_real(row["mu"]),
                "max_bound": _enc(row["max_bound"]),
                "basis_size": row["basis_size"],
            }
            for row in solver.trace_
        ],
    }
    if include_basis:
        rbm_section["basis"] = _enc_complex(solver.basis_)
    provenance = {
        "tool": "nirb",
        "tool_version": _tool_version,
        "created": datetime.now(timezone.utc).isoformat(),
        "seed": config.get("problem", {}).get("seed"),
        "d_matrix": int(getattr(solver.matrix_decomposition_, "n_terms", 0)),
        "dz_matrix": int(solver.matrix_decomposition_.n_interp_),
        "d_rhs": int(getattr(solver.rhs_decomposition_, "n_terms", 0)),
        "dz_rhs": int(solver.rhs_decomposition_.n_interp_),
        "n_hat": int(solver.basis_.shape[1]),
        "beta_lb": _enc(solver.beta_lb_),
    }
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "config": config,
        "domain": solver.domain_.to_dict(),
        "matrix_decomposition": _decomp_to_json(solver.matrix_decomposition_),
        "rhs_decomposition": _decomp_to_json(solver.rhs_decomposition_),
        "rbm": rbm_section,
        "provenance": provenance,
    }


def save_model(path, solver: ReducedBasisSolver, config: dict, include_basis=False):
    """Serialize atomically: write to a temp file, then rename into place."""
    payload = model_to_dict(solver, config, include_basis=include_basis)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".model-", suffix=".json.tmp", dir=directory)
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(payload, f, indent=1)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_model(path) -> ModelBundle:
    """Load a model file into an online-ready solver (no truth assembly)."""
    with open(path) as f:
        payload = json.load(f)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    rbm = payload["rbm"]
    solver = ReducedBasisSolver.__new__(ReducedBasisSolver)
    solver.n_max = int(rbm["n_hat"])
    solver.tol = 0.0
    solver.projection = rbm["projection"]
    solver.first_point = "center"
    solver.domain_ = ParameterDomain.from_dict(payload["domain"])
    solver.n_ = int(rbm["n"])
    solver.beta_lb_ = float(rbm["beta_lb"])
    solver.snapshot_mus_ = _dec_real(rbm["snapshot_mus"])
    solver.reduced_operators_ = _dec_complex(rbm["reduced_operators"])
    solver.reduced_rhs_ = _dec_complex(rbm["reduced_rhs"])
    solver.gram_operator_ = _dec_complex(rbm["gram_operator"])
    solver.gram_cross_ = _dec_complex(rbm["gram_cross"])
    solver.gram_rhs_ = _dec_complex(rbm["gram_rhs"])
    solver.output_functional_ = _dec_complex(rbm["output_functional"])
    solver.trace_ = [
        {
            "step": int(row["step"]),
            "mu": _dec_real(row["mu"]),
            "max_bound": float(row["max_bound"]),
            "basis_size": int(row["basis_size"]),
        }
        for row in rbm["trace"]
    ]
    basis_included = "basis" in rbm
    if basis_included:
        solver.basis_ = _dec_complex(rbm["basis"])
    else:
        # online stage never needs the full-order basis; a placeholder keeps
        # the fitted-state checks simple
        solver.basis_ = np.zeros((0, int(rbm["n_hat"])), dtype=complex)
    solver.matrix_decomposition_ = _decomp_from_json(payload["matrix_decomposition"])
    solver.rhs_decomposition_ = _decomp_from_json(payload["rhs_decomposition"])
    solver._build_online_caches()
    return ModelBundle(
        solver=solver,
        config=payload["config"],
        provenance=payload["provenance"],
        format_version=version,
        basis_included=basis_included,
    )
