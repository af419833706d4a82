"""HTTP service exposing the online stage of a trained model.

The model is loaded once and shared immutably across requests; no endpoint
performs work of the full order n.  Complex numbers travel as {"re": .., "im": ..}
objects.  Error policy: 400 for malformed requests or unknown parameter
names, 422 for out-of-box values without the extrapolation flag, and 500
responses never carry internals (they are logged server side).
"""

import logging
import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .exceptions import SingularReducedSystemError
from .model_io import ModelBundle
from .problems import cost_function_eval, impedance_penalty
from .rbm import DistributionSpec

logger = logging.getLogger(__name__)


def _cplx(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


class SolveRequest(BaseModel):
    params: dict[str, float]
    allow_extrapolation: bool = False
    include_coefficients: bool = False


class SweepRequest(BaseModel):
    axis: str
    values: list[float]
    params: dict[str, float] = Field(default_factory=dict)
    allow_extrapolation: bool = False


class UqRequest(BaseModel):
    distributions: dict[str, dict]
    n_samples: int = 1000
    seed: int = 0
    bins: int = 30


class PenaltySpec(BaseModel):
    scale: float = 1.0 / 6.0
    coefficients: list[float] = Field(default_factory=list)
    exponents: list[float] = Field(default_factory=list)
    offset: float = 0.0


class CostScanRequest(BaseModel):
    axis: str
    axis_values: list[float]
    weights: list[float]
    grids: dict[str, list[float]]
    penalty: PenaltySpec = Field(default_factory=PenaltySpec)
    params: dict[str, float] = Field(default_factory=dict)


class ApiError(Exception):
    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        self.detail = detail


MAX_UQ_SAMPLES = 200_000


def create_app(bundle: ModelBundle, allow_extrapolation: bool = False) -> FastAPI:
    solver = bundle.solver
    domain = solver.domain_
    solver._fast_path()  # compile the online kernel now, not on the first request
    app = FastAPI(title="nirb online service", version=bundle.provenance.get("tool_version", ""))
    # the browser explorer is served separately from the model service
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    @app.exception_handler(Exception)
    async def _internal(request: Request, exc: Exception):
        logger.exception("internal error serving %s", request.url.path)
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    def resolve_point(params: dict, allow_extra: bool) -> np.ndarray:
        try:
            mu = domain.point(params)
        except KeyError as exc:
            raise ApiError(400, str(exc)) from exc
        if not (allow_extra or allow_extrapolation) and not bool(domain.contains(mu)[0]):
            raise ApiError(422, f"parameter values outside the box; set allow_extrapolation=true")
        return mu

    def solution_payload(sol, include_coefficients=False) -> dict:
        if not sol.ok:
            return {"error": sol.error}
        out = {
            "qoi": _cplx(sol.qoi),
            "error_bound": float(sol.error_bound),
            "extrapolated": bool(sol.extrapolated),
            "clamped": bool(sol.clamped),
            "wall_time_s": float(sol.wall_time),
        }
        if include_coefficients:
            out["gamma_hat"] = [_cplx(g) for g in sol.coefficients]
        return out

    @app.get("/model/info")
    def model_info():
        return {
            "format_version": bundle.format_version,
            "problem": bundle.config.get("problem", {}),
            "parameter_names": list(domain.names),
            "parameter_box": {
                name: [float(domain.lows[i]), float(domain.highs[i])]
                for i, name in enumerate(domain.names)
            },
            "resolutions": list(domain.resolutions),
            "n": solver.n_,
            "n_hat": int(solver.reduced_operators_.shape[1]),
            "dz_matrix": int(solver.reduced_operators_.shape[0]),
            "dz_rhs": int(solver.reduced_rhs_.shape[0]),
            "beta_lb": float(solver.beta_lb_),
            "snapshot_mus": [[float(v) for v in mu] for mu in solver.snapshot_mus_],
            "allow_extrapolation": allow_extrapolation,
        }

    @app.post("/solve")
    def solve(req: SolveRequest):
        mu = resolve_point(req.params, req.allow_extrapolation)
        t0 = time.perf_counter()
        try:
            sol = solver.predict(mu)
        except SingularReducedSystemError as exc:
            raise ApiError(422, str(exc)) from exc
        sol.wall_time = time.perf_counter() - t0
        return solution_payload(sol, req.include_coefficients)

    @app.post("/sweep")
    def sweep(req: SweepRequest):
        if req.axis not in domain.names:
            raise ApiError(400, f"unknown sweep axis {req.axis!r}")
        base = dict(req.params)
        base.pop(req.axis, None)
        missing = set(domain.names) - set(base) - {req.axis}
        if missing:
            raise ApiError(400, f"missing parameter name(s): {sorted(missing)}")
        mus = []
        for v in req.values:
            point = dict(base)
            point[req.axis] = float(v)
            mus.append(resolve_point(point, req.allow_extrapolation))
        if not mus:
            return {"results": []}
        t0 = time.perf_counter()
        sols = solver.sweep(np.array(mus))
        elapsed = time.perf_counter() - t0
        return {
            "results": [solution_payload(s) for s in sols],
            "wall_time_s": elapsed,
        }

    @app.post("/uq")
    def uq(req: UqRequest):
        unknown = set(req.distributions) - set(domain.names)
        if unknown:
            raise ApiError(400, f"unknown parameter name(s): {sorted(unknown)}")
        if req.n_samples < 1:
            raise ApiError(400, "n_samples must be >= 1")
        n_samples = min(req.n_samples, MAX_UQ_SAMPLES)
        try:
            dists = {
                name: DistributionSpec(spec.get("kind", ""), {k: v for k, v in spec.items() if k != "kind"})
                for name, spec in req.distributions.items()
            }
            result = solver.uq_histogram(dists, n_samples=n_samples, seed=req.seed, bins=req.bins)
        except (ValueError, KeyError) as exc:
            raise ApiError(400, f"invalid distribution specification: {exc}") from exc
        return {
            "seed": result.seed,
            "n_samples": result.n_samples,
            "clamped_to_cap": n_samples != req.n_samples,
            "re": {"edges": result.re_edges.tolist(), "counts": result.re_counts.tolist()},
            "im": {"edges": result.im_edges.tolist(), "counts": result.im_counts.tolist()},
            "parameters": {
                name: {"edges": h["edges"].tolist(), "counts": h["counts"].tolist()}
                for name, h in result.parameter_histograms.items()
            },
        }

    @app.post("/cost-scan")
    def cost_scan(req: CostScanRequest):
        if req.axis not in domain.names:
            raise ApiError(400, f"unknown scan axis {req.axis!r}")
        unknown = set(req.grids) - set(domain.names)
        if unknown:
            raise ApiError(400, f"unknown parameter name(s): {sorted(unknown)}")
        if len(req.weights) != len(req.axis_values):
            raise ApiError(400, "weights and axis_values must have equal length")
        grid_names = list(req.grids)
        if req.penalty.coefficients and len(req.penalty.coefficients) != len(grid_names):
            raise ApiError(400, "penalty coefficients must match the number of scanned parameters")
        fixed = set(domain.names) - {req.axis} - set(grid_names)
        missing = fixed - set(req.params)
        if missing:
            raise ApiError(400, f"missing parameter name(s): {sorted(missing)}")

        combos = [()]
        for name in grid_names:
            combos = [c + (float(v),) for c in combos for v in req.grids[name]]
        mus = []
        for combo in combos:
            point = {req.axis: 0.0, **{n: req.params[n] for n in fixed}}
            point.update(dict(zip(grid_names, combo)))
            for v in req.axis_values:
                point[req.axis] = float(v)
                mus.append(resolve_point(point, False))
        sols = solver.sweep(np.array(mus))
        n_axis = len(req.axis_values)
        costs = []
        best = None
        for idx, combo in enumerate(combos):
            chunk = sols[idx * n_axis: (idx + 1) * n_axis]
            if any(not s.ok for s in chunk):
                costs.append({**dict(zip(grid_names, combo)), "error": "singular reduced system"})
                continue
            qois = [s.qoi for s in chunk]
            if req.penalty.coefficients:
                h = impedance_penalty(
                    combo, req.penalty.coefficients, req.penalty.exponents,
                    scale=req.penalty.scale, offset=req.penalty.offset,
                )
            else:
                h = req.penalty.offset
            value = cost_function_eval(qois, req.weights, h)
            entry = {**dict(zip(grid_names, combo)), "cost": value}
            costs.append(entry)
            if best is None or value < best["cost"]:
                best = entry
        return {"argmin": best, "costs": costs}

    return app
