"""Command line workflow: train, validate, serve."""

import argparse
import csv
import json
import logging
import sys

import numpy as np

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_FAILURE = 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nirb", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the offline stage from a configuration file")
    p_train.add_argument("config", help="problem configuration (JSON)")
    p_train.add_argument("-o", "--output", default="model.json", help="model file to write")
    p_train.add_argument("--include-basis", action="store_true", help="store the full-order basis too")

    p_val = sub.add_parser("validate", help="compare a model against fresh truth solves")
    p_val.add_argument("model", help="trained model file")
    group = p_val.add_mutually_exclusive_group()
    group.add_argument("--samples", type=int, default=20, help="number of random trial points")
    group.add_argument("--grid", action="store_true", help="validate on the full trial grid")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("-o", "--output", default=None, help="CSV report path (default stdout)")

    p_serve = sub.add_parser("serve", help="serve the online stage over HTTP")
    p_serve.add_argument("model", help="trained model file")
    p_serve.add_argument("--bind", default="127.0.0.1:8080", help="host:port to listen on")
    p_serve.add_argument("--allow-extrapolation", action="store_true")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "train":
        return _train(args)
    if args.command == "validate":
        return _validate(args)
    return _serve(args)


def _train(args) -> int:
    from .model_io import save_model
    from .problems import load_problem_config
    from .rbm import write_greedy_trace
    from .training import train_from_config

    try:
        cfg = load_problem_config(args.config)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        provider, solver, report = train_from_config(cfg)
    except Exception as exc:  # stage-tagged failure
        stage = getattr(exc, "stage", "") or "training"
        print(f"{stage} error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    save_model(args.output, solver, cfg, include_basis=args.include_basis)
    stem = args.output.rsplit(".json", 1)[0]
    write_greedy_trace(solver.trace_, provider.domain.names, stem + ".trace.csv")
    report.to_csv(stem + ".validation.csv")
    print(f"model written to {args.output}")
    print(f"basis size {solver.basis_.shape[1]}, final max bound {solver.trace_[-1]['max_bound']:.3e}")
    print(f"decomposition errors: matrix {report.max_matrix_error:.3e}, rhs {report.max_rhs_error:.3e}")
    return 0


def _validate(args) -> int:
    from .model_io import load_model
    from .problems import build_provider, truth_solve

    try:
        bundle = load_model(args.model)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    solver = bundle.solver
    provider = build_provider(bundle.config)
    trial = provider.domain.grid()
    if args.grid:
        samples = trial
    elif args.samples <= 0:
        samples = trial[:0]
    else:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(args.seed)))
        idx = rng.choice(trial.shape[0], size=min(args.samples, trial.shape[0]), replace=False)
        samples = trial[np.sort(idx)]

    a_snaps = np.array([provider.assemble_matrix(mu) for mu in solver.matrix_decomposition_.selected_mu_])
    c_snaps = np.array([provider.assemble_rhs(mu) for mu in solver.rhs_decomposition_.selected_mu_])
    rows = []
    for mu in samples:
        a = provider.assemble_matrix(mu)
        c = provider.assemble_rhs(mu)
        beta_a = solver.matrix_decomposition_.beta(mu)
        beta_c = solver.rhs_decomposition_.beta(mu)
        a_rec = np.tensordot(beta_a, a_snaps, axes=1)
        c_rec = beta_c @ c_snaps
        u = truth_solve(provider, mu)
        sol = solver.predict(mu)
        if bundle.basis_included:
            u_red = solver.basis_ @ sol.coefficients
            rb_err = float(np.linalg.norm(u_red - u) / np.linalg.norm(u))
        else:
            # without the stored basis, compare through the output instead
            rb_err = float(abs(provider.output_functional.conj() @ u - sol.qoi) / max(abs(sol.qoi), 1e-300))
        rows.append(
            list(map(float, mu))
            + [
                float(np.linalg.norm(a - a_rec) / np.linalg.norm(a)),
                float(np.linalg.norm(c - c_rec) / np.linalg.norm(c)),
                rb_err,
                float(sol.error_bound / np.linalg.norm(u)),
            ]
        )
    header = [f"mu_{n}" for n in provider.domain.names] + [
        "rel_err_matrix", "rel_err_rhs", "rb_rel_error", "rel_error_bound",
    ]
    out = sys.stdout if args.output is None else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _serve(args) -> int:
    import uvicorn

    from .model_io import load_model
    from .service import create_app

    try:
        bundle = load_model(args.model)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    host, _, port = args.bind.rpartition(":")
    app = create_app(bundle, allow_extrapolation=args.allow_extrapolation)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
