"""Command-line interface: experiments, outputs, and self-verification.

Subcommands: moments, map, iterate, sweep, fourier2d, project-grid, verify.
Every file-writing run also writes a JSON manifest of the full effective
configuration; re-running from a manifest reproduces outputs byte for
byte.  Exit codes: 0 success, 1 criterion failure, 2 usage/validation.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, correction, gridproj, moments, renorm, sphere
from .quadratic import DeltaState, HarmonicQuadratic, make_p_delta


def _parse_delta(text, n):
    if text.strip() == "":
        return np.zeros(n - 2)
    parts = [float(x) for x in text.split(",")]
    if len(parts) != n - 2:
        raise ValueError(f"delta must have {n - 2} entries for n={n}, got {len(parts)}")
    return np.array(parts)


def _parse_range(text):
    lo, hi, count = text.split(":")
    lo, hi, count = float(lo), float(hi), int(count)
    if count < 1:
        raise ValueError("range count must be >= 1")
    return np.linspace(lo, hi, count)


def _np_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _json_dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_np_default)


def _write_manifest(prefix, command, config, outputs):
    manifest = {
        "command": command,
        "config": config,
        "outputs": outputs,
        "package_version": __version__,
    }
    path = Path(f"{prefix}.manifest.json")
    path.write_text(_json_dump(manifest) + "\n", encoding="utf-8")
    return str(path)


def _cmd_moments(args, parser):
    if args.n < 2:
        parser.error("n must be >= 2")
    deltas = []
    for text in args.delta or [""]:
        d = _parse_delta(text, args.n)
        if np.linalg.norm(d) >= 0.5:
            parser.error("|delta| must be < 1/2")
        deltas.append(d)
    sets = [moments.compute_moments(d, args.n, args.order) for d in deltas]
    csv_text = moments.momentsets_to_csv(sets)

    mc_report = []
    if args.mc_check:
        for m in sets:
            b_est, bi_est = moments.mc_moment_check(
                m.delta, args.n, args.mc_check, args.seed
            )
            zs = [abs(m.B - b_est.value) / b_est.std_error] + [
                abs(m.B_i[i] - bi_est[i].value) / bi_est[i].std_error
                for i in range(args.n)
            ]
            mc_report.append(
                {
                    "delta": list(m.delta),
                    "max_abs_z": max(zs),
                    "B_mc": b_est.value,
                    "B_mc_se": b_est.std_error,
                }
            )

    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8")
        outputs = [args.output]
        config = {
            "n": args.n,
            "delta": [list(d) for d in deltas],
            "order": args.order,
            "mc_check": args.mc_check,
            "seed": args.seed,
        }
        _write_manifest(Path(args.output).with_suffix(""), "moments", config, outputs)
    else:
        sys.stdout.write(csv_text)
    if mc_report:
        sys.stdout.write(_json_dump({"mc_check": mc_report}) + "\n")
        if any(r["max_abs_z"] > 3.0 for r in mc_report):
            return 1
    return 0


def _map_config(args):
    return renorm.MapConfig(
        n=args.n,
        order=args.order,
        gamma=args.gamma,
        alpha=args.alpha,
        c_noise=args.c_noise,
        noise=args.noise,
        seed=args.seed,
        C_gamma=args.c_gamma,
        kappa0=args.kappa0,
        tol_conv=getattr(args, "tol_conv", 1e-9),
    )


def _cmd_map(args, parser):
    if args.n < 2:
        parser.error("n must be >= 2")
    delta = _parse_delta(args.delta, args.n)
    cfg = _map_config(args)
    state = DeltaState(n=args.n, tau=args.tau, delta=delta, kappa0=cfg.kappa0)
    new_state, m, z_half, xi = renorm._step_detail(state, cfg)
    report = renorm.check_monotonicity(state, new_state, cfg, moments_at_state=m)
    out = {
        "before": {"tau": state.tau, "delta": list(state.delta)},
        "after": {"tau": new_state.tau, "delta": list(new_state.delta)},
        "correction_projection_diag": list(np.diag(z_half.coeff)),
        "noise_diag": list(xi),
        "monotonicity": {
            "sum_ci": report.sum_ci,
            "regime": report.regime,
            "threshold": report.threshold,
            "exceeds_threshold": report.exceeds_threshold,
            "deltajclaim_holds": report.deltajclaim_holds,
            "negdelta_holds": report.negdelta_holds,
        },
    }
    sys.stdout.write(_json_dump(out) + "\n")
    return 0


def _cmd_iterate(args, parser):
    if args.manifest:
        loaded = json.loads(Path(args.manifest).read_text())
        cfg = renorm.MapConfig(**loaded["config"]["map"])
        tau0 = loaded["config"]["tau0"]
        delta0 = np.array(loaded["config"]["delta0"])
        steps = loaded["config"]["steps"]
        prefix = args.output or loaded["config"]["output_prefix"]
    else:
        if args.n < 2:
            parser.error("n must be >= 2")
        cfg = _map_config(args)
        tau0 = args.tau0
        delta0 = _parse_delta(args.delta0, args.n)
        steps = args.steps
        prefix = args.output
    if tau0 <= 1.0:
        parser.error("tau0 must be > 1")

    state0 = DeltaState(n=cfg.n, tau=tau0, delta=delta0, kappa0=cfg.kappa0)
    rec = renorm.iterate(state0, cfg, steps)
    csv_text = rec.to_csv()
    summary = rec.manifest()
    if prefix:
        csv_path = f"{prefix}.csv"
        Path(csv_path).write_text(csv_text, encoding="utf-8")
        config = {
            "map": cfg.to_dict(),
            "tau0": tau0,
            "delta0": list(delta0),
            "steps": steps,
            "output_prefix": str(prefix),
        }
        _write_manifest(prefix, "iterate", config, [csv_path])
        sys.stdout.write(_json_dump(summary) + "\n")
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(_json_dump(summary) + "\n")
    return 0


def _cmd_sweep(args, parser):
    if args.n < 2:
        parser.error("n must be >= 2")
    cfg = _map_config(args)
    tau0s = _parse_range(args.tau0_range)
    mags = _parse_range(args.delta0_range)
    deltas = []
    for s in mags:
        d = np.zeros(args.n - 2)
        if args.n > 2:
            d[0] = s
        deltas.append(d)
    rows = renorm.sweep(tau0s, deltas, cfg, args.steps, workers=args.workers)
    csv_text = renorm.sweep_to_csv(rows, args.n)
    if args.output:
        csv_path = f"{args.output}.csv"
        Path(csv_path).write_text(csv_text, encoding="utf-8")
        config = {
            "map": cfg.to_dict(),
            "tau0_range": args.tau0_range,
            "delta0_range": args.delta0_range,
            "steps": args.steps,
            "workers": args.workers,
        }
        _write_manifest(args.output, "sweep", config, [csv_path])
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_fourier2d(args, parser):
    if args.max_degree < 2:
        parser.error("max-degree must be >= 2")
    if args.frame == "rotated":
        p = HarmonicQuadratic(2, np.array([[0.0, 0.5], [0.5, 0.0]]))
        expected = ("x1*x2", math.log(2.0) / math.pi)
    else:
        p = make_p_delta(2, np.zeros(0))
        expected = ("x1^2-x2^2", math.log(2.0) / (2.0 * math.pi))
    dec = correction.fourier_series_2d(p, args.max_degree)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(args.seed)))
    angles = rng.uniform(0.0, 2.0 * math.pi, args.points)
    radii = np.sqrt(rng.uniform(0.0, 1.0, args.points))
    pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    frame = args.frame
    err = float(
        np.abs(
            correction.reconstruct(dec, pts)
            - correction.explicit_solution_2d(pts, frame=frame)
        ).max()
    )
    proj = correction.scale_projection(dec, 0.5)
    out = {
        "frame": args.frame,
        "max_degree": args.max_degree,
        "tail_bound": dec.tail_bound,
        "q_matrix": dec.q.coeff.ravel().tolist(),
        "reconstruction_max_err": err,
        "projection_half_matrix": proj.coeff.ravel().tolist(),
        "expected_projection": {"form": expected[0], "coefficient": expected[1]},
        "phi_terms": len(dec.phi_terms),
    }
    sys.stdout.write(_json_dump(out) + "\n")
    return 0


def _cmd_project_grid(args, parser):
    if args.input:
        field = gridproj.SampledField.load(args.input)
    else:
        if args.h <= 0:
            parser.error("h must be positive")
        radius = args.radius or (args.r + 5 * args.h)

        def synthetic(pts):
            p0 = make_p_delta(2, np.zeros(0))
            base = args.tau0 * np.einsum("ij,pi,pj->p", p0.coeff, pts, pts)
            if args.synthetic == "ztilde":
                return correction.explicit_solution_2d(pts)
            if args.synthetic == "p0-plus-ztilde":
                return base + correction.explicit_solution_2d(pts, frame="axis")
            parser.error("unknown synthetic field")

        field = gridproj.SampledField.from_function(synthetic, 2, args.h, radius)
    results = {}
    scales = [args.r, args.r / 2.0] if args.half_step else [args.r]
    for r in scales:
        res = gridproj.project(field, r)
        results[f"r={r:g}"] = {
            "tau": res.tau,
            "p_matrix": None if res.p is None else res.p.coeff.ravel().tolist(),
            "raw_matrix": res.raw.coeff.ravel().tolist(),
            "fd_error": res.fd_error,
            "points_used": res.points_used,
        }
    text = _json_dump(results) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args, parser):
    results = acceptance.run_all(name_filter=args.filter, order=args.order)
    if not results:
        parser.error(f"no criteria match filter {args.filter!r}")
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        sys.stdout.write(f"{status} {res.name}: {res.detail} [{res.seconds:.1f}s]\n")
        failed += 0 if res.passed else 1
    sys.stdout.write(f"{len(results) - failed}/{len(results)} criteria passed\n")
    return 0 if failed == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blowuplab",
        description="Numerical lab for half-scale renormalization dynamics of "
        "free-boundary singularities",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_map_args(p, with_tol=False):
        p.add_argument("--order", type=int, default=64)
        p.add_argument("--gamma", type=float, default=0.1)
        p.add_argument("--alpha", type=float, default=0.2)
        p.add_argument("--noise", choices=renorm.NOISE_MODES, default="off")
        p.add_argument("--c-noise", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--c-gamma", type=float, default=None)
        p.add_argument("--kappa0", type=float, default=0.2)
        if with_tol:
            p.add_argument("--tol-conv", type=float, default=1e-9)

    p = sub.add_parser("moments", help="moment sets for one or more delta")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", action="append", default=None)
    p.add_argument("--order", type=int, default=64)
    p.add_argument("--mc-check", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("map", help="a single half-scale step")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--delta", default="")
    add_map_args(p)

    p = sub.add_parser("iterate", help="iterate the half-scale map")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--tau0", type=float, default=10.0)
    p.add_argument("--delta0", default="")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--manifest", default=None, help="re-run from a manifest file")
    add_map_args(p, with_tol=True)

    p = sub.add_parser("sweep", help="classify a grid of initial conditions")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau0-range", required=True, help="lo:hi:count")
    p.add_argument("--delta0-range", required=True, help="lo:hi:count along e1")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", "-o", default=None)
    add_map_args(p)

    p = sub.add_parser("fourier2d", help="n=2 oracle: series vs closed form")
    p.add_argument("--max-degree", type=int, default=40)
    p.add_argument("--frame", choices=("rotated", "axis"), default="rotated")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("project-grid", help="project a sampled field")
    p.add_argument("--input", default=None, help="field file (.json/.bin pair or .csv)")
    p.add_argument(
        "--synthetic", choices=("ztilde", "p0-plus-ztilde"), default=None
    )
    p.add_argument("--tau0", type=float, default=10.0)
    p.add_argument("--h", type=float, default=1 / 128)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--half-step", action="store_true")
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("verify", help="run the acceptance criteria suite")
    p.add_argument("--filter", default=None)
    p.add_argument("--order", type=int, default=None)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "moments": _cmd_moments,
        "map": _cmd_map,
        "iterate": _cmd_iterate,
        "sweep": _cmd_sweep,
        "fourier2d": _cmd_fourier2d,
        "project-grid": _cmd_project_grid,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args, parser)
    except ValueError as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
