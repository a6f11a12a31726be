"""Command-line front end.

Every subcommand resolves its full configuration (defaults included),
embeds it in the output header, and writes either CSV (comment lines,
then a header row) or JSON (an envelope with artifact, config, result).
Output goes to stdout unless --out is given; a relative --out is placed
under $CLOUDALLOC_OUTDIR when that is set.  Identical argv produces
byte-identical output.

Exit codes: 0 success, 1 usage error, 2 numeric divergence, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import __version__, dynamics, failsim, ledger, replication, report
from .model import DivergenceError, ModelParams, SystemState, iterate

DEFAULT_TRANSIENT = 1000
DEFAULT_LYAP_ITERS = 100_000
DEFAULT_MC_TRIALS = 1_000_000
DEFAULT_SEED = 42
OUTDIR_ENV = "CLOUDALLOC_OUTDIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _config_dict(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if not k.startswith("_")}
    cfg["artifact_version"] = __version__
    return cfg


def _csv_document(config: dict, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# cloudalloc {__version__}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _json_document(config: dict, result) -> str:
    return (
        json.dumps(
            {
                "artifact": "cloudalloc",
                "version": __version__,
                "config": config,
                "result": result,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir and not os.path.isabs(out):
        out = os.path.join(outdir, out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _add_params(parser, with_state=True):
    parser.add_argument("--alpha", type=float, required=True)
    parser.add_argument("--xi1", type=float, required=True)
    parser.add_argument("--xi2", type=float, required=True)
    parser.add_argument("--vmax", type=float, default=1.0)
    if with_state:
        parser.add_argument("--v0", type=float, default=0.01)
        parser.add_argument("--x1", type=float, default=0.01)
        parser.add_argument("--x2", type=float, default=-0.01)


def _add_output(parser, formats=("csv", "json"), default=None):
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    if formats:
        parser.add_argument(
            "--format", choices=formats, default=default or formats[0]
        )


def _params(args) -> ModelParams:
    return ModelParams.two_user(args.alpha, args.xi1, args.xi2, v_max=args.vmax)


def _state(args) -> SystemState:
    return SystemState(l=0, v_c=args.v0, x=(args.x1, args.x2))


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from exc


def _seed_list(text: str) -> list[tuple[float, float, float]]:
    seeds = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        comps = [float(tok) for tok in part.split(",")]
        if len(comps) != 3:
            raise UsageError(f"each seed needs 3 components, got {part!r}")
        seeds.append(tuple(comps))
    return seeds


def _cmd_iterate(args) -> int:
    params = _params(args)
    traj = iterate(params, _state(args), steps=args.steps, transient=args.transient)
    config = _config_dict(args)
    if args.format == "json":
        rows = [
            {"l": s.l, "v_c": s.v_c, "x1": s.x[0], "x2": s.x[1]} for s in traj.states
        ]
        _emit(_json_document(config, rows), args.out)
    else:
        rows = [(s.l, repr(s.v_c), repr(s.x[0]), repr(s.x[1])) for s in traj.states]
        _emit(_csv_document(config, ["l", "v_c", "x1", "x2"], rows), args.out)
    return 0


def _cmd_fixed_points(args) -> int:
    params = _params(args)
    claimed = report.claimed_second_fixed_point(args.alpha, args.xi1, args.xi2)
    seeds = _seed_list(args.seeds) if args.seeds else [(0.0, 0.0, 0.0), claimed]
    results = dynamics.find_fixed_points(params, seeds)
    claimed_residual = dynamics.map_residual(params, claimed)
    result = {
        "search": [
            {
                "seed": list(seed),
                "point": list(r.point),
                "residual": r.residual,
                "converged": r.converged,
                "iterations": r.iterations,
            }
            for seed, r in zip(seeds, results)
        ],
        "claimed_point": {
            "point": list(claimed),
            "residual_vector": [float(c) for c in claimed_residual],
            "residual": float(max(abs(c) for c in claimed_residual)),
        },
    }
    _emit(_json_document(_config_dict(args), result), args.out)
    return 0


def _cmd_lyapunov(args) -> int:
    params = _params(args)
    spec = dynamics.lyapunov_spectrum(params, _state(args), iterations=args.iters)
    attractor = dynamics.classify_attractor(spec, zero_band=args.zero_band)
    config = _config_dict(args)
    if args.format == "csv":
        rows = [
            (100 * (i + 1) if i < len(spec.history) - 1 else spec.iterations,
             repr(h[0]), repr(h[1]), repr(h[2]))
            for i, h in enumerate(spec.history)
        ]
        _emit(
            _csv_document(config, ["iteration", "lambda1", "lambda2", "lambda3"], rows),
            args.out,
        )
    else:
        result = {
            "exponents": list(spec.exponents),
            "iterations": spec.iterations,
            "classification": attractor.value,
        }
        _emit(_json_document(config, result), args.out)
    return 0


def _cmd_bifurcate(args) -> int:
    params = _params(args)
    scan = dynamics.bifurcation_scan(
        params,
        args.param,
        args.lo,
        args.hi,
        args.points,
        _state(args),
        transient=args.transient,
        samples=args.samples,
        lyap_iterations=args.lyap_iters,
    )
    rows = []
    for gp in scan.points:
        if gp.divergent:
            rows.append((repr(gp.value), "", "", "", 1))
        else:
            for k, v in enumerate(gp.v_samples):
                rows.append((repr(gp.value), k, repr(v), repr(gp.lambda_max), 0))
    _emit(
        _csv_document(
            _config_dict(args),
            [args.param, "sample", "v_c", "lambda_max", "divergent"],
            rows,
        ),
        args.out,
    )
    return 0


def _cmd_storage_report(args) -> int:
    params = _params(args)
    records = ledger.allocation_report(
        params, _state(args), _int_list(args.stages), unit_scale=args.unit_scale
    )
    rows = [
        (
            r.l,
            repr(r.owner_alloc),
            repr(r.user_alloc[0].magnitude),
            r.user_alloc[0].sign,
            repr(r.user_alloc[1].magnitude),
            r.user_alloc[1].sign,
        )
        for r in records
    ]
    header = [
        "l",
        "owner_alloc_bytes",
        "user1_alloc_bytes",
        "user1_sign",
        "user2_alloc_bytes",
        "user2_sign",
    ]
    _emit(_csv_document(_config_dict(args), header, rows), args.out)
    return 0


def _cmd_placement(args) -> int:
    plan = replication.build_placement(args.nodes)
    config = _config_dict(args)
    if args.format == "json":
        result = {
            "n": plan.n,
            "machines": len(plan.machines),
            "blocks": [
                {
                    "rack": b.rack,
                    "index": b.index,
                    "members": [str(e) for e in b.entries],
                    "machine_ids": list(b.machine_ids),
                }
                for b in plan.owner_blocks + plan.user_blocks
            ],
        }
        _emit(_json_document(config, result), args.out)
    else:
        doc = f"# cloudalloc {__version__}\n# config: {json.dumps(config, sort_keys=True)}\n"
        _emit(doc + replication.render_plan(plan), args.out)
    return 0


def _cmd_loss_exact(args) -> int:
    result = {
        "n": args.nodes,
        "p": args.p,
        "exact_bigint": replication.prob_data_loss(args.nodes, args.p, "exact-bigint").p_loss,
        "log_domain": replication.prob_data_loss(args.nodes, args.p, "log-domain").p_loss,
        "closed_form": replication.prob_data_loss(args.nodes, args.p, "closed-form").p_loss,
    }
    _emit(_json_document(_config_dict(args), result), args.out)
    return 0


def _cmd_loss_curve(args) -> int:
    rows = replication.loss_curve(_int_list(args.nodes_list), args.p)
    csv_rows = [
        (r.n, r.p, repr(r.p_loss_exact), repr(r.p_loss_closed_form)) for r in rows
    ]
    _emit(
        _csv_document(
            _config_dict(args),
            ["n", "p", "p_loss_exact", "p_loss_closed_form"],
            csv_rows,
        ),
        args.out,
    )
    return 0


def _cmd_loss_mc(args) -> int:
    est = failsim.mc_estimate(
        args.nodes,
        args.p,
        args.trials,
        seed=args.seed,
        mode=args.mode,
        workers=args.workers,
    )
    result = {
        "n": est.n,
        "p": est.p,
        "trials": est.trials,
        "seed": est.seed,
        "mode": est.mode,
        "p_hat": est.p_hat,
        "half_width_95": est.half_width_95,
    }
    _emit(_json_document(_config_dict(args), result), args.out)
    return 0


def _cmd_verify_coefficients(args) -> int:
    counts = failsim.verify_coefficients()
    expected = tuple(replication.base_polynomial()) + (0, 0)
    result = {
        "non_fatal_counts": list(counts),
        "expected": list(expected),
        "match": counts == expected,
    }
    _emit(_json_document(_config_dict(args), result), args.out)
    return 0


def _cmd_discrepancy_report(args) -> int:
    data = report.build_discrepancy_report(mc_trials=args.mc_trials, seed=args.seed)
    _emit(report.render_discrepancy_markdown(data), args.out)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="cloudalloc")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("iterate", parents=[], help="iterate the two-user map")
    _add_params(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--transient", type=int, default=0)
    _add_output(p)
    p.set_defaults(_fn=_cmd_iterate)

    p = sub.add_parser("fixed-points", help="damped Newton fixed-point search")
    _add_params(p, with_state=False)
    p.add_argument("--seeds", default=None, help='semicolon-separated "v,x1,x2" seeds')
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_fixed_points)

    p = sub.add_parser("lyapunov", help="Lyapunov exponent spectrum")
    _add_params(p)
    p.add_argument("--iters", type=int, default=DEFAULT_LYAP_ITERS)
    p.add_argument("--zero-band", type=float, default=0.01)
    _add_output(p, formats=("json", "csv"))
    p.set_defaults(_fn=_cmd_lyapunov)

    p = sub.add_parser("bifurcate", help="parameter sweep with v_c samples")
    _add_params(p)
    p.add_argument("--param", choices=dynamics.SWEEPABLE, required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--lyap-iters", type=int, default=4000)
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_bifurcate)

    p = sub.add_parser("storage-report", help="per-stage allocation report")
    _add_params(p)
    p.add_argument("--stages", required=True, help="comma-separated stage list")
    p.add_argument("--unit-scale", type=float, default=ledger.GIGABYTE)
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_storage_report)

    p = sub.add_parser("placement", help="cyclic replica placement plan")
    p.add_argument("--nodes", type=int, required=True)
    _add_output(p, formats=("text", "json"))
    p.set_defaults(_fn=_cmd_placement)

    p = sub.add_parser("loss-exact", help="exact data-loss probability")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_loss_exact)

    p = sub.add_parser("loss-curve", help="loss probability per cluster size")
    p.add_argument("--nodes-list", required=True, help="comma-separated node counts")
    p.add_argument("--p", type=float, required=True)
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_loss_curve)

    p = sub.add_parser("loss-mc", help="Monte Carlo loss estimate")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--trials", type=int, default=DEFAULT_MC_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--mode", choices=failsim.SCENARIO_MODES, default="group")
    p.add_argument("--workers", type=int, default=1)
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_loss_mc)

    p = sub.add_parser("verify-coefficients", help="brute-force survival coefficients")
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_verify_coefficients)

    p = sub.add_parser("discrepancy-report", help="computed vs quoted reference values")
    p.add_argument("--mc-trials", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_output(p, formats=None)
    p.set_defaults(_fn=_cmd_discrepancy_report)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args._fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
