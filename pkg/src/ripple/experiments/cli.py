"""Command line entry point ``ripple``.

Exit codes: 0 when every configured tolerance is met, 2 when a run finished
but a tolerance failed, 1 on any execution error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import RippleError
from ..fixed_point import FixedPointConfig, data_from_noise, solve_fixed_point
from ..grid import make_grid, set_fft_workers
from ..noise import sample_white_noise
from ..norms import PairPlan, holder_neg_mollifier, holder_neg_semigroup, holder_pos
from ..operators import offline_product, solve_linear
from ..snapshot import content_hash, read_snapshot, write_snapshot
from ..symbols import MASKS, mollify
from .config import KINDS, StudyConfig, load_config

EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE = 0, 1, 2


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", type=Path, help="TOML study configuration", **d)
    parser.add_argument("--seed", type=int, help="noise seed (start of the seed range for studies)", **d)
    parser.add_argument("--out", type=Path, help="output directory", **d)
    parser.add_argument("--threads", type=int, help="worker threads", **d)
    parser.add_argument("--strict-reduction", action="store_true",
                        help="single-threaded, order-fixed reductions for bit-for-bit reruns", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ripple", description="Magnetization-ripple spectral toolkit.")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--n1", type=int, default=128)
    grid.add_argument("--n2", type=int, default=128)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-noise", parents=[common, grid], help="write a white-noise snapshot")
    p.add_argument("--ell", type=float, help="mollify at this scale")
    p.add_argument("--mask", choices=sorted(MASKS), default="gaussian")

    sub.add_parser("solve-linear", parents=[common, grid], help="write the linear response G xi")

    p = sub.add_parser("offline-product", parents=[common, grid], help="write F = P(v_ell d2R v_ell)")
    p.add_argument("--ell", type=float, default=1.0 / 16)
    p.add_argument("--mask", choices=sorted(MASKS), default="gaussian")

    p = sub.add_parser("fixed-point", parents=[common, grid], help="solve the mollified fixed-point problem")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--ell", type=float, default=1.0 / 16)
    p.add_argument("--mask", choices=sorted(MASKS), default="gaussian")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)

    p = sub.add_parser("study", parents=[common], help="run an acceptance study")
    p.add_argument("kind", nargs="?", choices=KINDS, help="study kind (must match --config when both are given)")

    p = sub.add_parser("norm", parents=[common], help="estimate a Holder norm of a snapshot")
    p.add_argument("input", type=Path, help="RIPL snapshot")
    p.add_argument("--variant", choices=["direct-positive", "semigroup-negative", "mollifier-negative"],
                   default="direct-positive")
    p.add_argument("--exponent", type=float, required=True)
    p.add_argument("--pairs", choices=["exhaustive", "stratified"], help="pair plan for the positive norm")
    return parser


def _out_dir(args) -> Path:
    out = args.out or Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _snapshot(args, name: str, field) -> None:
    path = _out_dir(args) / f"{name}-{content_hash(field)[:16]}.ripl"
    digest = write_snapshot(path, field)
    _emit({"snapshot": str(path), "sha256": digest, "grid": list(field.grid.shape)})


def _cmd_sample_noise(args) -> int:
    grid = make_grid(args.n1, args.n2)
    xi = sample_white_noise(grid, args.seed or 0)
    if args.ell is None:
        _snapshot(args, "xi", xi.field)
    else:
        _snapshot(args, "xi_ell", mollify(xi.projected(), args.ell, MASKS[args.mask]))
    return EXIT_OK


def _cmd_solve_linear(args) -> int:
    grid = make_grid(args.n1, args.n2)
    _snapshot(args, "v", solve_linear(sample_white_noise(grid, args.seed or 0)))
    return EXIT_OK


def _cmd_offline_product(args) -> int:
    grid = make_grid(args.n1, args.n2)
    v = solve_linear(sample_white_noise(grid, args.seed or 0))
    _snapshot(args, "F", offline_product(mollify(v, args.ell, MASKS[args.mask])))
    return EXIT_OK


def _cmd_fixed_point(args) -> int:
    grid = make_grid(args.n1, args.n2)
    xi = sample_white_noise(grid, args.seed or 0)
    mask = MASKS[args.mask]
    F, v = data_from_noise(xi, args.ell, mask)
    cfg = FixedPointConfig(args.sigma, args.ell, args.tol, args.max_iter)
    rep = solve_fixed_point(F, v, cfg)
    _snapshot(args, "w", rep.w)
    _snapshot(args, "u", rep.u)
    _emit({
        "converged": rep.converged,
        "iterations": rep.iterations,
        "equation_residual": rep.equation_residual,
        "max_contraction": max(rep.contraction_estimates[1:], default=0.0),
    })
    return EXIT_OK if rep.converged else EXIT_TOLERANCE


def _cmd_study(args) -> int:
    from .studies import run_study

    if args.config is not None:
        cfg = load_config(args.config)
        if args.kind and args.kind != cfg.kind:
            raise RippleError(f"config describes {cfg.kind!r}, not {args.kind!r}")
    elif args.kind:
        cfg = StudyConfig.for_kind(args.kind)
    else:
        raise RippleError("study needs a kind or --config")
    changes = {}
    if args.seed is not None:
        changes["seed_start"] = args.seed
    if args.out is not None:
        changes["out"] = str(args.out)
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.strict_reduction:
        changes["strict_reduction"] = True
    cfg = cfg.with_(**changes) if changes else cfg
    res = run_study(cfg)
    for c in res.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {cfg.kind}:{c.name} value={c.value:.6g} target {c.target}")
    return EXIT_OK if res.passed else EXIT_TOLERANCE


def _cmd_norm(args) -> int:
    f = read_snapshot(args.input)
    if args.variant == "direct-positive":
        plan = PairPlan(args.pairs) if args.pairs else None
        est = holder_pos(f, args.exponent, plan)
    elif args.variant == "semigroup-negative":
        est = holder_neg_semigroup(f, args.exponent)
    else:
        est = holder_neg_mollifier(f, args.exponent)
    _emit(est.to_row(str(args.input)))
    return EXIT_OK


_COMMANDS = {
    "sample-noise": _cmd_sample_noise,
    "solve-linear": _cmd_solve_linear,
    "offline-product": _cmd_offline_product,
    "fixed-point": _cmd_fixed_point,
    "study": _cmd_study,
    "norm": _cmd_norm,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise RippleError("--threads must be >= 1")
        set_fft_workers(1 if args.strict_reduction else (args.threads or 1))
        return _COMMANDS[args.command](args)
    except (RippleError, OSError) as exc:
        print(f"ripple: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
