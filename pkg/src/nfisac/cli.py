"""Command-line interface.

Exit codes: 0 success, 2 configuration/usage error, 3 infeasible design,
4 solver failure, 5 numerical verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io, optimizer, pipeline
from .config import SCHEMES, dump_config, parse_config
from .errors import (ConfigError, DegenerateUserError, InfeasibleError, ReconstructionError,
                     SignalGenerationError, SolverError, VerificationError)
from .scenario import Scenario

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5

log = logging.getLogger("nfisac")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _pos_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="paper_scenario",
                        help="scenario file, or the name of a shipped scenario (default: paper_scenario)")
    common.add_argument("--scheme", choices=SCHEMES, help="override the configured scheme")
    common.add_argument("--seed", type=_u64, help="override the configured seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--grid-step", type=_pos_float, metavar="METERS", help="grid spacing override")
    common.add_argument("--loading", type=_nonneg_float, help="Capon diagonal loading override")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="nfisac", description="Near-field ISAC beamforming design and evaluation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="design, recover and verify one scheme")
    v = sub.add_parser("verify", parents=[common], help="audit a stored solution")
    v.add_argument("--solution", type=Path, required=True, help="solution container to audit")
    v.add_argument("--near-field", action="store_true",
                   help="audit on near-field channels instead of the scheme's design program")
    sub.add_parser("heatmap-sinr", parents=[common], help="per-user SINR maps over the yz-plane")
    sub.add_parser("capon", parents=[common], help="Capon spectrum of a simulated sensing block")
    sub.add_parser("compare", parents=[common], help="run all schemes with shared seeds")
    sub.add_parser("dump-config", parents=[common], help="print the normalized configuration")
    return p


def _print_json(data) -> None:
    print(json.dumps(io.to_jsonable(data), indent=2))


def _cmd_solve(args, cfg) -> int:
    res = pipeline.run_pipeline(cfg, scheme=args.scheme, seed=args.seed, out_dir=args.out,
                                grid_step=args.grid_step, loading=args.loading,
                                heatmaps=args.out is not None, sensing=args.out is not None)
    for line in res.design_report.lines():
        print(line)
    _print_json({k: res.summary[k] for k in ("scheme", "mu", "user_rates_bps_hz", "max_pair_ratio")})
    return EXIT_OK if res.design_report.passed else EXIT_VERIFY


def _cmd_verify(args, cfg) -> int:
    solution = io.load_solution(args.solution)
    sc = Scenario(cfg)
    problem = sc.audit_problem(solution.scheme) if args.near_field else sc.problem(solution.scheme)
    report = optimizer.verify_solution(solution, problem)
    for line in report.lines():
        print(line)
    if args.out is not None:
        io.write_json(args.out / "verification.json", report.to_dict())
    return EXIT_OK if report.passed else EXIT_VERIFY


def _cmd_heatmap(args, cfg) -> int:
    res = pipeline.run_pipeline(cfg, scheme=args.scheme, seed=args.seed, grid_step=args.grid_step,
                                sensing=False)
    out = args.out or Path(".")
    for hm in res.heatmaps:
        path = io.write_grid_csv(out / f"sinr_user{hm.meta['user']}_{res.scheme}.csv", hm)
        print(f"user {hm.meta['user']}: peak {np.max(hm.values):.2f} dB -> {path}")
    return EXIT_OK


def _cmd_capon(args, cfg) -> int:
    res = pipeline.run_pipeline(cfg, scheme=args.scheme, seed=args.seed, grid_step=args.grid_step,
                                loading=args.loading, heatmaps=False)
    out = args.out or Path(".")
    io.write_grid_csv(out / f"capon_{res.scheme}.csv", res.capon_grid)
    io.write_grid_json(out / f"capon_{res.scheme}.json", res.capon_grid)
    _print_json(res.peaks)
    return EXIT_OK


def _cmd_compare(args, cfg) -> int:
    rows = pipeline.compare_schemes(cfg, seed=args.seed, out_dir=args.out, grid_step=args.grid_step,
                                    loading=args.loading)
    print(pipeline.format_table(rows))
    return EXIT_OK


def _cmd_dump(args, cfg) -> int:
    cfg = pipeline._apply_overrides(cfg, args.scheme, args.seed, args.grid_step, args.loading)
    text = dump_config(cfg)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "config.yaml").write_text(text)
    print(text, end="")
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "verify": _cmd_verify, "heatmap-sinr": _cmd_heatmap,
             "capon": _cmd_capon, "compare": _cmd_compare, "dump-config": _cmd_dump}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.filterwarnings("ignore", module="cvxpy")
    try:
        cfg = parse_config(args.config)
        for w in cfg.warnings:
            log.warning("%s", w)
        return _COMMANDS[args.command](args, cfg)
    except (VerificationError, ReconstructionError, DegenerateUserError, SignalGenerationError,
            np.linalg.LinAlgError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        # remaining ValueErrors come from argument or scenario validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
