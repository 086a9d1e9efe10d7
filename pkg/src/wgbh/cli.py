"""Command line entry point: ``wgbh convergence | solve | check``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .checks import run_quick_suite
from .config import ConfigError, RunConfig, load_config
from .mesh import MeshError, load_mesh
from .problems import PROBLEMS, builtin_problem
from .solver import SolverError
from .study import StudyConfig, emit, run_convergence, solve_level

REPORT_FIELDS = ("grad_norm", "l2_0", "edge", "l2_0h", "h1_semi", "triple_bar")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML file with [problem], [discretization], [solver], [output]")
    p.add_argument("--problem", dest="name", choices=sorted(PROBLEMS))
    p.add_argument("--j", type=int, choices=(0, 1))
    p.add_argument("--solver", dest="method", choices=("direct", "minres"))
    p.add_argument("--format", choices=("csv", "markdown"))
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wgbh", description="Weak Galerkin biharmonic solver and convergence studies")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="run a refinement study and print the error table")
    _common(conv)
    conv.add_argument("--levels", type=int)
    conv.add_argument("--n0", type=int)
    conv.add_argument("--jitter", type=float)
    conv.add_argument("--seed", type=int)
    conv.add_argument("--projection-errors", dest="projection_errors", action="store_const", const=True,
                      help="measure errors against Ritz/Neumann projections instead of Q_h")

    solve = sub.add_parser("solve", help="solve on a mesh read from node/ele files and report error norms")
    _common(solve)
    solve.add_argument("--mesh", nargs=2, metavar=("NODE", "ELE"), required=True, type=Path)

    sub.add_parser("check", help="run the quick identity suite (exit status 1 on failure)")
    return parser


def _config(args) -> RunConfig:
    text = args.config.read_text() if args.config else None
    keys = ("name", "j", "levels", "n0", "jitter", "seed", "method", "format", "out", "projection_errors")
    return load_config(text, {k: getattr(args, k, None) for k in keys})


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6e}"


def solve_report(cfg: RunConfig, node_text: str, ele_text: str) -> str:
    mesh = load_mesh(node_text, ele_text)
    res = solve_level(mesh, builtin_problem(cfg.name), cfg.j, cfg.method, cfg.projection_errors)
    rows = [("u", res.u_report), ("w", res.w_report)]
    header = ["field", "h", *REPORT_FIELDS]
    body = [[name, _fmt(mesh.h), *(_fmt(getattr(r, f)) for f in REPORT_FIELDS)] for name, r in rows]
    if cfg.format == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(b) + " |" for b in body]
    else:
        lines = [",".join(header)] + [",".join(b) for b in body]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "check":
        return 0 if run_quick_suite(stream=sys.stdout) else 1
    try:
        cfg = _config(args)
        if args.command == "convergence":
            study = StudyConfig(n0=cfg.n0, jitter=cfg.jitter, seed=cfg.seed, j=cfg.j,
                                solver=cfg.method, projection_errors=cfg.projection_errors)
            table = run_convergence(builtin_problem(cfg.name), cfg.levels, study)
            _write(emit(table, cfg.format), cfg.out)
        else:
            node, ele = args.mesh
            _write(solve_report(cfg, node.read_text(), ele.read_text()), cfg.out)
    except (ConfigError, MeshError, SolverError, ValueError, OSError) as exc:
        print(f"wgbh: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
