"""Command line: ``qgevrey validate|solve|asym|selftest``.

Exit codes: 0 success, 1 failed checks or runtime error, 2 usage or
malformed input, 3 missing solve artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import builtin_config, load_config
from .errors import ArtifactError, DomainError, QGevreyError

OUT_ENV = "QGEVREY_OUT"
DEFAULT_OUT = "qgevrey-out"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MISSING = 0, 1, 2, 3


def output_dir(arg: str | None) -> Path:
    """``--out`` first, then ``$QGEVREY_OUT``, then ``./qgevrey-out``."""
    return Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def read_config(spec: str):
    """A config file path, or the name of a bundled config such as ``toy1``."""
    path = Path(spec)
    if path.exists():
        return load_config(path)
    if path.suffix == "" and os.sep not in spec:
        try:
            return builtin_config(spec)
        except FileNotFoundError:
            pass
    raise DomainError(f"config not found: {spec}")


def complex_list(text: str) -> list:
    """Comma-separated numbers; complex values use Python syntax, e.g. ``0.05+0.01j``."""
    try:
        return [complex(v.strip().replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qgevrey", description="Borel-Laplace lab for q-difference-differential problems.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check hypotheses and geometry admissibility")
    p.add_argument("config")

    p = sub.add_parser("solve", help="solve Borel families and assemble sectorial solutions")
    p.add_argument("config")
    p.add_argument("--N", type=int, default=None, help="truncation order in z")
    p.add_argument("--eps-grid", type=complex_list, default=None, help="eps values relative to each sector bisector")
    p.add_argument("--t-grid", type=complex_list, default=None, help="t values")
    p.add_argument("--variant", choices=("eps", "t"), default="eps")
    p.add_argument("--out", default=None)

    p = sub.add_parser("asym", help="cocycle flatness, growth classification and remainder bounds")
    p.add_argument("config")
    p.add_argument("--variant", choices=("eps", "t"), default="eps")
    p.add_argument("--norm", choices=("q-relative", "sup"), default="q-relative")
    p.add_argument("--out", default=None)
    p.add_argument("--solve-inline", action="store_true", help="run 'solve' first when its artifacts are missing")

    p = sub.add_parser("selftest", help="Laplace identities and synthetic fit batteries")
    p.add_argument("--quick", action="store_true", help="5 identity draws per k instead of 20")
    p.add_argument("--seed", type=int, default=0)
    return ap


def cmd_validate(args) -> int:
    from .pipeline import dumps, run_validate

    rep = run_validate(read_config(args.config))
    sys.stdout.write(dumps(rep))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_solve(args) -> int:
    from .pipeline import run_solve, solve_paths

    cfg = read_config(args.config)
    out = output_dir(args.out)
    rep = run_solve(cfg, out, variant=args.variant, N=args.N, eps_grid=args.eps_grid, t_grid=args.t_grid)
    for path in solve_paths(out, args.variant).values():
        print(path)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_asym(args) -> int:
    from .pipeline import asym_paths, run_asym

    cfg = read_config(args.config)
    out = output_dir(args.out)
    run_asym(cfg, out, variant=args.variant, norm_variant=args.norm, solve_inline=args.solve_inline)
    for path in asym_paths(out, args.variant, args.norm).values():
        print(path)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .pipeline import dumps
    from .selftest import run_selftest

    rep = run_selftest(quick=args.quick, seed=args.seed)
    sys.stdout.write(dumps(rep))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "asym": cmd_asym, "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QGevreyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
