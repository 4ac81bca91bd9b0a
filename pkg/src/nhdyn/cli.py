"""Command-line front end: ``nhdyn {model-a,model-b,sweep,verify}``.

Exit status is 0 on success, 1 when a check fails, 2 for configuration
errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .errors import ConfigError, NumericalFailure
from .scenarios import load_config, run_scenario, write_csv
from .verify import verify_all

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_SCENARIO = {"model-a": "model_a", "model-b": "model_b", "sweep": "sweep", "verify": "verify"}


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file; flags override its values")
    p.add_argument("--dt", type=float, help="integration step (default 1e-3)")
    p.add_argument("--out", dest="out_path", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nhdyn", description="Non-Hermitian qubit dynamics: metric, no-jump and master-equation evolution.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, title in (("model-a", "H = ωσz with decay"), ("model-b", "H = ωσx with decay"), ("sweep", "momentum-parity sweep")):
        p = sub.add_parser(name, help=title)
        _common(p)
        p.add_argument("--omega", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--t-max", dest="t_max", type=float)
        p.add_argument("--initial", help="bloch:x,y,z or amp:re,im,re,im")
        p.add_argument("--methods", help="comma-separated subset of metric,me,nj,closed_form")
        p.add_argument("--sample-dt", dest="sample_dt", type=float, help="output spacing")
        if name == "sweep":
            p.add_argument("--k-grid", dest="k_grid", help="comma-separated momenta")
            p.add_argument("--t-start", dest="t_start", type=float)
            p.add_argument("--F", dest="F", type=float, help="sweep rate of Δ(t) = F t")
    p = sub.add_parser("verify", help="run the verification suite")
    _common(p)
    return parser


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _verify(args: argparse.Namespace) -> int:
    overrides = {"dt": args.dt, "out_path": args.out_path}
    cfg = load_config(args.config, overrides, scenario="verify")
    report = verify_all(dt=cfg.dt)
    _emit("\n".join(report.lines()) + "\n", cfg.out_path)
    return report.exit_status


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _verify(args)
        overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        cfg = load_config(args.config, overrides, scenario=_SCENARIO[args.command])
        result = run_scenario(cfg)
        _emit(write_csv(result.rows, result.metadata), cfg.out_path)
        return result.status
    except ConfigError as exc:
        print(f"nhdyn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"nhdyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"nhdyn: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
