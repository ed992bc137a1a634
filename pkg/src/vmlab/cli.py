"""Command-line surface.

Exit codes: 0 success, 2 configuration error, 3 divergence during a run,
4 assumption violation in strict mode.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import parse_config
from .errors import ConfigError, DivergenceError, SingularSystemError
from .experiments import (
    FIGURE_IDS,
    report_rates,
    run_figure,
    run_integrate,
    validate_config,
)
from .modes import classify_rates

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_ASSUMPTION = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vmlab",
        description="Variable-mass Newton-flow experiment harness")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate",
                       help="run schedule assumption checks only")
    v.add_argument("config")
    v.add_argument("--strict", action="store_true",
                   help="fail when any check does not hold")

    i = sub.add_parser("integrate", help="run the config's own sweep")
    i.add_argument("config")
    i.add_argument("--out", default=None, help="output directory override")

    f = sub.add_parser("figure", help="reproduce one figure's data")
    f.add_argument("id", choices=FIGURE_IDS)
    f.add_argument("config")
    f.add_argument("--out", default=None, help="output directory override")

    c = sub.add_parser("classify",
                       help="rate classification for the config's pairs")
    c.add_argument("config")

    r = sub.add_parser("rates", help="fitted decay slopes for a manifest")
    r.add_argument("manifest")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = parse_config(args.config)
            reports = validate_config(cfg)
            json.dump(reports, sys.stdout, indent=2, sort_keys=True)
            print()
            if args.strict and any(r["holds"] is False for r in reports):
                return EXIT_ASSUMPTION
            return EXIT_OK
        if args.command == "integrate":
            cfg = parse_config(args.config)
            manifest = run_integrate(cfg, out_dir=args.out)
            print(manifest.out_dir)
            return EXIT_DIVERGENCE if manifest.failures else EXIT_OK
        if args.command == "figure":
            cfg = parse_config(args.config)
            manifest = run_figure(cfg, args.id, out_dir=args.out)
            print(manifest.out_dir)
            return EXIT_DIVERGENCE if manifest.failures else EXIT_OK
        if args.command == "classify":
            cfg = parse_config(args.config)
            out = []
            for eps in cfg.eps_schedules:
                for alpha in cfg.alpha_schedules:
                    vs_cn, vs_lm = classify_rates(eps, alpha)
                    out.append({
                        "eps": eps.family, "alpha": alpha.family,
                        "vs_cn": vs_cn.verdict,
                        "vs_cn_rationale": vs_cn.rationale,
                        "vs_lm": vs_lm.verdict,
                        "vs_lm_rationale": vs_lm.rationale})
            json.dump(out, sys.stdout, indent=2, sort_keys=True)
            print()
            return EXIT_OK
        if args.command == "rates":
            report = report_rates(args.manifest)
            json.dump(report, sys.stdout, indent=2, sort_keys=True)
            print()
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, SingularSystemError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
