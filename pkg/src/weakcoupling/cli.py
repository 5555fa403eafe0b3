"""Command-line front end.

    weakcoupling moments   --config run.cfg
    weakcoupling sweep     --config run.cfg --format csv --out rows.csv
    weakcoupling region    --config run.cfg
    weakcoupling calibrate --config run.cfg --seed 1

Exit codes: 0 success, 1 config error, 2 numerical failure in any row,
3 calibration inconsistency (a verdict contradicted by certified numerics).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import (ThresholdConstants, UnsupportedRegime, Verdict,
                          classify_real_coupling, classify_real_potential)
from .config import ConfigError, RunConfig, check_node_cap, load_config, parse_complex
from .potential import PotentialError, alpha_star, moments
from .region import rasterize_omega
from .sweep import SWEEP_COLUMNS, calibrate, make_context, row_inconsistent, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CALIBRATION = 0, 1, 2, 3


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.16e" % float(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_table(rows: list[dict], columns, fmt: str, out) -> None:
    if fmt == "json":
        json.dump([_jsonable({c: r.get(c) for c in columns}) for r in rows], out, indent=1)
        out.write("\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])


def write_report(report: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump(_jsonable(report), out, indent=1, sort_keys=True)
        out.write("\n")
        return
    flat = []
    for k, v in report.items():
        if isinstance(v, complex):
            flat += [(f"{k}_re", v.real), (f"{k}_im", v.imag)]
        elif isinstance(v, (list, tuple)):
            flat += [(f"{k}_{i}", x) for i, x in enumerate(v)]
        else:
            flat.append((k, v))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["key", "value"])
    for k, v in flat:
        writer.writerow([k, _fmt(v)])


def _context(cfg: RunConfig):
    V = cfg.build_potential()
    return make_context(V, cfg.order, cfg.panels, cfg.quad_order, cfg.R, cfg.Rprime,
                        cfg.epsilon, cfg.K)


def cmd_moments(cfg: RunConfig, args) -> tuple[dict, int]:
    V = cfg.build_potential()
    m = moments(V, V.rule(cfg.quad_order))
    if m.U == 0:
        raise UnsupportedRegime("U = 0 is outside the supported regime")
    report = {"dimension": V.dimension, "label": V.label, "U": m.U, "U1": m.U1,
              "rollnik": m.rollnik, "l1": m.l1, "quad_order": m.rule_order,
              "U1_error": m.error_estimates[0], "rollnik_error": m.error_estimates[1],
              "real_coupling_verdict": classify_real_coupling(m.U, m.U1, V.dimension).value}
    if V.meta.get("kind") == "v_alpha" and V.dimension == 2:
        re_part, im_part = V.meta["re"], V.meta["im"]
        rule = V.rule(cfg.quad_order)
        a_star = alpha_star(re_part, im_part, rule)
        alpha = V.meta["alpha"]
        report["alpha"] = alpha
        report["alpha_star"] = a_star
        if alpha > a_star:
            regime = Verdict.EXISTS.value
        elif alpha < a_star and alpha != 0:
            regime = Verdict.ABSENT.value
        else:
            regime = Verdict.UNDETERMINED.value
        report["alpha_classification"] = regime
    return report, EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> tuple[list, int]:
    if not cfg.betas:
        return [], EXIT_OK
    ctx = _context(cfg)
    rows = run_sweep(ctx, cfg.betas, args.workers)
    code = EXIT_OK
    if any(r["status"] == "error" or r["error"] for r in rows):
        code = EXIT_NUMERIC
    if any(row_inconsistent(r) for r in rows):
        code = EXIT_CALIBRATION
    return rows, code


def cmd_region(cfg: RunConfig, args) -> tuple[list, int]:
    reg = cfg.region
    mode = reg.get("mode", "omega")
    try:
        re_range = reg.get("re", [0.0, 1.0])
        im_range = reg.get("im", [-1.0, 1.0])
        n = reg.get("n", [41, 41])
        if mode == "omega":
            cells = rasterize_omega(cfg.dimension, re_range, im_range, n[0], n[1])
            return [{"re": a, "im": b, "label": "omega_in" if inside else "omega_out"}
                    for a, b, inside in cells], EXIT_OK
        if mode == "beta":
            if "U" in reg:
                U = parse_complex(reg["U"], "region.U", cfg.lines)
                U1 = parse_complex(reg.get("U1", 0.0), "region.U1", cfg.lines)
            else:
                V = cfg.build_potential()
                m = moments(V, V.rule(cfg.quad_order))
                U, U1 = m.U, m.U1
            eps = cfg.epsilon if cfg.epsilon is not None else float("inf")
            consts = ThresholdConstants(cfg.R, cfg.Rprime, eps if math.isfinite(eps) else 1e300)
            cells = rasterize_omega(1, re_range, im_range, n[0], n[1])
            rows = []
            for a, b, _ in cells:
                beta = complex(a, b)
                if beta == 0 or abs(beta) >= consts.epsilon:
                    label = "undetermined"
                else:
                    label = classify_real_potential(beta, U, U1, cfg.dimension,
                                                    consts).verdict.value.lower()
                rows.append({"re": a, "im": b, "label": label})
            return rows, EXIT_OK
    except (TypeError, IndexError) as exc:
        raise ConfigError(f"bad region grid: {exc}", None, "region") from None
    except ValueError as exc:
        if isinstance(exc, (ConfigError, UnsupportedRegime)):
            raise
        raise ConfigError(str(exc), None, "region") from None
    raise ConfigError(f"unknown region mode {mode!r} (omega or beta)",
                      cfg.lines.get("region.mode"), "region.mode")


def cmd_calibrate(cfg: RunConfig, args) -> tuple[list, int]:
    ctx = _context(cfg)
    res = calibrate(ctx, cfg.betas, seed=args.seed, workers=args.workers)
    rows = []
    for r in res["rows"]:
        beta = complex(r["beta_re"], r["beta_im"])
        rows.append({**r, "C_r": res["C_r"].get(beta), "agrees": not row_inconsistent(r)})
    code = EXIT_OK if res["consistent"] else EXIT_CALIBRATION
    if code == EXIT_OK and any(r["status"] == "error" for r in rows):
        code = EXIT_NUMERIC
    return rows, code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakcoupling",
                                description="Weakly coupled eigenvalues of -Delta - beta V")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("moments", "sweep", "region", "calibrate"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="run configuration file")
        s.add_argument("--out", help="output path (default: stdout or output.path)")
        s.add_argument("--format", choices=("csv", "json"), help="output format")
        s.add_argument("--nodes", type=int, help="Nystrom nodes per axis")
        s.add_argument("--quad-order", type=int, help="Gauss order for the moments")
        s.add_argument("--seed", type=int, default=0, help="seed for sampled diagnostics")
        s.add_argument("--workers", type=int, default=1, help="threads for sweep rows")
    return p


def _apply_overrides(cfg: RunConfig, args) -> None:
    if args.format:
        cfg.fmt = args.format
    if args.out:
        cfg.out = args.out
    if args.quad_order is not None:
        if args.quad_order < 1:
            raise ConfigError("--quad-order must be positive", None, "--quad-order")
        cfg.quad_order = args.quad_order
    if args.nodes is not None:
        if args.nodes < 1 or args.nodes % cfg.order:
            raise ConfigError(f"--nodes must be a positive multiple of the order {cfg.order}",
                              None, "--nodes")
        cfg.panels = args.nodes // cfg.order
        check_node_cap(cfg)


COMMANDS = {"moments": cmd_moments, "sweep": cmd_sweep, "region": cmd_region,
            "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = load_config(fh.read())
        _apply_overrides(cfg, args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result, code = COMMANDS[args.command](cfg, args)
    except (ConfigError, PotentialError, UnsupportedRegime) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    buf = io.StringIO()
    if isinstance(result, dict):
        write_report(result, cfg.fmt, buf)
    else:
        if args.command == "calibrate":
            columns = SWEEP_COLUMNS + ("C_r", "agrees")
        elif args.command == "region":
            columns = ("re", "im", "label")
        else:
            columns = SWEEP_COLUMNS
        write_table(result, columns, cfg.fmt, buf)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
