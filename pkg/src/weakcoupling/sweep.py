"""Coupling sweeps and calibration runs comparing asymptotics with numerics."""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import (ThresholdConstants, UnsupportedRegime, Verdict, classify_general,
                          davies_enclosure_check)
from .birman_schwinger import BSDiscretization, find_root, r_beta
from .potential import Moments, Potential, moments
from .region import in_omega
from .special import EULER_GAMMA

SWEEP_COLUMNS = (
    "index", "beta_re", "beta_im", "curlyU_re", "curlyU_im", "verdict",
    "lambda_pred_re", "lambda_pred_im", "status", "lambda_num_re", "lambda_num_im",
    "lambda_over_beta2", "residual", "winding", "bs_eigen_gap", "davies",
    "asym_error", "localization_constant", "error",
)


@dataclass
class SweepContext:
    potential: Potential
    disc: BSDiscretization
    moments: Moments
    constants: ThresholdConstants
    K: float = 1.0


def make_context(V: Potential, order: int, panels: int, quad_order: int = 16,
                 R: float = 1.0, Rprime: float = 1.0, epsilon: float | None = None,
                 K: float = 1.0) -> SweepContext:
    disc = BSDiscretization.from_potential(V, order, panels)
    m = moments(V, V.rule(quad_order))
    if m.U == 0:
        raise UnsupportedRegime("U = 0 is outside the supported regime")
    base = ThresholdConstants.for_moment(m.U, R, Rprime)
    consts = ThresholdConstants(R, Rprime, epsilon) if epsilon is not None else base
    return SweepContext(V, disc, m, consts, K)


def asymptotic_error(lam: complex, beta: complex, U: complex, U1: complex, d: int) -> float:
    """Distance of a numeric eigenvalue from the two-term expansion."""
    if d == 1:
        predicted = 0.5 * U * beta - 0.5 * U1 * beta * beta
        return abs(cmath.sqrt(-lam) - predicted)
    predicted = (-4.0 * math.pi / (U * beta) - 4.0 * math.pi * U1 / (U * U)
                 + math.log(4.0) - 2.0 * EULER_GAMMA)
    return abs(cmath.log(-lam) - predicted)


def sweep_row(ctx: SweepContext, index: int, beta: complex) -> dict:
    beta = complex(beta)
    d = ctx.disc.d
    U, U1 = ctx.moments.U, ctx.moments.U1
    row = {c: None for c in SWEEP_COLUMNS}
    row.update(index=index, beta_re=beta.real, beta_im=beta.imag, error="")
    try:
        a = classify_general(beta, U, U1, d, ctx.constants)
    except UnsupportedRegime as exc:
        row.update(status="error", error=f"E_UNSUPPORTED: {exc}")
        return row
    row.update(curlyU_re=a.curlyU.real, curlyU_im=a.curlyU.imag, verdict=a.verdict.value)
    if a.lambda_predicted is not None:
        row.update(lambda_pred_re=a.lambda_predicted.real, lambda_pred_im=a.lambda_predicted.imag)
    try:
        out = find_root(beta, ctx.disc, ctx.constants, K=ctx.K)
    except (ArithmeticError, ValueError) as exc:
        row.update(status="error", error=f"E_NUMERIC: {type(exc).__name__}: {exc}")
        return row
    row["status"] = out.status
    if out.root is not None:
        r = out.root
        row.update(lambda_num_re=r.lam.real, lambda_num_im=r.lam.imag,
                   lambda_over_beta2=abs(r.lam) / abs(beta) ** 2, residual=r.residual,
                   winding=r.winding, bs_eigen_gap=r.bs_eigen_gap,
                   asym_error=asymptotic_error(r.lam, beta, U, U1, d),
                   localization_constant=r.localization_constant)
        if d == 1:
            row["davies"] = davies_enclosure_check(r.lam, ctx.potential)
    if a.verdict is Verdict.EXISTS and out.status != "found":
        row["error"] = f"E_NO_ROOT: {out.status} ({out.reason})"
    return row


def run_sweep(ctx: SweepContext, betas, workers: int = 1) -> list[dict]:
    """One row per coupling, in input order regardless of completion order."""
    betas = list(betas)
    if workers <= 1 or len(betas) <= 1:
        return [sweep_row(ctx, i, b) for i, b in enumerate(betas)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ib: sweep_row(ctx, *ib), enumerate(betas)))


def row_inconsistent(row: dict) -> bool:
    """Verdict contradicted by certified numerics."""
    v, s = row.get("verdict"), row.get("status")
    return (v == Verdict.EXISTS.value and s == "absent") or \
        (v == Verdict.ABSENT.value and s == "found")


def sample_omega(d: int, n: int, rng: np.random.Generator, min_modulus: float = 1e-2):
    """Uniform-ish samples of Omega (rejection from its bounding box)."""
    out = []
    hi = 1.0 if d == 1 else 2.0 * math.pi / math.log(2.0)
    while len(out) < n:
        w = complex(rng.uniform(0.0, hi), rng.uniform(-hi, hi))
        if in_omega(w, d) and abs(w) >= min_modulus:
            out.append(w)
    return out


def measure_C_r(disc: BSDiscretization, beta: complex, ws) -> float:
    """``max |r_beta(w)| / (|beta|^2 max(|beta|, |w|))`` over the sample points."""
    b = abs(beta)
    return max(abs(r_beta(w, beta, disc)) / (b * b * max(b, abs(w))) for w in ws)


def calibrate(ctx: SweepContext, betas, seed: int = 0, r_samples: int = 64,
              workers: int = 1) -> dict:
    """Check verdicts against certified numerics and measure the diagnostic constants."""
    rows = run_sweep(ctx, betas, workers)
    rng = np.random.default_rng(seed)
    ws = sample_omega(ctx.disc.d, r_samples, rng)
    c_r = {}
    for b in betas:
        try:
            c_r[complex(b)] = measure_C_r(ctx.disc, b, ws)
        except (ArithmeticError, ValueError):
            c_r[complex(b)] = float("nan")
    loc = [r["localization_constant"] for r in rows if r["status"] == "found"]
    c_u = max(loc) if loc else float("nan")
    inconsistent = [r["index"] for r in rows if row_inconsistent(r)]
    if loc and c_u > ctx.K:
        inconsistent.append("K")
    return {
        "rows": rows,
        "C_r": c_r,
        "C_curlyU_max": c_u,
        "K": ctx.K,
        "inconsistent": inconsistent,
        "consistent": not inconsistent,
    }
