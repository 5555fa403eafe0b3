"""Compactly supported potentials and their moment functionals.

Every potential lives on an axis-aligned support box and is treated as zero
outside it.  Built-in potentials are bounded, so the ``L^{1+eta}`` condition in
2D holds for every ``eta`` and is not checked separately.

Normalisations of the moment kernel ``mu``:

* d=1: ``mu(x) = |x| / 2``
* d=2: ``mu(x) = log|x| / (2 pi)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import (Box, QuadratureRule, as_box, box_contains, gauss_rule,
                         singular_double_integral)

TWO_PI = 2.0 * np.pi


class PotentialError(ValueError):
    """Invalid potential data or a violated moment precondition."""


@dataclass(frozen=True)
class Potential:
    dimension: int
    func: Callable[[np.ndarray], np.ndarray]
    box: Box
    label: str = ""
    breaks: tuple[tuple[float, ...], ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise PotentialError(f"dimension must be 1 or 2, got {self.dimension}")
        box = as_box(self.box)
        if len(box) != self.dimension:
            raise PotentialError("support box arity does not match dimension")
        object.__setattr__(self, "box", box)
        breaks = self.breaks or ((),) * self.dimension
        if len(breaks) != self.dimension:
            raise PotentialError("breaks must list one tuple per axis")
        object.__setattr__(self, "breaks", tuple(tuple(sorted(b)) for b in breaks))

    def evaluate(self, points) -> np.ndarray:
        """Complex values at ``points`` (shape ``(n, d)``, or ``(n,)`` in 1D)."""
        pts = np.asarray(points, dtype=float)
        if self.dimension == 1 and pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise PotentialError(
                f"expected points of shape (n, {self.dimension}), got {pts.shape}")
        inside = np.ones(pts.shape[0], dtype=bool)
        for k, (lo, hi) in enumerate(self.box):
            inside &= (pts[:, k] >= lo) & (pts[:, k] <= hi)
        out = np.zeros(pts.shape[0], dtype=complex)
        if np.any(inside):
            vals = np.asarray(self.func(pts[inside]), dtype=complex)
            out[inside] = np.broadcast_to(vals, (int(inside.sum()),))
        if not np.all(np.isfinite(out)):
            raise PotentialError(f"potential {self.label!r} produced non-finite values")
        return out

    __call__ = evaluate

    def rule(self, order: int = 16, panels: int = 1) -> QuadratureRule:
        """Gauss rule on the support box, cut at the potential's breakpoints."""
        return gauss_rule(order, self.box, panels, self.breaks)

    def scaled(self, c: complex) -> "Potential":
        f = self.func
        return Potential(self.dimension, lambda p: c * np.asarray(f(p), dtype=complex),
                         self.box, f"{c}*{self.label}", self.breaks, dict(self.meta))

    def modulus(self) -> "Potential":
        f = self.func
        return Potential(self.dimension, lambda p: np.abs(np.asarray(f(p), dtype=complex)),
                         self.box, f"|{self.label}|", self.breaks, dict(self.meta))


# ---------------------------------------------------------------- catalog

def box_1d(a: float = 0.0, b: float = 1.0, height: complex = 1.0) -> Potential:
    h = complex(height)
    return Potential(1, lambda p: np.full(p.shape[0], h), ((a, b),), f"box_1d[{a},{b}]",
                     meta={"kind": "box", "height": h})


def gaussian_1d(amplitude: complex = 1.0, sigma: float = 1.0, center: float = 0.0,
                cutoff: float = 8.0) -> Potential:
    """``amplitude * exp(-(x-center)^2 / (2 sigma^2))`` truncated at ``cutoff`` sigma.

    The discarded tail mass is ``amplitude * sigma * sqrt(2 pi) * erfc(cutoff / sqrt 2)``,
    about 1e-15 relative at the default cutoff.
    """
    if sigma <= 0:
        raise PotentialError("sigma must be positive")
    amp = complex(amplitude)
    box = ((center - cutoff * sigma, center + cutoff * sigma),)
    return Potential(1, lambda p: amp * np.exp(-0.5 * ((p[:, 0] - center) / sigma) ** 2),
                     box, f"gaussian_1d[sigma={sigma}]", meta={"kind": "gaussian"})


def complex_box_1d(pieces: Sequence[tuple[float, float, complex]]) -> Potential:
    """Sum of constant pieces ``value * 1_[a, b]``; pieces may overlap."""
    if not pieces:
        raise PotentialError("complex_box_1d needs at least one piece")
    pieces = [(float(a), float(b), complex(v)) for a, b, v in pieces]
    for a, b, _ in pieces:
        if not b > a:
            raise PotentialError(f"degenerate piece [{a}, {b}]")
    lo = min(a for a, _, _ in pieces)
    hi = max(b for _, b, _ in pieces)
    cuts = sorted({x for a, b, _ in pieces for x in (a, b)} - {lo, hi})

    def func(p):
        x = p[:, 0]
        out = np.zeros(x.shape[0], dtype=complex)
        for a, b, v in pieces:
            out += np.where((x >= a) & (x <= b), v, 0.0)
        return out

    return Potential(1, func, ((lo, hi),), "complex_box_1d", (tuple(cuts),),
                     meta={"kind": "complex_box", "pieces": pieces})


def box_2d(box=((0.0, 1.0), (0.0, 1.0)), height: complex = 1.0) -> Potential:
    h = complex(height)
    return Potential(2, lambda p: np.full(p.shape[0], h), box, "box_2d",
                     meta={"kind": "box", "height": h})


def gaussian_2d(amplitude: complex = 1.0, sigma: float = 1.0, center=(0.0, 0.0),
                cutoff: float = 8.0, normalized: bool = False) -> Potential:
    """Isotropic Gaussian truncated to the square of half-width ``cutoff * sigma``.

    With ``normalized=True`` the amplitude is divided by ``2 pi sigma^2`` so that
    the untruncated integral equals ``amplitude``.
    """
    if sigma <= 0:
        raise PotentialError("sigma must be positive")
    amp = complex(amplitude) / (TWO_PI * sigma ** 2) if normalized else complex(amplitude)
    c0, c1 = center
    box = ((c0 - cutoff * sigma, c0 + cutoff * sigma), (c1 - cutoff * sigma, c1 + cutoff * sigma))

    def func(p):
        r2 = (p[:, 0] - c0) ** 2 + (p[:, 1] - c1) ** 2
        return amp * np.exp(-0.5 * r2 / sigma ** 2)

    return Potential(2, func, box, f"gaussian_2d[sigma={sigma}]", meta={"kind": "gaussian"})


def grid_potential(values, box) -> Potential:
    """Piecewise-constant potential on a uniform grid of cells over ``box``."""
    vals = np.asarray(values, dtype=complex)
    box = as_box(box)
    if vals.ndim != len(box) or vals.size == 0:
        raise PotentialError("grid values must have one axis per box dimension")
    if not np.all(np.isfinite(vals)):
        raise PotentialError("grid values must be finite")
    edges = [np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(box, vals.shape)]
    breaks = tuple(tuple(e[1:-1]) for e in edges)

    def func(p):
        idx = tuple(np.clip(np.searchsorted(e, p[:, k], side="right") - 1, 0, len(e) - 2)
                    for k, e in enumerate(edges))
        return vals[idx]

    return Potential(len(box), func, box, "grid", breaks, meta={"kind": "grid"})


def v_alpha(re_part: Potential, im_part: Potential, alpha: float) -> Potential:
    """``alpha * ReV + i * ImV`` for two real-valued potentials of the same dimension."""
    if re_part.dimension != im_part.dimension:
        raise PotentialError("real and imaginary parts must share the dimension")
    d = re_part.dimension
    box = tuple((min(a[0], b[0]), max(a[1], b[1])) for a, b in zip(re_part.box, im_part.box))
    breaks = tuple(
        tuple(sorted(set(br) | set(bi) | {x for x in (*ra, *ia) if lo < x < hi}))
        for br, bi, ra, ia, (lo, hi) in zip(re_part.breaks, im_part.breaks,
                                           re_part.box, im_part.box, box))
    a = float(alpha)

    def func(p):
        return a * re_part.evaluate(p).real + 1j * im_part.evaluate(p).real

    return Potential(d, func, box, f"v_alpha[{a}]", breaks,
                     meta={"kind": "v_alpha", "alpha": a, "re": re_part, "im": im_part})


# ---------------------------------------------------------------- moments

def _check_rule(V: Potential, rule: QuadratureRule) -> None:
    if rule.dim != V.dimension or not box_contains(rule.box, V.box):
        raise PotentialError(
            f"quadrature box {rule.box} does not cover support box {V.box}")


def compute_U(V: Potential, rule: QuadratureRule) -> complex:
    """``int V``."""
    _check_rule(V, rule)
    return rule.integrate(V.evaluate)


def l1_norm(V: Potential, rule: QuadratureRule) -> float:
    _check_rule(V, rule)
    return rule.integrate(lambda p: np.abs(V.evaluate(p))).real


def _u1_with_error(V: Potential, rule: QuadratureRule) -> tuple[complex, float]:
    _check_rule(V, rule)
    if V.dimension == 1:
        val, err = singular_double_integral(V.evaluate, V.evaluate, "abs", rule)
        return 0.5 * val, 0.5 * err
    val, err = singular_double_integral(V.evaluate, V.evaluate, "log", rule)
    return val / TWO_PI, err / TWO_PI


def _rollnik_with_error(V: Potential, rule: QuadratureRule) -> tuple[float, float]:
    _check_rule(V, rule)
    absV = lambda p: np.abs(V.evaluate(p))
    if V.dimension == 1:
        val, err = singular_double_integral(absV, absV, "abs2", rule)
        return 0.25 * val.real, 0.25 * err
    val, err = singular_double_integral(absV, absV, "log2", rule)
    return val.real / TWO_PI ** 2, err / TWO_PI ** 2


def compute_U1(V: Potential, rule: QuadratureRule) -> complex:
    """``int int V(x) mu(x - y) V(y)``."""
    return _u1_with_error(V, rule)[0]


def rollnik_value(V: Potential, rule: QuadratureRule) -> float:
    """``int int |V(x)| |mu(x - y)|^2 |V(y)|``."""
    return _rollnik_with_error(V, rule)[0]


@dataclass(frozen=True)
class Moments:
    U: complex
    U1: complex
    rollnik: float
    rule_order: int
    error_estimates: tuple[float, float]
    l1: float = float("nan")


def moments(V: Potential, rule: QuadratureRule | None = None) -> Moments:
    rule = rule if rule is not None else V.rule()
    U = compute_U(V, rule)
    U1, e1 = _u1_with_error(V, rule)
    rn, e2 = _rollnik_with_error(V, rule)
    return Moments(U, U1, rn, rule.order, (e1, e2), l1_norm(V, rule))


def alpha_star(re_part: Potential, im_part: Potential, rule: QuadratureRule,
               tol: float = 1e-10) -> float:
    """Threshold ``4 / (pi (Re U)^2) * |int int ReV(x) log|x-y| ImV(y)|`` in 2D.

    Requires ``int ImV = 0`` (to ``tol * ||ImV||_1``) and ``int ReV > 0``.
    """
    if re_part.dimension != 2 or im_part.dimension != 2:
        raise PotentialError("alpha_star is defined for d=2 only")
    reV = lambda p: re_part.evaluate(p).real.astype(complex)
    imV = lambda p: im_part.evaluate(p).real.astype(complex)
    _check_rule(re_part, rule)
    _check_rule(im_part, rule)
    int_im = rule.integrate(imV).real
    norm_im = rule.integrate(lambda p: np.abs(imV(p))).real
    int_re = rule.integrate(reV).real
    if abs(int_im) > tol * norm_im:
        raise PotentialError(
            f"alpha_star needs int ImV = 0; measured {int_im:.3e} (||ImV||_1 = {norm_im:.3e})")
    if not int_re > 0:
        raise PotentialError(f"alpha_star needs int ReV > 0; measured {int_re:.3e}")
    cross, _ = singular_double_integral(reV, imV, "log", rule)
    return 4.0 / (np.pi * int_re ** 2) * abs(cross.real)
