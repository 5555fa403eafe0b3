"""Weak-coupling asymptotics: the quadratic ``curly_U``, existence/absence
classifiers and the leading-order eigenvalue predictions.

The inequalities that decide existence or absence do not cover the whole
coupling plane, so every classifier is three-valued.  Strict inequalities are
only trusted outside a relative band of ``BOUNDARY_BAND``; inside it the
verdict is ``UNDETERMINED``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .special import EULER_GAMMA, LOG2

BOUNDARY_BAND = 1e-12
D2_SHIFT = (LOG2 - EULER_GAMMA) / (2.0 * math.pi)


class Verdict(str, Enum):
    EXISTS = "Exists"
    ABSENT = "Absent"
    UNDETERMINED = "Undetermined"


class RuleUsed(str, Enum):
    CURLY_U = "curly_u"
    REAL_POTENTIAL = "real_potential"
    REAL_COUPLING = "real_coupling"
    THETA = "theta"


class UnsupportedRegime(ValueError):
    """Inputs outside the regime where the classifiers apply (e.g. U = 0)."""


@dataclass(frozen=True)
class ThresholdConstants:
    R: float = 1.0
    Rprime: float = 1.0
    epsilon: float = 0.2

    def __post_init__(self):
        for name in ("R", "Rprime", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    @classmethod
    def for_moment(cls, U: complex, R: float = 1.0, Rprime: float = 1.0) -> "ThresholdConstants":
        """Default smallness radius ``0.2 / |U|`` (``0.2`` when ``|U| <= 1``)."""
        aU = abs(U)
        return cls(R, Rprime, 0.2 / aU if aU > 1.0 else 0.2)


@dataclass(frozen=True)
class CouplingAssessment:
    beta: complex
    curlyU: complex
    verdict: Verdict
    rule_used: RuleUsed
    lambda_predicted: complex | None = None


def _gt(a: float, b: float) -> bool:
    """``a > b`` outside the relative boundary band."""
    return a - b > BOUNDARY_BAND * max(abs(a), abs(b))


def _lt(a: float, b: float) -> bool:
    return _gt(b, a)


def _check_dim(d: int) -> None:
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d!r}")


def second_order_coefficient(U: complex, U1: complex, d: int) -> complex:
    """Coefficient of ``-beta^2`` in ``curly_U``."""
    _check_dim(d)
    return complex(U1) if d == 1 else complex(U1) - D2_SHIFT * complex(U) ** 2


def curly_U(beta: complex, U: complex, U1: complex, d: int) -> complex:
    beta = complex(beta)
    return complex(U) * beta - second_order_coefficient(U, U1, d) * beta * beta


def _check_regime(beta: complex, U: complex, constants: ThresholdConstants) -> None:
    if complex(U) == 0:
        raise UnsupportedRegime("U = 0 is outside the supported regime")
    if abs(beta) >= constants.epsilon:
        raise UnsupportedRegime(
            f"|beta| = {abs(beta):.6g} is not below epsilon = {constants.epsilon:.6g}")


def _assessment(beta, cU, verdict, rule, U, U1, d) -> CouplingAssessment:
    lam = predict_eigenvalue(beta, U, U1, d) if verdict is Verdict.EXISTS else None
    return CouplingAssessment(complex(beta), complex(cU), verdict, rule, lam)


def verdict_from_curly_U(cU: complex, d: int, R: float) -> Verdict:
    """Existence/absence test applied to a value of ``curly_U``."""
    re, im = cU.real, cU.imag
    if d == 1:
        if _gt(re, R * abs(im) ** 3):
            return Verdict.EXISTS
        if _lt(re, -R * abs(im) ** 3):
            return Verdict.ABSENT
        return Verdict.UNDETERMINED
    root = 2.0 * math.sqrt(abs(im))
    if _gt(re, root * (1.0 + R * abs(re))):
        return Verdict.EXISTS
    if _lt(re, root * (1.0 - R * abs(re))):
        return Verdict.ABSENT
    return Verdict.UNDETERMINED


def classify_general(beta, U, U1, d: int,
                     constants: ThresholdConstants | None = None) -> CouplingAssessment:
    """Classify a coupling through the position of ``curly_U(beta)``."""
    _check_dim(d)
    constants = constants or ThresholdConstants.for_moment(U)
    _check_regime(complex(beta), U, constants)
    cU = curly_U(beta, U, U1, d)
    verdict = verdict_from_curly_U(cU, d, constants.R)
    return _assessment(beta, cU, verdict, RuleUsed.CURLY_U, U, U1, d)


def classify_real_potential(beta, U, U1, d: int,
                            constants: ThresholdConstants | None = None) -> CouplingAssessment:
    """Classify a complex coupling for a real potential (``U > 0``, ``U1`` real)."""
    _check_dim(d)
    U, U1 = complex(U), complex(U1)
    if U.imag != 0 or U1.imag != 0:
        raise ValueError("real-potential classifier needs real U and U1")
    if not U.real > 0:
        raise UnsupportedRegime("real-potential classifier needs U > 0")
    constants = constants or ThresholdConstants.for_moment(U)
    beta = complex(beta)
    _check_regime(beta, U, constants)
    u, u1, Rp = U.real, U1.real, constants.Rprime
    br, bi = beta.real, beta.imag
    if d == 1:
        hi = (-u1 / u + Rp * abs(bi)) * bi * bi
        lo = (-u1 / u - Rp * abs(bi)) * bi * bi
        exists, absent = _gt(br, hi), _lt(br, lo)
    else:
        s = 2.0 / math.sqrt(u) * math.sqrt(abs(bi))
        exists = _gt(br, s * (1.0 + Rp * abs(br)))
        absent = _lt(br, s * (1.0 - Rp * abs(br)))
    verdict = Verdict.EXISTS if exists else Verdict.ABSENT if absent else Verdict.UNDETERMINED
    return _assessment(beta, curly_U(beta, U, U1, d), verdict, RuleUsed.REAL_POTENTIAL,
                       U, U1, d)


def classify_real_coupling(U, U1, d: int) -> Verdict:
    """Verdict for small real ``beta > 0`` from the moments alone."""
    _check_dim(d)
    U, U1 = complex(U), complex(U1)
    if d == 1:
        if U.real > 0 or (U.real == 0 and U1.real < 0):
            return Verdict.EXISTS
        if U.real < 0 or (U.real == 0 and U1.real > 0):
            return Verdict.ABSENT
        return Verdict.UNDETERMINED
    threshold = 2.0 * math.sqrt(abs(U1.imag))
    if U.imag == 0 and _gt(U.real, threshold):
        return Verdict.EXISTS
    if U.imag != 0 or _lt(U.real, threshold):
        return Verdict.ABSENT
    return Verdict.UNDETERMINED


def classify_theta(theta: float, d: int) -> Verdict:
    """Limit verdict for ``beta = e^{i theta} eps``, ``eps -> 0+``, non-negative V.

    ``theta`` is reduced to ``(-pi, pi]`` first.
    """
    _check_dim(d)
    t = math.remainder(float(theta), 2.0 * math.pi)
    if t == -math.pi:
        t = math.pi
    if d == 1:
        return Verdict.EXISTS if abs(t) <= math.pi / 2 else Verdict.ABSENT
    return Verdict.EXISTS if t == 0.0 else Verdict.ABSENT


def predict_eigenvalue(beta, U, U1, d: int) -> complex:
    """Leading-order eigenvalue from the weak-coupling expansion."""
    _check_dim(d)
    beta, U, U1 = complex(beta), complex(U), complex(U1)
    if U == 0 or beta == 0:
        raise UnsupportedRegime("prediction needs U != 0 and beta != 0")
    if d == 1:
        root = 0.5 * U * beta - 0.5 * U1 * beta * beta
        return -root * root
    expo = -4.0 * math.pi / (U * beta) - 4.0 * math.pi * U1 / (U * U) \
        + math.log(4.0) - 2.0 * EULER_GAMMA
    return -cmath.exp(expo)


def davies_enclosure_check(lam: complex, V, rule=None) -> bool:
    """True iff ``|lambda|^{1/2} <= ||V||_1 / 2`` (d=1 only)."""
    from .potential import l1_norm

    if V.dimension != 1:
        raise UnsupportedRegime("the enclosure check is implemented for d=1 only")
    norm = l1_norm(V, rule if rule is not None else V.rule())
    return bool(math.sqrt(abs(complex(lam))) <= 0.5 * norm)


def theta_coupling(theta: float, eps: float) -> complex:
    return eps * complex(np.cos(theta), np.sin(theta))
