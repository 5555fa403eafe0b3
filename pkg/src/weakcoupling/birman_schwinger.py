"""Birman-Schwinger verification engine.

The resolvent kernel ``G`` of ``-Delta + z^2`` is split as ``G = g(z) + (G - g)``.
After sandwiching between ``|V|^{1/2}`` and ``V^{1/2}`` the first part is the
rank-one operator ``L(z)`` and the second is ``M(z)``, which stays bounded as
``z -> 0``.  Eigenvalues ``lambda = -z^2`` of ``-Delta - beta V`` correspond to
zeros of

    f_beta(z) = 1 - g(z) [U beta + beta <(1 - beta M)^{-1} beta M u, v>],

and, with ``z = phi(w)``, to zeros of ``F(w) = f_beta(phi(w))`` in Omega.

``M(z)`` is discretised by Nystrom's method.  The kink (d=1) or logarithmic
singularity (d=2) of ``G - g`` on the diagonal is handled by singularity
subtraction against the closed-form box integral of the kernel, so smooth
potentials keep high-order convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .asymptotics import D2_SHIFT, ThresholdConstants, UnsupportedRegime, second_order_coefficient
from .potential import Potential
from .quadrature import Box, as_box, log_box_integral
from .region import DiscLocation, OutsideOmega, disc_in_omega, g_d, in_omega, phi
from .special import EULER_GAMMA, LOG2, bessel_k0, k0_log_regular, principal_log

TWO_PI = 2.0 * math.pi
DENSE_CAP = 1600
COND_LIMIT = 1e8
NEAR_ZERO = 1e-10
DEFAULT_LOCALIZATION_K = 1.0


class NearSingularError(ArithmeticError):
    """``1 - beta M(z)`` is too ill-conditioned to trust ``f_beta``."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class RootFindingError(ArithmeticError):
    """Newton iteration failed; ``trace`` holds the visited iterates."""

    def __init__(self, message: str, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class ContourError(ArithmeticError):
    """The function nearly vanishes on a winding contour."""


# ---------------------------------------------------------------- kernels

def _dist(x, y, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if d == 1:
        if x.ndim and x.shape[-1:] == (1,):
            x = x[..., 0]
        if y.ndim and y.shape[-1:] == (1,):
            y = y[..., 0]
        return np.abs(x - y)
    return np.linalg.norm(x - y, axis=-1)


def _check_z(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)) or not z.real > 0:
        raise ValueError(f"kernels need Re z > 0, got {z!r}")
    return z


def _phi1(t):
    """``(1 - e^{-t}) / t``, stable near 0."""
    t = np.asarray(t, dtype=complex)
    out = np.ones_like(t)
    nz = t != 0
    out[nz] = -np.expm1(-t[nz]) / t[nz]
    return out


def _phi2(t):
    """``(e^{-t} - 1 + t) / t^2``, stable near 0."""
    t = np.asarray(t, dtype=complex)
    out = np.empty_like(t)
    small = np.abs(t) < 0.5
    ts = t[small]
    term = np.full_like(ts, 0.5)
    acc = term.copy()
    for k in range(3, 24):
        term = -term * ts / k
        acc = acc + term
    out[small] = acc
    tb = t[~small]
    out[~small] = (np.exp(-tb) - 1.0 + tb) / (tb * tb)
    return out


def _smooth_2d(t):
    """``(K0(t) + log t) / (2 pi)``, with value ``(log 2 - gamma)/(2 pi)`` at 0."""
    t = np.asarray(t, dtype=complex)
    out = np.full(t.shape, D2_SHIFT, dtype=complex)
    nz = t != 0
    if np.any(nz):
        out[nz] = np.asarray(k0_log_regular(t[nz])) / TWO_PI
    return out


def green_kernel(x, y, z, d: int):
    """``e^{-z|x-y|}/(2z)`` (d=1) or ``K0(z|x-y|)/(2 pi)`` (d=2)."""
    z = _check_z(z)
    r = _dist(x, y, d)
    if d == 1:
        return np.exp(-z * r) / (2.0 * z)
    if np.any(r == 0):
        raise ValueError("the d=2 resolvent kernel is singular at coincident points")
    return bessel_k0(z * r) / TWO_PI


def h_kernel(x, y, z, d: int):
    """Two-term small-``z`` comparison kernel for ``G``."""
    z = _check_z(z)
    r = _dist(x, y, d)
    if d == 1:
        return (1.0 - z * r) / (2.0 * z)
    if np.any(r == 0):
        raise ValueError("the d=2 comparison kernel is singular at coincident points")
    return -(np.log(r) + principal_log(z) - LOG2 + EULER_GAMMA) / TWO_PI


def h_remainder(x, y, z, d: int):
    """``G - h`` without cancellation: ``z r^2 phi2(z r)/2`` (d=1), regular K0 part (d=2)."""
    z = _check_z(z)
    r = _dist(x, y, d)
    if d == 1:
        return 0.5 * z * r * r * _phi2(z * r)
    if np.any(r == 0):
        raise ValueError("the d=2 comparison kernel is singular at coincident points")
    return _smooth_2d(z * r) - D2_SHIFT


def m_kernel(x, y, z, d: int, V: Potential | None = None):
    """``|V(x)|^{1/2} (G - g(z)) V(y)^{1/2}``; the bare ``G - g`` when ``V`` is None."""
    z = _check_z(z)
    r = _dist(x, y, d)
    if d == 1:
        k = -0.5 * r * _phi1(z * r)
    else:
        if np.any(r == 0):
            raise ValueError("the d=2 M kernel has a logarithmic singularity at x = y")
        k = _smooth_2d(z * r) - np.log(r) / TWO_PI
    if V is None:
        return k
    vx = V.evaluate(np.reshape(x, (-1, d)))
    vy = V.evaluate(np.reshape(y, (-1, d)))
    ux, sy = _sqrt_factors(vx)[0], _sqrt_factors(vy)[1]
    return np.reshape(ux * np.ravel(k) * sy, np.shape(k))


def _sqrt_factors(values: np.ndarray):
    values = np.asarray(values, dtype=complex)
    a = np.sqrt(np.abs(values))
    s = np.zeros_like(values)
    nz = a > 0
    s[nz] = values[nz] / a[nz]
    return a.astype(complex), s


# ---------------------------------------------------------------- discretization

@dataclass(frozen=True)
class BSDiscretization:
    d: int
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    v_abs_sqrt: np.ndarray
    v_signed_sqrt: np.ndarray
    support_box: Box | None
    singular_correction: bool
    _r: np.ndarray = field(repr=False)
    _box_term: np.ndarray | None = field(repr=False)
    _logr: np.ndarray | None = field(repr=False)
    U: complex = 0j
    U1: complex = 0j

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_samples(cls, nodes, weights, values, box=None,
                     singular_correction: bool | None = None) -> "BSDiscretization":
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(weights, dtype=float).ravel()
        values = np.asarray(values, dtype=complex).ravel()
        n, d = nodes.shape
        if d not in (1, 2):
            raise ValueError("nodes must be points in R^1 or R^2")
        if weights.shape != (n,) or values.shape != (n,):
            raise ValueError("nodes, weights and values must have matching lengths")
        if np.any(weights <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("weights must be positive and values finite")
        if n > DENSE_CAP:
            raise ValueError(f"{n} nodes exceed the dense cap of {DENSE_CAP}")
        box = as_box(box) if box is not None else None
        if singular_correction is None:
            singular_correction = box is not None
        if singular_correction and box is None:
            raise ValueError("singular correction needs the support box")
        if d == 2 and not singular_correction:
            raise ValueError("d=2 discretizations need the support box for the log correction")
        a, s = _sqrt_factors(values)
        diff = nodes[:, None, :] - nodes[None, :, :]
        r = np.linalg.norm(diff, axis=-1)
        logr = None
        box_term = None
        if d == 2:
            logr = np.zeros_like(r)
            off = ~np.eye(n, dtype=bool)
            logr[off] = np.log(r[off])
            box_term = log_box_integral(nodes, box)
        elif singular_correction:
            lo, hi = box[0]
            box_term = np.stack([nodes[:, 0] - lo, hi - nodes[:, 0]], axis=1)
        for arr in (nodes, weights, values, a, s, r):
            arr.setflags(write=False)
        disc = cls(d, nodes, weights, values, a, s, box, bool(singular_correction),
                   r, box_term, logr)
        U = complex(np.dot(weights, values))
        object.__setattr__(disc, "U", U)
        object.__setattr__(disc, "U1", _discrete_U1(disc))
        return disc

    @classmethod
    def from_potential(cls, V: Potential, order: int = 10, panels: int = 20) -> "BSDiscretization":
        rule = V.rule(order, panels)
        return cls.from_samples(rule.nodes, rule.weights, V.evaluate(rule.nodes), rule.box)

    def curly_U(self, beta) -> complex:
        beta = complex(beta)
        return self.U * beta - second_order_coefficient(self.U, self.U1, self.d) * beta * beta


def _kernel_matrix(disc: BSDiscretization, z) -> np.ndarray:
    """Nystrom matrix of ``G - g`` (without the ``V`` factors), weights included."""
    w = disc.weights
    n = disc.size
    if z is None:  # the z -> 0 limit
        if disc.d == 1:
            K = -0.5 * disc._r.astype(complex)
        else:
            K = D2_SHIFT - disc._logr / TWO_PI + 0j
    elif disc.d == 1:
        K = -0.5 * disc._r * _phi1(z * disc._r)
    else:
        iu = np.triu_indices(n, 1)
        S = np.zeros((n, n), dtype=complex)
        S[iu] = _smooth_2d(z * disc._r[iu])
        S = S + S.T
        np.fill_diagonal(S, D2_SHIFT)
        K = S - disc._logr / TWO_PI
    K = K * w[None, :]
    if disc.singular_correction:
        np.fill_diagonal(K, 0.0)
        offsum = K.sum(axis=1)
        if disc.d == 1:
            A = disc._box_term
            if z is None:
                local = -0.25 * (A ** 2).sum(axis=1)
            else:
                local = -0.5 * (A ** 2 * _phi2(z * A)).sum(axis=1)
            np.fill_diagonal(K, local - offsum)
        else:
            smooth_diag = D2_SHIFT * w
            log_off = (-disc._logr / TWO_PI * w[None, :]).sum(axis=1)
            log_diag = -disc._box_term / TWO_PI - log_off
            np.fill_diagonal(K, smooth_diag + log_diag)
    return K


def _discrete_U1(disc: BSDiscretization) -> complex:
    # M(0) = -mu + (d=2 shift); undo the shift to recover the discrete U1
    K0 = _kernel_matrix(disc, None)
    psi = disc.values
    val = -complex(np.dot(disc.weights * psi, K0 @ psi))
    if disc.d == 2:
        val += D2_SHIFT * disc.U ** 2
    return val


def assemble_M(disc: BSDiscretization, z) -> tuple[np.ndarray, float]:
    """Nystrom matrix of ``M(z)`` and a Hilbert-Schmidt estimate of its norm."""
    z = _check_z(z)
    K = _kernel_matrix(disc, z)
    M = disc.v_abs_sqrt[:, None] * K * disc.v_signed_sqrt[None, :]
    w = disc.weights
    hs = float(np.sqrt(np.sum(np.abs(M) ** 2 * (w[:, None] / w[None, :]))))
    return M, hs


def _pairing(disc: BSDiscretization, z, beta: complex) -> tuple[complex, float]:
    """``beta <(1 - beta M)^{-1} beta M u, v>`` and the norm estimate of ``beta M``."""
    M, hs = assemble_M(disc, z)
    bnorm = abs(beta) * hs
    n = disc.size
    A = np.eye(n, dtype=complex) - beta * M
    if bnorm >= 0.5:
        cond = float(np.linalg.cond(A))
    else:
        cond = (1.0 + bnorm) / (1.0 - bnorm)
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise NearSingularError(f"1 - beta M(z) is near-singular at z={z!r}", cond)
    rhs = beta * (M @ disc.v_abs_sqrt)
    y = np.linalg.solve(A, rhs)
    return beta * complex(np.dot(disc.weights * disc.v_signed_sqrt, y)), bnorm


def f_beta(z, beta, disc: BSDiscretization) -> tuple[complex, float]:
    """``(f_beta(z), ||beta M(z)|| estimate)``."""
    z = _check_z(z)
    beta = complex(beta)
    if beta == 0:
        return 1.0 + 0j, 0.0
    corr, bnorm = _pairing(disc, z, beta)
    return 1.0 - g_d(z, disc.d) * (disc.U * beta + corr), bnorm


def f_beta_phi(w, beta, disc: BSDiscretization) -> complex:
    """``f_beta(phi(w))`` evaluated with ``g(phi(w)) = 1/w``."""
    w = complex(w)
    z = phi(w, disc.d)
    beta = complex(beta)
    if beta == 0:
        return 1.0 + 0j
    corr, _ = _pairing(disc, z, beta)
    return 1.0 - (disc.U * beta + corr) / w


def r_beta(w, beta, disc: BSDiscretization) -> complex:
    """Remainder ``w (1 - F(w)) - curly_U(beta)`` of the transformed function."""
    w = complex(w)
    return w * (1.0 - f_beta_phi(w, beta, disc)) - disc.curly_U(beta)


def bs_eigen_check(z, beta, disc: BSDiscretization) -> float:
    """Distance from 1 to the spectrum of the dense Nystrom matrix of ``beta (L + M)``."""
    z = _check_z(z)
    beta = complex(beta)
    M, _ = assemble_M(disc, z)
    L = g_d(z, disc.d) * np.outer(disc.v_abs_sqrt, disc.v_signed_sqrt * disc.weights)
    try:
        eig = np.linalg.eigvals(beta * (L + M))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    return float(np.min(np.abs(eig - 1.0)))


# ---------------------------------------------------------------- winding numbers

@dataclass(frozen=True)
class WindingResult:
    winding: int
    raw: float
    rounding_gap: float
    min_modulus: float
    samples: int


def contour_winding(F: Callable[[complex], complex], center, radius: float,
                    samples: int = 32, max_samples: int = 4096) -> WindingResult:
    """Winding number of ``F`` around 0 along the circle ``|w - center| = radius``.

    The contour is refined until no step turns the argument by more than pi/4.
    """
    center = complex(center)
    if not radius > 0:
        raise ValueError("radius must be positive")
    ts = list(np.linspace(0.0, 1.0, samples + 1))
    vals = {}

    def value(t):
        if t not in vals:
            vals[t] = complex(F(center + radius * np.exp(2j * math.pi * t)))
        return vals[t]

    i = 0
    while i < len(ts) - 1:
        a, b = ts[i], ts[i + 1]
        fa, fb = value(a), value(b) if b < 1.0 else value(0.0)
        for f in (fa, fb):
            if abs(f) < NEAR_ZERO:
                raise ContourError(f"|F| = {abs(f):.3e} on the contour")
        step = np.angle(fb / fa)
        if abs(step) > math.pi / 4 and len(ts) < max_samples:
            ts.insert(i + 1, 0.5 * (a + b))
            continue
        i += 1
    total = 0.0
    for a, b in zip(ts[:-1], ts[1:]):
        fb = value(b) if b < 1.0 else value(0.0)
        total += np.angle(fb / value(a))
    raw = total / (2.0 * math.pi)
    k = int(round(raw))
    return WindingResult(k, raw, abs(raw - k), min(abs(v) for v in vals.values()), len(ts) - 1)


def winding_number(center, radius: float, beta, disc: BSDiscretization,
                   samples: int = 32) -> WindingResult:
    """Number of zeros of ``f_beta(phi(.))`` inside the circle (must lie in Omega)."""
    if disc_in_omega(center, radius, disc.d, samples=max(samples, 64)) is not DiscLocation.INSIDE:
        raise OutsideOmega("winding contour must lie inside Omega")
    return contour_winding(lambda w: f_beta_phi(w, beta, disc), center, radius, samples)


# ---------------------------------------------------------------- root finding

@dataclass(frozen=True)
class RootResult:
    w_root: complex
    z_root: complex
    lam: complex
    residual: float
    winding: int
    bs_eigen_gap: float
    newton_iters: int
    certify_radius: float = 0.0
    localization_constant: float = float("nan")


@dataclass(frozen=True)
class RootOutcome:
    """Outcome of the root search: ``found``, ``absent`` or ``undetermined``."""
    status: str
    beta: complex
    curlyU: complex
    localization: DiscLocation
    root: RootResult | None = None
    reason: str = ""
    trace: tuple = ()


def _newton(F, w0: complex, scale: float, d: int, maxit: int = 50):
    w = complex(w0)
    trace = [w]
    Fw = F(w)
    for it in range(1, maxit + 1):
        h = 1e-6 * scale
        try:
            dF = (F(w + h) - F(w - h)) / (2.0 * h)
        except OutsideOmega:
            return None, it, trace, "derivative stencil left Omega"
        if dF == 0 or not np.isfinite(dF):
            raise RootFindingError("derivative breakdown in Newton iteration", trace)
        step = Fw / dF
        w = w - step
        trace.append(w)
        if not in_omega(w, d):
            return None, it, trace, "Newton iterate left Omega"
        Fw = F(w)
        if abs(Fw) < 1e-12 and abs(step) < 1e-12 * abs(w):
            return w, it, trace, "converged"
    raise RootFindingError(f"Newton did not converge in {maxit} iterations", trace)


def _quadrisect(F, center: complex, radius: float, d: int, tol: float, samples: int = 32):
    """Shrink a disc containing one zero of ``F`` by choosing sub-discs with winding 1."""
    c, rad = complex(center), radius
    while rad > tol:
        for dx, dy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            cc = c + 0.5 * rad * complex(dx, dy)
            rr = 0.75 * rad
            if disc_in_omega(cc, rr, d) is not DiscLocation.INSIDE:
                continue
            try:
                if contour_winding(F, cc, rr, samples).winding >= 1:
                    c, rad = cc, rr
                    break
            except ContourError:
                return cc
        else:
            return c
    return c


def find_root(beta, disc: BSDiscretization, constants: ThresholdConstants | None = None,
              K: float = DEFAULT_LOCALIZATION_K, eigen_check: bool = True) -> RootOutcome:
    """Locate the weakly coupled eigenvalue near ``curly_U(beta)``, or certify absence.

    Absence is reported only when the localization disc ``D(curly_U; K |curly_U|^3)``
    lies outside Omega, or lies inside with winding number 0.
    """
    beta = complex(beta)
    d = disc.d
    if disc.U == 0:
        raise UnsupportedRegime("U = 0 for this discretization")
    constants = constants or ThresholdConstants.for_moment(disc.U)
    if abs(beta) >= constants.epsilon:
        raise UnsupportedRegime(
            f"|beta| = {abs(beta):.6g} is not below epsilon = {constants.epsilon:.6g}")
    if beta == 0:
        raise UnsupportedRegime("beta = 0 has no weakly coupled eigenvalue")
    cU = disc.curly_U(beta)
    loc_radius = K * abs(cU) ** 3
    loc = disc_in_omega(cU, loc_radius, d)
    if loc is DiscLocation.OUTSIDE:
        return RootOutcome("absent", beta, cU, loc, reason="localization disc outside Omega")

    F = lambda w: f_beta_phi(w, beta, disc)
    scale = max(abs(cU), 1e-300)
    w_root, iters, trace, why = None, 0, [cU], ""
    if in_omega(cU, d):
        w_root, iters, trace, why = _newton(F, cU, scale, d)
    if w_root is None:
        if loc is not DiscLocation.INSIDE:
            return RootOutcome("undetermined", beta, cU, loc,
                               reason=f"{why or 'seed outside Omega'}; localization disc Mixed",
                               trace=tuple(trace))
        wres = contour_winding(F, cU, loc_radius)
        if wres.winding == 0:
            return RootOutcome("absent", beta, cU, loc, reason="winding 0 on localization disc",
                               trace=tuple(trace))
        seed = _quadrisect(F, cU, loc_radius, d, tol=1e-3 * loc_radius)
        w_root, more, trace2, why = _newton(F, seed, scale, d)
        iters += more
        trace += trace2
        if w_root is None:
            raise RootFindingError(f"fallback Newton failed: {why}", trace)

    Fw = F(w_root)
    h = 1e-6 * scale
    dF = (F(w_root + h) - F(w_root - h)) / (2.0 * h)
    radius = max(10.0 * abs(Fw / dF), 1e-3 * abs(cU))
    wres = winding_number(w_root, radius, beta, disc)
    z = phi(w_root, d)
    gap = bs_eigen_check(z, beta, disc) if eigen_check else float("nan")
    root = RootResult(w_root, z, -z * z, abs(Fw), wres.winding, gap, iters, radius,
                      abs(w_root - cU) / abs(cU) ** 3)
    if wres.winding != 1:
        return RootOutcome("undetermined", beta, cU, loc, root,
                           reason=f"certification winding {wres.winding}", trace=tuple(trace))
    return RootOutcome("found", beta, cU, loc, root, trace=tuple(trace))
