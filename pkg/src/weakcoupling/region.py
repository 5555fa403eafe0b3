"""Geometry of the spectral parameter: ``g_d``, the map ``phi`` and the domain Omega.

``phi`` maps Omega bijectively onto the upper half of ``D(0; 1/2)`` intersected
with the right half-plane, and satisfies ``g_d(phi(w)) = 1/w``:

* d=1: Omega is the half disc ``|w| < 1, Re w > 0`` and ``phi(w) = w/2``.
* d=2: Omega is ``Re(1/w) > log 2 / (2 pi)``, ``|Im(1/w)| < 1/4`` and
  ``phi(w) = exp(-2 pi / w)``.

Omega is open; points within ``BOUNDARY_TOL`` of a defining inequality count as
outside.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .special import LOG2, BranchCutError, principal_log

BOUNDARY_TOL = 1e-14
OMEGA2_RE_MIN = LOG2 / (2.0 * math.pi)
OMEGA2_IM_MAX = 0.25
OMEGA2_RADIUS = 2.0 * math.pi / LOG2  # every member satisfies |w| < this


class OutsideOmega(ValueError):
    """Parameter point outside the domain Omega."""


class DiscLocation(str, Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"
    MIXED = "Mixed"


def _check_dim(d: int) -> None:
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d!r}")


def g_d(z, d: int) -> complex:
    """``1/(2z)`` for d=1, ``-log(z)/(2 pi)`` for d=2, on ``Re z > 0``."""
    _check_dim(d)
    z = complex(z)
    if not z.real > 0:
        raise BranchCutError(f"g_d needs Re z > 0, got {z!r}")
    if d == 1:
        return 1.0 / (2.0 * z)
    return -principal_log(z) / (2.0 * math.pi)


def in_omega_array(w, d: int) -> np.ndarray:
    """Vectorised membership test."""
    _check_dim(d)
    w = np.asarray(w, dtype=complex)
    finite = np.isfinite(w)
    if d == 1:
        return finite & (w.real > BOUNDARY_TOL) & (np.abs(w) < 1.0 - BOUNDARY_TOL)
    out = np.zeros(w.shape, dtype=bool)
    ok = finite & (w.real > BOUNDARY_TOL)
    zeta = 1.0 / w[ok]
    out[ok] = (zeta.real > OMEGA2_RE_MIN + BOUNDARY_TOL) & \
        (np.abs(zeta.imag) < OMEGA2_IM_MAX - BOUNDARY_TOL)
    return out


def in_omega(w, d: int) -> bool:
    return bool(in_omega_array(complex(w), d))


def in_omega_alt(w, d: int = 2) -> bool:
    """d=2 membership through the disc form ``D(pi/log 2; pi/log 2)`` plus ``|Im(1/w)| < 1/4``."""
    if d != 2:
        return in_omega(w, d)
    w = complex(w)
    if not (math.isfinite(w.real) and math.isfinite(w.imag)) or w.real <= 0:
        return False
    c = math.pi / LOG2
    return abs(w - c) < c and abs((1.0 / w).imag) < OMEGA2_IM_MAX


def phi(w, d: int) -> complex:
    """``w/2`` for d=1, ``exp(-2 pi / w)`` for d=2; requires ``w`` in Omega."""
    if not in_omega(w, d):
        raise OutsideOmega(f"w = {complex(w)!r} is not in Omega (d={d})")
    w = complex(w)
    if d == 1:
        return w / 2.0
    return complex(np.exp(-2.0 * math.pi / w))


def phi_inverse(z, d: int) -> complex:
    """Inverse of ``phi``: ``1 / g_d(z)``."""
    return 1.0 / g_d(z, d)


def disc_in_omega(center, radius: float, d: int, samples: int = 256) -> DiscLocation:
    """Locate the closed disc ``D(center; radius)`` relative to Omega by boundary sampling."""
    _check_dim(d)
    if radius < 0 or not math.isfinite(radius):
        raise ValueError("radius must be finite and non-negative")
    if samples < 16:
        raise ValueError("at least 16 boundary samples are required")
    center = complex(center)
    if radius == 0:
        pts = np.array([center])
    else:
        t = 2.0 * math.pi * np.arange(samples) / samples
        pts = np.concatenate([[center], center + radius * np.exp(1j * t)])
    inside = in_omega_array(pts, d)
    if inside.all():
        return DiscLocation.INSIDE
    if not inside.any():
        return DiscLocation.OUTSIDE
    return DiscLocation.MIXED


def rasterize_omega(d: int, re_range, im_range, n_re: int, n_im: int):
    """Grid of ``(re, im, inside)`` rows in row-major order (imaginary part outer)."""
    re = _grid_axis(re_range, n_re)
    im = _grid_axis(im_range, n_im)
    W = re[None, :] + 1j * im[:, None]
    inside = in_omega_array(W, d)
    return [(float(W[i, j].real), float(W[i, j].imag), bool(inside[i, j]))
            for i in range(len(im)) for j in range(len(re))]


def _grid_axis(rng, n: int) -> np.ndarray:
    lo, hi = (float(v) for v in rng)
    if int(n) != n or n < 2 or not hi > lo:
        raise ValueError(f"degenerate grid axis {rng!r} with {n!r} points")
    return np.linspace(lo, hi, int(n))
