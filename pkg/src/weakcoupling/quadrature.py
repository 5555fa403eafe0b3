"""Deterministic Gauss-Legendre rules on boxes and weakly singular double integrals.

Rules are composite: each axis is cut at optional breakpoints (where the
integrand may jump), every piece is split into ``panels`` equal panels, and
each panel carries an ``order``-point Gauss-Legendre rule.  In 2D the rule is
the tensor product of the two axis rules.

``singular_double_integral`` handles

* ``abs``  / ``abs2``  (d=1): ``|x-y|`` and ``|x-y|^2``,
* ``log``  / ``log2``  (d=2): ``log|x-y|`` and ``log^2|x-y|``.

For every outer node the inner domain is split at the node itself, so the
kernel is smooth on each inner panel in 1D.  In 2D the four sub-rectangles
touching the node are integrated with a Duffy map (two triangles per
rectangle) and a polynomial radial grading ``s = u^3``, which absorbs the
``s log s`` behaviour.  The ``log`` kernel additionally uses singularity
subtraction against the closed-form box integral of ``log|x-y|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

Box = tuple[tuple[float, float], ...]
Field = Callable[[np.ndarray], np.ndarray]

KERNELS_1D = ("abs", "abs2")
KERNELS_2D = ("log", "log2")
_GRADING = 3
_CHUNK_NODES = 2_000_000


def as_box(box) -> Box:
    """Normalise ``(a, b)`` or ``((a, b), (c, d))`` into a tuple of intervals."""
    arr = np.asarray(box, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] not in (1, 2):
        raise ValueError(f"box must be (a, b) or ((a, b), (c, d)); got {box!r}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"box has non-finite extent: {box!r}")
    if np.any(arr[:, 1] <= arr[:, 0]):
        raise ValueError(f"degenerate box extent: {box!r}")
    return tuple((float(a), float(b)) for a, b in arr)


def box_volume(box: Box) -> float:
    return float(np.prod([b - a for a, b in box]))


def box_contains(outer: Box, inner: Box, tol: float = 1e-12) -> bool:
    return len(outer) == len(inner) and all(
        oa <= ia + tol and ib <= ob + tol for (oa, ob), (ia, ib) in zip(outer, inner))


@lru_cache(maxsize=64)
def _leggauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _axis_edges(lo: float, hi: float, breaks: Sequence[float]) -> np.ndarray:
    inner = sorted(float(b) for b in breaks if lo < b < hi)
    return np.array([lo, *inner, hi])


def _axis_rule(lo, hi, order, panels, breaks):
    x01, w01 = _leggauss01(order)
    edges = _axis_edges(lo, hi, breaks)
    cuts = [np.linspace(a, b, panels + 1) for a, b in zip(edges[:-1], edges[1:])]
    cuts = np.unique(np.concatenate(cuts))
    h = np.diff(cuts)
    nodes = (cuts[:-1, None] + h[:, None] * x01[None, :]).ravel()
    weights = (h[:, None] * w01[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    box: Box
    order: int
    panels: int = 1
    breaks: tuple[tuple[float, ...], ...] = field(default=())

    @property
    def dim(self) -> int:
        return len(self.box)

    def refined(self, factor: int = 2) -> "QuadratureRule":
        return gauss_rule(self.order * factor, self.box, self.panels, self.breaks)

    def integrate(self, f: Field) -> complex:
        vals = _sample(f, self.nodes)
        return complex(np.dot(self.weights, vals))


def gauss_rule(order: int, box, panels: int = 1, breaks=None) -> QuadratureRule:
    """Composite Gauss-Legendre rule on an axis-aligned box (tensor product in 2D).

    ``breaks`` holds interior breakpoints per axis; each piece between them
    gets ``panels`` panels of ``order`` nodes.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    if int(panels) != panels or panels < 1:
        raise ValueError(f"panels must be a positive integer, got {panels!r}")
    box = as_box(box)
    dim = len(box)
    if breaks is None:
        breaks = ((),) * dim
    breaks = tuple(tuple(sorted(float(b) for b in axis)) for axis in breaks)
    if len(breaks) != dim:
        raise ValueError("breaks must list one tuple of breakpoints per axis")
    axes = [_axis_rule(lo, hi, int(order), int(panels), br)
            for (lo, hi), br in zip(box, breaks)]
    if dim == 1:
        nodes = axes[0][0][:, None]
        weights = axes[0][1]
    else:
        (x0, w0), (x1, w1) = axes
        X0, X1 = np.meshgrid(x0, x1, indexing="ij")
        nodes = np.column_stack([X0.ravel(), X1.ravel()])
        weights = np.outer(w0, w1).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, box, int(order), int(panels), breaks)


def _sample(f: Field, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(pts), dtype=complex)
    if vals.shape != (pts.shape[0],):
        vals = np.broadcast_to(vals, (pts.shape[0],)).astype(complex)
    if not np.all(np.isfinite(vals)):
        raise ValueError("field returned non-finite samples")
    return vals


def log_box_integral(points: np.ndarray, box: Box) -> np.ndarray:
    """Closed form of ``int_box log|x - y| dy`` for 2D points ``x`` inside ``box``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    (a0, b0), (a1, b1) = box
    total = np.zeros(pts.shape[0])
    for A in (pts[:, 0] - a0, b0 - pts[:, 0]):
        for B in (pts[:, 1] - a1, b1 - pts[:, 1]):
            total += _corner_log_integral(A, B)
    return total


def _corner_log_integral(A, B):
    # int_0^A int_0^B log sqrt(u^2 + v^2) dv du
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    out = np.zeros(np.broadcast(A, B).shape)
    ok = (A > 0) & (B > 0)
    a, b = A[ok], B[ok]
    out[ok] = 0.5 * (a * b * (np.log(a * a + b * b) - 3.0)
                     + a * a * np.arctan(b / a) + b * b * np.arctan(a / b))
    return out


@lru_cache(maxsize=32)
def _duffy_reference(m: int):
    """Graded Duffy nodes for the unit square with the singular corner at 0."""
    u, wu = _leggauss01(m)
    t, wt = _leggauss01(m)
    s = u ** _GRADING
    ws = wu * _GRADING * u ** (_GRADING - 1) * s  # includes Duffy Jacobian s
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt).ravel()
    S, T = S.ravel(), T.ravel()
    tri1 = np.column_stack([S, S * T])
    tri2 = np.column_stack([S * T, S])
    return np.vstack([tri1, tri2]), np.concatenate([W, W])


def _kernel(kind: str, r: np.ndarray) -> np.ndarray:
    if kind == "abs":
        return r
    if kind == "abs2":
        return r * r
    if kind == "log":
        return np.log(r)
    if kind == "log2":
        return np.log(r) ** 2
    raise ValueError(f"unknown kernel kind {kind!r}")


def _inner_1d(x: float, edges: np.ndarray, m: int):
    x01, w01 = _leggauss01(m)
    cuts = np.sort(np.append(edges, x))
    h = np.diff(cuts)
    keep = h > 0
    lo, h = cuts[:-1][keep], h[keep]
    nodes = (lo[:, None] + h[:, None] * x01[None, :]).ravel()
    weights = (h[:, None] * w01[None, :]).ravel()
    return nodes, weights


def _split_axis(x: float, edges: np.ndarray):
    """Intervals of one axis split at ``x``; flags mark intervals ending/starting at x."""
    j = int(np.searchsorted(edges, x, side="right")) - 1
    j = min(max(j, 0), len(edges) - 2)
    intervals, touches = [], []
    for k in range(len(edges) - 1):
        a, b = edges[k], edges[k + 1]
        if k == j:
            if x > a:
                intervals.append((a, x)); touches.append(True)
            if b > x:
                intervals.append((x, b)); touches.append(True)
        else:
            intervals.append((a, b)); touches.append(False)
    return intervals, touches


def _inner_2d(x: np.ndarray, edges: tuple[np.ndarray, np.ndarray], m: int):
    ref_p, ref_w = _duffy_reference(m)
    g01, gw01 = _leggauss01(m)
    I0, T0 = _split_axis(x[0], edges[0])
    I1, T1 = _split_axis(x[1], edges[1])
    node_blocks, weight_blocks = [], []
    for (a0, b0), t0 in zip(I0, T0):
        for (a1, b1), t1 in zip(I1, T1):
            if t0 and t1:
                A = b0 - x[0] if a0 == x[0] else a0 - x[0]
                B = b1 - x[1] if a1 == x[1] else a1 - x[1]
                node_blocks.append(x + ref_p * np.array([A, B]))
                weight_blocks.append(ref_w * abs(A * B))
            else:
                p0 = a0 + (b0 - a0) * g01
                p1 = a1 + (b1 - a1) * g01
                P0, P1 = np.meshgrid(p0, p1, indexing="ij")
                node_blocks.append(np.column_stack([P0.ravel(), P1.ravel()]))
                weight_blocks.append(np.outer((b0 - a0) * gw01, (b1 - a1) * gw01).ravel())
    return np.vstack(node_blocks), np.concatenate(weight_blocks)


def _double_integral_once(f: Field, g: Field, kind: str, rule: QuadratureRule) -> complex:
    dim = rule.dim
    if dim == 1 and kind not in KERNELS_1D:
        raise ValueError(f"kernel {kind!r} not available in d=1 (use {KERNELS_1D})")
    if dim == 2 and kind not in KERNELS_2D:
        raise ValueError(f"kernel {kind!r} not available in d=2 (use {KERNELS_2D})")
    edges = tuple(_axis_edges(lo, hi, br) for (lo, hi), br in zip(rule.box, rule.breaks))
    m = rule.order
    outer = rule.nodes
    fx = _sample(f, outer)
    gx = _sample(g, outer)
    active = np.flatnonzero(fx != 0)
    if active.size == 0:
        return 0j

    def inner(i):
        if dim == 1:
            y, w = _inner_1d(outer[i, 0], edges[0], m)
            return y[:, None], w
        return _inner_2d(outer[i], edges, m)

    subtract = kind == "log"
    inner_vals = np.zeros(outer.shape[0], dtype=complex)
    first = inner(active[0])
    per_point = first[0].shape[0]
    chunk = max(1, _CHUNK_NODES // per_point)
    for start in range(0, active.size, chunk):
        idx = active[start:start + chunk]
        blocks = [first if (start == 0 and k == 0) else inner(i) for k, i in enumerate(idx)]
        ys = np.vstack([b[0] for b in blocks])
        ws = np.concatenate([b[1] for b in blocks])
        owner = np.concatenate([np.full(b[1].shape[0], k) for k, b in enumerate(blocks)])
        r = np.linalg.norm(ys - outer[idx][owner], axis=1)
        gy = _sample(g, ys)
        if subtract:
            gy = gy - gx[idx][owner]
        contrib = ws * _kernel(kind, r) * gy
        inner_vals[idx] = np.bincount(owner, weights=contrib.real, minlength=len(idx)) \
            + 1j * np.bincount(owner, weights=contrib.imag, minlength=len(idx))
    if subtract:
        inner_vals[active] += gx[active] * log_box_integral(outer[active], rule.box)
    return complex(np.dot(rule.weights * fx, inner_vals))


def singular_double_integral(f: Field, g: Field, kernel_kind: str,
                             rule: QuadratureRule) -> tuple[complex, float]:
    """Approximate ``int int f(x) k(x - y) g(y) dx dy`` over ``rule.box`` squared.

    Returns ``(value, error_estimate)``: the value comes from the rule refined
    once (orders doubled), the estimate is its distance to the unrefined value.
    """
    coarse = _double_integral_once(f, g, kernel_kind, rule)
    fine = _double_integral_once(f, g, kernel_kind, rule.refined())
    return fine, float(abs(fine - coarse))
