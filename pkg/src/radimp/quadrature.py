"""Adaptive Gauss-Kronrod integration for the impedance integrals.

Two globally adaptive drivers share one G7/K15 rule pair:

* :func:`integrate_adaptive` on an interval.
* :func:`integrate_rectangle` on an axis-aligned rectangle, using the tensor
  rule and splitting each cell along its worse direction.

Integrands are vectorized: they receive numpy arrays of nodes and return an
array of the same shape. Each refinement round evaluates all new cells in a
single call, so the Python overhead scales with the number of rounds rather
than the number of cells.

:func:`integrate_inner_disk` and :func:`integrate_outer_tail` wrap the
rectangle driver with the maps t = sin(theta) and t = cosh(psi), which absorb
the inverse square-root endpoint at t = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# QUADPACK qk15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS = np.zeros(15)
GAUSS[1:7:2] = _WG[:3]
GAUSS[7] = _WG[3]
GAUSS[9:15:2] = _WG[2::-1]

_EPS = np.finfo(float).eps


class IntegrationError(ArithmeticError):
    """The integrand produced a non-finite sample."""


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-6
    abs: float = 1e-9
    max_subdivisions: int = 20000

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError("rel tolerance must be positive")
        if not self.abs >= 0:
            raise ValueError("abs tolerance must be non-negative")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")

    def target(self, value: float) -> float:
        return max(self.abs, self.rel * abs(value))

    def scaled(self, factor: float) -> "Tolerance":
        return Tolerance(self.rel * factor, self.abs * factor, self.max_subdivisions)


DEFAULT_TOLERANCE = Tolerance()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(
            self.value * factor, self.error_estimate * abs(factor), self.evaluations, self.converged
        )


def _qk_error(diff, resabs, resasc):
    # QUADPACK error scaling with a roundoff floor.
    err = np.abs(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    floor = 50.0 * _EPS * resabs
    return np.where(resabs > np.finfo(float).tiny / (50.0 * _EPS), np.maximum(err, floor), err)


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise IntegrationError("integrand returned a non-finite value")


def _select(err, keys, excess, room):
    """Indices of cells to split this round, largest error first.

    Cells are taken until the remaining error drops by ``excess``; ties in
    error are broken by ``keys`` (ascending).
    """
    order = np.lexsort((keys, -err))
    cumulative = np.cumsum(err[order])
    count = int(np.searchsorted(cumulative, excess)) + 1
    count = max(1, min(count, room, err.size))
    return order[:count]


# --------------------------------------------------------------------------
# one dimension

def _rule_1d(f, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = center[:, None] + half[:, None] * NODES[None, :]
    # outer nodes of tiny cells can round onto an endpoint singularity
    x = np.clip(x, np.nextafter(lo, hi)[:, None], np.nextafter(hi, lo)[:, None])
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    _check_finite(fx)
    resk = fx @ KRONROD
    resg = fx @ GAUSS
    mean = 0.5 * resk
    resabs = np.abs(fx) @ KRONROD * half
    resasc = np.abs(fx - mean[:, None]) @ KRONROD * half
    err = _qk_error((resk - resg) * half, resabs, resasc)
    return resk * half, err, fx.size


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
    points=(),
    singular: Optional[str] = None,
    initial: int = 4,
) -> QuadratureResult:
    """Integrate a vectorized ``f`` over [lo, hi].

    The initial partition is ``initial`` equal pieces plus any interior
    breakpoints in ``points``. Several starting pieces keep an integrand that
    happens to be odd about the midpoint from passing as converged.
    ``singular`` ("lo" or "hi") names the endpoint that wins ties when two
    cells carry the same error estimate.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError("integration limits must be finite with lo < hi")
    base = np.linspace(lo, hi, max(1, initial) + 1)
    edges = np.unique(np.concatenate([base, [p for p in points if lo < p < hi]]))
    a, b = edges[:-1], edges[1:]
    val, err, nev = _rule_1d(f, a, b)
    while True:
        total = float(np.sum(val))
        total_err = float(np.sum(err))
        target = tol.target(total)
        if total_err <= target:
            return QuadratureResult(total, total_err, nev, True)
        room = tol.max_subdivisions - a.size
        if room <= 0:
            return QuadratureResult(total, total_err, nev, False)
        keys = -b if singular == "hi" else a
        idx = _select(err, keys, total_err - 0.5 * target, room)
        keep = np.ones(a.size, dtype=bool)
        keep[idx] = False
        mid = 0.5 * (a[idx] + b[idx])
        if np.any((mid <= a[idx]) | (mid >= b[idx])):
            return QuadratureResult(total, total_err, nev, False)
        na = np.concatenate([a[idx], mid])
        nb = np.concatenate([mid, b[idx]])
        nval, nerr, n = _rule_1d(f, na, nb)
        nev += n
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
        order = np.argsort(a, kind="stable")
        a, b, val, err = a[order], b[order], val[order], err[order]


# --------------------------------------------------------------------------
# two dimensions

_KK = np.outer(KRONROD, KRONROD)
_GK = np.outer(GAUSS, KRONROD)
_KG = np.outer(KRONROD, GAUSS)


def _rule_2d(f, x0, x1, y0, y1):
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    X = (0.5 * (x0 + x1))[:, None, None] + hx[:, None, None] * NODES[None, :, None]
    Y = (0.5 * (y0 + y1))[:, None, None] + hy[:, None, None] * NODES[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    F = np.asarray(f(X, Y), dtype=float)
    if F.shape != X.shape:
        F = np.broadcast_to(F, X.shape)
    _check_finite(F)
    area = hx * hy
    kk = np.einsum("nij,ij->n", F, _KK)
    gk = np.einsum("nij,ij->n", F, _GK)
    kg = np.einsum("nij,ij->n", F, _KG)
    resabs = np.einsum("nij,ij->n", np.abs(F), _KK) * area
    mean = 0.25 * kk
    resasc = np.einsum("nij,ij->n", np.abs(F - mean[:, None, None]), _KK) * area
    ex = _qk_error((kk - gk) * area, resabs, resasc)
    ey = _qk_error((kk - kg) * area, resabs, resasc)
    return kk * area, ex, ey, F.size


def integrate_rectangle(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x_edges,
    y_edges,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> QuadratureResult:
    """Integrate a vectorized ``f(x, y)`` over a rectangle.

    ``x_edges`` and ``y_edges`` give the initial tensor partition (at least
    the two bounds each). Features aligned with those edges are resolved
    cheaply since Kronrod nodes cluster toward cell boundaries.
    """
    xe = np.asarray(x_edges, dtype=float)
    ye = np.asarray(y_edges, dtype=float)
    if xe.size < 2 or ye.size < 2 or np.any(np.diff(xe) <= 0) or np.any(np.diff(ye) <= 0):
        raise ValueError("edges must be strictly increasing with at least two entries")
    gx0, gy0 = np.meshgrid(xe[:-1], ye[:-1], indexing="ij")
    gx1, gy1 = np.meshgrid(xe[1:], ye[1:], indexing="ij")
    x0, x1, y0, y1 = gx0.ravel(), gx1.ravel(), gy0.ravel(), gy1.ravel()
    val, ex, ey, nev = _rule_2d(f, x0, x1, y0, y1)
    while True:
        err = ex + ey
        total = float(np.sum(val))
        total_err = float(np.sum(err))
        target = tol.target(total)
        if total_err <= target:
            return QuadratureResult(total, total_err, nev, True)
        room = tol.max_subdivisions - x0.size
        if room <= 0:
            return QuadratureResult(total, total_err, nev, False)
        # ties go to the cell nearest the lower-left corner
        keys = x0 * (1.0 + ye[-1] - ye[0]) + y0
        idx = _select(err, keys, total_err - 0.5 * target, room)
        keep = np.ones(x0.size, dtype=bool)
        keep[idx] = False
        sx = ex[idx] >= ey[idx]
        a0, a1, b0, b1 = x0[idx], x1[idx], y0[idx], y1[idx]
        xm = np.where(sx, 0.5 * (a0 + a1), a1)
        ym = np.where(sx, b1, 0.5 * (b0 + b1))
        # first child: lower half; second child: upper half
        c0 = (a0, xm, b0, ym)
        c1 = (np.where(sx, xm, a0), a1, np.where(sx, b0, ym), b1)
        if np.any((c0[1] <= c0[0]) | (c0[3] <= c0[2]) | (c1[1] <= c1[0]) | (c1[3] <= c1[2])):
            return QuadratureResult(total, total_err, nev, False)
        nx0 = np.concatenate([c0[0], c1[0]])
        nx1 = np.concatenate([c0[1], c1[1]])
        ny0 = np.concatenate([c0[2], c1[2]])
        ny1 = np.concatenate([c0[3], c1[3]])
        nval, nex, ney, n = _rule_2d(f, nx0, nx1, ny0, ny1)
        nev += n
        x0 = np.concatenate([x0[keep], nx0])
        x1 = np.concatenate([x1[keep], nx1])
        y0 = np.concatenate([y0[keep], ny0])
        y1 = np.concatenate([y1[keep], ny1])
        val = np.concatenate([val[keep], nval])
        ex = np.concatenate([ex[keep], nex])
        ey = np.concatenate([ey[keep], ney])
        order = np.lexsort((y0, x0))
        x0, x1, y0, y1 = x0[order], x1[order], y0[order], y1[order]
        val, ex, ey = val[order], ex[order], ey[order]


# --------------------------------------------------------------------------
# disk and tail maps

HALF_PI = 0.5 * math.pi


def _phi_edges(symmetric: bool, per_quadrant: int = 4):
    quadrants = 1 if symmetric else 4
    return np.linspace(0.0, quadrants * HALF_PI, quadrants * per_quadrant + 1)


def integrate_inner_disk(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tol: Tolerance = DEFAULT_TOLERANCE,
    symmetric: bool = False,
) -> QuadratureResult:
    """int_0^{2 pi} int_0^1 g(t, phi) t / sqrt(1 - t^2) dt dphi.

    With t = sin(theta) the weight becomes sin(theta) dtheta. Set
    ``symmetric`` when g is even in cos(phi) and in sin(phi) separately; the
    first quadrant is then integrated and multiplied by four.
    """
    def integrand(theta, phi):
        s = np.sin(theta)
        return g(s, phi) * s

    theta_edges = np.linspace(0.0, HALF_PI, 5)
    if symmetric:
        res = integrate_rectangle(integrand, theta_edges, _phi_edges(True), tol.scaled(0.25))
        return res.scaled(4.0)
    return integrate_rectangle(integrand, theta_edges, _phi_edges(False), tol)


def solve_tail(bound: Callable[[float], float], target: float, start: float = 2.0, cap: float = 1e12) -> float:
    """Smallest T (to ~1%) with bound(T) <= target, for a decreasing bound.

    Returns ``inf`` if even ``cap`` does not meet the target.
    """
    if bound(start) <= target:
        return start
    lo, hi = start, start
    while bound(hi) > target:
        lo, hi = hi, hi * 2.0
        if hi > cap:
            return math.inf
    while hi / lo > 1.01:
        mid = math.sqrt(lo * hi)
        if bound(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def _psi_edges(psi0: float, psi1: float, breaks=(), width: float = 0.5):
    n = max(1, int(math.ceil((psi1 - psi0) / width)))
    base = np.linspace(psi0, psi1, n + 1)
    extra = [b for b in breaks if psi0 < b < psi1]
    return np.unique(np.concatenate([base, extra]))


def integrate_outer_tail(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tol: Tolerance = DEFAULT_TOLERANCE,
    *,
    tail_bound: Callable[[float], float],
    symmetric: bool = False,
    averaged: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    switch_bound: Optional[Callable[[float], float]] = None,
    t_first: float = 2.0,
) -> QuadratureResult:
    """int_0^{2 pi} int_1^inf g(t, phi) t / sqrt(t^2 - 1) dt dphi.

    With t = cosh(psi) the weight becomes cosh(psi) dpsi. The range is cut at
    t_max where ``tail_bound(t_max)``, an upper bound on the integral of g
    beyond t_max (weight and phi range included), falls below a tenth of the
    error target.

    For slowly decaying oscillatory kernels pass ``averaged``, a smooth
    surrogate with the same local mean, and ``switch_bound``, an estimate of
    int_T^inf (g - averaged). Beyond the switch point the surrogate replaces
    g and ``tail_bound`` must then bound the surrogate.

    The error target's scale is fixed from a first pass over [1, t_first].
    """
    scale_q = 0.25 if symmetric else 1.0
    phi_edges = _phi_edges(symmetric)

    def run(f, psi_edges, sub_tol):
        res = integrate_rectangle(f, psi_edges, phi_edges, sub_tol.scaled(scale_q))
        return res.scaled(1.0 / scale_q)

    def exact(psi, phi):
        c = np.cosh(psi)
        return g(c, phi) * c

    psi_first = math.acosh(t_first)
    first = run(exact, _psi_edges(0.0, psi_first), tol.scaled(0.5))
    scale = tol.target(first.value)
    target = 0.1 * scale

    t_max = solve_tail(tail_bound, target, start=t_first)
    if not math.isfinite(t_max):
        return QuadratureResult(first.value, math.inf, first.evaluations, False)
    t_switch = math.inf
    if averaged is not None:
        if switch_bound is None:
            raise ValueError("averaged surrogate requires a switch_bound")
        t_switch = solve_tail(switch_bound, target, start=t_first)
        t_max = max(t_max, t_switch)
        if not math.isfinite(t_switch):
            return QuadratureResult(first.value, math.inf, first.evaluations, False)
    tail_err = tail_bound(t_max) + (switch_bound(t_switch) if averaged is not None else 0.0)
    if t_max <= t_first:
        res = first
    else:
        psi_max = math.acosh(t_max)
        if averaged is None:
            f = exact
            breaks = ()
        else:
            psi_switch = math.acosh(t_switch)
            breaks = (psi_switch,)

            def f(psi, phi):
                c = np.cosh(psi)
                # cells never straddle the switch since it is an initial edge
                inner = psi < psi_switch
                out = np.empty_like(c)
                out[inner] = g(c[inner], phi[inner]) * c[inner]
                outer = ~inner
                out[outer] = averaged(c[outer], phi[outer]) * c[outer]
                return out

        rest_tol = Tolerance(tol.rel, 0.4 * scale, tol.max_subdivisions)
        rest = run(f, _psi_edges(psi_first, psi_max, breaks), rest_tol)
        res = first + rest
    total_err = res.error_estimate + tail_err
    converged = res.converged and total_err <= tol.target(res.value)
    return QuadratureResult(res.value, total_err, res.evaluations, converged)
