"""Normalized radiation impedance of clamped membranes.

Radiated power is written as an integral of the squared velocity spectrum
over normalized wavenumber t = k_r / k. The propagating part (t < 1) gives
the resistance and the evanescent part (t > 1) the reactance. With the
RMS reference velocity and normalization by rho c times the area:

    rect2d  r = A B (315/128)^2 / (16 pi^2) * Int S^2(A t cos phi) S^2(B t sin phi)
    rect1d  r = A B (315/128)   / ( 4 pi^2) * Int S^2(A t cos phi) Sinc^2(B t sin phi)
    circ    r = (ka)^2 * 5 / (4 pi)         * Int Sc^2(ka t)

with A = ka, B = ka b/a and Int the weighted integral over the disk t < 1
(weight t / sqrt(1 - t^2)) or the exterior t > 1 (weight t / sqrt(t^2 - 1))
for the reactance. Under the e^{j omega t} convention the evanescent branch
k_z = -j sqrt(k_r^2 - k^2) makes the reactance of a baffled membrane
positive, and it is reported as such.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .quadrature import (
    DEFAULT_TOLERANCE,
    QuadratureResult,
    Tolerance,
    integrate_adaptive,
    integrate_inner_disk,
    integrate_outer_tail,
    solve_tail,
)
from .radiator import RadiatorKind, RadiatorSpec
from .spectra import shape_spectrum_circ, shape_spectrum_poly, shape_spectrum_sinc

RECT2D_FACTOR = 99225.0 / 16384.0 / (16.0 * math.pi**2)
RECT1D_FACTOR = 315.0 / 128.0 / (4.0 * math.pi**2)
CIRC_FACTOR = 5.0 / (4.0 * math.pi)

RECT_REACTANCE_LIMIT = 5.0
CIRC_REACTANCE_LIMIT = 5.5

# envelope constants
_S0 = 16.0 / 15.0
_POLY_ENERGY = math.pi * 256.0 / 315.0  # int_0^inf S(u)^2 du
_LANDAU = 0.7858  # sup_x x^(1/3) |J_nu(x)|


class Normalization(enum.Enum):
    BY_4AB_RHOC = "4ab*rho*c"
    BY_PIA2_RHOC = "pi*a^2*rho*c"

    @classmethod
    def for_kind(cls, kind: RadiatorKind) -> "Normalization":
        return cls.BY_4AB_RHOC if kind.is_rect else cls.BY_PIA2_RHOC


def reactance_validated(kind: RadiatorKind, ka: float) -> bool:
    limit = RECT_REACTANCE_LIMIT if kind.is_rect else CIRC_REACTANCE_LIMIT
    return ka <= limit


@dataclass(frozen=True)
class NormalizedImpedance:
    ka: float
    r: float
    x: float
    normalization: Normalization
    converged: bool = True
    r_error: float = 0.0
    x_error: float = 0.0
    evaluations: int = 0
    reactance_validated: bool = True

    @property
    def validity_flag(self) -> str:
        return "ok" if self.reactance_validated else "reactance-unvalidated"

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)


@dataclass(frozen=True)
class SweepSpec:
    ka_min: float
    ka_max: float
    n_points: int
    spacing: str = "linear"
    tol: Tolerance = DEFAULT_TOLERANCE
    output_format: str = "csv"

    def __post_init__(self):
        if not (self.ka_min > 0 and math.isfinite(self.ka_max)):
            raise ValueError("ka range must be finite and positive")
        if self.n_points < 1:
            raise ValueError("n_points must be at least 1")
        if self.n_points > 1 and not self.ka_min < self.ka_max:
            raise ValueError("ka_min must be below ka_max")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")

    def grid(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([float(self.ka_min)])
        if self.spacing == "log":
            return np.geomspace(self.ka_min, self.ka_max, self.n_points)
        return np.linspace(self.ka_min, self.ka_max, self.n_points)


@dataclass(frozen=True)
class ImpedanceCurve:
    spec: RadiatorSpec
    points: tuple
    tol: Tolerance = DEFAULT_TOLERANCE

    def __post_init__(self):
        kas = [p.ka for p in self.points]
        if any(b <= a for a, b in zip(kas, kas[1:])):
            raise ValueError("curve points must be strictly increasing in ka")

    @property
    def converged(self) -> bool:
        return all(p.converged for p in self.points)

    def arrays(self):
        return (
            np.array([p.ka for p in self.points]),
            np.array([p.r for p in self.points]),
            np.array([p.x for p in self.points]),
        )


# --------------------------------------------------------------------------
# tail envelopes

def _weight(T: float) -> float:
    return T / math.sqrt(T * T - 1.0)


def _poly_env_tail(A: float, T: float) -> float:
    """Bound on int_T^inf S^2(A t / sqrt 2) dt from |S(u)| <= 16 (1 + 3/u + 3/u^2) / u^3."""
    u = A * T / math.sqrt(2.0)
    f = 1.0 + 3.0 / u + 3.0 / (u * u)
    return math.sqrt(2.0) / A * 256.0 * f * f / (5.0 * u**5)


def _poly_band(A: float, T: float) -> float:
    """Bound on int_0^{2 pi} S^2(A T cos phi) dphi."""
    u = A * T / math.sqrt(2.0)
    f = 1.0 + 3.0 / u + 3.0 / (u * u)
    env = min(_S0**2, 256.0 * f * f / u**6)
    return 4.0 * (math.sqrt(2.0) * _POLY_ENERGY / (A * T) + 0.25 * math.pi * env)


def rect2d_tail_bound(A: float, B: float, T: float) -> float:
    """Bound on the reactance integral of the rect2d kernel beyond t = T."""
    m = min(A, B)
    return _weight(T) * 2.0 * math.pi * _S0**2 * _poly_env_tail(m, T)


def averaged_sinc2(w):
    """Smooth stand-in for Sinc^2 with the same large-argument mean 1/(2 w^2)."""
    return 1.0 / (1.0 + 2.0 * w * w)


def rect1d_tail_bound(A: float, B: float, T: float) -> float:
    """Bound on the averaged rect1d reactance integral beyond t = T."""
    e = _poly_env_tail(A, T)
    band = 2.0 * math.sqrt(2.0) * _POLY_ENERGY / (A * B * B * T * T)
    return _weight(T) * (band + (math.pi / (B * B * T * T) + math.pi) * e)


def rect1d_switch_estimate(A: float, B: float, T: float) -> float:
    """Estimate of int_T^inf S^2 (Sinc^2 - averaged) over the exterior.

    The oscillating remainder -cos(2w) / (2 w^2) is bounded by the second
    mean value theorem, the smooth remainder 1 / (2 w^2 (1 + 2 w^2)) and the
    near-axis band directly.
    """
    J = _poly_band(A, T)
    osc = J / (2.0 * B**3 * T * T)
    smooth = J / (12.0 * B**4 * T**3)
    near_axis = math.pi * _poly_env_tail(A, T)
    return _weight(T) * (osc + smooth + near_axis)


def circ_tail_bound(ka: float, T: float) -> float:
    """Bound on int_T^inf Sc^2(ka t) t / sqrt(t^2 - 1) dt, Sc = 16 J3(u) / u^3."""
    return _weight(T) * 256.0 * _LANDAU**2 * ka ** (-20.0 / 3.0) * T ** (-17.0 / 3.0) * 3.0 / 17.0


# --------------------------------------------------------------------------
# kernels

def _rect2d_kernel(A, B):
    def g(t, phi):
        return shape_spectrum_poly(A * t * np.cos(phi)) ** 2 * shape_spectrum_poly(B * t * np.sin(phi)) ** 2
    return g


def _rect1d_kernel(A, B, averaged=False):
    side = averaged_sinc2 if averaged else (lambda w: shape_spectrum_sinc(w) ** 2)

    def g(t, phi):
        return shape_spectrum_poly(A * t * np.cos(phi)) ** 2 * side(B * t * np.sin(phi))
    return g


def _check(ka, tol):
    if not (math.isfinite(ka) and ka > 0):
        raise ValueError("ka must be finite and positive")
    return tol if tol is not None else DEFAULT_TOLERANCE


def _assemble(spec, ka, factor, real: QuadratureResult, imag: QuadratureResult) -> NormalizedImpedance:
    return NormalizedImpedance(
        ka=float(ka),
        r=factor * real.value,
        x=factor * imag.value,
        normalization=Normalization.for_kind(spec.kind),
        converged=real.converged and imag.converged,
        r_error=factor * real.error_estimate,
        x_error=factor * imag.error_estimate,
        evaluations=real.evaluations + imag.evaluations,
        reactance_validated=reactance_validated(spec.kind, ka),
    )


def rect2d_impedance(spec: RadiatorSpec, ka: float, tol: Optional[Tolerance] = None) -> NormalizedImpedance:
    """Impedance of the clamped rectangle with the separable quartic profile.

    The kernel is symmetric under exchanging the axes, so the computation is
    always done with the shorter side first; r(ka, beta) = r(beta ka, 1/beta)
    then holds exactly.
    """
    if spec.kind is not RadiatorKind.RECT2D:
        raise ValueError("rect2d_impedance needs a RECT2D spec")
    tol = _check(ka, tol)
    A, B = sorted((ka, ka * spec.aspect))
    g = _rect2d_kernel(A, B)
    real = integrate_inner_disk(g, tol, symmetric=True)
    imag = integrate_outer_tail(
        g, tol, tail_bound=lambda T: rect2d_tail_bound(A, B, T), symmetric=True
    )
    return _assemble(spec, ka, A * B * RECT2D_FACTOR, real, imag)


def rect1d_impedance(spec: RadiatorSpec, ka: float, tol: Optional[Tolerance] = None) -> NormalizedImpedance:
    """Impedance of the long rectangle with a quartic profile across the width
    and a uniform one along the length.

    Sinc^2 decays only like 1/w^2, so far out in the evanescent region it is
    replaced by its smooth local mean; see :func:`rect1d_switch_estimate`.
    """
    if spec.kind is not RadiatorKind.RECT1D:
        raise ValueError("rect1d_impedance needs a RECT1D spec")
    tol = _check(ka, tol)
    A, B = ka, ka * spec.aspect
    g = _rect1d_kernel(A, B)
    real = integrate_inner_disk(g, tol, symmetric=True)
    imag = integrate_outer_tail(
        g,
        tol,
        tail_bound=lambda T: rect1d_tail_bound(A, B, T),
        symmetric=True,
        averaged=_rect1d_kernel(A, B, averaged=True),
        switch_bound=lambda T: rect1d_switch_estimate(A, B, T),
    )
    return _assemble(spec, ka, A * B * RECT1D_FACTOR, real, imag)


def axisymmetric_integrals(spectrum_fn, ka: float, tol: Tolerance, tail_bound=None):
    """Disk and exterior integrals of spectrum(ka t)^2 with the phi integral
    collapsed to 2 pi. Returns (real, imag); imag is None without a bound."""
    def inner(theta):
        s = np.sin(theta)
        return spectrum_fn(ka * s) ** 2 * s

    real = integrate_adaptive(inner, 0.0, 0.5 * math.pi, tol.scaled(1 / (2 * math.pi))).scaled(2 * math.pi)
    if tail_bound is None:
        return real, None

    def outer(psi):
        c = np.cosh(psi)
        return spectrum_fn(ka * c) ** 2 * c

    t_first = 2.0
    psi_first = math.acosh(t_first)
    sub = tol.scaled(1 / (2 * math.pi))
    first = integrate_adaptive(outer, 0.0, psi_first, sub.scaled(0.5))
    scale = sub.target(first.value)
    t_max = solve_tail(tail_bound, 0.1 * scale, start=t_first)
    if not math.isfinite(t_max):
        return real, QuadratureResult(first.value, math.inf, first.evaluations, False).scaled(2 * math.pi)
    res = first
    if t_max > t_first:
        psi_max = math.acosh(t_max)
        pieces = max(1, int(math.ceil((psi_max - psi_first) / 0.5)))
        rest = integrate_adaptive(
            outer, psi_first, psi_max, Tolerance(sub.rel, 0.4 * scale, sub.max_subdivisions), initial=pieces
        )
        res = first + rest
    err = res.error_estimate + tail_bound(t_max)
    imag = QuadratureResult(res.value, err, res.evaluations, res.converged and err <= sub.target(res.value))
    return real, imag.scaled(2 * math.pi)


def circular_impedance(radius_a: float, ka: float, tol: Optional[Tolerance] = None) -> NormalizedImpedance:
    """Impedance of the clamped disk with profile (1 - r^2/a^2)^2."""
    tol = _check(ka, tol)
    spec = RadiatorSpec.circular(radius_a)
    real, imag = axisymmetric_integrals(
        shape_spectrum_circ, ka, tol, tail_bound=lambda T: circ_tail_bound(ka, T)
    )
    return _assemble(spec, ka, ka * ka * CIRC_FACTOR, real, imag)


def radiation_impedance(spec: RadiatorSpec, ka: float, tol: Optional[Tolerance] = None) -> NormalizedImpedance:
    if spec.kind is RadiatorKind.RECT2D:
        return rect2d_impedance(spec, ka, tol)
    if spec.kind is RadiatorKind.RECT1D:
        return rect1d_impedance(spec, ka, tol)
    return circular_impedance(spec.radius, ka, tol)


def _point(args):
    spec, ka, tol = args
    return radiation_impedance(spec, ka, tol)


def sweep(spec: RadiatorSpec, sweep_spec: SweepSpec, jobs: int = 1) -> ImpedanceCurve:
    """Evaluate every grid point independently; results come back in grid order."""
    kas = sweep_spec.grid()
    if np.any(np.diff(kas) <= 0) or np.any(kas <= 0):
        raise ValueError("ka grid must be strictly increasing and positive")
    tasks = [(spec, float(ka), sweep_spec.tol) for ka in kas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_point, tasks))
    else:
        points = [_point(t) for t in tasks]
    return ImpedanceCurve(spec, tuple(points), sweep_spec.tol)
