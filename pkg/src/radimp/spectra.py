"""Closed-form shape spectra of the radiator velocity profiles.

Each spectrum is the spatial Fourier transform of one profile factor, scaled
so that the transform over the physical aperture is (extent) x spectrum:

    poly   S(u)   = int_{-1}^{1} exp(i u s) (1 - s^2)^2 ds
    sinc   Sinc(u) = (1/2) int_{-1}^{1} exp(i u s) ds = sin(u) / u
    circ   Sc(u)  = 2 int_0^1 (1 - s^2)^2 J0(u s) s ds = 16 J3(u) / u^3

All functions accept scalars or arrays and are even in ``u``.
"""
from __future__ import annotations

import enum

import numpy as np
from scipy.special import jv


class DomainError(ValueError):
    """Raised when a spectrum is evaluated at a non-finite argument."""


class ShapeKind(enum.Enum):
    POLY_CLAMPED = "poly"
    RECT_WINDOW = "rect"
    CIRC_POLY_CLAMPED = "circ"


# Taylor switch for the poly spectrum. Below it the closed form loses digits
# to cancellation (numerator ~ u^5).
POLY_SWITCH = 0.5

# (-1)^n 16 / ((2n)! (2n+1)(2n+3)(2n+5)), n = 0..5
POLY_TAYLOR = (
    16.0 / 15.0,
    -8.0 / 105.0,
    2.0 / 945.0,
    -1.0 / 31185.0,
    1.0 / 3243240.0,
    -1.0 / 486486000.0,
)

SINC_SWITCH = 1e-3
CIRC_SWITCH = 0.5

# 16 (-1)^m / (m! (m+3)! 2^(2m+3)), n = 0..6 -> series of 16 J3(u)/u^3 in u^2
CIRC_TAYLOR = tuple(
    16.0 * (-1) ** m / (np.prod(np.arange(1, m + 1, dtype=float)) * np.prod(np.arange(1, m + 4, dtype=float)) * 2.0 ** (2 * m + 3))
    for m in range(7)
)


def _as_checked(u):
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("shape spectrum argument must be finite")
    return np.abs(arr)


def _horner(coeffs, w):
    out = np.full_like(w, coeffs[-1])
    for c in coeffs[-2::-1]:
        out = out * w + c
    return out


def _finish(u, out):
    if np.ndim(u) == 0:
        return float(out)
    return out


def poly_closed_form(u):
    """Closed form of the clamped-polynomial spectrum (no Taylor fallback)."""
    u = np.asarray(u, dtype=float)
    return -16.0 * (3.0 * u * np.cos(u) + (u * u - 3.0) * np.sin(u)) / u**5


def poly_taylor(u):
    """Even Taylor series of the clamped-polynomial spectrum through u^10."""
    u = np.asarray(u, dtype=float)
    return _horner(POLY_TAYLOR, u * u)


def shape_spectrum_poly(u):
    """S(u) = -16 (3u cos u + (u^2 - 3) sin u) / u^5, with S(0) = 16/15."""
    a = _as_checked(u)
    out = np.empty_like(a)
    small = a < POLY_SWITCH
    out[small] = poly_taylor(a[small])
    big = ~small
    out[big] = poly_closed_form(a[big])
    return _finish(u, out)


def shape_spectrum_sinc(u):
    """Unnormalized sinc, sin(u)/u."""
    a = _as_checked(u)
    out = np.empty_like(a)
    small = a < SINC_SWITCH
    w = a[small] ** 2
    out[small] = 1.0 - w / 6.0 + w * w / 120.0
    big = ~small
    out[big] = np.sin(a[big]) / a[big]
    return _finish(u, out)


def shape_spectrum_circ(u):
    """Spectrum of the axisymmetric profile (1 - r^2/a^2)^2, Sc(0) = 1/3.

    The 2D transform of the profile over the disk of radius ``a`` equals
    pi a^2 Sc(k_r a).
    """
    a = _as_checked(u)
    out = np.empty_like(a)
    small = a < CIRC_SWITCH
    out[small] = _horner(CIRC_TAYLOR, a[small] ** 2)
    big = ~small
    out[big] = 16.0 * jv(3, a[big]) / a[big] ** 3
    return _finish(u, out)


def shape_spectrum_piston(u):
    """Spectrum of a uniform disk, 2 J1(u)/u. Used for self-checks."""
    a = _as_checked(u)
    out = np.empty_like(a)
    small = a < CIRC_SWITCH
    w = a[small] ** 2
    out[small] = _horner(
        tuple(2.0 * (-1) ** m / (np.prod(np.arange(1, m + 1, dtype=float)) * np.prod(np.arange(1, m + 2, dtype=float)) * 2.0 ** (2 * m + 1)) for m in range(8)),
        w,
    )
    big = ~small
    out[big] = 2.0 * jv(1, a[big]) / a[big]
    return _finish(u, out)


SPECTRA = {
    ShapeKind.POLY_CLAMPED: shape_spectrum_poly,
    ShapeKind.RECT_WINDOW: shape_spectrum_sinc,
    ShapeKind.CIRC_POLY_CLAMPED: shape_spectrum_circ,
}


def spectrum(kind: ShapeKind):
    return SPECTRA[kind]
