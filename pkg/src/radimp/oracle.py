"""Brute-force Rayleigh double sum, used to cross-check the spectral path.

The membrane is cut into uniform panels. With the e^{j omega t} convention
the complex power is

    Z = j rho c k / (2 pi) * sum_i sum_j v_i v_j A_i A_j exp(-j k R_ij) / R_ij

for i != j. The self-term of each panel replaces it by a disk about its
center, where the Green's function integrates to (1 - exp(-j k eps)) / (j k).
The equal-area radius eps_i = sqrt(A_i / pi) leaves the reactance with a
first-order error in the panel size, so by default the reactance uses the
radius that makes the lattice sum of 1/R consistent with its integral. Resistance and reactance both come
out positive for a radiating, mass-loaded membrane.

The cost is O(N^2) by design; meshes are capped at ``MAX_PANELS``. Panel
centers sit on a uniform lattice, so the kernel is tabulated once per k over
lattice offsets and every pair is then summed with matrix products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import j1, struve

from .impedance import Normalization, NormalizedImpedance, reactance_validated
from .profiles import eval_profile, mean_ratio, model_for, vrms_ratio
from .radiator import RadiatorKind, RadiatorSpec

MAX_PANELS = 65536
MIN_PER_WIDTH = 8
# lim_M [int over the (2M+1)^2 square of 1/r  -  sum over nonzero lattice
# points of 1/|m|] for the unit square lattice, = -4 zeta(1/2) beta(1/2)
LATTICE_1R = 3.900264920001956
_CHUNK_ELEMENTS = 1 << 21


class MeshTooLarge(MemoryError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class MediumParams:
    density: float = 1.21
    sound_speed: float = 343.0

    def __post_init__(self):
        if not (self.density > 0 and self.sound_speed > 0):
            raise ValueError("density and sound speed must be positive")

    @property
    def impedance(self) -> float:
        return self.density * self.sound_speed


@dataclass(frozen=True)
class PanelMesh:
    spec: RadiatorSpec
    nx: int
    ny: int
    hx: float
    hy: float
    centers: np.ndarray  # (N, 2)
    areas: np.ndarray  # (N,)
    velocities: np.ndarray  # (N,), peak-normalized

    @property
    def size(self) -> int:
        return self.areas.size

    @property
    def panel_size(self) -> float:
        return max(self.hx, self.hy)

    def with_velocities(self, velocities) -> "PanelMesh":
        v = np.broadcast_to(np.asarray(velocities, dtype=float), self.areas.shape).copy()
        return PanelMesh(self.spec, self.nx, self.ny, self.hx, self.hy, self.centers, self.areas, v)


def _quadrant_area(x, y, a):
    """Area of [0, x] x [0, y] inside the disk of radius a (x, y >= 0)."""
    def g(s):
        return 0.5 * (s * np.sqrt(np.maximum(a * a - s * s, 0.0)) + a * a * np.arcsin(np.clip(s / a, -1.0, 1.0)))

    m = np.minimum(x, a)
    xc = np.sqrt(np.maximum(a * a - y * y, 0.0))
    c = np.minimum(xc, m)
    return y * c + g(m) - g(c)


def _signed_area(x, y, a):
    return np.sign(x) * np.sign(y) * _quadrant_area(np.abs(x), np.abs(y), a)


def disk_cell_areas(x0, x1, y0, y1, a):
    """Exact area of each cell [x0, x1] x [y0, y1] clipped to the disk."""
    area = (
        _signed_area(x1, y1, a)
        - _signed_area(x0, y1, a)
        - _signed_area(x1, y0, a)
        + _signed_area(x0, y0, a)
    )
    return np.maximum(area, 0.0)


def build_mesh(spec: RadiatorSpec, n_per_width: int, max_panels: int = MAX_PANELS) -> PanelMesh:
    """Uniform panels over the aperture with the profile sampled at centers.

    ``n_per_width`` panels span the width 2a (the diameter for the disk);
    the count along y follows the aspect ratio so panels stay near-square.
    Disk panels are clipped to their exact area inside the circle.
    """
    if n_per_width < MIN_PER_WIDTH:
        raise PreconditionError(f"mesh too coarse: n_per_width must be at least {MIN_PER_WIDTH}, got {n_per_width}")
    a = spec.half_width
    if spec.kind.is_rect:
        b = spec.half_length
        nx = n_per_width
        ny = max(1, int(round(n_per_width * spec.aspect)))
    else:
        b = a
        nx = ny = n_per_width
    if nx * ny > max_panels:
        raise MeshTooLarge(f"mesh of {nx}x{ny} panels exceeds the budget of {max_panels}")
    xe = np.linspace(-a, a, nx + 1)
    ye = np.linspace(-b, b, ny + 1)
    hx, hy = 2 * a / nx, 2 * b / ny
    xc = 0.5 * (xe[:-1] + xe[1:])
    yc = 0.5 * (ye[:-1] + ye[1:])
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    centers = np.column_stack([X.ravel(), Y.ravel()])
    if spec.kind.is_rect:
        areas = np.full(nx * ny, hx * hy)
    else:
        X0, Y0 = np.meshgrid(xe[:-1], ye[:-1], indexing="ij")
        X1, Y1 = np.meshgrid(xe[1:], ye[1:], indexing="ij")
        areas = disk_cell_areas(X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel(), a)
        inside = areas > 0
        centers, areas = centers[inside], areas[inside]
        areas = areas * (spec.area / areas.sum())
    v = eval_profile(model_for(spec), centers[:, 0], centers[:, 1])
    return PanelMesh(spec, nx, ny, hx, hy, centers, areas, np.asarray(v, dtype=float))


def _lattice_indices(mesh: PanelMesh):
    """Integer (i, j) of each center on the panel lattice, or None if off it."""
    xy = mesh.centers
    i = np.rint((xy[:, 0] - xy[:, 0].min()) / mesh.hx)
    j = np.rint((xy[:, 1] - xy[:, 1].min()) / mesh.hy)
    x_ok = np.allclose(xy[:, 0] - xy[:, 0].min(), i * mesh.hx, rtol=0, atol=1e-9 * mesh.hx)
    y_ok = np.allclose(xy[:, 1] - xy[:, 1].min(), j * mesh.hy, rtol=0, atol=1e-9 * mesh.hy)
    if not (x_ok and y_ok):
        return None
    return i.astype(np.int64), j.astype(np.int64)


def _lattice_pair_sum(W: np.ndarray, table: np.ndarray, use_symmetry: bool) -> float:
    """sum_{p != q} W_p W_q table[|di|, |dj|] over every ordered lattice pair.

    Row offset d couples rows i and i + d through the Toeplitz block
    T_d[j, j'] = table[d, |j - j'|]; each block is applied with a matmul.
    """
    ni, nj = W.shape
    J = np.abs(np.arange(nj)[:, None] - np.arange(nj)[None, :])
    total = 0.0
    offsets = range(ni) if use_symmetry else range(-(ni - 1), ni)
    for d in offsets:
        T = table[abs(d)][J]
        if d >= 0:
            part = float(np.sum((W[: ni - d] @ T) * W[d:]))
        else:
            part = float(np.sum((W[-d:] @ T) * W[: ni + d]))
        total += part if (d == 0 or not use_symmetry) else 2.0 * part
    return total


def _pair_sums(mesh: PanelMesh, ks: np.ndarray, use_symmetry: bool, tabulate: bool = True):
    """Off-diagonal sums of w_i w_j sin(kR)/R and w_i w_j cos(kR)/R per k.

    Every pair is visited. On the panel lattice R only depends on the index
    offset, so the kernels are tabulated once per k; meshes off the lattice
    take the direct chunked path.
    """
    xy = mesh.centers
    w = mesh.velocities * mesh.areas
    lattice = _lattice_indices(mesh) if tabulate else None
    if lattice is not None:
        li, lj = lattice
        ni, nj = int(li.max()) + 1, int(lj.max()) + 1
        W = np.zeros((ni, nj))
        W[li, lj] = w
        di, dj = np.meshgrid(np.arange(ni) * mesh.hx, np.arange(nj) * mesh.hy, indexing="ij")
        r_tab = np.hypot(di, dj)
        r_tab[0, 0] = 1.0
        inv_tab = 1.0 / r_tab
        inv_tab[0, 0] = 0.0
        s = [_lattice_pair_sum(W, np.sin(k * r_tab) * inv_tab, use_symmetry) for k in ks]
        c = [_lattice_pair_sum(W, np.cos(k * r_tab) * inv_tab, use_symmetry) for k in ks]
        return np.array(s), np.array(c)

    n = w.size
    rows = max(1, _CHUNK_ELEMENTS // max(n, 1))
    s = np.zeros(len(ks))
    c = np.zeros(len(ks))
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        cols = slice(start, n) if use_symmetry else slice(0, n)
        R = np.hypot(xy[start:stop, 0, None] - xy[None, cols, 0], xy[start:stop, 1, None] - xy[None, cols, 1])
        with np.errstate(divide="ignore"):
            inv = np.where(R > 0, 1.0 / R, 0.0)
        if use_symmetry:
            # strict upper triangle only
            m = stop - start
            inv[:, :m] = np.triu(inv[:, :m], 1)
        wi, wj = w[start:stop], w[cols]
        for n_k, k in enumerate(ks):
            s[n_k] += wi @ ((np.sin(k * R) * inv) @ wj)
            c[n_k] += wi @ ((np.cos(k * R) * inv) @ wj)
    factor = 2.0 if use_symmetry else 1.0
    return factor * s, factor * c


def bruteforce_curve(
    mesh: PanelMesh,
    kas: Sequence[float],
    medium: MediumParams = MediumParams(),
    use_symmetry: bool = True,
    tabulate: bool = True,
    self_term: str = "matched",
) -> list:
    """Normalized impedance at several ka sharing one pass over the pairs.

    ``tabulate=False`` evaluates the Green's function separately for every
    pair instead of tabulating it over lattice offsets; the sums agree to
    rounding but the per-pair path is two orders of magnitude slower.

    ``self_term`` picks the patch that stands in for i = j. "disk" is the
    equal-area disk for both parts. "matched" keeps it for the resistance
    but gives the reactance patch the radius LATTICE_1R / (2 pi) * sqrt(A),
    which cancels the first-order error of the midpoint sum of 1/R on a
    square lattice; it needs square panels and falls back to "disk" if they
    are not.
    """
    if self_term not in ("matched", "disk"):
        raise ValueError(f"unknown self_term {self_term!r}")
    kas = np.asarray(kas, dtype=float)
    if kas.ndim != 1 or kas.size == 0 or np.any(~(kas > 0)) or np.any(~np.isfinite(kas)):
        raise PreconditionError("ka values must be finite and positive")
    a = mesh.spec.half_width
    ks = kas / a
    h = mesh.panel_size
    worst = float(np.max(ks)) * h
    if worst > math.pi / 4:
        raise PreconditionError(
            f"panel size {h:g} exceeds lambda/8 at ka={float(np.max(kas)):g}; refine the mesh"
        )
    s, c = _pair_sums(mesh, ks, use_symmetry, tabulate)
    v2a = mesh.velocities**2 * mesh.areas
    eps = np.sqrt(mesh.areas / math.pi)
    eps_x = eps
    if self_term == "matched" and math.isclose(mesh.hx, mesh.hy, rel_tol=1e-12):
        eps_x = LATTICE_1R / (2 * math.pi) * np.sqrt(mesh.areas)
    area = float(mesh.areas.sum())
    vrms2 = float(v2a.sum()) / area
    rhoc = medium.impedance
    normalization = Normalization.for_kind(mesh.spec.kind)
    out = []
    for k, ka, sk, ck in zip(ks, kas, s, c):
        self_re = float(np.sum(v2a * (1.0 - np.cos(k * eps))))
        self_im = float(np.sum(v2a * np.sin(k * eps_x)))
        re = rhoc * (k / (2 * math.pi) * sk + self_re)
        im = rhoc * (k / (2 * math.pi) * ck + self_im)
        norm = rhoc * vrms2 * area
        r, x = re / norm, im / norm
        if not (math.isfinite(r) and math.isfinite(x)):
            raise ArithmeticError("non-finite accumulation in the Rayleigh double sum")
        out.append(
            NormalizedImpedance(
                ka=float(ka),
                r=r,
                x=x,
                normalization=normalization,
                converged=True,
                reactance_validated=reactance_validated(mesh.spec.kind, float(ka)),
            )
        )
    return out


def bruteforce_impedance(
    mesh: PanelMesh,
    ka: float,
    medium: MediumParams = MediumParams(),
    use_symmetry: bool = True,
    tabulate: bool = True,
    self_term: str = "matched",
) -> NormalizedImpedance:
    """Normalized impedance of the panel mesh from the direct double sum."""
    return bruteforce_curve(mesh, [ka], medium, use_symmetry, tabulate, self_term)[0]


def monopole_asymptote(spec: RadiatorSpec) -> float:
    """C such that r -> C (ka)^2 as ka -> 0.

    From the baffled monopole power rho c k^2 U^2 / (2 pi) with volume
    velocity U = <v> A, referred to V_RMS^2 A.
    """
    model = model_for(spec)
    ratio = float(mean_ratio(model) ** 2 / vrms_ratio(model))
    return ratio * spec.area / (2 * math.pi * spec.half_width**2)


def piston_impedance(ka: float) -> tuple:
    """Exact baffled circular piston (r, x) normalized by rho c pi a^2."""
    return float(1.0 - j1(2 * ka) / ka), float(struve(1, 2 * ka) / ka)
