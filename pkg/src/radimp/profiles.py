"""Velocity profiles, RMS normalization and the ARE comparator.

Profiles are peak-normalized (v0 = 1):

    rect2d   (1 - (x/a)^2)^2 (1 - (y/b)^2)^2
    rect1d   (1 - (x/a)^2)^2 for |y| < b
    circ     (1 - r^2/a^2)^2

Sampled grids (for example FEM exports) are read from CSV files with the
header ``x,y,v``; rows may come in any order but must fill a tensor grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .radiator import RadiatorKind, RadiatorSpec
from .spectra import ShapeKind


class GridError(ValueError):
    """A sampled velocity grid is malformed or does not match the geometry."""


_AXES = {
    RadiatorKind.RECT2D: (ShapeKind.POLY_CLAMPED, ShapeKind.POLY_CLAMPED),
    RadiatorKind.RECT1D: (ShapeKind.POLY_CLAMPED, ShapeKind.RECT_WINDOW),
    RadiatorKind.CIRCULAR: (ShapeKind.CIRC_POLY_CLAMPED, ShapeKind.CIRC_POLY_CLAMPED),
}

# <v^2> / v0^2 per geometry kind
_VRMS = {
    RadiatorKind.RECT2D: Fraction(16384, 99225),
    RadiatorKind.RECT1D: Fraction(128, 315),
    RadiatorKind.CIRCULAR: Fraction(1, 5),
}

# <v> / v0 per geometry kind; U = mean * area
_MEAN = {
    RadiatorKind.RECT2D: Fraction(64, 225),
    RadiatorKind.RECT1D: Fraction(8, 15),
    RadiatorKind.CIRCULAR: Fraction(1, 3),
}


@dataclass(frozen=True)
class ProfileModel:
    geometry: RadiatorSpec

    @property
    def axes(self) -> tuple:
        """Shape factor along x and along y."""
        return _AXES[self.geometry.kind]


def model_for(spec: RadiatorSpec) -> ProfileModel:
    return ProfileModel(spec)


def eval_profile(model: ProfileModel, x, y):
    """Peak-normalized velocity at (x, y); zero outside the aperture."""
    g = model.geometry
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = g.half_width
    if g.kind is RadiatorKind.CIRCULAR:
        q = (x * x + y * y) / (a * a)
        out = np.where(q <= 1.0, (1.0 - np.minimum(q, 1.0)) ** 2, 0.0)
    else:
        b = g.half_length
        px = np.clip(1.0 - (x / a) ** 2, 0.0, None) ** 2
        if g.kind is RadiatorKind.RECT2D:
            py = np.clip(1.0 - (y / b) ** 2, 0.0, None) ** 2
        else:
            py = (np.abs(y) < b).astype(float)
        out = px * py
    if out.ndim == 0:
        return float(out)
    return out


def vrms_ratio(model: ProfileModel) -> Fraction:
    """Exact V_RMS^2 / v0^2 for the profile."""
    return _VRMS[model.geometry.kind]


def mean_ratio(model: ProfileModel) -> Fraction:
    """Exact spatial mean of the profile over the aperture, over v0."""
    return _MEAN[model.geometry.kind]


# --------------------------------------------------------------------------
# sampled grids

@dataclass(frozen=True)
class SampledGrid:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # shape (len(xs), len(ys)), values[i, j] at (xs[i], ys[j])

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.size < 2 or ys.size < 2:
            raise GridError("grid needs at least two coordinates per axis")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise GridError("grid coordinates must be strictly increasing")
        if values.shape != (xs.size, ys.size):
            raise GridError(f"values shape {values.shape} does not match {(xs.size, ys.size)}")
        if not np.all(np.isfinite(values)):
            raise GridError("grid values must be finite")
        if not np.any(values != 0):
            raise GridError("grid values are all zero")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def scaled(self, factor: float) -> "SampledGrid":
        return SampledGrid(self.xs, self.ys, self.values * factor)

    def mirrored(self) -> "SampledGrid":
        """Complete a quarter grid (x >= 0, y >= 0) by even reflection."""
        if self.xs[0] < 0 or self.ys[0] < 0:
            raise GridError("mirroring needs a quarter grid with x >= 0 and y >= 0")
        xs, vx = _reflect(self.xs, self.values, axis=0)
        ys, v = _reflect(self.ys, vx, axis=1)
        return SampledGrid(xs, ys, v)


def _reflect(coords, values, axis):
    has_zero = coords[0] == 0.0
    tail = coords[1:] if has_zero else coords
    vtail = np.take(values, np.arange(1 if has_zero else 0, coords.size), axis=axis)
    full = np.concatenate([-tail[::-1], coords])
    v = np.concatenate([np.flip(vtail, axis=axis), values], axis=axis)
    return full, v


def sample_grid(model: ProfileModel, nx: int, ny: int, scale: float = 1.0) -> SampledGrid:
    """Tensor grid of the model over its bounding box, endpoints included."""
    g = model.geometry
    b = g.half_length if g.kind.is_rect else g.half_width
    xs = np.linspace(-g.half_width, g.half_width, nx)
    ys = np.linspace(-b, b, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return SampledGrid(xs, ys, scale * eval_profile(model, X, Y))


def trapezoid_weights(coords: np.ndarray) -> np.ndarray:
    w = np.zeros_like(coords)
    d = np.diff(coords)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _check_coverage(grid: SampledGrid, model: ProfileModel, slack: float = 0.02):
    g = model.geometry
    a = g.half_width
    b = g.half_length if g.kind.is_rect else a
    for name, coords, half in (("x", grid.xs, a), ("y", grid.ys, b)):
        lo, hi = coords[0], coords[-1]
        if lo < -half * (1 + 1e-9) or hi > half * (1 + 1e-9):
            raise GridError(f"grid {name} range [{lo:g}, {hi:g}] exceeds the aperture half-extent {half:g}")
        if lo > -half * (1 - slack) or hi < half * (1 - slack):
            raise GridError(f"grid {name} range [{lo:g}, {hi:g}] does not cover the aperture half-extent {half:g}")


def are(grid: SampledGrid, model: ProfileModel) -> float:
    """Absolute relative error between a sampled field and the model profile.

    Both fields are normalized by their peak over the grid nodes, so a grid
    that misses the center still compares equal to the model sampled on it.
    Area weights are trapezoidal on the tensor grid.
    """
    _check_coverage(grid, model)
    v = grid.values
    peak = v.flat[int(np.argmax(np.abs(v)))]
    vg = v / peak
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    vm = eval_profile(model, X, Y)
    model_peak = float(np.max(vm))
    if model_peak <= 0.0:
        raise GridError("grid nodes miss the model aperture")
    vm = vm / model_peak
    w = np.outer(trapezoid_weights(grid.xs), trapezoid_weights(grid.ys))
    denom = float(np.sum(vg * w))
    if denom == 0.0:
        raise GridError("normalized grid integrates to zero")
    return float(np.sum(np.abs(vg - vm) * w) / denom)


def _merge_coords(raw: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    u = np.unique(raw)
    if u.size < 2:
        return u
    span = max(float(np.max(np.abs(u))), np.finfo(float).tiny)
    keep = np.concatenate([[True], np.diff(u) > rtol * span])
    return u[keep]


def _nearest_index(coords: np.ndarray, values: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(coords, values), 1, coords.size - 1)
    left = coords[idx - 1]
    right = coords[idx]
    return np.where(values - left <= right - values, idx - 1, idx)


def load_grid(path, mirror: bool = False) -> SampledGrid:
    """Read a ``x,y,v`` CSV point cloud into a tensor grid.

    Coordinates equal to within 1e-9 of the extent are merged. Every node of
    the resulting tensor grid must appear; scattered (non-tensor) exports are
    rejected rather than resampled.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"grid file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GridError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header] != ["x", "y", "v"]:
            raise GridError(f"{path}: expected header 'x,y,v', got {','.join(header)!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise GridError(f"{path}: row {line_no}: expected 3 fields, got {len(row)}")
            try:
                x, y, v = (float(c) for c in row)
            except ValueError:
                raise GridError(f"{path}: row {line_no}: non-numeric field") from None
            if not all(math.isfinite(c) for c in (x, y, v)):
                raise GridError(f"{path}: row {line_no}: non-finite value")
            rows.append((x, y, v))
    if not rows:
        raise GridError(f"{path}: no data rows")
    data = np.array(rows)
    xs = _merge_coords(data[:, 0])
    ys = _merge_coords(data[:, 1])
    if xs.size < 2 or ys.size < 2:
        raise GridError(f"{path}: need at least two distinct x and y coordinates")
    ix = _nearest_index(xs, data[:, 0])
    iy = _nearest_index(ys, data[:, 1])
    values = np.full((xs.size, ys.size), np.nan)
    for k, (i, j) in enumerate(zip(ix, iy)):
        prev = values[i, j]
        if not np.isnan(prev) and prev != data[k, 2]:
            raise GridError(f"{path}: row {k + 2}: conflicting duplicate of node ({xs[i]:g}, {ys[j]:g})")
        values[i, j] = data[k, 2]
    missing = int(np.count_nonzero(np.isnan(values)))
    if missing:
        raise GridError(
            f"{path}: points do not form a tensor grid ({missing} of {values.size} nodes missing)"
        )
    grid = SampledGrid(xs, ys, values)
    return grid.mirrored() if mirror else grid


def write_grid(path, grid: SampledGrid) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "v"])
        for i, x in enumerate(grid.xs):
            for j, y in enumerate(grid.ys):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(grid.values[i, j]))])
