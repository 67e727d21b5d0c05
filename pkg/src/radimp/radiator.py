"""Radiator geometry shared by the impedance, oracle and profile modules."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional


class RadiatorKind(enum.Enum):
    RECT2D = "rect2d"
    RECT1D = "rect1d"
    CIRCULAR = "circ"

    @property
    def is_rect(self) -> bool:
        return self is not RadiatorKind.CIRCULAR


@dataclass(frozen=True)
class RadiatorSpec:
    """Membrane geometry.

    For the rectangular kinds ``half_width`` is a (along x) and
    ``half_length`` is b (along y). For the circular kind ``half_width`` is
    the radius and ``half_length`` is None.
    """

    kind: RadiatorKind
    half_width: float
    half_length: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError("half_width must be finite and positive")
        if self.kind.is_rect:
            b = self.half_length
            if b is None or not (math.isfinite(b) and b > 0):
                raise ValueError("rectangular radiators need a finite positive half_length")
        elif self.half_length is not None:
            raise ValueError("circular radiators carry a radius only")

    @classmethod
    def rect2d(cls, aspect: float, half_width: float = 1.0) -> "RadiatorSpec":
        return cls(RadiatorKind.RECT2D, half_width, aspect * half_width)

    @classmethod
    def rect1d(cls, aspect: float, half_width: float = 1.0) -> "RadiatorSpec":
        return cls(RadiatorKind.RECT1D, half_width, aspect * half_width)

    @classmethod
    def circular(cls, radius: float = 1.0) -> "RadiatorSpec":
        return cls(RadiatorKind.CIRCULAR, radius)

    @property
    def radius(self) -> float:
        if self.kind.is_rect:
            raise AttributeError("rectangular radiators have no radius")
        return self.half_width

    @property
    def aspect(self) -> float:
        """b/a for rectangles, 1 for the disk."""
        if not self.kind.is_rect:
            return 1.0
        return self.half_length / self.half_width

    @property
    def area(self) -> float:
        if self.kind.is_rect:
            return 4.0 * self.half_width * self.half_length
        return math.pi * self.half_width**2
