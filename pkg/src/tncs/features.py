"""Pixel/qubit feature map and the image container.

A gray pixel x in [0, 1] embeds into a qubit as
(cos(x*pi/2), sin(x*pi/2)), so an image becomes a product state with one
qubit per pixel. The inverse map folds eigenvector sign ambiguity back into
the nonnegative quadrant, which makes decoding from dominant eigenstates
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class QubitState:
    """Normalized two-component real state (a, b) with a^2 + b^2 = 1."""

    a: float
    b: float

    def __post_init__(self):
        if abs(self.a * self.a + self.b * self.b - 1.0) > _NORM_TOL:
            raise ArgumentError(
                f"qubit state ({self.a}, {self.b}) is not normalized"
            )

    def __array__(self, dtype=None, copy=None):
        return np.array([self.a, self.b], dtype=dtype or np.float64)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=np.float64)


@dataclass
class Image:
    """Flat pixel vector in [0, 1] with its grid geometry.

    Pixels are stored row-major: pixel (r, c) sits at index r * width + c.
    """

    pixels: np.ndarray
    width: int
    height: int
    label: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.float64).ravel()
        if self.width * self.height != self.pixels.size:
            raise ArgumentError(
                f"geometry {self.width}x{self.height} does not match "
                f"{self.pixels.size} pixels"
            )
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise ArgumentError("pixel values must lie in [0, 1]")

    @property
    def n_pixels(self) -> int:
        return self.pixels.size

    def as_grid(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)


def pixel_to_state(x: float) -> QubitState:
    """Embed one pixel value as a qubit state.

    Raises:
        ArgumentError: if x lies outside [0, 1]; values are never clamped.
    """
    if not 0.0 <= x <= 1.0:
        raise ArgumentError(f"pixel value {x!r} outside [0, 1]")
    half = 0.5 * math.pi * x
    return QubitState(math.cos(half), math.sin(half))


def state_to_pixel(state) -> float:
    """Invert the feature map, folding signs into the first quadrant.

    Eigensolvers return eigenvectors only up to sign; taking absolute values
    of both components maps any sign convention onto the feature manifold, so
    ``state_to_pixel(pixel_to_state(x)) == x`` to near machine precision.
    """
    v = np.asarray(state, dtype=np.float64)
    if v.shape != (2,):
        raise ArgumentError(f"expected a two-component state, got shape {v.shape}")
    return (2.0 / math.pi) * math.atan2(abs(float(v[1])), abs(float(v[0])))


def image_to_product(img: Image) -> list[QubitState]:
    """Map an image to its list of per-pixel qubit states."""
    return [pixel_to_state(float(x)) for x in img.pixels]


def pixel_state_array(pixels) -> np.ndarray:
    """Vectorized feature map: (n,) pixels -> (n, 2) qubit amplitudes."""
    x = np.asarray(pixels, dtype=np.float64)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ArgumentError("pixel values must lie in [0, 1]")
    half = 0.5 * np.pi * x
    return np.stack([np.cos(half), np.sin(half)], axis=-1)
