"""Uniform planar array geometry and steering vectors.

All arrays (Tx, Rx and RIS) lie in the x-y plane with element ``n`` at
``(n_x * dx, n_y * dy)``.  Elevation is the polar angle measured from the
+z axis, azimuth is measured in the x-y plane from +x.  Elements are
ordered with ``n_x`` running fastest, i.e. ``n = n_x + nx * n_y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "Angle2D",
    "ArrayGeometry",
    "steering_matrix",
    "steering_vector",
    "wavevector",
    "wrap_angles",
]


def wrap_angles(azimuth, elevation):
    """Canonicalise (azimuth, elevation) to ``[0, 2pi) x [0, pi)``.

    Elevations outside ``[0, pi]`` are reflected through the pole with the
    azimuth rotated by pi, which describes the same direction, so the
    steering vector of the wrapped pair is identical to the unwrapped one.
    An elevation of exactly pi is mapped to 0 (both give a zero in-plane
    wave-number).
    """
    az = np.asarray(azimuth, dtype=float)
    el = np.mod(np.asarray(elevation, dtype=float), TWO_PI)
    beyond = el > np.pi
    el = np.where(beyond, TWO_PI - el, el)
    az = np.where(beyond, az + np.pi, az)
    el = np.where(el >= np.pi, 0.0, el)
    az = np.mod(az, TWO_PI)
    # mod can round up to exactly 2pi for tiny negative inputs
    az = np.where(az >= TWO_PI, 0.0, az)
    return az, el


def _wrap_scalar(az: float, el: float):
    """Pure-Python :func:`wrap_angles` for one pair (numpy is slow on scalars)."""
    el = el % TWO_PI
    if el > math.pi:
        el, az = TWO_PI - el, az + math.pi
    if el >= math.pi:
        el = 0.0
    az = az % TWO_PI
    if az >= TWO_PI:
        az = 0.0
    return az, el


@dataclass(frozen=True)
class Angle2D:
    """A direction as (azimuth, elevation) in radians, stored wrapped."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        az, el = _wrap_scalar(float(self.azimuth), float(self.elevation))
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "elevation", el)

    @classmethod
    def from_degrees(cls, azimuth_deg: float, elevation_deg: float) -> "Angle2D":
        return cls(np.deg2rad(azimuth_deg), np.deg2rad(elevation_deg))

    @classmethod
    def from_vector(cls, direction) -> "Angle2D":
        """Direction of a 3-D Cartesian vector (need not be normalised)."""
        x, y, z = np.asarray(direction, dtype=float)
        r = np.sqrt(x * x + y * y + z * z)
        if r == 0.0:
            raise ValueError("cannot take the direction of a zero vector")
        return cls(np.arctan2(y, x), np.arccos(np.clip(z / r, -1.0, 1.0)))


@dataclass(frozen=True)
class ArrayGeometry:
    """Layout of a uniform planar array.

    Parameters
    ----------
    nx, ny : int
        Element counts along x and y.
    dx, dy : float
        Inter-element spacing in metres.
    wavelength : float
        Carrier wavelength in metres.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    wavelength: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError(f"element counts must be integers, got {self.nx}x{self.ny}")
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"element counts must be >= 1, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0 and self.wavelength > 0):
            raise ValueError("spacings and wavelength must be strictly positive")

    @classmethod
    def half_wavelength(cls, nx: int, ny: int, wavelength: float) -> "ArrayGeometry":
        return cls(nx, ny, wavelength / 2, wavelength / 2, wavelength)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def positions(self) -> np.ndarray:
        """Element positions, shape ``(n_elements, 2)``, n_x fastest."""
        return _positions(self).copy()


@lru_cache(maxsize=64)
def _positions(geom: ArrayGeometry) -> np.ndarray:
    ix, iy = np.meshgrid(np.arange(geom.nx), np.arange(geom.ny), indexing="xy")
    pos = np.column_stack([ix.ravel() * geom.dx, iy.ravel() * geom.dy])
    pos.flags.writeable = False
    return pos


def wavevector(azimuth, elevation, wavelength: float) -> np.ndarray:
    """In-plane wave-number vector(s), shape ``(..., 2)``."""
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    s = np.sin(el)
    return (TWO_PI / wavelength) * np.stack([s * np.cos(az), s * np.sin(az)], axis=-1)


def steering_matrix(geom: ArrayGeometry, azimuth, elevation) -> np.ndarray:
    """Steering vectors for arrays of angles.

    Returns an array of shape ``angles.shape + (n_elements,)``; each vector
    has unit Euclidean norm.
    """
    k = wavevector(azimuth, elevation, geom.wavelength)
    # separable: exp(j(kx x + ky y)) = exp(j kx x) exp(j ky y), n_x fastest
    ex = np.exp(1j * k[..., :1] * (np.arange(geom.nx) * geom.dx))
    ey = np.exp(1j * k[..., 1:] * (np.arange(geom.ny) * geom.dy))
    v = ey[..., :, None] * ex[..., None, :]
    return v.reshape(v.shape[:-2] + (geom.n_elements,)) / np.sqrt(geom.n_elements)


def steering_vector(geom: ArrayGeometry, angle: Angle2D) -> np.ndarray:
    """Normalised array response toward ``angle``, shape ``(n_elements,)``."""
    return _steering_cached(geom, angle).copy()


# fixed LOS directions are requested once per channel draw
@lru_cache(maxsize=256)
def _steering_cached(geom: ArrayGeometry, angle: Angle2D) -> np.ndarray:
    k = TWO_PI / geom.wavelength * math.sin(angle.elevation)
    ex = np.exp(1j * (k * math.cos(angle.azimuth) * geom.dx) * np.arange(geom.nx))
    ey = np.exp(1j * (k * math.sin(angle.azimuth) * geom.dy) * np.arange(geom.ny))
    v = np.outer(ey, ex).ravel() / math.sqrt(geom.n_elements)
    v.flags.writeable = False
    return v
