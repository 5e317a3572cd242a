"""Planar antenna-array geometry.

Points and directions are plain ``numpy`` arrays of shape ``(3,)`` in meters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .errors import GeometryError


def as_vec3(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise GeometryError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} has non-finite components: {arr}")
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions of an antenna array together with its radiation normal.

    Attributes
    ----------
    elements : ndarray, shape (N, 3)
        Element positions. For arrays built by :func:`build_upa` the order is
        row-major over (row, col).
    normal : ndarray, shape (3,)
        Unit radiation normal.
    center : ndarray, shape (3,)
        Arithmetic mean of the element positions.
    """

    elements: np.ndarray
    normal: np.ndarray
    center: np.ndarray = field(default=None)

    def __post_init__(self):
        elements = np.atleast_2d(np.asarray(self.elements, dtype=float))
        if elements.ndim != 2 or elements.shape[1] != 3 or elements.shape[0] == 0:
            raise GeometryError(f"elements must be a non-empty (N, 3) array, got {elements.shape}")
        if not np.all(np.isfinite(elements)):
            raise GeometryError("element positions must be finite")
        normal = as_vec3(self.normal, "normal")
        if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
            raise GeometryError("normal must have unit length")
        mean = elements.mean(axis=0)
        center = mean if self.center is None else as_vec3(self.center, "center")
        if np.linalg.norm(center - mean) > 1e-9:
            raise GeometryError("center must equal the mean of the element positions")
        elements.setflags(write=False)
        normal.setflags(write=False)
        center.setflags(write=False)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "center", center)

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def aperture(self) -> float:
        """Largest pairwise element distance; 0 for a single element."""
        if self.n_elements < 2:
            return 0.0
        return float(pdist(self.elements).max())


def build_upa(rows: int, cols: int, spacing: float, center=(0.0, 0.0, 0.0),
              normal=(0.0, 0.0, 1.0), in_plane_axis=(1.0, 0.0, 0.0)) -> ArrayGeometry:
    """Uniform planar array on a regular ``rows x cols`` grid.

    Columns run along ``in_plane_axis`` (made orthogonal to ``normal``), rows
    along ``normal x in_plane_axis``. Element ``r * cols + c`` sits at
    ``center + (c - (cols-1)/2) * spacing * u + (r - (rows-1)/2) * spacing * v``.
    """
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise GeometryError(f"rows and cols must be positive integers, got {rows}x{cols}")
    if not spacing > 0:
        raise GeometryError(f"spacing must be positive, got {spacing}")
    center = as_vec3(center, "center")
    n = as_vec3(normal, "normal")
    a = as_vec3(in_plane_axis, "in_plane_axis")
    n_norm = np.linalg.norm(n)
    if n_norm == 0:
        raise GeometryError("normal must be non-zero")
    n = n / n_norm
    u = a - np.dot(a, n) * n
    # parallel (or zero) axis leaves nothing after projection
    if np.linalg.norm(u) <= 1e-12 * max(np.linalg.norm(a), 1.0):
        raise GeometryError("in_plane_axis is parallel to normal")
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)

    r_off = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    c_off = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    rr, cc = np.meshgrid(r_off, c_off, indexing="ij")
    elements = center + cc.reshape(-1, 1) * u + rr.reshape(-1, 1) * v
    return ArrayGeometry(elements=elements, normal=n, center=center)


def rayleigh_distance(aperture: float, wavelength: float) -> float:
    """Near-field boundary ``2 D^2 / lambda``."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if aperture < 0:
        raise ValueError(f"aperture must be non-negative, got {aperture}")
    return 2.0 * aperture**2 / wavelength


def angle_between(p, w) -> np.ndarray:
    """Angle in ``[0, pi]`` between ``p`` and ``w``; broadcasts over leading axes."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    pn = np.linalg.norm(p, axis=-1)
    wn = np.linalg.norm(w, axis=-1)
    if np.any(pn == 0) or np.any(wn == 0):
        raise ValueError("angle_between is undefined for zero vectors")
    cos = np.sum(p * w, axis=-1) / (pn * wn)
    return np.arccos(np.clip(cos, -1.0, 1.0))
