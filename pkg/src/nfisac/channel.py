"""Near-field spherical-wave and far-field planar-wave channel vectors.

Channels are stored as defined (no conjugation); downstream code forms
``h^T R h*`` products, never ``h^H R h``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SingularityError
from .geometry import ArrayGeometry, angle_between, as_vec3

SPEED_OF_LIGHT = 299_792_458.0

OUTGOING = "outgoing"
INCOMING = "incoming"


@dataclass(frozen=True)
class ChannelModelParams:
    """Carrier wavelength (m) and boresight exponent of the element pattern."""

    wavelength: float
    boresight_exponent: float = 2.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not self.boresight_exponent >= 0:
            raise ValueError("boresight_exponent must be non-negative")

    @classmethod
    def from_frequency(cls, carrier_hz: float, boresight_exponent: float = 2.0,
                       c: float = SPEED_OF_LIGHT) -> "ChannelModelParams":
        return cls(wavelength=c / carrier_hz, boresight_exponent=boresight_exponent)


@dataclass(frozen=True)
class RoundTripChannel:
    matrix: np.ndarray
    rcs: complex = 1.0 + 0.0j


def radiation_profile(p, w, b: float = 2.0):
    """Element power pattern ``2(b+1) cos^b(psi)`` on the forward half-space, else 0."""
    psi = angle_between(p, w)
    cos = np.cos(psi)
    # cos(pi/2) evaluates to ~6e-17, not 0; snap the support boundary
    cos = np.where(np.abs(cos) < 1e-15, 0.0, cos)
    return np.where(cos >= 0.0, 2.0 * (b + 1.0) * np.power(np.maximum(cos, 0.0), b), 0.0)


def path_gain(p, wavelength: float):
    """Free-space amplitude and phase ``lambda/(4 pi |p|) exp(-j 2 pi |p| / lambda)``."""
    r = np.linalg.norm(np.asarray(p, dtype=float), axis=-1)
    if np.any(r == 0):
        raise SingularityError("path gain is singular at zero displacement")
    return wavelength / (4.0 * np.pi * r) * np.exp(-2j * np.pi * r / wavelength)


def _sign(direction: str) -> float:
    if direction == OUTGOING:
        return 1.0
    if direction == INCOMING:
        return -1.0
    raise ValueError(f"direction must be '{OUTGOING}' or '{INCOMING}', got {direction!r}")


def nearfield_channels(array: ArrayGeometry, points, params: ChannelModelParams,
                       direction: str = OUTGOING) -> np.ndarray:
    """Near-field channels between ``array`` and each row of ``points``; shape ``(G, N)``.

    For incoming paths the displacement ``element - point`` points into the
    array, so the element pattern is evaluated against the inward normal; a
    source in front of the array is then received on the main lobe.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sign = _sign(direction)
    try:
        return _kernels.nearfield_gains(array.elements, sign * array.normal, pts, params.wavelength,
                                        params.boresight_exponent, sign)
    except ValueError as exc:
        if "coincides" in str(exc):
            raise SingularityError(str(exc)) from None
        raise


def nearfield_channel(array: ArrayGeometry, point, params: ChannelModelParams,
                      direction: str = OUTGOING) -> np.ndarray:
    """Per-element spherical-wave gain ``sqrt(F(d_n, w)) beta(d_n)``.

    ``d_n = point - element_n`` for ``direction="outgoing"`` and
    ``element_n - point`` for ``"incoming"``; incoming paths use the inward
    normal ``-w`` in the pattern.
    """
    return nearfield_channels(array, as_vec3(point, "point")[None, :], params, direction)[0]


def farfield_channel(array: ArrayGeometry, point, params: ChannelModelParams) -> np.ndarray:
    """Planar-wavefront approximation: common amplitude, linear phase across elements."""
    point = as_vec3(point, "point")
    to_point = point - array.center
    r0 = np.linalg.norm(to_point)
    if r0 == 0:
        raise SingularityError("far-field channel is singular at the array center")
    amp = np.sqrt(radiation_profile(to_point, array.normal, params.boresight_exponent))
    amp = amp * abs(path_gain(to_point, params.wavelength))
    # ||p_n - c|| cos(angle(p_n - c, p - c)) is the projection onto the unit direction
    offsets = array.elements - array.center
    delta = r0 - offsets @ (to_point / r0)
    return amp * np.exp(-2j * np.pi * delta / params.wavelength)


def roundtrip_channel(h_fwd, h_bwd, rcs: complex = 1.0) -> RoundTripChannel:
    """``H = rcs * h_bwd h_fwd^T`` (plain transpose)."""
    h_fwd = np.asarray(h_fwd, dtype=complex).reshape(-1)
    h_bwd = np.asarray(h_bwd, dtype=complex).reshape(-1)
    return RoundTripChannel(matrix=complex(rcs) * np.outer(h_bwd, h_fwd), rcs=complex(rcs))


def normalized(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    nrm = np.linalg.norm(h, axis=-1, keepdims=True)
    return np.divide(h, nrm, out=np.zeros_like(h), where=nrm > 0)
