"""Communication and sensing figures of merit for a transmit covariance design.

Quadratic forms follow the transpose convention of the channel model:
``h^T R h*`` is the power a covariance ``R`` delivers along channel ``h``.
"""

from __future__ import annotations

import numpy as np


def _check_dims(h, m):
    if m.shape != (h.shape[-1], h.shape[-1]):
        raise ValueError(f"dimension mismatch: channel {h.shape}, matrix {m.shape}")


def quad_form(h, m) -> complex:
    """``h^T M h*`` for a single channel."""
    h = np.asarray(h, dtype=complex)
    m = np.asarray(m, dtype=complex)
    _check_dims(h, m)
    return complex(h @ m @ h.conj())


def beampattern_gain(h, r_x) -> float:
    """Power ``h^T R_x h*`` delivered along ``h``."""
    val = quad_form(h, r_x)
    scale = np.linalg.norm(h) ** 2 * np.linalg.norm(r_x, 2)
    if abs(val.imag) > 1e-9 * max(scale, abs(val.real), np.finfo(float).tiny):
        raise ValueError("beampattern quadratic form is not real; R_x is not Hermitian")
    return float(val.real)


def cross_correlation(h_a, h_b, r_x) -> float:
    """``|h_a^T R_x h_b*|``."""
    h_a = np.asarray(h_a, dtype=complex)
    h_b = np.asarray(h_b, dtype=complex)
    r_x = np.asarray(r_x, dtype=complex)
    _check_dims(h_a, r_x)
    _check_dims(h_b, r_x)
    return float(abs(h_a @ r_x @ h_b.conj()))


def user_sinr(h_k, beamformers, r_s, noise_power: float, k: int) -> float:
    """Downlink SINR of user ``k`` given all beamformers and the sensing covariance.

    Parameters
    ----------
    h_k : ndarray, shape (N,)
        Channel of the receiver being evaluated.
    beamformers : ndarray, shape (K, N)
        One beamformer per row.
    r_s : ndarray, shape (N, N)
        Sensing covariance, treated as interference.
    noise_power : float
        Receiver noise power in watts.
    k : int
        Row of ``beamformers`` carrying the desired signal.
    """
    h_k = np.asarray(h_k, dtype=complex)
    beams = np.atleast_2d(np.asarray(beamformers, dtype=complex))
    if beams.shape[1] != h_k.shape[0]:
        raise ValueError(f"dimension mismatch: channel {h_k.shape}, beamformers {beams.shape}")
    if not noise_power > 0:
        raise ValueError("noise power must be positive")
    powers = np.abs(beams @ h_k) ** 2
    sensing = quad_form(h_k, r_s).real
    interference = powers.sum() - powers[k]
    return float(powers[k] / (interference + max(sensing, 0.0) + noise_power))


def user_rate(sinr: float) -> float:
    """Shannon rate ``log2(1 + sinr)`` in bps/Hz."""
    if sinr < 0:
        raise ValueError(f"SINR must be non-negative, got {sinr}")
    return float(np.log2(1.0 + sinr))


def rate_factor(r_min: float) -> float:
    """``2^R / (2^R - 1)``, the weight on the user's own lifted matrix."""
    if not r_min > 0:
        raise ValueError(f"minimum rate must be positive, got {r_min}")
    return float(1.0 / -np.expm1(-r_min * np.log(2.0)))


def sinr_threshold(r_min: float) -> float:
    """SINR needed for rate ``r_min``: ``2^R - 1``."""
    return float(np.expm1(r_min * np.log(2.0)))


def rate_constraint_margin(h_k, f_mat, r_x, r_min: float, noise_power: float) -> float:
    """Signed margin of the trace-form rate constraint.

    Returns ``Tr(h* h^T (xi F - R_x)) - sigma^2``; it is non-negative exactly
    when the user meets ``r_min``.
    """
    xi = rate_factor(r_min)
    h_k = np.asarray(h_k, dtype=complex)
    val = xi * quad_form(h_k, f_mat).real - quad_form(h_k, r_x).real
    return float(val - noise_power)


def to_db(x, floor: float = -300.0):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    return np.maximum(out, floor) if np.ndim(out) else float(max(out, floor))


def dbm_to_watts(dbm: float) -> float:
    return float(10.0 ** ((dbm - 30.0) / 10.0))
