"""Grid-evaluation kernels.

Every kernel has a vectorized numpy implementation (``*_numpy``) and, when
numba is importable, a compiled loop implementation (``*_numba``). The public
name binds to the numba variant unless ``NFISAC_DISABLE_NUMBA`` is set to a
truthy value, or numba is missing.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("NFISAC_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba as nb
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba ships with the dev environment
    nb = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV

_njit_kwargs = {"nogil": True, "cache": True, "fastmath": False}


# ---------------------------------------------------------------- numpy path

def nearfield_gains_numpy(elements, normal, points, wavelength, b, sign):
    """Spherical-wave gains for every (point, element) pair.

    ``sign = +1`` evaluates at ``point - element`` (array transmitting toward
    the point), ``sign = -1`` at ``element - point`` (point radiating into the
    array). Returns an array of shape ``(G, N)``.
    """
    d = sign * (points[:, None, :] - elements[None, :, :])
    r = np.sqrt(np.einsum("gnk,gnk->gn", d, d))
    if np.any(r == 0.0):
        raise ValueError("field point coincides with an array element")
    cos = np.clip(np.einsum("gnk,k->gn", d, normal) / r, -1.0, 1.0)
    prof = np.where(cos >= 0.0, 2.0 * (b + 1.0) * np.power(np.maximum(cos, 0.0), b), 0.0)
    return np.sqrt(prof) * (wavelength / (4.0 * np.pi * r)) * np.exp(-2j * np.pi * r / wavelength)


def capon_ratio_numpy(h_tx, h_rx, a_mat, ry_inv, rx_weight):
    """``(hr^H A ht*) / ((hr^H Ry^-1 hr) (ht^T W ht*))`` per grid row."""
    num = np.einsum("gi,gi->g", h_rx.conj() @ a_mat, h_tx.conj())
    den_r = np.einsum("gi,gi->g", h_rx.conj() @ ry_inv, h_rx).real
    den_t = np.einsum("gi,gi->g", h_tx @ rx_weight, h_tx.conj()).real
    return _safe_div(num, den_r * den_t)


def sinr_grid_numpy(h_grid, beams, r_s, noise, k):
    """SINR of beam ``k`` for a hypothetical receiver with channel ``h_grid[g]``."""
    amp = np.abs(h_grid @ beams.T) ** 2 if beams.shape[0] else np.zeros((h_grid.shape[0], 0))
    signal = amp[:, k]
    interference = amp.sum(axis=1) - signal
    sensing = np.einsum("gi,gi->g", h_grid @ r_s, h_grid.conj()).real
    return _safe_div(signal, interference + sensing + noise)


def _safe_div(num, den):
    out = np.full(np.shape(num), np.nan, dtype=np.result_type(num, den))
    np.divide(num, den, out=out, where=den != 0)
    return out


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @nb.njit(**_njit_kwargs)
    def nearfield_gains_numba(elements, normal, points, wavelength, b, sign):
        G = points.shape[0]
        N = elements.shape[0]
        out = np.empty((G, N), dtype=np.complex128)
        k0 = 2.0 * np.pi / wavelength
        amp0 = wavelength / (4.0 * np.pi)
        peak = 2.0 * (b + 1.0)
        for g in range(G):
            for n in range(N):
                dx = sign * (points[g, 0] - elements[n, 0])
                dy = sign * (points[g, 1] - elements[n, 1])
                dz = sign * (points[g, 2] - elements[n, 2])
                r = np.sqrt(dx * dx + dy * dy + dz * dz)
                if r == 0.0:
                    raise ValueError("field point coincides with an array element")
                c = (dx * normal[0] + dy * normal[1] + dz * normal[2]) / r
                if c > 1.0:
                    c = 1.0
                if c < 0.0:
                    out[g, n] = 0.0
                    continue
                amp = np.sqrt(peak * c ** b) * amp0 / r
                ph = -k0 * r
                out[g, n] = complex(amp * np.cos(ph), amp * np.sin(ph))
        return out

    @nb.njit(**_njit_kwargs)
    def _rowdot(a, b):
        # sum_i a[g, i] * b[g, i] per row
        G, N = a.shape
        out = np.empty(G, dtype=np.complex128)
        for g in range(G):
            acc = 0j
            for i in range(N):
                acc += a[g, i] * b[g, i]
            out[g] = acc
        return out

    @nb.njit(**_njit_kwargs)
    def capon_ratio_numba(h_tx, h_rx, a_mat, ry_inv, rx_weight):
        # matrix products go through BLAS; the per-point reductions are fused loops
        hrc = np.conj(h_rx)
        htc = np.conj(h_tx)
        num = _rowdot(np.dot(hrc, a_mat), htc)
        den_r = _rowdot(np.dot(hrc, ry_inv), h_rx)
        den_t = _rowdot(np.dot(h_tx, rx_weight), htc)
        G = h_tx.shape[0]
        out = np.empty(G, dtype=np.complex128)
        for g in range(G):
            den = den_r[g].real * den_t[g].real
            # a point neither array sees; callers map non-finite values to zero
            out[g] = num[g] / den if den != 0.0 else complex(np.nan, np.nan)
        return out

    @nb.njit(**_njit_kwargs)
    def sinr_grid_numba(h_grid, beams, r_s, noise, k):
        G = h_grid.shape[0]
        K = beams.shape[0]
        amp = np.dot(h_grid, beams.T.copy())
        sensing = _rowdot(np.dot(h_grid, r_s), np.conj(h_grid))
        out = np.empty(G, dtype=np.float64)
        for g in range(G):
            signal = 0.0
            interference = 0.0
            for kk in range(K):
                a = amp[g, kk]
                p = a.real * a.real + a.imag * a.imag
                if kk == k:
                    signal = p
                else:
                    interference += p
            den = interference + sensing[g].real + noise
            out[g] = signal / den if den != 0.0 else np.nan
        return out

else:  # pragma: no cover
    nearfield_gains_numba = capon_ratio_numba = sinr_grid_numba = None


def _pick(name):
    fn = globals()[f"{name}_numba"] if USE_NUMBA else None
    return fn if fn is not None else globals()[f"{name}_numpy"]


_nearfield_gains = _pick("nearfield_gains")
_capon_ratio = _pick("capon_ratio")
_sinr_grid = _pick("sinr_grid")


def nearfield_gains(elements, normal, points, wavelength, b, sign):
    return _nearfield_gains(np.ascontiguousarray(elements, dtype=np.float64),
                            np.ascontiguousarray(normal, dtype=np.float64),
                            np.ascontiguousarray(points, dtype=np.float64),
                            float(wavelength), float(b), float(sign))


def capon_ratio(h_tx, h_rx, a_mat, ry_inv, rx_weight):
    c = lambda m: np.ascontiguousarray(m, dtype=np.complex128)  # noqa: E731
    return _capon_ratio(c(h_tx), c(h_rx), c(a_mat), c(ry_inv), c(rx_weight))


def sinr_grid(h_grid, beams, r_s, noise, k):
    beams = np.ascontiguousarray(beams, dtype=np.complex128).reshape(-1, h_grid.shape[1])
    return _sinr_grid(np.ascontiguousarray(h_grid, dtype=np.complex128), beams,
                      np.ascontiguousarray(r_s, dtype=np.complex128), float(noise), int(k))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
