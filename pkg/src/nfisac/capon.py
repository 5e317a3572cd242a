"""Normalized Capon spectrum over a yz-plane grid, and peak picking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import INCOMING, OUTGOING, ChannelModelParams, nearfield_channels
from .geometry import ArrayGeometry
from .signalsim import SignalBlock

log = logging.getLogger(__name__)

FALLBACK_LOADING = 1e-6
# eigenvalue ratio below which a sample covariance is treated as singular
SINGULAR_RCOND = 1e-12
DB_FLOOR = -300.0

INVERSE = "inverse"
DIRECT = "direct"


@dataclass(frozen=True)
class SpatialGrid:
    """Scalar field sampled on a yz-plane grid at fixed ``x``.

    ``values[i, j]`` belongs to the point ``(x, y[i], z[j])``.
    """

    y: np.ndarray
    z: np.ndarray
    x: float = 0.0
    values: np.ndarray | None = None
    unit: str = "dB"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if y.ndim != 1 or z.ndim != 1 or not y.size or not z.size:
            raise ValueError("grid axes must be non-empty 1-D arrays")
        for name, ax in (("y", y), ("z", z)):
            if ax.size > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError(f"{name} axis must be strictly increasing")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        if self.values is not None:
            v = np.asarray(self.values)
            if v.shape != (y.size, z.size):
                raise ValueError(f"values {v.shape} do not match axes ({y.size}, {z.size})")
            object.__setattr__(self, "values", v)

    @classmethod
    def from_spec(cls, spec, step: float | None = None) -> "SpatialGrid":
        """Build from a :class:`~nfisac.config.GridSpec`, optionally overriding the step."""
        if step is not None:
            if not step > 0:
                raise ValueError("grid step must be positive")
            from dataclasses import replace
            spec = replace(spec, step=step)
        y, z = spec.axes()
        return cls(y, z, spec.x)

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.size, self.z.size

    @property
    def step(self) -> float:
        steps = np.concatenate([np.diff(self.y), np.diff(self.z)])
        return float(steps.min()) if steps.size else 0.0

    def points(self) -> np.ndarray:
        """Grid points, shape ``(ny * nz, 3)``, in ``values.ravel()`` order."""
        yy, zz = np.meshgrid(self.y, self.z, indexing="ij")
        return np.column_stack([np.full(yy.size, self.x), yy.ravel(), zz.ravel()])

    def with_values(self, values, unit: str, **meta) -> "SpatialGrid":
        return SpatialGrid(self.y, self.z, self.x, np.asarray(values).reshape(self.shape), unit,
                           {**self.meta, **meta})

    def nearest_index(self, point) -> tuple[int, int]:
        p = np.asarray(point, dtype=float)
        return int(np.abs(self.y - p[1]).argmin()), int(np.abs(self.z - p[2]).argmin())


def normalized_steering(array: ArrayGeometry, points, params: ChannelModelParams,
                        direction: str) -> np.ndarray:
    """Unit-norm near-field steering rows; points the array cannot see give zero rows."""
    h = nearfield_channels(array, points, params, direction)
    n = np.linalg.norm(h, axis=1, keepdims=True)
    return np.divide(h, n, out=np.zeros_like(h), where=n > 0)


def loaded_inverse(r, loading: float, name: str) -> tuple[np.ndarray, float]:
    """Inverse of ``R + delta (Tr R / N) I``.

    With ``loading == 0`` and a singular ``R`` the loading falls back to
    :data:`FALLBACK_LOADING` and the event is logged. Returns the inverse and
    the loading actually used.
    """
    r = 0.5 * (r + r.conj().T)
    n = r.shape[0]
    tr = float(np.trace(r).real)
    if loading < 0:
        raise ValueError("diagonal loading must be non-negative")
    delta = loading
    if delta == 0.0:
        lam = np.linalg.eigvalsh(r)
        if lam[-1] <= 0 or lam[0] <= SINGULAR_RCOND * lam[-1]:
            if tr <= 0:
                raise np.linalg.LinAlgError(f"{name} is zero; loading cannot regularize it")
            log.info("%s is singular (eigenvalue ratio %.2e); loading %.0e applied",
                     name, lam[0] / lam[-1] if lam[-1] > 0 else 0.0, FALLBACK_LOADING)
            delta = FALLBACK_LOADING
    if delta > 0 and tr <= 0:
        raise np.linalg.LinAlgError(f"{name} is zero; loading cannot regularize it")
    loaded = r + delta * (tr / n) * np.eye(n) if delta > 0 else r
    inv = np.linalg.inv(loaded)
    return 0.5 * (inv + inv.conj().T), delta


def capon_spectrum(x: SignalBlock, y: SignalBlock, tx_array: ArrayGeometry, rx_array: ArrayGeometry,
                   grid: SpatialGrid, params: ChannelModelParams, diagonal_loading: float = 0.0,
                   transmit_weighting: str = INVERSE) -> SpatialGrid:
    """Normalized Capon amplitude estimate at every grid point, in dB.

    ``beta(p) = a_r^H R_Y^-1 Y X^H a_t* / (T (a_r^H R_Y^-1 a_r)(a_t^T W a_t*))``
    with unit-norm near-field steering vectors ``a_t`` (transmit array toward
    ``p``) and ``a_r`` (from ``p`` into the receive array). ``W`` is
    ``R_X^-1`` for ``transmit_weighting="inverse"`` and ``R_X`` for
    ``"direct"``. The stored value is ``20 log10 |beta|``.
    """
    if x.T != y.T:
        raise ValueError(f"blocks differ in length: T={x.T} and T={y.T}")
    if x.n_antennas != tx_array.n_elements or y.n_antennas != rx_array.n_elements:
        raise ValueError("block dimensions do not match the arrays")
    if transmit_weighting not in (INVERSE, DIRECT):
        raise ValueError(f"transmit_weighting must be '{INVERSE}' or '{DIRECT}'")
    T = x.T
    pts = grid.points()
    a_t = normalized_steering(tx_array, pts, params, OUTGOING)
    a_r = normalized_steering(rx_array, pts, params, INCOMING)

    if not np.any(y.samples):
        values = np.zeros(len(pts), dtype=complex)
        used = {"R_Y": 0.0, "R_X": 0.0}
    else:
        r_x = x.samples @ x.samples.conj().T / T
        r_y = y.samples @ y.samples.conj().T / T
        ry_inv, d_y = loaded_inverse(r_y, diagonal_loading, "R_Y")
        if transmit_weighting == INVERSE:
            w, d_x = loaded_inverse(r_x, diagonal_loading, "R_X")
        else:
            w, d_x = 0.5 * (r_x + r_x.conj().T), 0.0
        a_mat = ry_inv @ (y.samples @ x.samples.conj().T) / T
        with np.errstate(divide="ignore", invalid="ignore"):
            values = _kernels.capon_ratio(a_t, a_r, a_mat, ry_inv, w)
        values = np.where(np.isfinite(values), values, 0.0)
        used = {"R_Y": d_y, "R_X": d_x}
    mag = np.abs(values)
    with np.errstate(divide="ignore"):
        db = np.maximum(20.0 * np.log10(mag), DB_FLOOR)
    return grid.with_values(db, "dB", loading=used, transmit_weighting=transmit_weighting, T=T)


@dataclass(frozen=True)
class PeakResult:
    points: list
    values: list
    shortfall: bool

    def __len__(self):
        return len(self.points)


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Boolean mask of cells not exceeded by any of their 8 neighbours."""
    v = np.where(np.isfinite(values), values, -np.inf)
    padded = np.pad(v, 1, constant_values=-np.inf)
    mask = np.isfinite(v)
    ny, nz = v.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= v >= padded[1 + di:1 + di + ny, 1 + dj:1 + dj + nz]
    return mask


def find_peaks(grid: SpatialGrid, count: int, min_separation: float = 0.0) -> PeakResult:
    """The ``count`` largest local maxima at least ``min_separation`` apart.

    Candidates are ranked by value (descending), ties by ``(y, z)``, then
    accepted greedily. ``shortfall`` is set when fewer than ``count`` qualify.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if grid.values is None:
        raise ValueError("grid has no values")
    v = np.asarray(grid.values, dtype=float)
    ii, jj = np.nonzero(local_maxima(v))
    order = sorted(range(ii.size), key=lambda t: (-v[ii[t], jj[t]], grid.y[ii[t]], grid.z[jj[t]]))
    chosen, vals = [], []
    for t in order:
        p = np.array([grid.x, grid.y[ii[t]], grid.z[jj[t]]])
        if all(np.linalg.norm(p - q) >= min_separation for q in chosen):
            chosen.append(p)
            vals.append(float(v[ii[t], jj[t]]))
            if len(chosen) == count:
                break
    return PeakResult(chosen, vals, len(chosen) < count)


def match_peaks(peaks: PeakResult, truths, radius: float) -> list:
    """For each true position, the distance to the nearest peak (``inf`` if none within ``radius``)."""
    out = []
    for t in np.atleast_2d(truths):
        d = [float(np.linalg.norm(np.asarray(p) - t)) for p in peaks.points]
        best = min(d) if d else np.inf
        out.append(best if best <= radius else np.inf)
    return out
