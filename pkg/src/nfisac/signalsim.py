"""Transmit snapshots ``x = sum_k f_k c_k + s`` and their target echoes."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SignalGenerationError

# columns generated per draw; any value gives the same stream
CHUNK = 4096
PSD_CLIP_REL = 1e-8

_MAGIC = b"NFSB"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")  # magic, version, rows, cols, seed (2**64-1 if unset)
_NO_SEED = 2**64 - 1


@dataclass(frozen=True)
class SignalBlock:
    """Snapshots stored column-wise, ``samples[:, t]`` being time ``t``."""

    samples: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 2 or s.shape[1] < 1:
            raise ValueError(f"a block needs shape (antennas, T>=1), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("block contains non-finite samples")
        object.__setattr__(self, "samples", s)

    @property
    def T(self) -> int:
        return self.samples.shape[1]

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[0]


def psd_factor(r, rel_tol: float = PSD_CLIP_REL) -> np.ndarray:
    """Return ``A`` with ``A A^H = R``, dropping null directions.

    Negative eigenvalues down to ``-rel_tol * |R|`` are clipped to zero; deeper
    ones raise :class:`SignalGenerationError`.
    """
    r = np.asarray(r, dtype=complex)
    n = r.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    lam, u = np.linalg.eigh(0.5 * (r + r.conj().T))
    scale = max(abs(lam).max(), np.finfo(float).tiny)
    if lam[0] < -rel_tol * scale:
        raise SignalGenerationError(f"sensing covariance is not PSD (min eig {lam[0]:.3e})")
    keep = lam > rel_tol * scale
    return u[:, keep] * np.sqrt(lam[keep])[None, :]


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular ``CN(0, 1)`` draws."""
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_transmit_block(beamformers, r_s, T: int, seed: int | None = None) -> SignalBlock:
    """Draw ``T`` transmit snapshots.

    Parameters
    ----------
    beamformers : ndarray, shape (K, N)
        User beamformers, one per row.
    r_s : ndarray, shape (N, N)
        Sensing covariance of the dedicated probing stream.
    T : int
        Number of snapshots.
    seed : int, optional
        Seed of the generator. Equal seeds give bit-identical blocks.

    Notes
    -----
    Symbols and the probing stream are drawn as ``CN(0, 1)``; the probing
    stream is coloured by a PSD factor of ``r_s``. Generation is chunked in
    time so long blocks do not materialize the whitened draws at once.
    """
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    beams = np.atleast_2d(np.asarray(beamformers, dtype=complex))
    r_s = np.asarray(r_s, dtype=complex)
    N = r_s.shape[0]
    if beams.size == 0:
        beams = np.zeros((0, N), dtype=complex)
    if beams.shape[1] != N:
        raise ValueError(f"beamformers {beams.shape} do not match covariance {r_s.shape}")
    A = psd_factor(r_s)
    mix = np.hstack([beams.T, A])  # (N, K + rank)
    rng = np.random.default_rng(seed)
    out = np.empty((N, T), dtype=complex)
    for start in range(0, T, CHUNK):
        stop = min(T, start + CHUNK)
        z = _cn(rng, (stop - start, mix.shape[1]))
        out[:, start:stop] = mix @ z.T
    return SignalBlock(out, seed)


def sample_transmit_block(solution, T: int, seed: int | None = None) -> SignalBlock:
    """Transmit block of a :class:`~nfisac.optimizer.BeamformingSolution`."""
    return draw_transmit_block(solution.beamformers, solution.R_s, T, seed)


def simulate_echoes(x: SignalBlock, channels, noise_power: float, seed: int | None = None) -> SignalBlock:
    """Received block ``Y = (sum_l H_l) X + N`` with ``N ~ CN(0, noise_power I)``.

    ``channels`` holds :class:`~nfisac.channel.RoundTripChannel` objects or
    plain ``(N_r, N_t)`` matrices. With no channels the receive dimension
    cannot be inferred, so an empty list yields an all-zero block shaped like
    ``x`` unless noise is requested.
    """
    if noise_power < 0:
        raise ValueError("noise power must be non-negative")
    mats = [np.asarray(getattr(c, "matrix", c), dtype=complex) for c in channels]
    if mats:
        n_r = mats[0].shape[0]
        for m in mats:
            if m.shape != (n_r, x.n_antennas):
                raise ValueError(f"channel {m.shape} does not match block with {x.n_antennas} antennas")
        H = np.sum(mats, axis=0)
    else:
        n_r = x.n_antennas
        H = np.zeros((n_r, x.n_antennas), dtype=complex)
    y = H @ x.samples
    if noise_power > 0:
        rng = np.random.default_rng(seed)
        for start in range(0, x.T, CHUNK):
            stop = min(x.T, start + CHUNK)
            y[:, start:stop] += np.sqrt(noise_power) * _cn(rng, (stop - start, n_r)).T
    return SignalBlock(y, seed)


def sample_covariance(block: SignalBlock) -> np.ndarray:
    """``(1/T) X X^H``."""
    s = block.samples
    r = s @ s.conj().T / s.shape[1]
    return 0.5 * (r + r.conj().T)


def pseudo_covariance(block: SignalBlock) -> np.ndarray:
    """``(1/T) X X^T``; near zero for circular signals."""
    s = block.samples
    return s @ s.T / s.shape[1]


def save_block(block: SignalBlock, path) -> None:
    """Write ``block`` to a binary container.

    Layout: a 32-byte little-endian header (magic ``NFSB``, u32 version, u64
    rows, u64 columns, u64 seed) followed by the samples in row-major order as
    interleaved real/imaginary float64 pairs.
    """
    s = np.ascontiguousarray(block.samples, dtype="<c16")
    seed = _NO_SEED if block.seed is None else int(block.seed)
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, s.shape[0], s.shape[1], seed))
        fh.write(s.view("<f8").tobytes())


def load_block(path) -> SignalBlock:
    with open(Path(path), "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated block header")
        magic, version, rows, cols, seed = _HEADER.unpack(head)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"not a version-{_VERSION} block file")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != 2 * rows * cols:
        raise ValueError(f"expected {2 * rows * cols} floats, found {data.size}")
    samples = data.view("<c16").reshape(rows, cols).astype(complex)
    return SignalBlock(samples, None if seed == _NO_SEED else int(seed))
