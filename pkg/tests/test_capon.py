import numpy as np
import pytest

from nfisac import capon, signalsim as ss
from nfisac.channel import INCOMING, OUTGOING, nearfield_channels, roundtrip_channel
from tests.conftest import crandn


def _single_target_blocks(ref, target, T=400, seed=0):
    N = ref.tx.n_elements
    x = ss.draw_transmit_block(np.zeros((0, N)), np.eye(N), T, seed=seed)
    pt = np.atleast_2d(target)
    H = roundtrip_channel(nearfield_channels(ref.tx, pt, ref.params, OUTGOING)[0],
                          nearfield_channels(ref.rx, pt, ref.params, INCOMING)[0])
    return x, ss.simulate_echoes(x, [H], 0.0)


def _local_grid(center, half=0.03, step=0.005):
    y = np.round(np.arange(center[1] - half, center[1] + half + 1e-9, step), 6)
    z = np.round(np.arange(center[2] - half, center[2] + half + 1e-9, step), 6)
    return capon.SpatialGrid(y, z, center[0])


def test_noise_free_single_target_peaks_at_target(ref):
    target = np.array([0.0, 0.02, 0.3])
    x, y = _single_target_blocks(ref, target)
    grid = _local_grid(target)
    spec = capon.capon_spectrum(x, y, ref.tx, ref.rx, grid, ref.params)
    i, j = np.unravel_index(np.argmax(spec.values), spec.shape)
    assert (grid.y[i], grid.z[j]) == pytest.approx((target[1], target[2]), abs=1e-9)


def test_zero_echo_gives_floor(ref):
    x, y = _single_target_blocks(ref, np.array([0.0, 0.0, 0.3]), T=20)
    zero = ss.SignalBlock(np.zeros_like(y.samples))
    spec = capon.capon_spectrum(x, zero, ref.tx, ref.rx, _local_grid([0, 0, 0.3]), ref.params)
    assert np.all(spec.values == capon.DB_FLOOR)


def test_phase_and_scale_invariance_of_argmax(ref):
    target = np.array([0.0, -0.01, 0.25])
    x, y = _single_target_blocks(ref, target, seed=3)
    grid = _local_grid(target)
    base = capon.capon_spectrum(x, y, ref.tx, ref.rx, grid, ref.params)
    rot = ss.SignalBlock(y.samples * np.exp(0.7j))
    assert np.allclose(capon.capon_spectrum(x, rot, ref.tx, ref.rx, grid, ref.params).values,
                       base.values, atol=1e-6)
    scaled = ss.SignalBlock(3.0 * y.samples)
    s = capon.capon_spectrum(x, scaled, ref.tx, ref.rx, grid, ref.params).values
    assert np.argmax(s) == np.argmax(base.values)


def test_loading_converges_to_unloaded():
    rng = np.random.default_rng(0)
    R = crandn(rng, 5, 40)
    R = R @ R.conj().T / 40
    ref, d = capon.loaded_inverse(R, 0.0, "R")
    assert d == 0.0
    errs = [np.linalg.norm(capon.loaded_inverse(R, delta, "R")[0] - ref) for delta in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3 * np.linalg.norm(ref)


def test_singular_covariance_falls_back():
    v = np.array([1.0, 1j, 0.0])
    R = np.outer(v, v.conj())
    inv, d = capon.loaded_inverse(R, 0.0, "R")
    assert d == capon.FALLBACK_LOADING and np.all(np.isfinite(inv))
    with pytest.raises(np.linalg.LinAlgError):
        capon.loaded_inverse(np.zeros((3, 3)), 0.0, "R")
    with pytest.raises(ValueError):
        capon.loaded_inverse(R, -1.0, "R")


def test_block_mismatch(ref):
    x, y = _single_target_blocks(ref, np.array([0.0, 0.0, 0.3]), T=10)
    short = ss.SignalBlock(y.samples[:, :5])
    with pytest.raises(ValueError):
        capon.capon_spectrum(x, short, ref.tx, ref.rx, _local_grid([0, 0, 0.3]), ref.params)


# ------------------------------------------------------------------ peaks

def _grid(values):
    v = np.asarray(values, dtype=float)
    return capon.SpatialGrid(np.arange(v.shape[0]) * 0.01, np.arange(v.shape[1]) * 0.01, 0.0, v)


def test_find_peaks_single():
    v = np.zeros((5, 5))
    v[2, 3] = 4.0
    res = capon.find_peaks(_grid(v), 1)
    assert len(res) == 1 and not res.shortfall
    assert np.allclose(res.points[0], [0.0, 0.02, 0.03]) and res.values == [4.0]


def test_find_peaks_tie_break_and_separation():
    v = np.zeros((7, 7))
    v[1, 1] = v[5, 5] = 2.0
    v[1, 2] = 1.0
    res = capon.find_peaks(_grid(v), 2)
    assert np.allclose([p[1:] for p in res.points], [[0.01, 0.01], [0.05, 0.05]])
    # with a separation larger than the grid, only one can be taken
    res = capon.find_peaks(_grid(v), 2, min_separation=1.0)
    assert len(res) == 1 and res.shortfall


def test_flat_plateau_and_shortfall():
    res = capon.find_peaks(_grid(np.ones((3, 3))), 3, min_separation=0.015)
    # every cell of a plateau is a local maximum; separation thins them
    assert len(res) == 3 and np.allclose(res.points[0][1:], [0.0, 0.0])
    res = capon.find_peaks(_grid(np.ones((1, 1))), 2)
    assert res.shortfall and len(res) == 1


def test_match_peaks():
    res = capon.PeakResult([np.array([0, 0.1, 0.3])], [1.0], False)
    d = capon.match_peaks(res, [[0, 0.1, 0.31], [0, -0.1, 0.3]], radius=0.05)
    assert d[0] == pytest.approx(0.01) and d[1] == np.inf


def test_grid_validation():
    with pytest.raises(ValueError):
        capon.SpatialGrid(np.array([0.0, 0.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        capon.SpatialGrid(np.array([0.0]), np.array([1.0]), values=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        capon.find_peaks(_grid(np.zeros((2, 2))), 0)
