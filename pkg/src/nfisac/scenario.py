"""Problem instance assembled from a :class:`~nfisac.config.ScenarioConfig`."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelModelParams, farfield_channel, nearfield_channels, INCOMING, OUTGOING
from .config import ArraySpec, ScenarioConfig
from .geometry import ArrayGeometry, build_upa, rayleigh_distance
from .optimizer import DesignProblem, SensingWeights, assemble_scenario_weights, all_pairs


def channel_params(cfg: ScenarioConfig) -> ChannelModelParams:
    return ChannelModelParams.from_frequency(cfg.carrier_frequency_hz, cfg.boresight_exponent)


def _build(spec: ArraySpec, wavelength: float) -> ArrayGeometry:
    return build_upa(spec.rows, spec.cols, spec.spacing_wavelengths * wavelength,
                     spec.center, spec.normal, spec.in_plane_axis)


def tx_geometry(cfg: ScenarioConfig) -> ArrayGeometry:
    return _build(cfg.tx_array, channel_params(cfg).wavelength)


def rx_geometry(cfg: ScenarioConfig) -> ArrayGeometry:
    return _build(cfg.rx_array, channel_params(cfg).wavelength)


def rayleigh_limit(cfg: ScenarioConfig) -> float:
    """Rayleigh distance of the transmit array, using the aperture override when set."""
    aperture = cfg.aperture_override_m if cfg.aperture_override_m is not None else tx_geometry(cfg).aperture
    return rayleigh_distance(aperture, channel_params(cfg).wavelength)


@dataclass
class Scenario:
    config: ScenarioConfig

    @cached_property
    def params(self) -> ChannelModelParams:
        return channel_params(self.config)

    @cached_property
    def tx(self) -> ArrayGeometry:
        return tx_geometry(self.config)

    @cached_property
    def rx(self) -> ArrayGeometry:
        return rx_geometry(self.config)

    @property
    def rayleigh_distance(self) -> float:
        return rayleigh_limit(self.config)

    @cached_property
    def user_positions(self) -> np.ndarray:
        return np.array([u.position for u in self.config.users], dtype=float).reshape(-1, 3)

    @cached_property
    def target_positions(self) -> np.ndarray:
        return np.array([t.position for t in self.config.targets], dtype=float).reshape(-1, 3)

    @cached_property
    def rcs(self) -> np.ndarray:
        return np.array([t.rcs for t in self.config.targets], dtype=complex)

    @cached_property
    def user_channels(self) -> np.ndarray:
        if not len(self.user_positions):
            return np.zeros((0, self.tx.n_elements), dtype=complex)
        return nearfield_channels(self.tx, self.user_positions, self.params, OUTGOING)

    @cached_property
    def target_channels(self) -> np.ndarray:
        return nearfield_channels(self.tx, self.target_positions, self.params, OUTGOING)

    @cached_property
    def target_rx_channels(self) -> np.ndarray:
        return nearfield_channels(self.rx, self.target_positions, self.params, INCOMING)

    @cached_property
    def user_channels_far(self) -> np.ndarray:
        return np.array([farfield_channel(self.tx, p, self.params) for p in self.user_positions],
                        dtype=complex).reshape(-1, self.tx.n_elements)

    @cached_property
    def target_channels_far(self) -> np.ndarray:
        return np.array([farfield_channel(self.tx, p, self.params) for p in self.target_positions])

    @property
    def user_noise(self) -> np.ndarray:
        return self.config.user_noise_w()

    @property
    def rx_noise(self) -> float:
        return self.config.rx_noise_w

    @property
    def p_max(self) -> float:
        return self.config.p_max_w

    def r_min(self) -> np.ndarray:
        return np.array([np.nan if u.r_min is None else u.r_min for u in self.config.users], dtype=float)

    def weights(self, target_channels: np.ndarray) -> SensingWeights:
        cfg = self.config
        if cfg.weight_mode == "explicit":
            return SensingWeights(np.array(cfg.explicit_target_weights),
                                  np.array(cfg.explicit_pair_weights), cfg.epsilon)
        return assemble_scenario_weights(target_channels, cfg.epsilon)

    def problem(self, scheme: str = "proposed") -> DesignProblem:
        """Design program of ``scheme`` (``proposed``, ``nccs`` or ``ffbf``)."""
        cfg = self.config
        L = len(cfg.targets)
        if scheme in ("proposed", "nccs"):
            pairs = all_pairs(L) if scheme == "proposed" else ()
            return DesignProblem(self.user_channels, self.target_channels,
                                 self.weights(self.target_channels), self.p_max, self.user_noise,
                                 self.r_min(), pairs, label=scheme)
        if scheme == "ffbf":
            removed = {tuple(sorted((a - 1, b - 1))) for a, b in cfg.ffbf.removed_pairs}
            pairs = tuple(p for p in all_pairs(L) if p not in removed)
            r_min = np.where(np.isnan(self.r_min()), np.nan, cfg.ffbf.r_min)
            return DesignProblem(self.user_channels_far, self.target_channels_far,
                                 self.weights(self.target_channels_far), self.p_max, self.user_noise,
                                 r_min, pairs, label="ffbf")
        raise ValueError(f"unknown scheme {scheme!r}")

    def audit_problem(self, scheme: str = "proposed") -> DesignProblem:
        """Near-field program used to evaluate any scheme's output.

        For FFBF the rate floor stays at the scheme's relaxed value; the pair
        set is the full proposed set so NCCS and FFBF are audited at ``eps``.
        """
        base = self.problem("proposed")
        if scheme == "ffbf":
            return base.with_rate(np.where(np.isnan(self.r_min()), np.nan, self.config.ffbf.r_min))
        return base
