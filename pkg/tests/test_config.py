import numpy as np
import pytest
import yaml

from nfisac.config import (ConfigError, config_from_dict, config_to_dict, dump_config, load_shipped,
                           parse_config)
from nfisac.scenario import Scenario


def _minimal(**extra):
    return {"users": [{"position": [0, 0.1, 0.1]}], "targets": [{"position": [0, 0, 0.3]}], **extra}


def test_reference_values(ref_config):
    cfg = ref_config
    assert cfg.p_max_w == pytest.approx(0.19952623, rel=1e-7)
    assert cfg.noise_w == pytest.approx(1e-11, rel=1e-12)
    assert len(cfg.users) == 2 and len(cfg.targets) == 3
    assert cfg.ffbf.removed_pairs == ((1, 2),) and cfg.ffbf.r_min == 0.95
    assert cfg.warnings == ()


def test_reference_geometry(ref):
    assert ref.tx.n_elements == 100
    assert ref.params.wavelength == pytest.approx(0.00999308, rel=1e-6)
    assert ref.tx.aperture == pytest.approx(9 * np.sqrt(2) * ref.params.wavelength / 2, rel=1e-12)
    assert ref.rayleigh_distance == pytest.approx(2 * 0.071**2 / ref.params.wavelength, rel=1e-12)


def test_defaults():
    cfg = config_from_dict(_minimal())
    assert cfg.epsilon == 0.1 and cfg.block_length == 1000 and cfg.scheme == "proposed"
    assert cfg.users[0].r_min == 17.0
    assert cfg.rx_noise_w == cfg.noise_w


@pytest.mark.parametrize("change,field", [
    ({"block_length": -3}, "block_length"),
    ({"block_length": 2.5}, "block_length"),
    ({"epsilon": 0}, "epsilon"),
    ({"scheme": "magic"}, "scheme"),
    ({"seed": -1}, "seed"),
    ({"grid": {"step": 0}}, "grid.step"),
    ({"bogus": 1}, "bogus"),
    ({"targets": []}, "targets"),
    ({"users": [{"r_min": 3}]}, "users[0].position"),
    ({"ffbf": {"removed_pairs": [[1, 5]]}}, "ffbf.removed_pairs"),
    ({"capon": {"transmit_weighting": "sideways"}}, "capon.transmit_weighting"),
])
def test_invalid_fields_are_named(change, field):
    with pytest.raises(ConfigError) as ei:
        config_from_dict(_minimal(**change))
    assert field in str(ei.value)


def test_dump_round_trip(ref_config):
    text = dump_config(ref_config)
    again = config_from_dict(yaml.safe_load(text))
    assert again == ref_config
    assert config_to_dict(again) == config_to_dict(ref_config)


def test_far_target_warns(caplog):
    cfg = config_from_dict(_minimal(targets=[{"position": [0, 0, 5.0]}]))
    assert len(cfg.warnings) == 1 and "Rayleigh" in cfg.warnings[0]


def test_file_loading(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(_minimal(seed=7)))
    assert parse_config(p).seed == 7
    p.write_text("users: [")
    with pytest.raises(ConfigError):
        parse_config(p)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.yaml")
    assert load_shipped() == parse_config("paper_scenario.yaml")


def test_explicit_weights():
    cfg = config_from_dict(_minimal(weights={"mode": "explicit", "target": [2.0], "pair": [[1.0]]}))
    sc = Scenario(cfg)
    assert sc.problem().weights.target[0] == 2.0
    with pytest.raises(ConfigError):
        config_from_dict(_minimal(weights={"mode": "explicit", "target": [1.0, 2.0], "pair": [[1.0]]}))
