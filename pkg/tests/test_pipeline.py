import json

import numpy as np
import pytest

from nfisac import pipeline
from nfisac.errors import InfeasibleError


def test_block_seeds_are_distinct_and_stable():
    a = pipeline.block_seeds(2025)
    assert a == pipeline.block_seeds(2025) and a[0] != a[1]
    assert a != pipeline.block_seeds(2026)


def test_user_position_sinr(ref, solutions):
    s = pipeline.user_position_sinr(ref, solutions["proposed"])
    assert s.shape == (2, 2)
    # each user meets its rate target at its own position
    gamma = 2.0 ** 17 - 1
    assert np.all(np.diag(s) >= gamma * (1 - 1e-6))


def test_run_pipeline_artifacts(tmp_path, ref_config):
    res = pipeline.run_pipeline(ref_config, out_dir=tmp_path, grid_step=0.05)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"solution.json", "verification.json", "summary.json", "capon.csv", "capon.json",
            "sinr_user1.csv", "sinr_user2.csv"} <= names
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["design_audit_passed"] and summary["scheme"] == "proposed"
    assert set(res.timings) >= {"solve", "recover", "verify", "heatmap", "simulate", "capon"}


def test_infeasible_run_writes_diagnosis(tmp_path, ref_config):
    with pytest.raises(InfeasibleError) as ei:
        pipeline.run_pipeline(ref_config.replace(ffbf=ref_config.ffbf.__class__(r_min=2.0)),
                              scheme="ffbf", out_dir=tmp_path, heatmaps=False, sensing=False)
    assert ei.value.stage == "solve"
    diag = json.loads((tmp_path / "infeasibility.json").read_text())
    assert diag["binding_family"] == "rate" and diag["max_feasible_rate_bps_hz"] < 1.0


def test_compare_records_failures(ref_config):
    bad = ref_config.replace(ffbf=ref_config.ffbf.__class__(r_min=2.0))
    rows = pipeline.compare_schemes(bad, sensing=False)
    status = {r["scheme"]: r["status"] for r in rows}
    assert status == {"proposed": "ok", "nccs": "ok", "ffbf": "failed"}
    table = pipeline.format_table(rows)
    assert "ffbf      failed" in table
