"""End-to-end runs: solve, recover, verify, simulate, evaluate, export."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels, capon, io, metrics, optimizer, signalsim
from .channel import OUTGOING, nearfield_channels, roundtrip_channel
from .config import ScenarioConfig, config_to_dict
from .errors import InfeasibleError, NfisacError
from .scenario import Scenario

log = logging.getLogger(__name__)

PEAK_SEPARATION_M = 0.05


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except NfisacError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - t0


def block_seeds(seed: int) -> tuple[int, int]:
    """Independent seeds for the transmit block and the receiver noise."""
    children = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(c.generate_state(1, dtype=np.uint64)[0]) for c in children)


# ------------------------------------------------------------------ evaluation

def solve_scheme(scenario: Scenario, scheme: str) -> optimizer.BeamformingSolution:
    problem = scenario.problem(scheme)
    relaxed = optimizer.solve_relaxed(problem, reduce=scenario.config.reduce,
                                      tol=scenario.config.solver_tolerance)
    return optimizer.recover(relaxed, problem, scheme)


def user_position_sinr(scenario: Scenario, solution: optimizer.BeamformingSolution) -> np.ndarray:
    """``S[k, j]``: SINR of user ``k``'s stream for a receiver at user ``j``'s position."""
    h = scenario.user_channels
    K = h.shape[0]
    out = np.empty((K, K))
    for k in range(K):
        for j in range(K):
            out[k, j] = metrics.user_sinr(h[j], solution.beamformers, solution.R_s, scenario.user_noise[k], k)
    return out


def evaluate(scenario: Scenario, solution: optimizer.BeamformingSolution) -> dict:
    """Near-field figures of merit of any scheme's output."""
    prob = scenario.audit_problem(solution.scheme)
    w = prob.weights
    R_x = solution.R_x
    gains = np.array([metrics.beampattern_gain(h, R_x) for h in prob.target_channels]) * w.target
    achieved = float(gains.min())
    cross = {f"{a + 1}-{b + 1}": w.pair[a, b] * metrics.cross_correlation(prob.target_channels[a],
                                                                         prob.target_channels[b], R_x)
             for a, b in optimizer.all_pairs(prob.n_targets)}
    worst_cross = max(cross.values()) if cross else 0.0
    ratio = worst_cross / achieved if achieved > 0 else float("inf")
    sinr = user_position_sinr(scenario, solution)
    own = np.diag(sinr) if sinr.size else np.zeros(0)
    rates = [metrics.user_rate(s) for s in own]
    report = optimizer.verify_solution(solution, prob)
    return {
        "mu_design": solution.mu,
        "worst_weighted_gain": achieved,
        "weighted_gains": gains,
        "weighted_cross": cross,
        "max_pair_ratio": ratio,
        "pair_violation": bool(ratio > prob.weights.epsilon * (1 + optimizer.VERIFY_REL_TOL)),
        "user_sinr_db": metrics.to_db(own),
        "user_rates_bps_hz": rates,
        "cross_user_sinr_db": metrics.to_db(sinr),
        "near_field_audit": report.to_dict(),
    }


def sinr_heatmap(scenario: Scenario, solution: optimizer.BeamformingSolution, k: int,
                 grid: capon.SpatialGrid) -> capon.SpatialGrid:
    """SINR (dB) of user ``k``'s stream for a hypothetical receiver at each grid point."""
    h = nearfield_channels(scenario.tx, grid.points(), scenario.params, OUTGOING)
    sinr = _kernels.sinr_grid(h, solution.beamformers, solution.R_s, float(scenario.user_noise[k]), k)
    return grid.with_values(metrics.to_db(np.nan_to_num(sinr, nan=0.0)), "dB", user=k + 1,
                            scheme=solution.scheme)


def echo_channels(scenario: Scenario) -> list:
    return [roundtrip_channel(scenario.target_channels[l], scenario.target_rx_channels[l], scenario.rcs[l])
            for l in range(len(scenario.rcs))]


def simulate(scenario: Scenario, solution: optimizer.BeamformingSolution, T: int, seed: int):
    x_seed, y_seed = block_seeds(seed)
    X = signalsim.sample_transmit_block(solution, T, x_seed)
    Y = signalsim.simulate_echoes(X, echo_channels(scenario), scenario.rx_noise, y_seed)
    return X, Y


def capon_map(scenario: Scenario, X, Y, grid: capon.SpatialGrid, loading: float) -> capon.SpatialGrid:
    return capon.capon_spectrum(X, Y, scenario.tx, scenario.rx, grid, scenario.params, loading,
                                scenario.config.capon_transmit_weighting)


def peak_errors(grid: capon.SpatialGrid, targets: np.ndarray) -> dict:
    """Top-L Capon peaks and, per target, the distance to its nearest peak."""
    peaks = capon.find_peaks(grid, len(targets), PEAK_SEPARATION_M)
    dists = [min((float(np.linalg.norm(p - t)) for p in peaks.points), default=float("inf"))
             for t in targets]
    return {"peaks_m": [p.tolist() for p in peaks.points], "peak_values_dB": peaks.values,
            "shortfall": peaks.shortfall, "target_to_peak_m": dists}


# ------------------------------------------------------------------ pipeline

@dataclass
class PipelineResult:
    scheme: str
    solution: optimizer.BeamformingSolution | None = None
    design_report: optimizer.ConstraintReport | None = None
    evaluation: dict = field(default_factory=dict)
    heatmaps: list = field(default_factory=list)
    capon_grid: capon.SpatialGrid | None = None
    peaks: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _apply_overrides(config: ScenarioConfig, scheme, seed, grid_step, loading) -> ScenarioConfig:
    changes = {}
    if scheme is not None:
        changes["scheme"] = scheme
    if seed is not None:
        changes["seed"] = int(seed)
    if loading is not None:
        if loading < 0:
            raise ValueError("loading must be non-negative")
        changes["diagonal_loading"] = float(loading)
    if grid_step is not None:
        from dataclasses import replace
        if not grid_step > 0:
            raise ValueError("grid step must be positive")
        changes["grid"] = replace(config.grid, step=float(grid_step))
    return config.replace(**changes) if changes else config


def run_pipeline(config: ScenarioConfig, *, scheme: str | None = None, seed: int | None = None,
                 out_dir=None, grid_step: float | None = None, loading: float | None = None,
                 heatmaps: bool = True, sensing: bool = True) -> PipelineResult:
    """Run one scheme end to end and optionally write its artifacts to ``out_dir``.

    Module errors propagate with a ``stage`` attribute naming the failing
    stage. An infeasible design still writes ``infeasibility.json`` first.
    """
    cfg = _apply_overrides(config, scheme, seed, grid_step, loading)
    sc = Scenario(cfg)
    res = PipelineResult(scheme=cfg.scheme)
    out = Path(out_dir) if out_dir is not None else None
    t = res.timings

    try:
        with _stage("solve", t):
            problem = sc.problem(cfg.scheme)
            relaxed = optimizer.solve_relaxed(problem, reduce=cfg.reduce, tol=cfg.solver_tolerance)
    except InfeasibleError as exc:
        if out is not None:
            res.files["infeasibility"] = io.write_json(out / "infeasibility.json", {
                "scheme": cfg.scheme, "message": str(exc), "binding_family": exc.family,
                "max_feasible_rate_bps_hz": exc.max_feasible_rate,
                "requested_rate_bps_hz": problem.r_min})
        raise
    with _stage("recover", t):
        res.solution = optimizer.recover(relaxed, problem, cfg.scheme)
    with _stage("verify", t):
        res.design_report = optimizer.verify_solution(res.solution, problem)
        res.evaluation = evaluate(sc, res.solution)
    if heatmaps:
        with _stage("heatmap", t):
            grid = capon.SpatialGrid.from_spec(cfg.grid)
            res.heatmaps = [sinr_heatmap(sc, res.solution, k, grid) for k in range(problem.n_users)]
    if sensing:
        with _stage("simulate", t):
            X, Y = simulate(sc, res.solution, cfg.block_length, cfg.seed)
        with _stage("capon", t):
            res.capon_grid = capon_map(sc, X, Y, capon.SpatialGrid.from_spec(cfg.grid), cfg.diagonal_loading)
            res.peaks = peak_errors(res.capon_grid, sc.target_positions)

    ev = res.evaluation
    res.summary = {
        "scheme": cfg.scheme,
        "mu": res.solution.mu,
        "solver": {"status": relaxed.status, "duality_gap": relaxed.duality_gap,
                   "basis_rank": relaxed.basis_rank},
        "design_audit_passed": res.design_report.passed,
        "design_audit_failed": res.design_report.failed(),
        "user_rates_bps_hz": ev["user_rates_bps_hz"],
        "user_sinr_db": ev["user_sinr_db"],
        "max_pair_ratio": ev["max_pair_ratio"],
        "pair_violation": ev["pair_violation"],
        "worst_weighted_gain": ev["worst_weighted_gain"],
        "capon": res.peaks,
        "runtimes_s": dict(t),
        "kernel_backend": _kernels.backend(),
    }
    if out is not None:
        _write_artifacts(out, cfg, res)
    return res


def _write_artifacts(out: Path, cfg: ScenarioConfig, res: PipelineResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    f = res.files
    f["solution"] = io.save_solution(out / "solution.json", res.solution, res.design_report,
                                     {"config": config_to_dict(cfg)})
    f["report"] = io.write_json(out / "verification.json", {
        "design": res.design_report.to_dict(), "near_field": res.evaluation["near_field_audit"]})
    for hm in res.heatmaps:
        f[f"sinr_user{hm.meta['user']}"] = io.write_grid_csv(out / f"sinr_user{hm.meta['user']}.csv", hm)
    if res.capon_grid is not None:
        f["capon_csv"] = io.write_grid_csv(out / "capon.csv", res.capon_grid)
        f["capon_json"] = io.write_grid_json(out / "capon.json", res.capon_grid)
    f["summary"] = io.write_json(out / "summary.json", res.summary)


# ------------------------------------------------------------------ comparison

def compare_schemes(config: ScenarioConfig, schemes=("proposed", "nccs", "ffbf"), *,
                    seed: int | None = None, out_dir=None, grid_step: float | None = None,
                    loading: float | None = None, sensing: bool = True) -> list[dict]:
    """Run each scheme with shared seeds; a failing scheme is recorded and skipped."""
    rows = []
    for name in schemes:
        row = {"scheme": name}
        try:
            res = run_pipeline(config, scheme=name, seed=seed, grid_step=grid_step, loading=loading,
                               heatmaps=False, sensing=sensing,
                               out_dir=None if out_dir is None else Path(out_dir) / name)
        except (NfisacError, np.linalg.LinAlgError) as exc:
            row.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                       stage=getattr(exc, "stage", None))
            rows.append(row)
            continue
        ev = res.evaluation
        row.update(status="ok", mu=res.solution.mu, worst_weighted_gain=ev["worst_weighted_gain"],
                   max_pair_ratio=ev["max_pair_ratio"], user_sinr_db=list(ev["user_sinr_db"]),
                   target_to_peak_m=res.peaks.get("target_to_peak_m"))
        rows.append(row)
    if out_dir is not None:
        io.write_json(Path(out_dir) / "comparison.json", rows)
    return rows


def format_table(rows: list[dict]) -> str:
    """Plain-text comparison table."""
    head = f"{'scheme':<9} {'mu [W]':>12} {'worst gain':>12} {'max pair':>9}  {'user SINR [dB]':<22} peak err [m]"
    lines = [head, "-" * len(head)]
    for r in rows:
        if r["status"] != "ok":
            lines.append(f"{r['scheme']:<9} failed: {r['error']}")
            continue
        sinr = ", ".join(f"{v:.1f}" for v in r["user_sinr_db"])
        peaks = ", ".join("-" if not np.isfinite(d) else f"{d:.3f}" for d in r["target_to_peak_m"] or [])
        lines.append(f"{r['scheme']:<9} {r['mu']:>12.6g} {r['worst_weighted_gain']:>12.6g} "
                     f"{r['max_pair_ratio']:>9.4f}  {sinr:<22} {peaks}")
    return "\n".join(lines)
