import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfisac import metrics, optimizer as opt
from nfisac.errors import DegenerateUserError, InfeasibleError, ReconstructionError
from tests.conftest import crandn, random_problem, random_psd


# ---------------------------------------------------------------- weights

def test_weights_examples():
    w = opt.assemble_scenario_weights(np.eye(3, dtype=complex))
    assert np.allclose(w.target, 1) and np.allclose(w.pair, 1) and w.epsilon == 0.1
    h = np.array([[2.0, 0.0], [0.0, 1.0]], dtype=complex)
    w = opt.assemble_scenario_weights(h, 0.3)
    assert w.target[0] == pytest.approx(0.25) and w.pair[0, 1] == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    w = opt.assemble_scenario_weights(crandn(rng, 4, 6))
    assert np.allclose(w.pair, w.pair.T)
    with pytest.raises(InfeasibleError):
        opt.assemble_scenario_weights(np.zeros((1, 3), dtype=complex))


def test_weights_validation():
    with pytest.raises(ValueError):
        opt.SensingWeights(np.array([1.0, -1.0]), np.ones((2, 2)), 0.1)
    with pytest.raises(ValueError):
        opt.SensingWeights(np.ones(2), np.array([[1.0, 2.0], [1.0, 1.0]]), 0.1)
    with pytest.raises(ValueError):
        opt.SensingWeights(np.ones(2), np.ones((2, 2)), 0.0)


# ---------------------------------------------------------------- embedding

def test_embed_identity_and_pauli():
    assert np.array_equal(opt.complex_to_real_embed(np.eye(3)), np.eye(6))
    a = np.array([[0, -1j], [1j, 0]])
    assert np.allclose(np.linalg.eigvalsh(opt.complex_to_real_embed(a)), [-1, -1, 1, 1])


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_embed_properties(seed, n):
    rng = np.random.default_rng(seed)
    A = random_psd(rng, n)
    B = crandn(rng, n, n)
    B = B + B.conj().T
    E = opt.complex_to_real_embed(A)
    assert np.linalg.eigvalsh(E).min() >= -1e-10 * max(1, np.abs(A).max())
    assert np.trace(E) == pytest.approx(2 * np.trace(A).real)
    lhs = np.trace(B.conj().T @ A).real
    rhs = 0.5 * np.trace(opt.complex_to_real_embed(B).T @ E)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    assert np.allclose(opt.real_to_complex(E), A)


def test_embed_rejects_non_hermitian():
    with pytest.raises(ValueError):
        opt.complex_to_real_embed(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        opt.complex_to_real_embed(np.ones(3))


# ---------------------------------------------------------------- closed forms

def _single_target(n, seed, with_user=False):
    rng = np.random.default_rng(seed)
    ht = crandn(rng, 1, n)
    w = opt.assemble_scenario_weights(ht)
    K = 1 if with_user else 0
    hu = crandn(rng, K, n)
    return opt.DesignProblem(hu, ht, w, 0.7, np.full(K, 1e-2), np.full(K, np.nan), (), label="single")


@pytest.mark.parametrize("n,with_user", [(2, True), (2, False), (9, False), (16, True)])
def test_single_target_closed_form(n, with_user):
    prob = _single_target(n, n, with_user)
    sol = opt.solve_relaxed(prob)
    h = prob.target_channels[0]
    expected = prob.weights.target[0] * prob.p_max * np.linalg.norm(h) ** 2
    assert sol.mu == pytest.approx(expected, rel=1e-6)
    # R_x is P h* h^T / |h|^2
    ref = prob.p_max * np.outer(h.conj(), h) / np.linalg.norm(h) ** 2
    assert np.linalg.norm(sol.R_x - ref) <= 1e-5 * np.linalg.norm(ref)


def test_reduced_basis_matches_full():
    rng = np.random.default_rng(11)
    prob = random_problem(rng, 8, K=2, L=3, r_min=3.0)
    full = opt.solve_relaxed(prob, reduce=False)
    red = opt.solve_relaxed(prob, reduce=True)
    assert red.basis_rank == 5 and full.basis_rank == 8
    assert red.mu == pytest.approx(full.mu, rel=1e-6)


def test_zero_power():
    prob = _single_target(4, 0)
    prob0 = opt.DesignProblem(prob.user_channels, prob.target_channels, prob.weights, 0.0,
                              prob.noise, prob.r_min, ())
    assert opt.solve_relaxed(prob0).mu == 0.0
    rng = np.random.default_rng(0)
    p = random_problem(rng, 4, p_max=0.0)
    with pytest.raises(InfeasibleError) as ei:
        opt.solve_relaxed(p)
    assert ei.value.family == "power"


# ---------------------------------------------------------------- recovery

def test_recover_exact_rank_one():
    rng = np.random.default_rng(1)
    f, h = crandn(rng, 5), crandn(rng, 5)
    F = np.outer(f, f.conj())
    g = opt.recover_rank_one(F, h)
    assert abs(h @ g) == pytest.approx(abs(h @ f), rel=1e-12)
    assert np.allclose(np.outer(g, g.conj()), F, atol=1e-9)


def test_recover_identity_example():
    g = opt.recover_rank_one(np.eye(3), np.eye(3)[0])
    assert np.allclose(g, np.eye(3)[0])
    R = opt.residual_sensing_cov(np.zeros((3, 3)), [np.eye(3)], [g])
    assert np.allclose(R, np.eye(3) - np.outer(np.eye(3)[0], np.eye(3)[0]))


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_recover_random_psd(seed, n):
    rng = np.random.default_rng(seed)
    F = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
    h = crandn(rng, n)
    f = opt.recover_rank_one(F, h)
    gap = np.linalg.eigvalsh(F - np.outer(f, f.conj()))
    assert gap.min() >= -1e-10 * np.linalg.norm(F, 2)
    assert abs(h @ f) ** 2 == pytest.approx((h @ F @ h.conj()).real, rel=1e-9)
    Rs = random_psd(rng, n)
    Rt = opt.residual_sensing_cov(Rs, [F], [f])
    assert np.trace(Rt).real + np.linalg.norm(f) ** 2 == pytest.approx(
        np.trace(Rs).real + np.trace(F).real, rel=1e-9)


def test_residual_unchanged_for_rank_one_inputs():
    rng = np.random.default_rng(2)
    f = crandn(rng, 4)
    Rs = random_psd(rng, 4)
    R = opt.residual_sensing_cov(Rs, [np.outer(f, f.conj())], [f])
    assert np.allclose(R, Rs)


def test_recover_errors():
    with pytest.raises(DegenerateUserError):
        opt.recover_rank_one(np.diag([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(ReconstructionError):
        opt.residual_sensing_cov(np.zeros((2, 2)), [np.eye(2)], [np.array([2.0, 0.0])])


def test_degenerate_user_without_rate_is_folded():
    rng = np.random.default_rng(4)
    prob = random_problem(rng, 4, K=1, L=1, r_min=np.nan, pairs=False)
    relaxed = opt.RelaxedSolution(F=np.zeros((1, 4, 4), complex), R_s=np.eye(4), R_x=np.eye(4),
                                  mu=1.0, status="optimal")
    sol = opt.recover(relaxed, prob)
    assert np.all(sol.beamformers == 0)
    assert np.allclose(sol.R_s, np.eye(4))


# ---------------------------------------------------------------- reference scenario

def test_reference_proposed_verifies(ref, solutions):
    prob = ref.problem("proposed")
    sol = solutions["proposed"]
    report = opt.verify_solution(sol, prob)
    assert report.passed, report.lines()
    assert sol.relaxed.status == "optimal"
    assert sol.relaxed.duality_gap <= 1e-8 * max(1.0, sol.mu)
    # optimum value of the reference scenario, frozen from the verified solve
    assert sol.mu == pytest.approx(8.149409e-3, rel=1e-5)


def test_solution_invariants(solutions):
    for sol in solutions.values():
        rel = sol.relaxed
        for F, f in zip(rel.F, sol.beamformers):
            gap = np.linalg.eigvalsh(F - np.outer(f, f.conj())).min()
            assert gap >= -1e-7 * np.linalg.norm(F, 2)
        total = sum(np.outer(f, f.conj()) for f in sol.beamformers) + sol.R_s
        assert np.linalg.norm(total - (rel.F.sum(0) + rel.R_s)) <= 1e-7 * np.linalg.norm(total)


def test_nccs_relaxes_proposed(ref, solutions):
    assert solutions["nccs"].mu >= solutions["proposed"].mu
    report = opt.verify_solution(solutions["nccs"], ref.audit_problem("nccs"))
    assert "cross_correlation" in report.failed()


def test_single_target_nccs_equals_proposed(ref_config):
    from nfisac.scenario import Scenario
    cfg = ref_config.replace(targets=ref_config.targets[:1])
    sc = Scenario(cfg)
    a = opt.solve_relaxed(sc.problem("proposed"))
    b = opt.solve_relaxed(sc.problem("nccs"))
    assert a.mu == pytest.approx(b.mu, rel=1e-6)


def test_monotonicity(ref):
    base = ref.problem("proposed")
    mus_r = [opt.solve_relaxed(base.with_rate(r)).mu for r in (8.0, 14.0, 17.0)]
    assert mus_r[0] >= mus_r[1] * (1 - 1e-7) and mus_r[1] >= mus_r[2] * (1 - 1e-7)
    from dataclasses import replace
    mus_p = [opt.solve_relaxed(replace(base, p_max=p)).mu for p in (0.1, 0.15, base.p_max)]
    assert mus_p[0] <= mus_p[1] * (1 + 1e-7) and mus_p[1] <= mus_p[2] * (1 + 1e-7)


def test_weight_scale_covariance(ref):
    from dataclasses import replace
    base = ref.problem("proposed")
    a = opt.solve_relaxed(base)
    b = opt.solve_relaxed(replace(base, weights=base.weights.scaled(2.0)))
    assert b.mu == pytest.approx(2 * a.mu, rel=1e-5)
    assert np.linalg.norm(b.R_x - a.R_x) <= 1e-5 * np.linalg.norm(a.R_x) * 10
    # the optimal R_x is pinned by its beampattern values
    for h in base.target_channels:
        assert metrics.beampattern_gain(h, b.R_x) == pytest.approx(metrics.beampattern_gain(h, a.R_x), rel=1e-5)


def test_ffbf_far_field_users_parallel(ref):
    far = ref.user_channels_far
    a, b = far / np.linalg.norm(far, axis=1, keepdims=True)
    assert abs(np.vdot(a, b)) == pytest.approx(1.0, abs=1e-10)


def test_ffbf_feasibility(ref):
    ff = ref.problem("ffbf")
    assert opt.solve_relaxed(ff).mu > 0
    with pytest.raises(InfeasibleError) as ei:
        opt.solve_relaxed(ff.with_rate(17.0))
    assert ei.value.family == "rate"
    assert ei.value.max_feasible_rate < 1.0


def test_infeasibility_reports_boundary(ref):
    with pytest.raises(InfeasibleError) as ei:
        opt.solve_relaxed(ref.problem("nccs").with_rate(21.0))
    assert ei.value.family == "rate"
    assert 19.5 < ei.value.max_feasible_rate < 21.0


# ---------------------------------------------------------------- verification

def test_verify_power_violation_only(ref, solutions):
    sol = solutions["proposed"]
    doubled = opt.BeamformingSolution(np.sqrt(2) * sol.beamformers, 2 * sol.R_s, 2 * sol.R_x, 2 * sol.mu)
    report = opt.verify_solution(doubled, ref.problem("proposed"))
    assert report.failed() == ["power"]


def test_verify_zero_solution(ref):
    N = ref.tx.n_elements
    z = opt.BeamformingSolution(np.zeros((2, N), complex), np.zeros((N, N)), np.zeros((N, N)), 1e-3)
    failed = opt.verify_solution(z, ref.problem("proposed")).failed()
    assert "beampattern" in failed and "rate" in failed and "power" not in failed


def test_report_serialization(ref, solutions):
    report = opt.verify_solution(solutions["proposed"], ref.problem("proposed"))
    d = report.to_dict()
    assert d["passed"] and set(d["families"]) == {"beampattern", "cross_correlation", "power", "rate",
                                                   "covariance", "psd"}
    assert all(line.startswith("PASS") for line in report.lines())
