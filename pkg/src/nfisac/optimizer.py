"""Max-min beampattern design with cross-correlation and rate constraints.

The lifted problem is

    maximize    mu
    subject to  w_l h_l^T R_x h_l^*                 >= mu          (targets)
                w_ll' |h_l^T R_x h_l'^*|             <= eps * mu    (target pairs)
                Tr(h_k^* h_k^T (xi_k F_k - R_x))     >= sigma_k^2   (users)
                Tr(R_x) <= P_max,  R_x = sum_k F_k + R_s,  F_k, R_s PSD

Every constraint sees the covariances only through quadratic forms in the
conjugated user/target channels, so the program is solved on the span of those
channels (dimension at most K + L) and lifted back. Compressing any feasible
point onto that span keeps it feasible and never increases its trace, so the
reduced program has the same optimum. ``reduce=False`` solves in the full
element space, which is only practical for small arrays.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from . import metrics
from .errors import (DegenerateUserError, InfeasibleError, ReconstructionError, SolverError)

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1
SOLVER_TOL = 1e-9
VERIFY_REL_TOL = 1e-6
PSD_REL_FLOOR = 1e-8


# --------------------------------------------------------------------------- types

@dataclass(frozen=True)
class SensingWeights:
    """Per-target weights ``w_l``, symmetric pair weights ``w_ll'`` and tolerance ``eps``."""

    target: np.ndarray
    pair: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        target = np.asarray(self.target, dtype=float).reshape(-1)
        pair = np.asarray(self.pair, dtype=float)
        L = target.size
        if pair.shape != (L, L):
            raise ValueError(f"pair weights must be {L}x{L}, got {pair.shape}")
        if np.any(target <= 0):
            raise ValueError("target weights must be positive")
        off = ~np.eye(L, dtype=bool)
        if np.any(pair[off] <= 0):
            raise ValueError("pair weights must be positive")
        if not np.allclose(pair, pair.T, rtol=1e-12, atol=0):
            raise ValueError("pair weights must be symmetric")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "pair", pair)

    def scaled(self, factor: float) -> "SensingWeights":
        return SensingWeights(self.target * factor, self.pair * factor, self.epsilon)


def assemble_scenario_weights(target_channels, epsilon: float = DEFAULT_EPSILON) -> SensingWeights:
    """Channel-strength balancing: ``w_l = 1/|h_l|^2``, ``w_ll' = 1/(|h_l| |h_l'|)``."""
    h = np.atleast_2d(np.asarray(target_channels, dtype=complex))
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms == 0):
        bad = np.flatnonzero(norms == 0).tolist()
        raise InfeasibleError(f"targets {bad} have zero channel gain (outside the radiation half-space)")
    return SensingWeights(1.0 / norms**2, 1.0 / np.outer(norms, norms), epsilon)


def all_pairs(L: int) -> tuple[tuple[int, int], ...]:
    return tuple((a, b) for a in range(L) for b in range(a + 1, L))


@dataclass(frozen=True)
class DesignProblem:
    """One instance of the lifted design program.

    ``r_min[k]`` of ``nan`` (or ``<= 0``) omits user ``k``'s rate constraint;
    ``pairs`` lists the unordered target pairs whose cross-correlation is bounded.
    """

    user_channels: np.ndarray
    target_channels: np.ndarray
    weights: SensingWeights
    p_max: float
    noise: np.ndarray
    r_min: np.ndarray
    pairs: tuple[tuple[int, int], ...] | None = None
    label: str = "proposed"

    def __post_init__(self):
        hu = np.asarray(self.user_channels, dtype=complex)
        ht = np.atleast_2d(np.asarray(self.target_channels, dtype=complex))
        N = ht.shape[1]
        hu = hu.reshape(-1, N)
        K, L = hu.shape[0], ht.shape[0]
        if L < 1:
            raise ValueError("at least one target is required")
        if self.weights.target.size != L:
            raise ValueError("weights do not match the number of targets")
        noise = np.broadcast_to(np.asarray(self.noise, dtype=float), (K,)).copy()
        r_min = np.broadcast_to(np.asarray(self.r_min, dtype=float), (K,)).copy()
        if np.any(noise <= 0):
            raise ValueError("noise powers must be positive")
        if not self.p_max >= 0:
            raise ValueError("p_max must be non-negative")
        pairs = all_pairs(L) if self.pairs is None else tuple(
            tuple(sorted((int(a), int(b)))) for a, b in self.pairs)
        for a, b in pairs:
            if a == b or not (0 <= a < L and 0 <= b < L):
                raise ValueError(f"invalid target pair {(a, b)}")
        object.__setattr__(self, "user_channels", hu)
        object.__setattr__(self, "target_channels", ht)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "r_min", r_min)
        object.__setattr__(self, "pairs", tuple(sorted(set(pairs))))

    @property
    def n_users(self) -> int:
        return self.user_channels.shape[0]

    @property
    def n_targets(self) -> int:
        return self.target_channels.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.target_channels.shape[1]

    def rate_active(self) -> np.ndarray:
        return np.isfinite(self.r_min) & (self.r_min > 0)

    def with_rate(self, r_min) -> "DesignProblem":
        return replace(self, r_min=np.broadcast_to(np.asarray(r_min, dtype=float),
                                                   (self.n_users,)).copy())

    def without_pairs(self, pairs=None) -> "DesignProblem":
        """Drop the listed pairs (all pairs when ``pairs`` is None)."""
        if pairs is None:
            return replace(self, pairs=())
        drop = {tuple(sorted(p)) for p in pairs}
        return replace(self, pairs=tuple(p for p in self.pairs if p not in drop))


@dataclass
class RelaxedSolution:
    F: np.ndarray               # (K, N, N)
    R_s: np.ndarray
    R_x: np.ndarray
    mu: float
    status: str
    duality_gap: float = float("nan")
    solve_time: float = float("nan")
    iterations: int = -1
    basis_rank: int = -1
    residuals: dict = field(default_factory=dict)


@dataclass
class BeamformingSolution:
    beamformers: np.ndarray     # (K, N); zero rows for users without a rate constraint
    R_s: np.ndarray             # adjusted sensing covariance
    R_x: np.ndarray
    mu: float
    scheme: str = "proposed"
    relaxed: RelaxedSolution | None = None

    @property
    def n_users(self) -> int:
        return self.beamformers.shape[0]


# ------------------------------------------------------------------ real embedding

def _embed(a: np.ndarray) -> np.ndarray:
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def complex_to_real_embed(a, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric ``[[Re A, -Im A], [Im A, Re A]]`` of a Hermitian ``A``.

    The map preserves positive semidefiniteness (each eigenvalue appears twice),
    doubles the trace, and turns ``Re Tr(B^H A)`` into
    ``0.5 * Tr(embed(B)^T embed(A))``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got {a.shape}")
    asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if asym > tol * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    return _embed(a)


def real_to_complex(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`complex_to_real_embed`, symmetrized."""
    n = z.shape[0] // 2
    m = 0.5 * (z[:n, :n] + z[n:, n:]) + 0.5j * (z[n:, :n] - z[:n, n:])
    return 0.5 * (m + m.conj().T)


def _rvec(c: np.ndarray) -> np.ndarray:
    return np.concatenate([c.real, c.imag])


def _re_form(a, b, z):
    """``Re(a^H M b)`` as an affine expression of ``z = embed(M)``."""
    return _rvec(a) @ z @ _rvec(b)


def _im_form(a, b, z):
    return _rvec(a) @ z @ _rvec(-1j * b)


def _hermitian_variable(r: int, name: str):
    """Embedded Hermitian ``r x r`` decision matrix and its constraints.

    The block structure of the embedding is imposed by equalities on a real
    PSD variable.
    """
    z = cp.Variable((2 * r, 2 * r), PSD=True, name=name)
    return z, [z[:r, :r] == z[r:, r:], z[:r, r:] == -z[r:, :r]]


# ---------------------------------------------------------------------- solving

def _channel_basis(vectors: np.ndarray, reduce: bool) -> np.ndarray:
    N = vectors.shape[1]
    if not reduce:
        return np.eye(N, dtype=complex)
    u, s, _ = np.linalg.svd(vectors.T, full_matrices=False)
    keep = s > 1e-10 * s[0]
    return u[:, keep]


def _user_scaling(cu: np.ndarray, active: np.ndarray, level: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Congruence ``T`` that stretches the rate-constrained user directions.

    At the optimum the interference seen by a user is about ``1/gamma`` of its
    signal, far below the scale of the other matrix entries. Writing each
    decision matrix as ``T M' T^H`` with ``T^H c_k = s_k e_k`` puts both the
    signal and the interference of user ``k`` on one diagonal entry of ``M'``.
    ``level`` estimates the normalized signal power; ``s_k`` is chosen so the
    signal and interference entries sit near ``sqrt(gamma)`` and ``1/sqrt(gamma)``.
    The program is unchanged; only its conditioning improves.
    """
    r = cu.shape[1]
    idx = np.flatnonzero(active & (gamma > 1.0))
    if idx.size == 0 or idx.size >= r:
        return np.eye(r, dtype=complex)
    cols = cu[idx].T
    u, sv, _ = np.linalg.svd(cols)
    if sv[-1] < 1e-6 * sv[0]:
        return np.eye(r, dtype=complex)
    basis = np.column_stack([cols, u[:, idx.size:]])
    scale = np.ones(r)
    scale[: idx.size] = np.minimum(1.0, np.sqrt(level[idx] / np.sqrt(gamma[idx])))
    return np.linalg.inv(basis).conj().T * scale[None, :]


def _signal_levels(problem: DesignProblem, reduce: bool, tol: float) -> np.ndarray:
    """Normalized power each user receives in the rate-free design."""
    free = _solve_core(problem.with_rate(np.nan), reduce, tol)
    hu = problem.user_channels
    q = np.einsum("kn,nm,km->k", hu, free.R_x, hu.conj()).real
    return np.maximum(q, 0.0) / (problem.p_max * np.linalg.norm(hu, axis=1) ** 2)


def _solve_core(problem: DesignProblem, reduce: bool, tol: float, levels=None,
                **solver_opts) -> RelaxedSolution:
    K, L, N = problem.n_users, problem.n_targets, problem.n_antennas
    P = float(problem.p_max)
    hu, ht = problem.user_channels, problem.target_channels

    if P == 0.0:
        if np.any(problem.rate_active()):
            raise InfeasibleError("no transmit power is available for the rate constraints", family="power")
        zero = np.zeros((N, N), dtype=complex)
        return RelaxedSolution(np.zeros((K, N, N), dtype=complex), zero, zero.copy(), 0.0,
                               "optimal", duality_gap=0.0)

    conj_all = np.vstack([hu.conj(), ht.conj()]) if K else ht.conj()
    Q = _channel_basis(conj_all, reduce)
    r = Q.shape[1]
    u_norm = np.linalg.norm(hu, axis=1)
    t_norm = np.linalg.norm(ht, axis=1)
    if np.any(t_norm == 0):
        raise InfeasibleError("a target has zero channel gain", family="beampattern")
    # unit-norm channel coordinates in the reduced basis
    cu = (Q.conj().T @ hu.conj().T).T / np.where(u_norm > 0, u_norm, 1.0)[:, None] if K else np.zeros((0, r))
    ct = (Q.conj().T @ ht.conj().T).T / t_norm[:, None]

    w = problem.weights
    s_t = w.target * t_norm**2
    s_p = w.pair * np.outer(t_norm, t_norm)

    active = problem.rate_active()
    gamma = np.ones(K)
    rhs = np.zeros(K)
    for k in np.flatnonzero(active):
        if u_norm[k] == 0:
            raise InfeasibleError(f"user {k} has zero channel gain", family="rate")
        gamma[k] = metrics.sinr_threshold(problem.r_min[k])
        rhs[k] = gamma[k] * problem.noise[k] / (P * u_norm[k] ** 2)
    if levels is None:
        levels = _signal_levels(problem, reduce, tol) if np.any(active & (gamma > 1.0)) else rhs
    T = _user_scaling(cu, active, np.maximum(rhs, levels), gamma)
    du = cu @ T.conj() if K else cu
    dt = ct @ T.conj()
    scale = np.abs(du[np.arange(K), np.arange(K)]) ** 2 if K else np.zeros(0)

    zs_F, cons = [], []
    for k in range(K):
        z, st = _hermitian_variable(r, f"F{k}")
        zs_F.append(z)
        cons += st
    z_s, st = _hermitian_variable(r, "Rs")
    cons += st
    z_x = z_s + sum(zs_F) if K else z_s
    mu = cp.Variable(name="mu")

    for l in range(L):
        cons.append(s_t[l] * _re_form(dt[l], dt[l], z_x) >= mu)
    for a, b in problem.pairs:
        re = _re_form(dt[a], dt[b], z_x)
        im = _im_form(dt[a], dt[b], z_x)
        cons.append(cp.SOC(w.epsilon * mu / s_p[a, b], cp.hstack([re, im])))

    # SINR form of the rate constraint, row-scaled to unit signal coefficient
    rate_cons, rate_rhs = [], []
    for k in np.flatnonzero(active):
        interference = _re_form(du[k], du[k], z_s)
        for j in range(K):
            if j != k:
                interference = interference + _re_form(du[k], du[k], zs_F[j])
        row = 1.0 / (scale[k] * np.sqrt(gamma[k])) if scale[k] < 1.0 else 1.0
        c = row * (_re_form(du[k], du[k], zs_F[k]) - gamma[k] * interference) >= row * rhs[k]
        cons.append(c)
        rate_cons.append((c, row))
        rate_rhs.append(rhs[k])

    gram = _embed(T.conj().T @ T)
    power = 0.5 * cp.sum(cp.multiply(gram, z_x)) <= 1.0
    cons.append(power)

    prob = cp.Problem(cp.Maximize(mu), cons)
    opts = dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=500)
    opts.update(solver_opts)
    t0 = time.perf_counter()
    try:
        prob.solve(solver=cp.CLARABEL, **opts)
    except cp.SolverError as exc:
        raise SolverError(f"conic solver failed: {exc}", status="solver_error") from exc
    elapsed = time.perf_counter() - t0
    status = prob.status
    stats = {"status": status, "iterations": prob.solver_stats.num_iters, "basis_rank": r}

    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        raise InfeasibleError(f"design problem '{problem.label}' is infeasible ({status})")
    if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE) or mu.value is None:
        raise SolverError(f"solver returned status {status}", status=status, diagnostics=stats)

    dual = power.dual_value - sum(float(c.dual_value) * row * rhs
                                  for (c, row), rhs in zip(rate_cons, rate_rhs))
    gap = abs(float(mu.value) - float(dual))

    def lift(z):
        m = real_to_complex(np.asarray(z.value))
        qt = Q @ T
        out = P * (qt @ m @ qt.conj().T)
        return 0.5 * (out + out.conj().T)

    F = np.array([lift(z) for z in zs_F]) if K else np.zeros((0, N, N), dtype=complex)
    R_s = lift(z_s)
    R_x = R_s + F.sum(axis=0) if K else R_s.copy()
    return RelaxedSolution(F=F, R_s=R_s, R_x=R_x, mu=P * float(mu.value), status=status,
                           duality_gap=P * gap, solve_time=elapsed,
                           iterations=prob.solver_stats.num_iters or -1, basis_rank=r)


def solve_relaxed(problem: DesignProblem, *, reduce: bool = True, tol: float = SOLVER_TOL,
                  diagnose: bool = True, **solver_opts) -> RelaxedSolution:
    """Solve the lifted program and audit the result.

    Raises
    ------
    InfeasibleError
        With ``family`` set to the constraint family whose removal restores
        feasibility and, when ``diagnose`` is true and rates are constrained,
        ``max_feasible_rate`` set to the largest common rate that is feasible.
    SolverError
        When the solver stops without an optimal point or the returned point
        violates the program by more than the verification tolerance.
    """
    try:
        sol = _solve_core(problem, reduce, tol, **solver_opts)
    except InfeasibleError as exc:
        if diagnose:
            exc = _diagnose_infeasibility(problem, exc, reduce, tol)
        raise exc
    except SolverError as exc:
        active = problem.rate_active()
        if not (diagnose and np.any(active)):
            raise
        best = max_feasible_rate(problem, reduce=reduce, tol=tol)
        if np.all(problem.r_min[active] <= best):
            raise
        raise InfeasibleError(f"{exc} [rate floor exceeds the largest feasible common rate "
                              f"~ {best:.4f} bps/Hz]", family="rate", max_feasible_rate=best) from exc
    report = verify_relaxed(sol, problem)
    sol.residuals = report.to_dict()
    if not report.passed:
        # a point that misses the rate family is how near-infeasible instances surface
        if "rate" in report.failed() and problem.n_users:
            exc = InfeasibleError(f"solver point for '{problem.label}' violates the rate constraints; "
                                  "treating as infeasible", family="rate")
            raise _diagnose_infeasibility(problem, exc, reduce, tol) if diagnose else exc
        raise SolverError(f"solver point fails verification: {report.failed()}",
                          status=sol.status, diagnostics=report.to_dict())
    if sol.status != cp.OPTIMAL:
        log.warning("solver status %s accepted after verification", sol.status)
    return sol


def _is_feasible(problem: DesignProblem, reduce: bool, tol: float) -> bool:
    # a solver breakdown at the boundary of the feasible region counts as infeasible
    try:
        solve_relaxed(problem, reduce=reduce, tol=tol, diagnose=False)
        return True
    except (InfeasibleError, SolverError):
        return False


def _diagnose_infeasibility(problem, exc, reduce, tol):
    family = exc.family
    if family is None:
        if problem.pairs and _is_feasible(problem.without_pairs(), reduce, tol):
            family = "cross_correlation"
        else:
            family = "rate"
    best = None
    if problem.n_users and np.any(problem.rate_active()):
        best = max_feasible_rate(problem, reduce=reduce, tol=tol)
    msg = f"{exc} [binding family: {family}"
    msg += f"; largest feasible common rate ~ {best:.4f} bps/Hz]" if best is not None else "]"
    return InfeasibleError(msg, family=family, max_feasible_rate=best)


def max_feasible_rate(problem: DesignProblem, hi: float = 64.0, tol_rate: float = 1e-3,
                      reduce: bool = True, tol: float = SOLVER_TOL) -> float:
    """Bisect on a common minimum rate for the users to find the feasibility boundary."""
    lo = 0.0
    if _is_feasible(problem.with_rate(hi), reduce, tol):
        return hi
    while hi - lo > tol_rate:
        mid = 0.5 * (lo + hi)
        if mid > 0 and _is_feasible(problem.with_rate(mid), reduce, tol):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------- recovery

def recover_rank_one(F, h, floor: float = 1e-14) -> np.ndarray:
    """Closed-form beamformer ``f = (h^T F h*)^(-1/2) F h*``.

    Raises :class:`DegenerateUserError` when ``h^T F h*`` is below
    ``floor * |h|^2 * max(Tr F, |F|)``.
    """
    F = np.asarray(F, dtype=complex)
    h = np.asarray(h, dtype=complex)
    g = F @ h.conj()
    q = float(np.real(h @ g))
    scale = np.linalg.norm(h) ** 2 * max(float(np.trace(F).real), np.linalg.norm(F, 2))
    if not q > floor * scale or q <= 0:
        raise DegenerateUserError(f"user receives no power from its lifted matrix (h^T F h* = {q:.3e})")
    return g / np.sqrt(q)


def residual_sensing_cov(R_s, F, f, rel_floor: float = PSD_REL_FLOOR) -> np.ndarray:
    """``R_s + sum_k (F_k - f_k f_k^H)``; raises if the result is not PSD.

    The tolerance is relative to the norm of the total covariance, since the
    residual itself may be (numerically) zero.
    """
    R = np.array(R_s, dtype=complex, copy=True)
    total = np.array(R_s, dtype=complex, copy=True)
    for Fk, fk in zip(F, f):
        R += Fk - np.outer(fk, fk.conj())
        total += Fk
    R = 0.5 * (R + R.conj().T)
    if R.size:
        eig = np.linalg.eigvalsh(R)
        bound = rel_floor * max(np.linalg.norm(total, 2), np.finfo(float).tiny)
        if eig[0] < -bound:
            raise ReconstructionError(f"residual sensing covariance is not PSD (min eig {eig[0]:.3e})")
    return R


def recover(relaxed: RelaxedSolution, problem: DesignProblem, scheme: str | None = None) -> BeamformingSolution:
    K, N = problem.n_users, problem.n_antennas
    beams = np.zeros((K, N), dtype=complex)
    active = problem.rate_active()
    for k in range(K):
        try:
            beams[k] = recover_rank_one(relaxed.F[k], problem.user_channels[k])
        except DegenerateUserError:
            if active[k]:
                raise
            log.info("user %d has no rate constraint and no power; folding F into R_s", k)
    R_s = residual_sensing_cov(relaxed.R_s, relaxed.F, beams)
    return BeamformingSolution(beamformers=beams, R_s=R_s, R_x=relaxed.R_x.copy(), mu=relaxed.mu,
                               scheme=scheme or problem.label, relaxed=relaxed)


def solve(problem: DesignProblem, **kwargs) -> BeamformingSolution:
    """Relaxed solve followed by rank-one recovery."""
    return recover(solve_relaxed(problem, **kwargs), problem)


def solve_proposed(scenario, **kwargs) -> BeamformingSolution:
    return solve(scenario.problem("proposed"), **kwargs)


def solve_nccs(scenario, **kwargs) -> BeamformingSolution:
    """Same program with every target-pair cross-correlation constraint removed."""
    return solve(scenario.problem("nccs"), **kwargs)


def solve_ffbf(scenario, **kwargs) -> BeamformingSolution:
    """Far-field channels substituted for every user and target in the design.

    The returned beamformers are meant to be evaluated on the true near-field
    channels; the far-field problem is only the design model.
    """
    return solve(scenario.problem("ffbf"), **kwargs)


# ----------------------------------------------------------------- verification

@dataclass
class FamilyCheck:
    name: str
    value: float
    bound: float
    passed: bool
    detail: str = ""


@dataclass
class ConstraintReport:
    families: dict[str, FamilyCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.families.values())

    def failed(self) -> list[str]:
        return [n for n, c in self.families.items() if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "families": {n: {"value": c.value, "bound": c.bound, "passed": c.passed,
                                 "detail": c.detail} for n, c in self.families.items()}}

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {n:<18} value={c.value:.6g} bound={c.bound:.6g} {c.detail}"
                for n, c in self.families.items()]


def _min_eig(m) -> float:
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]) if m.size else 0.0


def _common_checks(problem, R_x, mu, rel):
    fam = {}
    ht = problem.target_channels
    w = problem.weights
    gains = np.array([metrics.quad_form(h, R_x).real for h in ht]) * w.target
    fam["beampattern"] = FamilyCheck("beampattern", float(gains.min()), mu,
                                     bool(gains.min() >= mu - rel * abs(mu)),
                                     f"weighted gains {np.array2string(gains, precision=6)}")
    ratios = [w.pair[a, b] * metrics.cross_correlation(ht[a], ht[b], R_x) for a, b in problem.pairs]
    worst = max(ratios) if ratios else 0.0
    bound = w.epsilon * mu
    fam["cross_correlation"] = FamilyCheck("cross_correlation", float(worst), bound,
                                           bool(worst <= bound + rel * abs(mu)),
                                           f"{len(ratios)} pairs")
    tr = float(np.trace(R_x).real)
    fam["power"] = FamilyCheck("power", tr, problem.p_max, bool(tr <= problem.p_max * (1 + rel)))
    return fam


def verify_relaxed(sol: RelaxedSolution, problem: DesignProblem, rel: float = VERIFY_REL_TOL) -> ConstraintReport:
    """Audit a lifted solution; the rate family uses the trace-form margins."""
    fam = _common_checks(problem, sol.R_x, sol.mu, rel)
    margins = []
    for k in np.flatnonzero(problem.rate_active()):
        h = problem.user_channels[k]
        m = metrics.rate_constraint_margin(h, sol.F[k], sol.R_x, problem.r_min[k], problem.noise[k])
        # margin is a difference of nearly equal powers; compare against the noise scale
        margins.append(m / problem.noise[k])
    worst = min(margins) if margins else 0.0
    fam["rate"] = FamilyCheck("rate", float(worst), 0.0, bool(worst >= -1e-4),
                              "min normalized trace-form margin")
    resid = sol.R_s + sol.F.sum(axis=0) - sol.R_x if problem.n_users else sol.R_s - sol.R_x
    scale = max(np.linalg.norm(sol.R_x), np.finfo(float).tiny)
    fam["covariance"] = FamilyCheck("covariance", float(np.linalg.norm(resid) / scale), rel,
                                    bool(np.linalg.norm(resid) <= rel * scale))
    floors = [_min_eig(sol.R_s)] + [_min_eig(Fk) for Fk in sol.F]
    bound = -PSD_REL_FLOOR * max(np.linalg.norm(sol.R_x, 2), np.finfo(float).tiny)
    fam["psd"] = FamilyCheck("psd", float(min(floors)), bound, bool(min(floors) >= bound))
    return ConstraintReport(fam)


def verify_solution(solution: BeamformingSolution, problem: DesignProblem,
                    rel: float = VERIFY_REL_TOL) -> ConstraintReport:
    """Audit a rank-one solution against every constraint family of ``problem``.

    Rates are evaluated from the actual beamformers and the adjusted sensing
    covariance. The covariance family checks ``sum f f^H + R_s = R_x``.
    """
    fam = _common_checks(problem, solution.R_x, solution.mu, rel)
    beams = solution.beamformers
    rates = []
    for k in np.flatnonzero(problem.rate_active()):
        sinr = metrics.user_sinr(problem.user_channels[k], beams, solution.R_s, problem.noise[k], k)
        rates.append((metrics.user_rate(sinr), problem.r_min[k]))
    if rates:
        worst = min(r - rm * (1 - rel) for r, rm in rates)
        detail = "rates " + ", ".join(f"{r:.6f}>={rm:g}" for r, rm in rates)
        fam["rate"] = FamilyCheck("rate", float(min(r for r, _ in rates)),
                                  float(max(rm for _, rm in rates)), bool(worst >= 0), detail)
    else:
        fam["rate"] = FamilyCheck("rate", float("nan"), 0.0, True, "no rate constraints")
    outer = np.einsum("ki,kj->ij", beams, beams.conj()) if beams.size else 0.0
    resid = outer + solution.R_s - solution.R_x
    scale = max(np.linalg.norm(solution.R_x), np.finfo(float).tiny)
    err = float(np.linalg.norm(resid) / scale)
    fam["covariance"] = FamilyCheck("covariance", err, rel, bool(err <= rel))
    floor = _min_eig(solution.R_s)
    bound = -PSD_REL_FLOOR * max(np.linalg.norm(solution.R_x, 2), np.finfo(float).tiny)
    fam["psd"] = FamilyCheck("psd", floor, bound, bool(floor >= bound))
    return ConstraintReport(fam)
