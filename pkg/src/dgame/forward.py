"""Forward game solver: stabilizing solutions of the coupled Riccati system.

A reduced feedback F is a feedback Nash equilibrium iff there are
symmetric P_i with stable A_cl = J + B1 F solving, for every player,

    A_cl' P_i + P_i A_cl + [I; F]' M_i [I; F] = 0          (Riccati)
    G F = -(V' + Bd' P)                                    (stationarity)

where G collects the effective input weights and cross couplings, V the
state/input couplings and Bd the block-diagonal input map.  The solver
runs damped policy iteration (each half step is a linear Lyapunov solve)
from a spread of stabilizing starts, with a Newton fallback on the
stacked system for starts that stall; coupled Riccati systems can have
several stabilizing solutions, so enumeration is heuristic multistart
and completeness is only ever validated at test scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import root

from .feedback import ReducedFeedback
from .game import CostParameters, ReducedGame, gbar_matrix, m_matrix, vbar_stack
from .linalg import is_stable, solve_lyapunov, sorted_spectrum, symmetrize

__all__ = [
    "SolveOptions",
    "CareResiduals",
    "EquilibriumSolution",
    "NoSolutionError",
    "care_residual",
    "solve_fbne",
    "equilibrium_cost",
    "verify_nash_local",
]


class NoSolutionError(RuntimeError):
    """No start of the multistart solver converged to a stabilizing solution."""


@dataclass(frozen=True)
class SolveOptions:
    """Multistart solver knobs; tolerances are relative to the data scale."""

    n_starts: int = 64
    seed: int = 0
    tol: float = 1e-9
    max_iter: int = 300
    dedup_tol: float = 1e-5
    damping_floor: float = 1.0 / 16.0
    newton_fallback: bool = True


@dataclass(frozen=True)
class CareResiduals:
    """Exact residual matrices of the coupled system at a candidate point."""

    care: tuple[np.ndarray, ...]
    stationarity: np.ndarray
    care_norms: tuple[float, ...]
    stationarity_norm: float
    scale: float

    @property
    def max_norm(self) -> float:
        return max(self.stationarity_norm, max(self.care_norms, default=0.0))


@dataclass(frozen=True)
class EquilibriumSolution:
    """One stabilizing solution: reduced feedback, value matrices, diagnostics."""

    f_star: ReducedFeedback
    p: tuple[np.ndarray, ...]
    a_cl: np.ndarray
    spectrum: np.ndarray
    residuals: CareResiduals
    iterations: int
    start: str = ""


def _data_scale(rg: ReducedGame, c: CostParameters) -> float:
    """1 + max-entry scale of the reduced data; makes tolerances meaningful
    under the positive-scaling freedom of the cost parameters."""
    scale = 1.0
    scale = max(scale, np.abs(rg.j).max(initial=0.0))
    scale = max(scale, np.abs(rg.b1_stacked).max(initial=0.0))
    for i in range(rg.n_players):
        scale = max(scale, np.abs(m_matrix(rg, c, i)).max(initial=0.0))
    return 1.0 + scale


def _care_terms(rg: ReducedGame, c: CostParameters):
    ms = [m_matrix(rg, c, i) for i in range(rg.n_players)]
    gbar = gbar_matrix(rg, c)
    vbar_t = vbar_stack(rg, c)
    return ms, gbar, vbar_t


def _residuals_raw(rg, ms, gbar, vbar_t, f, p_list, scale):
    a_cl = rg.j + rg.b1_stacked @ f
    stacked = np.vstack([np.eye(rg.r), f])
    care, care_norms = [], []
    for i in range(rg.n_players):
        ci = stacked.T @ ms[i] @ stacked
        res = a_cl.T @ p_list[i] + p_list[i] @ a_cl + ci
        care.append(res)
        care_norms.append(float(np.abs(res).max(initial=0.0)))
    bd_t_p = np.vstack([rg.b1[i].T @ p_list[i] for i in range(rg.n_players)])
    stat = gbar @ f + vbar_t + bd_t_p
    return CareResiduals(
        care=tuple(care),
        stationarity=stat,
        care_norms=tuple(care_norms),
        stationarity_norm=float(np.abs(stat).max(initial=0.0)),
        scale=scale,
    )


def care_residual(rg: ReducedGame, c: CostParameters,
                  f_red: ReducedFeedback | np.ndarray,
                  p: list[np.ndarray]) -> CareResiduals:
    """Residual matrices and max-norms of both equation families at
    (f_red, p); purely evaluative, no solving."""
    f = f_red.matrix if isinstance(f_red, ReducedFeedback) else np.asarray(f_red, dtype=float)
    ms, gbar, vbar_t = _care_terms(rg, c)
    return _residuals_raw(rg, ms, gbar, vbar_t, f, [symmetrize(pi) for pi in p], _data_scale(rg, c))


def _lyapunov_values(rg, ms, f):
    """Value matrices implied by a stabilizing f via per-player Lyapunov solves."""
    a_cl = rg.j + rg.b1_stacked @ f
    stacked = np.vstack([np.eye(rg.r), f])
    return [solve_lyapunov(a_cl, stacked.T @ ms[i] @ stacked) for i in range(rg.n_players)]


def _policy_iteration(rg, ms, gbar, vbar_t, f0, scale, opts):
    """Damped fixed-point iteration; returns (f, p_list, iters) or None."""
    f = f0.copy()
    alpha = 1.0
    last_res = np.inf
    for it in range(opts.max_iter):
        a_cl = rg.j + rg.b1_stacked @ f
        if not is_stable(a_cl):
            return None
        try:
            p_list = _lyapunov_values(rg, ms, f)
        except (np.linalg.LinAlgError, ValueError):
            return None
        res = _residuals_raw(rg, ms, gbar, vbar_t, f, p_list, scale)
        if res.max_norm <= opts.tol * scale:
            return f, p_list, it
        bd_t_p = np.vstack([rg.b1[i].T @ p_list[i] for i in range(rg.n_players)])
        try:
            f_next = -np.linalg.solve(gbar, vbar_t + bd_t_p)
        except np.linalg.LinAlgError:
            return None
        if res.max_norm > last_res:
            alpha = max(alpha / 2.0, opts.damping_floor)
        last_res = res.max_norm
        f = f + alpha * (f_next - f)
    return None


def _newton_refine(rg, ms, gbar, vbar_t, f0, p0, scale, opts):
    """Newton on the stacked residual system from (f0, p0)."""
    n_players, r, m = rg.n_players, rg.r, rg.m
    iu = np.triu_indices(r)
    nn = iu[0].size

    def pack(f, p_list):
        return np.concatenate([f.reshape(-1)] + [p[iu] for p in p_list])

    def unpack(z):
        f = z[:m * r].reshape(m, r)
        p_list = []
        off = m * r
        for _ in range(n_players):
            p = np.zeros((r, r))
            p[iu] = z[off:off + nn]
            p = p + p.T - np.diag(np.diag(p))
            p_list.append(p)
            off += nn
        return f, p_list

    def fun(z):
        f, p_list = unpack(z)
        res = _residuals_raw(rg, ms, gbar, vbar_t, f, p_list, scale)
        return np.concatenate([res.stationarity.reshape(-1)] + [c[iu] for c in res.care])

    sol = root(fun, pack(f0, p0), method="hybr", tol=1e-13)
    if not sol.success:
        return None
    f, p_list = unpack(sol.x)
    return f, [symmetrize(p) for p in p_list]


def _lqr_start(j, b, wq, wr):
    p = sla.solve_continuous_are(j, b, wq, wr)
    return -np.linalg.solve(wr, b.T @ p)


def _starting_points(rg, opts):
    """Deterministic then seeded stabilizing initial gains."""
    starts = []
    r, m = rg.r, rg.m
    try:
        starts.append(("joint-lqr", _lqr_start(rg.j, rg.b1_stacked, np.eye(r), np.eye(m))))
    except Exception:
        pass
    try:
        rows = [_lqr_start(rg.j, rg.b1[i], np.eye(r), np.eye(rg.input_dims[i]))
                for i in range(rg.n_players)]
        starts.append(("per-player-lqr", np.vstack(rows)))
    except Exception:
        pass
    rng = np.random.default_rng(opts.seed)
    for k in range(opts.n_starts):
        g = rng.standard_normal((r, r))
        wq = g @ g.T + 0.1 * np.eye(r)
        wr = np.diag(np.exp(rng.uniform(-2.0, 2.0, size=m)))
        gain_scale = 10.0 ** rng.uniform(-0.5, 1.5)
        try:
            f0 = _lqr_start(rg.j, rg.b1_stacked, wq, wr)
        except Exception:
            continue
        starts.append((f"seeded-{k}", f0))
        # non-stabilizing spread for the Newton fallback: covers solutions
        # whose basins the damped iteration cannot reach
        starts.append((f"seeded-raw-{k}", rng.standard_normal((m, r)) * gain_scale))
    return starts


def solve_fbne(rg: ReducedGame, c: CostParameters,
               opts: SolveOptions | None = None) -> list[EquilibriumSolution]:
    """Enumerate stabilizing solutions of the coupled Riccati system.

    Requires every effective own-input weight r_bar[i][i] to be positive
    definite.  Returns the deduplicated solutions in a canonical order
    (lexicographic by rounded feedback entries); an empty list means no
    start converged.
    """
    opts = opts or SolveOptions()
    ms, gbar, vbar_t = _care_terms(rg, c)
    for i in range(rg.n_players):
        si = rg.input_slice(i)
        block = ms[i][rg.r + si.start:rg.r + si.stop, rg.r + si.start:rg.r + si.stop]
        if block.size and np.linalg.eigvalsh(symmetrize(block))[0] <= 0:
            raise ValueError(
                f"effective input weight of player {i} is not positive definite"
            )
    scale = _data_scale(rg, c)
    solutions: list[EquilibriumSolution] = []

    def try_add(f, p_list, iters, label):
        a_cl = rg.j + rg.b1_stacked @ f
        if not is_stable(a_cl):
            return
        res = _residuals_raw(rg, ms, gbar, vbar_t, f, p_list, scale)
        if res.max_norm > opts.tol * scale:
            return
        for sol in solutions:
            gap = np.abs(sol.f_star.matrix - f).max(initial=0.0)
            if gap <= opts.dedup_tol * (1.0 + np.abs(f).max(initial=0.0)):
                return
        solutions.append(EquilibriumSolution(
            f_star=ReducedFeedback(f, rg.input_dims),
            p=tuple(p_list),
            a_cl=a_cl,
            spectrum=sorted_spectrum(np.linalg.eigvals(a_cl)),
            residuals=res,
            iterations=iters,
            start=label,
        ))

    for label, f0 in _starting_points(rg, opts):
        out = _policy_iteration(rg, ms, gbar, vbar_t, f0, scale, opts)
        if out is not None:
            f, p_list, iters = out
            polished = _newton_refine(rg, ms, gbar, vbar_t, f, p_list, scale, opts)
            if polished is not None:
                f_pol, p_pol = polished
                if (_residuals_raw(rg, ms, gbar, vbar_t, f_pol, p_pol, scale).max_norm
                        < _residuals_raw(rg, ms, gbar, vbar_t, f, p_list, scale).max_norm):
                    f, p_list = f_pol, p_pol
            try_add(f, p_list, iters, label)
            continue
        if not opts.newton_fallback:
            continue
        if is_stable(rg.j + rg.b1_stacked @ f0):
            try:
                p0 = _lyapunov_values(rg, ms, f0)
            except (np.linalg.LinAlgError, ValueError):
                p0 = [np.zeros((rg.r, rg.r)) for _ in range(rg.n_players)]
        else:
            p0 = [np.zeros((rg.r, rg.r)) for _ in range(rg.n_players)]
        refined = _newton_refine(rg, ms, gbar, vbar_t, f0, p0, scale, opts)
        if refined is not None:
            f, p_list = refined
            try_add(f, p_list, opts.max_iter, f"{label}+newton")

    solutions.sort(key=lambda s: tuple(np.round(s.f_star.matrix, 8).reshape(-1)))
    return solutions


def equilibrium_cost(sol: EquilibriumSolution, i: int, x1_0: np.ndarray) -> float:
    """Player i's equilibrium cost from the reduced initial state x1_0."""
    x1_0 = np.asarray(x1_0, dtype=float).reshape(-1)
    return float(x1_0 @ sol.p[i] @ x1_0)


def verify_nash_local(rg: ReducedGame, c: CostParameters, sol: EquilibriumSolution,
                      n_trials: int = 200, radius: float = 0.5,
                      seed: int = 0, tol: float = 1e-8):
    """Spot-check the equilibrium property with random unilateral deviations.

    For each player and trial, perturbs only that player's reduced gain;
    deviations that destabilize the loop are skipped (they have infinite
    cost).  The deviated value matrix comes from an exact Lyapunov solve,
    and the check requires it to dominate the equilibrium value matrix up
    to ``tol`` (equivalently: no initial state benefits).  Returns
    ``(ok, counterexample)`` with the violating deviation when found.
    """
    ms, _, _ = _care_terms(rg, c)
    rng = np.random.default_rng(seed)
    f_star = sol.f_star.matrix
    for i in range(rg.n_players):
        si = rg.input_slice(i)
        base_p = sol.p[i]
        for _ in range(n_trials):
            delta = rng.standard_normal((rg.input_dims[i], rg.r))
            delta *= radius * rng.uniform(0.05, 1.0) / max(np.abs(delta).max(), 1e-12)
            f_dev = f_star.copy()
            f_dev[si] = f_dev[si] + delta
            a_dev = rg.j + rg.b1_stacked @ f_dev
            if not is_stable(a_dev):
                continue
            stacked = np.vstack([np.eye(rg.r), f_dev])
            try:
                p_dev = solve_lyapunov(a_dev, stacked.T @ ms[i] @ stacked)
            except (np.linalg.LinAlgError, ValueError):
                continue
            gap = np.linalg.eigvalsh(symmetrize(p_dev - base_p))[0]
            if gap < -tol * sol.residuals.scale:
                return False, {"player": i, "delta": delta, "min_eig_gap": float(gap)}
    return True, None
