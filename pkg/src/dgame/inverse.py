"""Inverse game: which cost parameters rationalize an observed feedback.

For an observed stabilizing reduced feedback F the rationalizing cost
parameters of player i (flattened as theta_i, state weight first, then
the player's input weights) form the intersection of

  * a linear kernel: M_i theta_i = 0, where M_i eliminates the value
    matrix from the coupled Riccati + stationarity equations through the
    Lyapunov operator K = (I kron A_cl') + (A_cl' kron I), and
  * an open cone: the effective own-input weight
    R_ii + B2_i' X2' Q_i X2 B2_i must be positive definite.

The solution set is a per-player Cartesian product, convex, and closed
under positive scaling, so identification can only ever return a
normalized representative.  This module assembles M_i, computes kernels
and definiteness margins, identifies a maximal-margin representative
(with optional support constraints such as diagonal state weights),
samples the solution set, and reports which closed-loop behaviors an
identified cost tuple rationalizes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feedback import ReducedFeedback, simulate
from .game import CostParameters, ReducedGame
from .linalg import (
    duplication_matrix,
    is_stable,
    kernel_basis,
    min_eig_sym,
    sorted_spectrum,
    symmetrize,
    unvech,
    vech,
)
from .forward import EquilibriumSolution, SolveOptions, solve_fbne

__all__ = [
    "ThetaLayout",
    "Constraints",
    "PlayerCertificate",
    "InverseCertificate",
    "IdentifyOptions",
    "constraint_matrices",
    "residual",
    "pd_margin",
    "identify",
    "dimension_report",
    "scale_theta",
    "sample_solution_set",
    "rationalized_behaviors",
    "BehaviorReport",
]


@dataclass(frozen=True)
class ThetaLayout:
    """Flat parameter layout: vech(Q_i) first (lower triangle, column
    major), then vech(R_i1) ... vech(R_iN)."""

    n: int
    input_dims: tuple[int, ...]

    @property
    def q_size(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def size(self) -> int:
        return self.q_size + sum(d * (d + 1) // 2 for d in self.input_dims)

    def r_offset(self, j: int) -> int:
        return self.q_size + sum(d * (d + 1) // 2 for d in self.input_dims[:j])

    def pack(self, q: np.ndarray, r_row) -> np.ndarray:
        parts = [vech(np.asarray(q, dtype=float))]
        for rij in r_row:
            parts.append(vech(np.atleast_2d(np.asarray(rij, dtype=float))))
        theta = np.concatenate(parts)
        if theta.size != self.size:
            raise ValueError("cost blocks do not match the layout dimensions")
        return theta

    def unpack(self, theta: np.ndarray):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.size:
            raise ValueError(f"theta must have length {self.size}, got {theta.size}")
        q = unvech(theta[: self.q_size], self.n)
        r_row = []
        for j, d in enumerate(self.input_dims):
            o = self.r_offset(j)
            r_row.append(unvech(theta[o:o + d * (d + 1) // 2], d))
        return q, r_row

    def theta_of(self, c: CostParameters, i: int) -> np.ndarray:
        return self.pack(c.q[i], c.r[i])

    def costs_from_thetas(self, thetas) -> CostParameters:
        qs, rs = [], []
        for th in thetas:
            q, r_row = self.unpack(th)
            qs.append(q)
            rs.append(tuple(r_row))
        return CostParameters(q=tuple(qs), r=tuple(rs))

    def q_diagonal_indices(self) -> list[int]:
        idx, out = 0, []
        for j in range(self.n):
            for i in range(j, self.n):
                if i == j:
                    out.append(idx)
                idx += 1
        return out


@dataclass(frozen=True)
class Constraints:
    """Support restriction on theta: entries outside the kept set are
    forced to zero (columns of M_i are simply dropped).

    ``diagonal_q`` keeps only the diagonal entries of the state weight;
    ``support`` is an explicit list of kept theta indices (intersected
    with the diagonal restriction when both are given).
    """

    diagonal_q: bool = False
    support: tuple[int, ...] | None = None

    def kept_indices(self, layout: ThetaLayout) -> list[int]:
        keep = set(range(layout.size))
        if self.diagonal_q:
            diag = set(layout.q_diagonal_indices())
            keep -= {k for k in range(layout.q_size) if k not in diag}
        if self.support is not None:
            bad = [k for k in self.support if not (0 <= int(k) < layout.size)]
            if bad:
                raise ValueError(f"support indices out of range: {bad}")
            keep &= {int(k) for k in self.support}
        if not keep:
            raise ValueError("constraints remove every parameter")
        return sorted(keep)


def _kron_operator(a_cl: np.ndarray) -> np.ndarray:
    r = a_cl.shape[0]
    return np.kron(np.eye(r), a_cl.T) + np.kron(a_cl.T, np.eye(r))


def constraint_matrices(rg: ReducedGame, f_red: ReducedFeedback) -> list[np.ndarray]:
    """Per-player kernel-condition matrices M_i (shape r*m_i x L).

    Built by vectorizing the coupled Riccati equation, solving it for the
    value matrix through the (invertible, since the loop is stable)
    Lyapunov operator, and substituting into the vectorized stationarity
    condition; duplication matrices then fold the symmetric-weight
    redundancy so that theta carries each weight entry once.
    """
    f = f_red.matrix
    a_cl = rg.j + rg.b1_stacked @ f
    if not is_stable(a_cl):
        raise ValueError("observed reduced feedback must stabilize the game")
    r, n = rg.r, rg.n
    x1, x2 = rg.w.x1, rg.w.x2
    k_inv = np.linalg.inv(_kron_operator(a_cl))
    fb2x2 = f.T @ rg.b2_stacked.T @ x2.T          # r x n
    m_q = (np.kron(x1.T, x1.T) - np.kron(fb2x2, x1.T) - np.kron(x1.T, fb2x2)
           + np.kron(fb2x2, fb2x2))               # r^2 x n^2
    d_n = duplication_matrix(n)
    out = []
    for i in range(rg.n_players):
        b2i_x2 = rg.b2[i].T @ x2.T                # m_i x n
        n_q = np.kron(fb2x2, b2i_x2) - np.kron(x1.T, b2i_x2)
        elim = np.kron(np.eye(r), rg.b1[i].T) @ k_inv
        m_q_i = n_q - elim @ m_q
        cols = [m_q_i @ d_n]
        f_i = f[rg.input_slice(i)]
        for j in range(rg.n_players):
            f_j = f[rg.input_slice(j)]
            m_r = -elim @ np.kron(f_j.T, f_j.T)
            if i == j:
                m_r = m_r + np.kron(f_i.T, np.eye(rg.input_dims[i]))
            cols.append(m_r @ duplication_matrix(rg.input_dims[j]))
        out.append(np.hstack(cols))
    return out


def residual(m_i: np.ndarray, theta: np.ndarray) -> float:
    """Identification error ``|M_i theta|_2`` of a candidate parameter."""
    return float(np.linalg.norm(np.asarray(m_i) @ np.asarray(theta, dtype=float)))


def _own_weight(rg: ReducedGame, layout: ThetaLayout, i: int, theta: np.ndarray) -> np.ndarray:
    q, r_row = layout.unpack(theta)
    x2 = rg.w.x2
    return symmetrize(r_row[i] + rg.b2[i].T @ x2.T @ q @ x2 @ rg.b2[i])


def pd_margin(rg: ReducedGame, layout: ThetaLayout, i: int, theta: np.ndarray) -> float:
    """Smallest eigenvalue of the effective own-input weight at theta;
    positive margin is the open-cone half of solution-set membership."""
    return min_eig_sym(_own_weight(rg, layout, i, theta))


def scale_theta(theta: np.ndarray, kappa: float) -> np.ndarray:
    """Positive rescaling; membership-preserving (residual and margin are
    both homogeneous of degree one)."""
    if kappa <= 0:
        raise ValueError("scaling factor must be positive")
    return kappa * np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class PlayerCertificate:
    """Per-player identification outcome."""

    m: np.ndarray
    kernel: np.ndarray
    theta: np.ndarray
    residual: float
    pd_margin: float
    feasible: bool
    kept_indices: tuple[int, ...]


@dataclass(frozen=True)
class InverseCertificate:
    """Joint certificate: feasible iff every player is."""

    players: tuple[PlayerCertificate, ...]
    f_red: ReducedFeedback
    layout: ThetaLayout

    @property
    def feasible(self) -> bool:
        return all(p.feasible for p in self.players)

    @property
    def thetas(self) -> tuple[np.ndarray, ...]:
        return tuple(p.theta for p in self.players)

    def costs(self) -> CostParameters:
        return self.layout.costs_from_thetas(self.thetas)


@dataclass(frozen=True)
class IdentifyOptions:
    kernel_tol: float = 1e-9
    eps_pd: float = 1e-8
    seed: int = 0
    restarts: int = 32
    ascent_iters: int = 200
    penalty: float = 1.0
    fallback_iters: int = 400


def _margin_map(rg, layout, i, basis_full):
    """Symmetric matrices A_k with own_weight(sum z_k b_k) = sum z_k A_k."""
    mats = []
    for col in range(basis_full.shape[1]):
        mats.append(_own_weight(rg, layout, i, basis_full[:, col]))
    return mats


def _maximize_margin(mats, opts, dim):
    """max over |z|=1 of lambda_min(sum z_k A_k); the objective is concave
    and 1-homogeneous.  Scalar weights reduce to a linear functional with
    closed-form maximizer; tiny kernels get an angular grid; otherwise a
    seeded projected supergradient ascent with restarts."""
    if dim == 0:
        return None, -np.inf
    msize = mats[0].shape[0]
    if msize == 1:
        c = np.array([m[0, 0] for m in mats])
        nc = np.linalg.norm(c)
        if nc == 0.0:
            return None, 0.0
        z = c / nc
        return z, float(nc)

    def value(z):
        acc = sum(zk * mk for zk, mk in zip(z, mats))
        return float(np.linalg.eigvalsh(acc)[0])

    def supergrad(z):
        acc = sum(zk * mk for zk, mk in zip(z, mats))
        w, v = np.linalg.eigh(acc)
        vmin = v[:, 0]
        return np.array([vmin @ mk @ vmin for mk in mats])

    if dim <= 2:
        best_z, best_v = None, -np.inf
        if dim == 1:
            for z in (np.array([1.0]), np.array([-1.0])):
                val = value(z)
                if val > best_v:
                    best_z, best_v = z, val
        else:
            for ang in np.linspace(0.0, 2 * np.pi, 721)[:-1]:
                z = np.array([np.cos(ang), np.sin(ang)])
                val = value(z)
                if val > best_v:
                    best_z, best_v = z, val
        z = best_z
    else:
        rng = np.random.default_rng(opts.seed)
        best_z, best_v = None, -np.inf
        for _ in range(opts.restarts):
            z = rng.standard_normal(dim)
            z /= np.linalg.norm(z)
            for it in range(opts.ascent_iters):
                g = supergrad(z)
                step = 0.5 / np.sqrt(it + 1.0)
                z_new = z + step * g
                nz = np.linalg.norm(z_new)
                if nz == 0.0:
                    break
                z_new /= nz
                z = z_new
            val = value(z)
            if val > best_v:
                best_z, best_v = z, val
        z = best_z
    # local polish with shrinking steps
    val = value(z)
    for it in range(2 * opts.ascent_iters):
        g = supergrad(z)
        step = 0.2 / (it + 1.0)
        z_new = z + step * g
        z_new /= np.linalg.norm(z_new)
        v_new = value(z_new)
        if v_new > val:
            z, val = z_new, v_new
    return z, val


def _penalized_fallback(m_restricted, rg, layout, i, kept, opts):
    """No feasible kernel point: trade off residual against margin on the
    unit sphere by subgradient descent; diagnosis mode, feasible=False."""
    dim = m_restricted.shape[1]
    rng = np.random.default_rng(opts.seed + 1)
    mtm = m_restricted.T @ m_restricted
    smax = np.linalg.norm(m_restricted, 2) if m_restricted.size else 1.0
    mu = opts.penalty * max(smax, 1e-12) ** 2

    def embed(z):
        th = np.zeros(layout.size)
        th[list(kept)] = z
        return th

    def objective(z):
        th = embed(z)
        return float(z @ mtm @ z) - mu * pd_margin(rg, layout, i, th)

    def grad(z):
        th = embed(z)
        w = _own_weight(rg, layout, i, th)
        eigw, eigv = np.linalg.eigh(w)
        vmin = eigv[:, 0]
        g_margin = np.zeros(dim)
        for k in range(dim):
            basis_th = np.zeros(layout.size)
            basis_th[kept[k]] = 1.0
            g_margin[k] = vmin @ _own_weight(rg, layout, i, basis_th) @ vmin
        return 2.0 * (mtm @ z) - mu * g_margin

    best_z, best_obj = None, np.inf
    for _ in range(8):
        z = rng.standard_normal(dim)
        z /= np.linalg.norm(z)
        for it in range(opts.fallback_iters):
            g = grad(z)
            step = 0.1 / np.sqrt(it + 1.0) / max(np.linalg.norm(g), 1e-12)
            z = z - step * g
            z /= np.linalg.norm(z)
        obj = objective(z)
        if obj < best_obj:
            best_z, best_obj = z, obj
    return embed(best_z)


def identify(rg: ReducedGame, f_red: ReducedFeedback,
             constraints: Constraints | None = None,
             opts: IdentifyOptions | None = None) -> InverseCertificate:
    """Identify, per player, a normalized cost parameter rationalizing the
    observed reduced feedback.

    Two stages: an orthonormal kernel basis of (the support-restricted)
    M_i, then margin maximization over the unit sphere of kernel
    coefficients.  A positive margin certifies the player's solution set
    is nonempty; when no kernel direction achieves one, a penalized
    descent reports the best-effort parameter with ``feasible=False``
    (the empty-solution-set verdict).  Ties in margin break toward the
    lexicographically smallest rounded theta, making the output a pure
    function of the inputs.
    """
    opts = opts or IdentifyOptions()
    constraints = constraints or Constraints()
    layout = ThetaLayout(n=rg.n, input_dims=rg.input_dims)
    kept = constraints.kept_indices(layout)
    ms = constraint_matrices(rg, f_red)
    players = []
    for i in range(rg.n_players):
        m_full = ms[i]
        m_restricted = m_full[:, kept]
        z_basis = kernel_basis(m_restricted, tol=opts.kernel_tol)
        basis_full = np.zeros((layout.size, z_basis.shape[1]))
        basis_full[kept, :] = z_basis
        theta = None
        if z_basis.shape[1]:
            mats = _margin_map(rg, layout, i, basis_full)
            z, _val = _maximize_margin(mats, opts, z_basis.shape[1])
            if z is not None:
                cand = basis_full @ z
                cand /= np.linalg.norm(cand)
                if pd_margin(rg, layout, i, cand) > opts.eps_pd * 2.0:
                    # resolve near-ties deterministically
                    alt = -cand
                    if (abs(pd_margin(rg, layout, i, alt) - pd_margin(rg, layout, i, cand))
                            <= 1e-12 and tuple(np.round(alt, 9)) < tuple(np.round(cand, 9))):
                        cand = alt
                    theta = cand
        if theta is None:
            theta = _penalized_fallback(m_restricted, rg, layout, i, kept, opts)
            theta = theta / np.linalg.norm(theta)
        res = residual(m_full, theta)
        margin = pd_margin(rg, layout, i, theta)
        feasible = bool(
            margin > opts.eps_pd * (1.0 + np.linalg.norm(theta))
            and res <= 10.0 * opts.kernel_tol * max(1.0, np.linalg.norm(m_full, 2))
        )
        players.append(PlayerCertificate(
            m=m_full,
            kernel=basis_full,
            theta=theta,
            residual=res,
            pd_margin=float(margin),
            feasible=feasible,
            kept_indices=tuple(kept),
        ))
    return InverseCertificate(players=tuple(players), f_red=f_red, layout=layout)


def dimension_report(cert: InverseCertificate, rg: ReducedGame) -> list[dict]:
    """Kernel dimensions against the rank-nullity lower bound
    ``dim >= L - r m_i`` (which exceeds the full-rank-E bound L - n m_i
    whenever r < n: descriptor dynamics enlarge the solution set)."""
    out = []
    big_l = cert.layout.size
    for i, pc in enumerate(cert.players):
        dim = pc.kernel.shape[1]
        r_mi = rg.r * rg.input_dims[i]
        n_mi = rg.n * rg.input_dims[i]
        constrained = len(pc.kept_indices) < big_l
        bound_ok = True
        if not constrained and dim < big_l - r_mi:
            bound_ok = False
        out.append({
            "player": i,
            "kernel_dim": dim,
            "L": big_l,
            "r_mi": r_mi,
            "n_mi": n_mi,
            "bound": big_l - r_mi,
            "bound_ok": bound_ok,
        })
        if not bound_ok:
            raise AssertionError(
                f"kernel dimension {dim} violates the rank-nullity bound "
                f"{big_l - r_mi}; numerical rank decision is suspect"
            )
    return out


def sample_solution_set(rg: ReducedGame, cert: InverseCertificate, i: int,
                        seed: int = 0, eps_pd: float = 1e-8,
                        max_tries: int = 200) -> np.ndarray:
    """Draw a normalized feasible parameter for player ``i`` from the
    certified solution set (seeded, deterministic).  Raises when the
    certificate is infeasible or no draw lands in the open cone."""
    pc = cert.players[i]
    if pc.kernel.shape[1] == 0:
        raise ValueError("player has an empty kernel: nothing to sample")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        z = rng.standard_normal(pc.kernel.shape[1])
        theta = pc.kernel @ z
        norm = np.linalg.norm(theta)
        if norm == 0.0:
            continue
        theta /= norm
        if pd_margin(rg, cert.layout, i, theta) <= eps_pd:
            theta = -theta
        if pd_margin(rg, cert.layout, i, theta) > eps_pd:
            return theta
    raise ValueError("no feasible sample found in the solution set")


@dataclass(frozen=True)
class BehaviorReport:
    """Behaviors rationalized by an identified cost tuple."""

    solutions: tuple[EquilibriumSolution, ...]
    spectra: tuple[np.ndarray, ...]
    matches: tuple[bool, ...]
    n_behaviors: int
    n_matching: int
    observed_spectrum: np.ndarray


def rationalized_behaviors(rg: ReducedGame, cert: InverseCertificate,
                           solve_opts: SolveOptions | None = None,
                           horizon: float = 6.0, dt: float = 0.01,
                           match_tol: float = 1e-5) -> BehaviorReport:
    """Solve the forward game with the certificate's costs and compare
    each equilibrium behavior with the observed one.

    Behaviors are compared through closed-loop input trajectories from a
    shared set of reduced initial states (the canonical basis); matching
    means sup-norm distance at most ``match_tol`` for all of them.  The
    observed feedback always reproduces itself when the certificate is
    feasible, and distinct reduced feedbacks give distinct behaviors.
    """
    if not cert.feasible:
        raise ValueError("certificate is infeasible: no rationalizing costs to solve")
    costs = cert.costs()
    sols = solve_fbne(rg, costs, solve_opts or SolveOptions())
    f_obs = cert.f_red
    observed = [simulate(rg, f_obs, e, horizon, dt) for e in np.eye(rg.r)]
    matches = []
    spectra = []
    for sol in sols:
        spectra.append(sol.spectrum)
        dist = 0.0
        for k, e in enumerate(np.eye(rg.r)):
            traj = simulate(rg, sol.f_star, e, horizon, dt)
            dist = max(dist, float(np.abs(traj.u - observed[k].u).max(initial=0.0)))
        matches.append(dist <= match_tol)
    a_obs = rg.j + rg.b1_stacked @ f_obs.matrix
    return BehaviorReport(
        solutions=tuple(sols),
        spectra=tuple(spectra),
        matches=tuple(matches),
        n_behaviors=len(sols),
        n_matching=int(sum(matches)),
        observed_spectrum=sorted_spectrum(np.linalg.eigvals(a_obs)),
    )
