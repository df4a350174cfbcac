"""Joint bandwidth and multicast precoding via successive convex approximation.

Each spot beam is an independent block of the worst-case-latency objective, so
the outer loop solves one convex subproblem per beam per iteration: the
epigraph of transmission latency under tangent underestimators of the
bandwidth-efficiency product and of each user's SINR constraint, plus power,
bandwidth, and QoS constraints.  The zero-forcing design solves the reduced
power/bandwidth problem over fixed pseudo-inverse directions and doubles as
the initializer for the optimal path, which makes the optimal solution
dominate the ZF one by monotone descent.

Variables are normalized before they reach the solver: bandwidths in units of
the total bandwidth, precoders in units of the square root of the beam power
budget, and channels scaled so the noise-plus-leakage floor is unity.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import RateParams, effective_rate, sinr
from .constants import SPEED_OF_LIGHT_KM_S
from .convex import (
    Affine,
    ConstraintBatch,
    ConvexSubproblem,
    PerspectiveRate,
    Quadratic,
    LogRate,
    Reciprocal,
    solve,
)

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# instance data


@dataclass
class GroupInstance:
    """One multicast group inside a beam: channels, demand, and backhaul terms."""

    file_id: object
    q_bits: float
    backhaul_s: float
    slant_km: float
    channels: np.ndarray                  # (members, N) true complex channels
    aug: int
    design_channels: np.ndarray | None = None   # estimated channels; default true
    error_var: np.ndarray | None = None          # per-member absolute error variance

    def __post_init__(self):
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        if self.design_channels is None:
            self.design_channels = self.channels
        else:
            self.design_channels = np.atleast_2d(np.asarray(self.design_channels, dtype=complex))
        if self.error_var is None:
            self.error_var = np.zeros(self.channels.shape[0])
        else:
            self.error_var = np.asarray(self.error_var, dtype=float)

    @property
    def n_members(self) -> int:
        return self.channels.shape[0]


@dataclass
class BeamInstance:
    """A beam's groups plus its power budget and interference floor."""

    index: int
    groups: list
    power_budget_w: float
    interference_density: float

    @property
    def n_augs(self) -> int:
        return max(g.aug for g in self.groups) + 1 if self.groups else 0


@dataclass
class ScaSettings:
    """Convergence constants and QoS rule for the outer loop."""

    latency_eps_s: float = 1e-3
    max_iterations: int = 30
    qos_ratio: float = 0.25            # required rate as a fraction of allocated bandwidth
    qos_rate_bps: float | None = None  # absolute floor; overrides the ratio when set
    bandwidth_floor_hz: float = 1e3
    gamma_floor: float = 1e-6
    anchor_backoff: float = 1e-3
    init_power_fraction: float = 0.8
    gap_tol: float = 1e-8

    def gamma_min(self, time_fraction: float) -> float:
        """SINR floor implied by the proportional QoS rule."""
        if self.qos_rate_bps is not None:
            return self.gamma_floor
        return 2.0 ** (self.qos_ratio / time_fraction) - 1.0

    def qos_threshold_bps(self, bandwidth_hz: float) -> float:
        if self.qos_rate_bps is not None:
            return self.qos_rate_bps
        return self.qos_ratio * bandwidth_hz


@dataclass
class GroupSolution:
    """Final per-group allocation with realized performance."""

    beam: int
    aug: int
    file_id: object
    precoder: np.ndarray | None
    bandwidth_hz: float
    power_w: float
    design_sinr: float
    min_sinr: float
    rate_bps: float
    outage: bool = False
    qos_miss: bool = False


@dataclass
class ServingPlanSolution:
    """All group allocations plus trajectory and outage bookkeeping."""

    groups: list = field(default_factory=list)
    latency_s: float = math.inf
    trajectory: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    outages: list = field(default_factory=list)

    @property
    def served(self) -> list:
        return [g for g in self.groups if not g.outage]

    def mean_rate(self) -> float:
        rates = [g.rate_bps for g in self.served]
        return float(np.mean(rates)) if rates else 0.0

    def min_rate(self) -> float:
        rates = [g.rate_bps for g in self.served]
        return float(np.min(rates)) if rates else 0.0

    def outage_fraction(self) -> float:
        return len(self.outages) / len(self.groups) if self.groups else 0.0


# ---------------------------------------------------------------------------
# real/complex plumbing


def stack_complex(w: np.ndarray) -> np.ndarray:
    return np.concatenate([w.real, w.imag])


def unstack_complex(x: np.ndarray) -> np.ndarray:
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def rank_one_real(h: np.ndarray) -> np.ndarray:
    """Real 2Nx2N PSD matrix representing |h^H w|^2 on stacked [Re w; Im w]."""
    u = np.concatenate([h.real, h.imag])
    v = np.concatenate([-h.imag, h.real])
    return np.outer(u, u) + np.outer(v, v)


# ---------------------------------------------------------------------------
# linearization builders


def linearize_bilinear(b_bar: float, x_bar: float, idx_b: int, idx_x: int, idx_z: int,
                       name: str = "") -> Quadratic:
    """Tangent relaxation of the product bound b*x >= z at anchor (b_bar, x_bar).

    Emits 2z + b^2 + x^2 - 2(b+x)(b_bar+x_bar) + (b_bar+x_bar)^2 <= 0, whose
    feasible set shrinks to b*x >= z at the anchor.
    """
    if b_bar < 0 or x_bar < 0:
        raise ValueError("anchors must be nonnegative")
    s = b_bar + x_bar
    return Quadratic(
        idx=[idx_b, idx_x],
        P=np.eye(2),
        lin={idx_b: -2.0 * s, idx_x: -2.0 * s, idx_z: 2.0},
        const=s * s,
        name=name,
    )


def linearize_sinr(
    h: np.ndarray,
    w_bar: np.ndarray,
    gamma_bar: float,
    idx_w_self: np.ndarray,
    idx_w_others: list,
    idx_gamma: int,
    idx_b: int,
    b_coef: float = 1.0,
    error_scale: float = 0.0,
    gamma_floor: float = 1e-6,
    name: str = "",
) -> Quadratic:
    """Tangent relaxation of a per-user SINR requirement at (w_bar, gamma_bar).

    Interference of the other groups stays quadratic; the user's own signal
    power over its SINR slack is replaced by its tangent plane.  A positive
    ``error_scale`` adds the estimation-error power term over every precoder
    in the served set, including the user's own.
    """
    gamma_bar = max(gamma_bar, gamma_floor)
    H = rank_one_real(h)
    w_bar = np.asarray(w_bar, dtype=float)
    hw = H @ w_bar
    anchor_power = float(w_bar @ hw)

    blocks = list(idx_w_others)
    quad_idx = np.concatenate(blocks) if blocks else np.array([], dtype=int)
    dim = 2 * h.size
    P = np.zeros((quad_idx.size, quad_idx.size))
    for i, _ in enumerate(blocks):
        sl = slice(i * dim, (i + 1) * dim)
        P[sl, sl] = H + error_scale * np.eye(dim)
    if error_scale > 0.0:
        quad_idx = np.concatenate([quad_idx, idx_w_self])
        P_full = np.zeros((quad_idx.size, quad_idx.size))
        P_full[: P.shape[0], : P.shape[0]] = P
        P_full[P.shape[0]:, P.shape[0]:] = error_scale * np.eye(dim)
        P = P_full

    lin = {int(i): -2.0 * float(v) / gamma_bar for i, v in zip(idx_w_self, hw)}
    lin[idx_gamma] = anchor_power / gamma_bar**2
    lin[idx_b] = lin.get(idx_b, 0.0) + b_coef
    return Quadratic(idx=quad_idx, P=P, lin=lin, const=0.0, name=name)


class SinrTangentBatch(ConstraintBatch):
    """All per-member SINR tangent constraints of one beam, vectorized.

    Constraint i (member of group g_i in AUG a_i):
        sum_g mask[i,g] * |h_i^H w_g|^2 + sum_g err[i,g] * ||w_g||^2
          + lin_i(x) <= 0
    where lin_i carries the tangent terms in w_{g_i}, the SINR slack, and the
    AUG bandwidth.  |h^H w|^2 is evaluated through the stacked-real rank-2
    form, so values, gradients, and curvature reduce to small matmuls.
    """

    name = "sinr"

    def __init__(self, w_indices: list, dim: int):
        self.w_idx = np.asarray(w_indices, dtype=int)   # (K, dim)
        self.dim = dim
        self.rows_u: list = []
        self.rows_v: list = []
        self.mask_rows: list = []
        self.err_rows: list = []
        self.lin_rows: list = []   # dict idx -> coef per member
        self._built = False

    def add_member(self, h, w_bar, gamma_bar, group: int, same_aug: list,
                   idx_gamma: int, idx_b: int, error_scale: float, gamma_floor: float):
        gamma_bar = max(gamma_bar, gamma_floor)
        u = np.concatenate([h.real, h.imag])
        v = np.concatenate([-h.imag, h.real])
        su, sv = float(u @ w_bar), float(v @ w_bar)
        k = self.w_idx.shape[0]
        mask = np.zeros(k)
        err = np.zeros(k)
        for g in same_aug:
            if g != group:
                mask[g] = 1.0
            err[g] = error_scale
        lin = {}
        coef_self = -2.0 / gamma_bar
        grad_self = coef_self * (su * u + sv * v)
        for idx, val in zip(self.w_idx[group], grad_self):
            lin[int(idx)] = val
        lin[idx_gamma] = (su * su + sv * sv) / gamma_bar**2
        lin[idx_b] = lin.get(idx_b, 0.0) + 1.0
        self.rows_u.append(u)
        self.rows_v.append(v)
        self.mask_rows.append(mask)
        self.err_rows.append(err)
        self.lin_rows.append(lin)

    def freeze(self, n: int):
        self.U = np.array(self.rows_u)
        self.V = np.array(self.rows_v)
        self.mask = np.array(self.mask_rows)
        self.err = np.array(self.err_rows)
        self.A_lin = np.zeros((len(self.lin_rows), n))
        for i, lin in enumerate(self.lin_rows):
            for idx, val in lin.items():
                self.A_lin[i, idx] += val
        self._built = True

    def __len__(self):
        return self.U.shape[0]

    def _projections(self, x):
        W = x[self.w_idx]                      # (K, dim)
        return W, self.U @ W.T, self.V @ W.T   # (mb, K) each

    def values(self, x):
        W, su, sv = self._projections(x)
        quad = ((su * su + sv * sv) * self.mask).sum(axis=1)
        if self.err.any():
            norms = np.sum(W * W, axis=1)
            quad = quad + self.err @ norms
        return quad + self.A_lin @ x

    def grad_matrix(self, x, n):
        W, su, sv = self._projections(x)
        rows = self.A_lin.copy()
        mb, k = su.shape
        for g in range(k):
            contrib = 2.0 * (
                (su[:, g] * self.mask[:, g])[:, None] * self.U
                + (sv[:, g] * self.mask[:, g])[:, None] * self.V
            )
            if self.err.any():
                contrib += 2.0 * self.err[:, g, None] * W[g][None, :]
            rows[:, self.w_idx[g]] += contrib
        return rows

    def hess_add(self, x, inv_weights, H):
        k = self.w_idx.shape[0]
        for g in range(k):
            wu = 2.0 * inv_weights * self.mask[:, g]
            block = (self.U.T * wu) @ self.U + (self.V.T * wu) @ self.V
            if self.err.any():
                block += 2.0 * float(inv_weights @ self.err[:, g]) * np.eye(self.dim)
            H[np.ix_(self.w_idx[g], self.w_idx[g])] += block


# ---------------------------------------------------------------------------
# per-beam subproblem for the optimal precoding path


class _Anchors:
    def __init__(self, w, b, gamma, x, z):
        self.w = w          # list of real 2N arrays, one per group
        self.b = b          # list per AUG (normalized)
        self.gamma = gamma  # list per group
        self.x = x
        self.z = z


class _BeamOptimalProblem:
    """Index bookkeeping and constraint assembly for one beam's subproblem."""

    def __init__(self, beam: BeamInstance, groups: list, rate_params: RateParams,
                 settings: ScaSettings):
        self.beam = beam
        self.groups = groups
        self.rp = rate_params
        self.st = settings
        self.B = rate_params.total_bandwidth_hz
        self.phi = rate_params.time_fraction
        self.n_ant = groups[0].channels.shape[1]
        self.dim = 2 * self.n_ant
        self.n_augs = max(g.aug for g in groups) + 1
        # channel normalization: unit noise-plus-leakage floor, unit power budget
        denom = beam.interference_density * self.B
        self.chan_scale = math.sqrt(beam.power_budget_w / denom)
        self.design = [g.design_channels * self.chan_scale for g in groups]
        self.true_scaled = [g.channels * self.chan_scale for g in groups]
        self.err_scaled = [
            g.error_var * beam.power_budget_w / denom for g in groups
        ]
        self.gamma_lb = max(settings.gamma_min(self.phi), settings.gamma_floor)

    # -- layout -------------------------------------------------------------

    def build(self, anchors: _Anchors):
        prob = ConvexSubproblem()
        t = prob.add_var("t", lb=0.0)
        b_idx = [
            prob.add_var(f"b{a}", lb=self.st.bandwidth_floor_hz / self.B, ub=1.0)
            for a in range(self.n_augs)
        ]
        w_idx, g_idx, x_idx, z_idx = [], [], [], []
        for gi, g in enumerate(self.groups):
            w_idx.append(prob.add_vars(f"w{gi}", self.dim))
            g_idx.append(prob.add_var(f"gamma{gi}", lb=self.gamma_lb))
            x_idx.append(prob.add_var(f"x{gi}", lb=1e-9))
            z_idx.append(prob.add_var(f"z{gi}", lb=1e-12))

        members_of_aug = {}
        for gi, g in enumerate(self.groups):
            members_of_aug.setdefault(g.aug, []).append(gi)

        batch = SinrTangentBatch(w_idx, self.dim)
        for gi, g in enumerate(self.groups):
            prob.add_constraint(Affine({t: -1.0}, g.backhaul_s, name=f"bh{gi}"))
            prob.add_constraint(
                Reciprocal(
                    g.q_bits / self.B, z_idx[gi], lin={t: -1.0},
                    const=g.slant_km / SPEED_OF_LIGHT_KM_S, name=f"epi{gi}",
                )
            )
            prob.add_constraint(
                LogRate(self.phi / LN2, g_idx[gi], c=1.0, lin={x_idx[gi]: 1.0},
                        name=f"eff{gi}")
            )
            if self.st.qos_rate_bps is not None:
                prob.add_constraint(
                    LogRate(self.phi / LN2, g_idx[gi], c=1.0,
                            recip=(self.st.qos_rate_bps / self.B, b_idx[g.aug]),
                            name=f"qos{gi}")
                )
            prob.add_constraint(
                linearize_bilinear(
                    anchors.b[g.aug], anchors.x[gi],
                    b_idx[g.aug], x_idx[gi], z_idx[gi], name=f"prod{gi}",
                )
            )
            for ui in range(g.n_members):
                batch.add_member(
                    self.design[gi][ui],
                    anchors.w[gi],
                    anchors.gamma[gi],
                    group=gi,
                    same_aug=members_of_aug[g.aug],
                    idx_gamma=g_idx[gi],
                    idx_b=b_idx[g.aug],
                    error_scale=float(self.err_scaled[gi][ui]),
                    gamma_floor=self.st.gamma_floor,
                )
        all_w = np.concatenate(w_idx)
        batch.freeze(prob.n)
        prob.add_constraint(batch)
        prob.add_constraint(
            Quadratic(all_w, np.eye(all_w.size), const=-1.0, name="power")
        )
        prob.add_constraint(
            Affine({bi: 1.0 for bi in b_idx}, -1.0, name="bandwidth")
        )
        prob.minimize({t: 1.0})
        layout = {"t": t, "b": b_idx, "w": w_idx, "gamma": g_idx, "x": x_idx, "z": z_idx}
        return prob, layout

    # -- anchor handling ------------------------------------------------------

    def design_min_sinr(self, gi: int, w_list: list, b_norm: float) -> float:
        """Worst member design SINR of group gi under normalized precoders."""
        g = self.groups[gi]
        worst = math.inf
        others = [
            w_list[gj]
            for gj, og in enumerate(self.groups)
            if og.aug == g.aug and gj != gi
        ]
        for ui in range(g.n_members):
            H = rank_one_real(self.design[gi][ui])
            sig = float(w_list[gi] @ H @ w_list[gi])
            interf = sum(float(w @ H @ w) for w in others)
            err = float(self.err_scaled[gi][ui]) * sum(
                float(w @ w)
                for gj, w in enumerate(w_list)
                if self.groups[gj].aug == g.aug
            )
            worst = min(worst, sig / (interf + err + b_norm))
        return worst

    def anchors_from(self, w_list: list, b_list: list, delta: float | None = None) -> _Anchors:
        if delta is None:
            delta = self.st.anchor_backoff
        gammas, xs, zs = [], [], []
        for gi, g in enumerate(self.groups):
            gam = max(
                (1.0 - delta) * self.design_min_sinr(gi, w_list, b_list[g.aug]),
                self.st.gamma_floor,
            )
            x = (1.0 - delta) * self.phi * math.log2(1.0 + gam)
            gammas.append(gam)
            xs.append(max(x, 2e-9))
            zs.append(max((1.0 - delta) * b_list[g.aug] * xs[-1], 2e-12))
        return _Anchors([w.copy() for w in w_list], list(b_list), gammas, xs, zs)

    def rebalance_bandwidth(self, anchors: _Anchors) -> list:
        """Exact bandwidth split for the current spectral efficiencies.

        With per-group efficiencies fixed, each AUG's worst transmission
        latency decreases in its bandwidth share, so the minimax split
        equalizes latencies; found by bisection on the target latency.
        """
        margin = 1e-7
        if self.n_augs == 1:
            return [1.0 - margin]
        floor_b = self.st.bandwidth_floor_hz / self.B

        def needed(latency):
            total = 0.0
            shares = []
            for a in range(self.n_augs):
                share = floor_b
                for gi, g in enumerate(self.groups):
                    if g.aug != a:
                        continue
                    # true rate at the anchor efficiencies: B * b * x
                    prop = g.slant_km / SPEED_OF_LIGHT_KM_S
                    if latency <= prop:
                        return math.inf, []
                    share = max(share, g.q_bits / (self.B * anchors.x[gi] * (latency - prop)))
                shares.append(share)
                total += share
            return total, shares

        lo = max(max(g.backhaul_s for g in self.groups), 1e-9)
        hi = lo
        while needed(hi)[0] > 1.0 and hi < 1e12:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if needed(mid)[0] > 1.0:
                lo = mid
            else:
                hi = mid
        total, shares = needed(hi)
        if not shares:
            return list(anchors.b)
        scale = (1.0 - margin) / max(total, 1e-12)
        return [min(s * scale, 1.0 - margin) for s in shares]

    def _equal_gain_candidate(self):
        """Phase-referenced sum of member directions: nonzero signal for all members."""
        w_list = []
        k_m = len(self.groups)
        for gi in range(len(self.groups)):
            chans = self.design[gi]
            ref = chans[0]
            acc = np.zeros_like(ref)
            for h in chans:
                inner = np.vdot(ref, h)
                phase = inner / abs(inner) if abs(inner) > 0 else 1.0
                acc += (h / np.linalg.norm(h)) / phase
            norm = np.linalg.norm(acc)
            direction = acc / norm if norm > 1e-12 else ref / np.linalg.norm(ref)
            w = math.sqrt(self.st.init_power_fraction / k_m) * direction
            w_list.append(stack_complex(w))
        b_list = [(1.0 - self.st.anchor_backoff) / self.n_augs] * self.n_augs
        return w_list, b_list

    def _zf_candidate(self):
        try:
            zf = _solve_beam_zf(self.beam, self.groups, self.rp, self.st, allow_drop=False)
        except ValueError:
            return None
        if zf is None:
            return None
        sols, _ = zf
        w_list = [
            stack_complex(s.precoder) / math.sqrt(self.beam.power_budget_w)
            for s in sols
        ]
        total = sum(float(w @ w) for w in w_list)
        if total >= 1.0:
            w_list = [w * math.sqrt((1.0 - self.st.anchor_backoff) / total) for w in w_list]
        b_by_aug = [0.0] * self.n_augs
        for s, g in zip(sols, self.groups):
            b_by_aug[g.aug] = min(s.bandwidth_hz / self.B, 1.0 - self.st.anchor_backoff)
        return w_list, b_by_aug

    def initial_anchors(self) -> _Anchors:
        """Best of the ZF-solution and equal-gain candidates by worst anchor SINR.

        The ZF candidate is near-optimal for singleton groups; the equal-gain
        candidate guarantees every multicast member a usable anchor signal,
        which keeps the first tangent subproblem non-degenerate.
        """
        candidates = [c for c in (self._zf_candidate(), self._equal_gain_candidate()) if c]
        best, best_score = None, -math.inf
        for w_list, b_list in candidates:
            score = min(
                self.design_min_sinr(gi, w_list, b_list[g.aug])
                for gi, g in enumerate(self.groups)
            )
            if score > best_score:
                best, best_score = (w_list, b_list), score
        return self.anchors_from(*best)

    def embed(self, anchors: _Anchors, layout) -> np.ndarray:
        n = 1 + len(layout["b"]) + sum(arr.size for arr in layout["w"]) + 3 * len(self.groups)
        x = np.zeros(n)
        t0 = 0.0
        for gi, g in enumerate(self.groups):
            t0 = max(t0, g.backhaul_s, g.q_bits / (self.B * anchors.z[gi])
                     + g.slant_km / SPEED_OF_LIGHT_KM_S)
        x[layout["t"]] = t0 * (1.0 + 1e-6) + 1e-9
        for a, bi in enumerate(layout["b"]):
            x[bi] = anchors.b[a]
        for gi in range(len(self.groups)):
            x[layout["w"][gi]] = anchors.w[gi]
            x[layout["gamma"][gi]] = anchors.gamma[gi]
            x[layout["x"][gi]] = anchors.x[gi]
            x[layout["z"][gi]] = anchors.z[gi]
        return x

    def extract(self, x: np.ndarray, layout) -> _Anchors:
        w = [x[idx].copy() for idx in layout["w"]]
        b = [float(x[bi]) for bi in layout["b"]]
        gamma = [max(float(x[gi]), self.st.gamma_floor) for gi in layout["gamma"]]
        xs = [float(x[xi]) for xi in layout["x"]]
        zs = [float(x[zi]) for zi in layout["z"]]
        return _Anchors(w, b, gamma, xs, zs)


# ---------------------------------------------------------------------------
# zero-forcing design


def zf_directions(design_channels: list, n_ant: int):
    """Pseudo-inverse columns for one AUG's representative channels.

    Returns (directions, norms_squared); representative = weakest member.
    Raises on rank deficiency, which usually means the AUG needs regrouping.
    """
    reps = np.array(
        [ch[int(np.argmin(np.linalg.norm(ch, axis=1)))] for ch in design_channels]
    )
    k = reps.shape[0]
    if k > n_ant:
        raise ValueError("more groups than antennas; regroup before zero-forcing")
    gram = reps.conj() @ reps.T   # entries h_i^H h_j
    if np.linalg.matrix_rank(gram, tol=None) < k:
        raise ValueError(
            "representative channels are rank deficient; regrouping the AUG is required"
        )
    w = reps.T @ np.linalg.inv(gram)
    dirs = [w[:, i] for i in range(k)]
    alphas = [float(np.vdot(d, d).real) for d in dirs]
    return dirs, alphas


def _solve_beam_zf(beam: BeamInstance, groups: list, rate_params: RateParams,
                   settings: ScaSettings, allow_drop: bool = True):
    """ZF power/bandwidth allocation for one beam.

    Returns (group solutions ordered like ``groups``, objective) or None when
    infeasible and dropping is disallowed.
    """
    B = rate_params.total_bandwidth_hz
    phi = rate_params.time_fraction
    floor = beam.interference_density * B
    n_ant = groups[0].channels.shape[1]
    gamma_lb = max(settings.gamma_min(phi), settings.gamma_floor)

    active = list(range(len(groups)))
    dropped = []
    while active:
        act_groups = [groups[i] for i in active]
        n_augs = max(g.aug for g in act_groups) + 1
        augs_present = sorted({g.aug for g in act_groups})
        dirs, alphas = {}, {}
        for a in augs_present:
            idxs = [i for i in active if groups[i].aug == a]
            d, al = zf_directions([groups[i].design_channels for i in idxs], n_ant)
            for i, dd, aa in zip(idxs, d, al):
                dirs[i], alphas[i] = dd, aa

        prob = ConvexSubproblem()
        t = prob.add_var("t", lb=0.0)
        b_idx = {a: prob.add_var(f"b{a}", lb=settings.bandwidth_floor_hz / B, ub=1.0)
                 for a in augs_present}
        p_idx = {i: prob.add_var(f"p{i}", lb=1e-15) for i in active}
        z_idx = {i: prob.add_var(f"z{i}", lb=1e-12) for i in active}
        for i in active:
            g = groups[i]
            prob.add_constraint(Affine({t: -1.0}, g.backhaul_s))
            prob.add_constraint(
                Reciprocal(g.q_bits / B, z_idx[i], lin={t: -1.0},
                           const=g.slant_km / SPEED_OF_LIGHT_KM_S)
            )
            prob.add_constraint(
                PerspectiveRate(phi / LN2, b_idx[g.aug], 1.0, p_idx[i], 1.0,
                                lin={z_idx[i]: 1.0}, name=f"rate{i}")
            )
            if settings.qos_rate_bps is None:
                prob.add_constraint(
                    Affine({b_idx[g.aug]: gamma_lb, p_idx[i]: -1.0}, name=f"qos{i}")
                )
            else:
                prob.add_constraint(
                    PerspectiveRate(phi / LN2, b_idx[g.aug], 1.0, p_idx[i], 1.0,
                                    const=settings.qos_rate_bps / B, name=f"qos{i}")
                )
        prob.add_constraint(
            Affine({p_idx[i]: alphas[i] * floor / beam.power_budget_w for i in active}, -1.0,
                   name="power")
        )
        prob.add_constraint(Affine({b_idx[a]: 1.0 for a in augs_present}, -1.0, name="bw"))
        prob.minimize({t: 1.0})

        # constructed interior start: equal received power at 80% of budget,
        # bandwidth backed off from both the QoS and the sum caps
        x0 = np.zeros(prob.n)
        power_per_unit = sum(alphas[i] for i in active) * floor / beam.power_budget_w
        p0 = 0.8 / power_per_unit
        b0 = min(0.9 / len(augs_present), p0 / (1.5 * gamma_lb))
        b0 = max(b0, 1.2 * settings.bandwidth_floor_hz / B)
        t0 = 0.0
        for i in active:
            g = groups[i]
            z0 = 0.9 * phi * b0 * math.log2(1.0 + p0 / b0)
            x0[z_idx[i]] = max(z0, 2e-12)
            x0[p_idx[i]] = p0
            t0 = max(t0, g.q_bits / (B * x0[z_idx[i]]) + g.slant_km / SPEED_OF_LIGHT_KM_S,
                     g.backhaul_s)
        for a in augs_present:
            x0[b_idx[a]] = b0
        x0[t] = t0 * 1.05 + 1e-6
        rep = solve(prob, x0=x0, gap_tol=settings.gap_tol)
        if rep.status == "infeasible" or not math.isfinite(rep.objective):
            if not allow_drop:
                return None
            worst = max(active, key=lambda i: alphas[i])
            active.remove(worst)
            dropped.append(worst)
            continue

        sols = []
        for i in active:
            g = groups[i]
            p_recv = float(rep.x[p_idx[i]]) * floor
            b_hz = float(rep.x[b_idx[g.aug]]) * B
            w = math.sqrt(p_recv) * dirs[i]
            sols.append(
                GroupSolution(
                    beam=beam.index, aug=g.aug, file_id=g.file_id, precoder=w,
                    bandwidth_hz=b_hz, power_w=float(np.vdot(w, w).real),
                    design_sinr=p_recv / (beam.interference_density * b_hz),
                    min_sinr=0.0, rate_bps=0.0,
                )
            )
        for i in dropped:
            g = groups[i]
            sols.append(
                GroupSolution(beam=beam.index, aug=g.aug, file_id=g.file_id, precoder=None,
                              bandwidth_hz=0.0, power_w=0.0, design_sinr=0.0,
                              min_sinr=0.0, rate_bps=0.0, outage=True)
            )
        order = {idx: pos for pos, idx in enumerate(active + dropped)}
        sols = [sols[order[i]] for i in range(len(groups))]
        return sols, rep.objective
    return ([GroupSolution(beam=beam.index, aug=g.aug, file_id=g.file_id, precoder=None,
                           bandwidth_hz=0.0, power_w=0.0, design_sinr=0.0, min_sinr=0.0,
                           rate_bps=0.0, outage=True) for g in groups], math.inf)


# ---------------------------------------------------------------------------
# realized performance


def _realize(beam: BeamInstance, groups: list, sols: list, rate_params: RateParams,
             settings: ScaSettings) -> None:
    """Fill realized SINR/rate (true channels, residual interference) in place."""
    by_aug = {}
    for g, s in zip(groups, sols):
        if not s.outage:
            by_aug.setdefault(g.aug, []).append((g, s))
    for _, pairs in by_aug.items():
        for g, s in pairs:
            worst = math.inf
            for ui in range(g.n_members):
                h = g.channels[ui]
                interferers = [(h, o.precoder) for _, o in pairs if o is not s]
                worst = min(
                    worst,
                    sinr(h, s.precoder, interferers, beam.interference_density,
                         s.bandwidth_hz),
                )
            s.min_sinr = worst
            s.rate_bps = effective_rate(s.bandwidth_hz, rate_params.time_fraction, worst)
            s.qos_miss = s.rate_bps < settings.qos_threshold_bps(s.bandwidth_hz) * (1 - 1e-9)


def realized_latency(groups_sols: list) -> float:
    """Worst served-group delivery time: transmission plus propagation vs backhaul."""
    worst = 0.0
    for g, s in groups_sols:
        if s.outage:
            continue
        air = math.inf if s.rate_bps <= 0 else (
            g.q_bits / s.rate_bps + g.slant_km / SPEED_OF_LIGHT_KM_S
        )
        worst = max(worst, air, g.backhaul_s)
    return worst


# ---------------------------------------------------------------------------
# public entry points


def sca_optimize(beams: list, rate_params: RateParams,
                 settings: ScaSettings | None = None) -> ServingPlanSolution:
    """Optimal joint precoding/bandwidth design, one convergent loop per beam.

    QoS-infeasible groups are dropped (recorded as outages) only after the
    solver's phase-I fails on the reduced problem.
    """
    settings = settings or ScaSettings()
    plan = ServingPlanSolution()
    beam_trajs = []
    beams_converged = []
    for beam in beams:
        groups = list(beam.groups)
        if not groups:
            continue
        active = list(range(len(groups)))
        sols, traj = {}, []
        converged = False
        while active:
            bp = _BeamOptimalProblem(beam, [groups[i] for i in active], rate_params, settings)
            anchors = bp.initial_anchors()
            traj = []
            t_prev = math.inf
            infeasible = False
            last = None
            for _ in range(settings.max_iterations):
                prob, layout = bp.build(anchors)
                rep = solve(prob, x0=bp.embed(anchors, layout), gap_tol=settings.gap_tol)
                if rep.status == "infeasible" or not math.isfinite(rep.objective):
                    infeasible = True
                    break
                traj.append(rep.objective)
                solution = bp.extract(rep.x, layout)
                b_split = bp.rebalance_bandwidth(solution)
                anchors = bp.anchors_from(solution.w, b_split, delta=1e-7)
                last = (rep, layout, bp)
                if abs(t_prev - rep.objective) <= settings.latency_eps_s:
                    converged = True
                    break
                t_prev = rep.objective
            if infeasible:
                worst = min(
                    range(len(active)),
                    key=lambda pos: bp.design_min_sinr(
                        pos, anchors.w, anchors.b[bp.groups[pos].aug]
                    ),
                )
                plan.outages.append((beam.index, groups[active[worst]].file_id))
                active.pop(worst)
                continue
            rep, layout, bp = last
            for pos, gi in enumerate(active):
                g = groups[gi]
                w_norm = rep.x[layout["w"][pos]]
                w = unstack_complex(w_norm) * math.sqrt(beam.power_budget_w)
                b_hz = float(rep.x[layout["b"][g.aug]]) * rate_params.total_bandwidth_hz
                sols[gi] = GroupSolution(
                    beam=beam.index, aug=g.aug, file_id=g.file_id, precoder=w,
                    bandwidth_hz=b_hz, power_w=float(np.vdot(w, w).real),
                    design_sinr=float(rep.x[layout["gamma"][pos]]),
                    min_sinr=0.0, rate_bps=0.0,
                )
            break
        for gi in range(len(groups)):
            if gi not in sols:
                g = groups[gi]
                sols[gi] = GroupSolution(
                    beam=beam.index, aug=g.aug, file_id=g.file_id, precoder=None,
                    bandwidth_hz=0.0, power_w=0.0, design_sinr=0.0, min_sinr=0.0,
                    rate_bps=0.0, outage=True,
                )
        ordered = [sols[gi] for gi in range(len(groups))]
        _realize(beam, groups, ordered, rate_params, settings)
        plan.groups.extend(ordered)
        beam_trajs.append(traj or [math.inf])
        beams_converged.append(converged)
        plan.iterations = max(plan.iterations, len(traj))

    width = max(len(tr) for tr in beam_trajs) if beam_trajs else 0
    plan.trajectory = [
        max(tr[min(i, len(tr) - 1)] for tr in beam_trajs) for i in range(width)
    ]
    plan.converged = all(beams_converged) if beams_converged else True
    plan.latency_s = realized_latency(
        list(zip([g for b in beams for g in b.groups], plan.groups))
    )
    return plan


def zf_design(beams: list, rate_params: RateParams,
              settings: ScaSettings | None = None) -> ServingPlanSolution:
    """Zero-forcing directions with convex power/bandwidth allocation per beam."""
    settings = settings or ScaSettings()
    plan = ServingPlanSolution()
    objectives = []
    for beam in beams:
        sols, objective = _solve_beam_zf(beam, beam.groups, rate_params, settings)
        _realize(beam, beam.groups, sols, rate_params, settings)
        plan.groups.extend(sols)
        plan.outages.extend(
            (beam.index, s.file_id) for s in sols if s.outage
        )
        objectives.append(objective)
    plan.trajectory = [max(objectives)] if objectives else []
    plan.iterations = 1
    plan.converged = True
    plan.latency_s = realized_latency(
        list(zip([g for b in beams for g in b.groups], plan.groups))
    )
    return plan


def write_solution_csv(path, plan: ServingPlanSolution) -> None:
    """Export one row per group: allocation, realized SINR/rate, and outage flag."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["beam", "aug", "group", "bandwidth_hz", "power_w", "min_sinr_db",
             "rate_bps", "outage_flag"]
        )
        for s in plan.groups:
            sinr_db = 10.0 * math.log10(s.min_sinr) if s.min_sinr > 0 else -math.inf
            writer.writerow(
                [s.beam, s.aug, s.file_id, f"{s.bandwidth_hz:.6g}", f"{s.power_w:.6g}",
                 f"{sinr_db:.4f}", f"{s.rate_bps:.6g}", int(s.outage)]
            )
