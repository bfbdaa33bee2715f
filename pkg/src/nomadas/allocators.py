"""Greedy assignment phases and the full allocation algorithms.

All algorithms share the same skeleton: an initial round that hands every
user its best subcarrier (worst-served user picks first), an OMA round that
keeps giving the most power-hungry user extra subcarriers while that lowers
total power, and an optional pairing round that multiplexes a second user
onto already-assigned subcarriers, either through classic power-domain SIC
on the same RRH or through mutual SIC across RRHs.

State bookkeeping: a subcarrier is "free" until assigned, then carried by
its first user's sole set (power floats on the user's waterline) until a
pairing freezes it. Frozen powers and rates never change afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import optimal_pa
from .channel import ChannelTensor
from .mutual_sic import (CandidateRejected, PairGains, PairPowers,
                         opad_cases, opad_optimize, rate_condition_terms)
from .waterfill import (POWER_ATOL, _lpo_core, rate_second, rate_single,
                        waterline_add, waterline_rate_shift)

ALGORITHMS = (
    "OMA-CAS", "NOMA-CAS", "OMA-DAS", "SRRH", "SRRH-LPO", "SRRH-OPA",
    "MutSIC-UC", "MutSIC-DPA", "MutSIC-OPAd", "MutSIC-SOPAd",
    "MutAndSingSIC",
)

# algorithms that only ever use the central RRH
_CAS = {"OMA-CAS", "NOMA-CAS"}


@dataclass(frozen=True)
class AlgorithmConfig:
    """Tuning knobs shared by all algorithms."""

    algorithm: str
    rho_w: float = 1e-3     # minimum useful power decrease per step (watts)
    mu: float = 0.01        # SIC decodability safety margin
    ftpa_alpha: float = 0.5  # fractional-power exponent for FTPA pairing

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.rho_w < 0 or not 0 < self.mu < 1 or self.ftpa_alpha < 0:
            raise ValueError("invalid algorithm parameters")


@dataclass
class SinglePair:
    """A same-RRH power-multiplexed subcarrier, frozen."""

    n: int
    k1: int
    r: int
    p1_w: float
    rate1_bps: float
    k2: int
    p2_w: float
    rate2_bps: float


@dataclass
class MutualPair:
    """A cross-RRH mutual-SIC subcarrier, frozen."""

    n: int
    k1: int
    r1: int
    p1_w: float
    rate1_bps: float
    p1_initial_w: float
    k2: int
    r2: int
    p2_w: float
    rate2_bps: float


@dataclass
class StepRecord:
    """One loop iteration of a greedy phase, for the descent audit."""

    phase: str
    user: int
    subcarrier: int
    accepted: bool
    predicted_dp_w: float
    total_before_w: float
    total_after_w: float


class AllocationState:
    """Mutable allocation bookkeeping shared by the phases."""

    def __init__(self, channel: ChannelTensor, config: AlgorithmConfig):
        scen = channel.scenario
        self.channel = channel
        self.config = config
        self.gains = channel.gains
        self.sigma2_w = channel.sigma2_w
        self.sc_bw_hz = scen.sc_bw_hz
        self.num_users = scen.num_users
        self.num_subcarriers = scen.num_subcarriers
        if config.algorithm in _CAS:
            self.rrhs = np.array([0])
        else:
            self.rrhs = np.arange(scen.num_rrhs)
        self.demands = np.full(scen.num_users, float(scen.rate_demand_bps))

        K = self.num_users
        self.sole = [[] for _ in range(K)]        # per user: [(n, r, gain)]
        self.floor_sum = np.zeros(K)              # sum of sigma2/gain over sole
        self.waterline = np.full(K, np.nan)
        self.frozen_rate = np.zeros(K)
        self.frozen_power = np.zeros(K)
        self.free = list(range(scen.num_subcarriers))   # unassigned
        self.first = {}                            # n -> (k, r); no second user
        self.singles: list[SinglePair] = []
        self.mutuals: list[MutualPair] = []
        self.log: list[StepRecord] = []
        self.phase_iterations: dict[str, tuple[int, int]] = {}

    # -- bookkeeping helpers -------------------------------------------------

    def user_power(self, k: int) -> float:
        n = len(self.sole[k])
        if n == 0:
            return float(self.frozen_power[k])
        return float(n * self.waterline[k] - self.floor_sum[k]
                     + self.frozen_power[k])

    def user_powers(self) -> np.ndarray:
        return np.array([self.user_power(k) for k in range(self.num_users)])

    def total_power(self) -> float:
        return float(self.user_powers().sum())

    def sole_gains(self, k: int) -> np.ndarray:
        return np.array([g for _, _, g in self.sole[k]])

    def sole_rate_bps(self, k: int) -> float:
        return float(self.demands[k] - self.frozen_rate[k])

    def _add_sole(self, k: int, n: int, r: int, gain: float):
        self.sole[k].append((n, int(r), float(gain)))
        self.floor_sum[k] += self.sigma2_w / gain

    def _remove_sole(self, k: int, n: int):
        for i, (sn, sr, sg) in enumerate(self.sole[k]):
            if sn == n:
                del self.sole[k][i]
                self.floor_sum[k] -= self.sigma2_w / sg
                return sr, sg
        raise KeyError(f"subcarrier {n} not in user {k}'s sole set")

    def _log(self, phase, user, n, accepted, dp, before):
        self.log.append(StepRecord(phase, user, n, accepted, dp, before,
                                   self.total_power()))

    # -- materialization -----------------------------------------------------

    def power_tensor(self) -> np.ndarray:
        """Dense (users, subcarriers, RRHs) transmit powers."""
        P = np.zeros_like(self.gains)
        for k in range(self.num_users):
            for n, r, g in self.sole[k]:
                P[k, n, r] = self.waterline[k] - self.sigma2_w / g
        for sp in self.singles:
            P[sp.k1, sp.n, sp.r] = sp.p1_w
            P[sp.k2, sp.n, sp.r] = sp.p2_w
        for mp in self.mutuals:
            P[mp.k1, mp.n, mp.r1] = mp.p1_w
            P[mp.k2, mp.n, mp.r2] = mp.p2_w
        return P


@dataclass
class AllocationResult:
    """Final outcome of one algorithm on one channel realization."""

    algorithm: str
    total_power_w: float
    per_user_power_w: np.ndarray
    power_w: np.ndarray
    nonmux_sc: int
    mutsic_sc: int
    singsic_sc: int
    state: AllocationState
    warnings: tuple = ()


# -- phase 1: one subcarrier each, worst-served user picks first -------------

def worst_best_h(state: AllocationState) -> None:
    """Give every user one subcarrier at exactly its rate demand.

    The user whose best available link is weakest chooses first, so strong
    users cannot take the only decent link of a weak one.
    """
    G, s2 = state.gains, state.sigma2_w
    unassigned = set(range(state.num_users))
    while unassigned:
        free_arr = np.array(state.free)
        sub = G[:, free_arr[:, None], state.rrhs[None, :]]
        best_k, best_gain = -1, math.inf
        for k in sorted(unassigned):
            g = float(sub[k].max())
            if g < best_gain:
                best_k, best_gain = k, g
        flat = int(np.argmax(sub[best_k]))
        ni, ri = np.unravel_index(flat, sub[best_k].shape)
        n, r = int(free_arr[ni]), int(state.rrhs[ri])
        gain = float(G[best_k, n, r])
        q = state.demands[best_k] / state.sc_bw_hz
        state.waterline[best_k] = math.exp(q * math.log(2.0)
                                           + math.log(s2 / gain))
        before = state.total_power()
        state.free.remove(n)
        state._add_sole(best_k, n, r, gain)
        state.first[n] = (best_k, r)
        unassigned.discard(best_k)
        state._log("wbh", best_k, n, True, state.user_power(best_k), before)


# -- phase 2: grow sole sets while total power drops -------------------------

def oma_phase(state: AllocationState) -> None:
    """Repeatedly hand the most power-hungry user its best free subcarrier.

    A candidate only helps if its gain clears the user's current waterline
    noise floor; the best such gain also gives the largest power drop, so
    one gain argmax per iteration suffices. Users whose best candidate no
    longer saves more than rho_w are retired from this phase.
    """
    G, s2 = state.gains, state.sigma2_w
    rho = state.config.rho_w
    active = set(range(state.num_users))
    limit = len(state.free) + state.num_users
    iters = 0
    while state.free and active:
        iters += 1
        powers = state.user_powers()
        k = min((kk for kk in active), key=lambda kk: (-powers[kk], kk))
        w = state.waterline[k]
        free_arr = np.array(state.free)
        cand = G[k, free_arr[:, None], state.rrhs[None, :]]
        admissible = cand * w > s2
        before = state.total_power()
        if not admissible.any():
            active.discard(k)
            state._log("oma", k, -1, False, math.nan, before)
            continue
        flat = int(np.argmax(np.where(admissible, cand, -math.inf)))
        ni, ri = np.unravel_index(flat, cand.shape)
        n, r = int(free_arr[ni]), int(state.rrhs[ri])
        gain = float(G[k, n, r])
        n_cur = len(state.sole[k])
        w_new = waterline_add(w, n_cur, gain, s2)
        dp = (n_cur + 1) * w_new - n_cur * w - s2 / gain
        if dp < -rho:
            state.waterline[k] = w_new
            state.free.remove(n)
            state._add_sole(k, n, r, gain)
            state.first[n] = (k, r)
            state._log("oma", k, n, True, dp, before)
        else:
            active.discard(k)
            state._log("oma", k, n, False, dp, before)
    state.phase_iterations["oma"] = (iters, limit)


# -- unconstrained benchmark: waterfill onto occupied subcarriers -------------

def uc_extension_phase(state: AllocationState) -> None:
    """Keep waterfilling with subcarrier reuse and no decoding conditions.

    Continuation of the sole-subcarrier growth where a user may also take a
    subcarrier already held by one other user, through a different RRH.
    Both users stay on their own waterlines and nothing freezes, so the
    resulting powers ignore every power-ordering requirement that real
    interference cancellation would impose. Lower-bound reference for the
    constrained mutual-SIC methods, not a deployable allocation.
    """
    G, s2 = state.gains, state.sigma2_w
    rho = state.config.rho_w
    occupants: dict[int, list[tuple[int, int]]] = {}
    for k in range(state.num_users):
        for n, r, _ in state.sole[k]:
            occupants.setdefault(n, []).append((k, r))
    active = set(range(state.num_users))
    limit = 2 * state.num_subcarriers + state.num_users
    iters = 0
    n_rrh = len(state.rrhs)
    while active:
        iters += 1
        powers = state.user_powers()
        k = min((kk for kk in active), key=lambda kk: (-powers[kk], kk))
        w = state.waterline[k]
        n_cur = len(state.sole[k])
        floor = s2 / state.sole_gains(k).min() if n_cur else 0.0
        allow = np.zeros((state.num_subcarriers, n_rrh), dtype=bool)
        for n in state.free:
            allow[n, :] = True
        for n, occ in occupants.items():
            if len(occ) == 1 and occ[0][0] != k:
                allow[n, :] = True
                # same-RRH reuse is single-SIC territory, not covered here
                allow[n, np.flatnonzero(state.rrhs == occ[0][1])] = False
        cand = G[k][:, state.rrhs]
        before = state.total_power()
        with np.errstate(divide="ignore"):
            w_new = np.exp((n_cur * np.log(w) + np.log(s2 / cand))
                           / (n_cur + 1))
        # shared candidates can outrank existing gains, so unlike the free
        # phase the shrunk waterline must be checked against the floor
        ok = allow & (cand * w > s2) & (w_new >= floor)
        if not ok.any():
            active.discard(k)
            state._log("uc", k, -1, False, math.nan, before)
            continue
        flat = int(np.argmax(np.where(ok, cand, -math.inf)))
        ni, ri = np.unravel_index(flat, cand.shape)
        n, r = int(ni), int(state.rrhs[ri])
        gain = float(G[k, n, r])
        wn = float(w_new[ni, ri])
        dp = (n_cur + 1) * wn - n_cur * w - s2 / gain
        if dp < -rho:
            state.waterline[k] = wn
            if n in state.free:
                state.free.remove(n)
                state.first[n] = (k, r)
            else:
                state.first.pop(n, None)
            state._add_sole(k, n, r, gain)
            occupants.setdefault(n, []).append((k, r))
            state._log("uc", k, n, True, dp, before)
        else:
            active.discard(k)
            state._log("uc", k, n, False, dp, before)
    state.phase_iterations["uc"] = (iters, limit)


# -- phase 3: same-RRH power-domain pairing ----------------------------------

def single_sic_pairing(state: AllocationState, mode: str) -> None:
    """Multiplex heavy users as second user on occupied subcarriers.

    mode "ftpa" sets the second power by the fractional gain ratio, "lpo"
    by the closed-form local optimum. The beneficiary offloads rate from
    its sole set; the incumbent's power and rate on the subcarrier freeze
    unchanged (it cancels the newcomer's signal before decoding).
    """
    if mode not in ("ftpa", "lpo"):
        raise ValueError(f"unknown single-SIC mode {mode!r}")
    G, s2 = state.gains, state.sigma2_w
    sc_bw = state.sc_bw_hz
    rho = state.config.rho_w
    mu = state.config.mu
    alpha = state.config.ftpa_alpha
    active = set(range(state.num_users))
    limit = len(state.first) + state.num_users
    iters = 0
    while state.first and active:
        iters += 1
        powers = state.user_powers()
        k2 = min((kk for kk in active), key=lambda kk: (-powers[kk], kk))
        before = state.total_power()
        n2 = len(state.sole[k2])
        if n2 == 0:
            active.discard(k2)
            state._log("single", k2, -1, False, math.nan, before)
            continue
        w2 = state.waterline[k2]
        g2_floor = s2 / state.sole_gains(k2).min()

        ns, k1s, rs = [], [], []
        for n in sorted(state.first):
            k1, r = state.first[n]
            if k1 != k2:
                ns.append(n)
                k1s.append(k1)
                rs.append(r)
        if not ns:
            active.discard(k2)
            state._log("single", k2, -1, False, math.nan, before)
            continue
        ns = np.array(ns)
        k1s = np.array(k1s)
        rs = np.array(rs)
        g1 = G[k1s, ns, rs]
        g2 = G[k2, ns, rs]
        p1 = state.waterline[k1s] - s2 / g1
        valid = g2 < g1
        if mode == "ftpa":
            with np.errstate(divide="ignore", over="ignore"):
                p2 = np.where(valid, p1 * (g1 / g2) ** alpha, np.inf)
        else:
            p2, reject = _lpo_core(w2, p1, g2, s2, n2, mu)
            valid &= ~reject
        with np.errstate(invalid="ignore", over="ignore"):
            rate2 = rate_second(np.where(p2 < np.inf, p2, 0.0), p1, g2,
                                s2, sc_bw)
            w2_new = w2 * 2.0 ** (-rate2 / (sc_bw * n2))
            valid &= w2_new >= g2_floor
            dp = np.where(valid, n2 * (w2_new - w2) + p2, np.inf)
        best = int(np.argmin(dp))
        if not valid[best] or not dp[best] < -rho:
            active.discard(k2)
            state._log("single", k2, int(ns[best]) if valid.any() else -1,
                       False, float(dp[best]), before)
            continue
        n, k1, r = int(ns[best]), int(k1s[best]), int(rs[best])
        p1_f, p2_f = float(p1[best]), float(p2[best])
        rate1 = float(rate_single(p1_f, g1[best], s2, sc_bw))
        state._remove_sole(k1, n)
        state.frozen_rate[k1] += rate1
        state.frozen_power[k1] += p1_f
        state.frozen_rate[k2] += float(rate2[best])
        state.frozen_power[k2] += p2_f
        state.waterline[k2] = float(w2_new[best])
        del state.first[n]
        state.singles.append(SinglePair(n, k1, r, p1_f, rate1, k2, p2_f,
                                        float(rate2[best])))
        state._log("single", k2, n, True, float(dp[best]), before)
    prev = state.phase_iterations.get("single", (0, 0))
    state.phase_iterations["single"] = (prev[0] + iters, prev[1] + limit)


# -- mutual-SIC pairing across RRHs -------------------------------------------

def _mutual_candidates(state: AllocationState, k2: int):
    """Candidate arrays for beneficiary k2: one row per (n, r2) couple."""
    G, s2 = state.gains, state.sigma2_w
    rows = []
    for n in sorted(state.first):
        k1, r1 = state.first[n]
        if k1 == k2:
            continue
        g11 = float(G[k1, n, r1])
        n1 = len(state.sole[k1])
        rest = [g for (sn, _, g) in state.sole[k1] if sn != n]
        rest_floor = s2 / min(rest) if rest else 0.0
        for r2 in state.rrhs:
            if int(r2) == r1:
                continue
            rows.append((n, k1, r1, int(r2), g11, float(G[k1, n, r2]),
                         float(G[k2, n, r1]), float(G[k2, n, int(r2)]),
                         float(state.waterline[k1]), n1, rest_floor))
    return rows


def mutual_sic_pairing(state: AllocationState, mode: str) -> None:
    """Pair heavy users across RRHs with mutual interference cancellation.

    mode "dpa" waterfills the joiner and clamps the power into the
    decodability window, "opad" re-optimizes both powers jointly per
    candidate, and "sopad" selects with dpa deltas then runs one joint
    optimization on the winner. All modes verify the exact decodability
    margins at the final powers and drop candidates that fail them.
    """
    if mode not in ("dpa", "opad", "sopad"):
        raise ValueError(f"unknown mutual-SIC mode {mode!r}")
    G, s2 = state.gains, state.sigma2_w
    sc_bw = state.sc_bw_hz
    rho = state.config.rho_w
    mu = state.config.mu
    active = set(range(state.num_users))
    limit = len(state.first) + state.num_users
    iters = 0
    while state.first and active:
        iters += 1
        powers = state.user_powers()
        k2 = min((kk for kk in active), key=lambda kk: (-powers[kk], kk))
        before = state.total_power()
        n2 = len(state.sole[k2])
        if n2 == 0:
            active.discard(k2)
            state._log("mutual", k2, -1, False, math.nan, before)
            continue
        w2 = state.waterline[k2]
        g2_floor = s2 / state.sole_gains(k2).min()

        rows = _mutual_candidates(state, k2)
        if not rows:
            active.discard(k2)
            state._log("mutual", k2, -1, False, math.nan, before)
            continue
        g11, g12, g21, g22 = (np.array([r[i] for r in rows])
                              for i in (4, 5, 6, 7))
        w1 = np.array([r[8] for r in rows])
        n1 = np.array([r[9] for r in rows])
        rest_floor = np.array([r[10] for r in rows])
        p1i = w1 - s2 / g11

        feasible = (g11 * g22 <= g21 * g12) & (g22 * w2 > s2)

        if mode == "opad":
            p1, p2, dp1, dp2, case = opad_cases(
                (g11, g12, g21, g22), s2, w1, w2, p1i, n1, n2, mu)
            valid = feasible & (case > 0)
        else:
            # waterfill the joiner onto its sole set, clamp into the window
            with np.errstate(invalid="ignore"):
                w_add = np.exp((n2 * np.log(w2) + np.log(s2 / g22))
                               / (n2 + 1))
            p1 = p1i.copy()
            p2 = w_add - s2 / g22
            dp1 = np.zeros_like(p2)
            valid = feasible.copy()
            lo = p1i * g11 / g12
            hi = p1i * g21 / g22
            valid &= (1.0 + mu) * lo <= (1.0 - mu) * hi + POWER_ATOL
            p2 = np.clip(p2, (1.0 + mu) * lo, (1.0 - mu) * hi)

        with np.errstate(invalid="ignore", over="ignore"):
            p2_safe = np.where(valid & (p2 > 0), p2, 0.0)
            rate2 = rate_single(p2_safe, g22, s2, sc_bw)
            w2_new = w2 * 2.0 ** (-rate2 / (sc_bw * n2))
            valid &= (w2_new >= g2_floor) & (p2 > 0)
            if mode == "opad":
                dp2 = np.where(valid, dp2, np.inf)
            else:
                dp2 = np.where(valid, n2 * (w2_new - w2) + p2, np.inf)

        # incumbent side: freezing at p1 shifts its remaining sole set
        rate1_new = rate_single(np.maximum(p1, 0.0), g11, s2, sc_bw)
        rate1_old = rate_single(np.maximum(p1i, 0.0), g11, s2, sc_bw)
        moved = np.abs(p1 - p1i) > POWER_ATOL
        valid &= ~moved | (n1 >= 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            w1_new = np.where(
                n1 >= 2,
                w1 * 2.0 ** ((rate1_old - rate1_new)
                             / (sc_bw * np.maximum(n1 - 1, 1))),
                w1)
        valid &= np.where(moved, w1_new >= rest_floor, True)

        # exact decodability margins at the final powers
        cross = g12 * g21 - g22 * g11
        xy = p1 * p2 * cross + s2 * p2 * (g12 - g22)
        zt = p1 * p2 * cross + s2 * p1 * (g21 - g11)
        scale = p1 * p2 * (g12 * g21 + g22 * g11) \
            + s2 * (p2 * (g12 + g22) + p1 * (g21 + g11))
        valid &= (xy >= -1e-9 * scale) & (zt >= -1e-9 * scale)

        dp_total = np.where(valid, dp1 + dp2, np.inf)
        best = int(np.argmin(dp_total))
        if not valid[best] or not dp_total[best] < -rho:
            active.discard(k2)
            state._log("mutual", k2, -1, False, float(dp_total[best]),
                       before)
            continue

        n, k1, r1, r2 = rows[best][0], rows[best][1], rows[best][2], \
            rows[best][3]
        gains_b = PairGains(float(g11[best]), float(g12[best]),
                            float(g21[best]), float(g22[best]))
        p1_f, p2_f = float(p1[best]), float(p2[best])
        dp_f = float(dp_total[best])

        if mode == "sopad":
            refined = _refine_with_opad(state, gains_b, float(p1i[best]),
                                        float(w1[best]), w2,
                                        int(n1[best]), n2, mu, g2_floor,
                                        float(rest_floor[best]))
            if refined is not None:
                p1_f, p2_f, dp_f = refined

        _freeze_mutual(state, n, k1, r1, int(r2), k2, gains_b, p1_f, p2_f,
                       float(p1i[best]), int(n1[best]))
        state._log("mutual", k2, n, True, dp_f, before)
    prev = state.phase_iterations.get("mutual", (0, 0))
    state.phase_iterations["mutual"] = (prev[0] + iters, prev[1] + limit)


def _refine_with_opad(state, gains: PairGains, p1i, w1, w2, n1, n2, mu,
                      g2_floor, rest_floor):
    """One joint optimization on the selected candidate; None keeps DPA."""
    s2 = state.sigma2_w
    sc_bw = state.sc_bw_hz
    try:
        sol = opad_optimize(gains, PairPowers(p1i, 0.0, p1i, w1, w2), s2,
                            n1, n2, mu)
    except CandidateRejected:
        return None
    # the refined powers must pass the same feasibility screens
    rate2 = rate_single(sol.p2_w, gains.g22, s2, sc_bw)
    if w2 * 2.0 ** (-rate2 / (sc_bw * n2)) < g2_floor:
        return None
    if sol.p1_w > p1i + POWER_ATOL:
        rate1_new = rate_single(sol.p1_w, gains.g11, s2, sc_bw)
        rate1_old = rate_single(p1i, gains.g11, s2, sc_bw)
        if n1 < 2 or (w1 * 2.0 ** ((rate1_old - rate1_new)
                                   / (sc_bw * (n1 - 1))) < rest_floor):
            return None
    powers = PairPowers(sol.p1_w, sol.p2_w, p1i, w1, w2)
    xy, zt = rate_condition_terms(gains, powers, s2)
    scale = sol.p1_w * sol.p2_w * (gains.g12 * gains.g21
                                   + gains.g22 * gains.g11) \
        + s2 * (sol.p2_w * (gains.g12 + gains.g22)
                + sol.p1_w * (gains.g21 + gains.g11))
    if xy < -1e-9 * scale or zt < -1e-9 * scale:
        return None
    return sol.p1_w, sol.p2_w, sol.dp_total_w


def _freeze_mutual(state: AllocationState, n, k1, r1, r2, k2,
                   gains: PairGains, p1_f, p2_f, p1i, n1):
    """Freeze an accepted mutual pair and re-balance both sole sets."""
    s2 = state.sigma2_w
    sc_bw = state.sc_bw_hz
    rate1_new = float(rate_single(p1_f, gains.g11, s2, sc_bw))
    rate1_old = float(rate_single(p1i, gains.g11, s2, sc_bw))
    rate2 = float(rate_single(p2_f, gains.g22, s2, sc_bw))

    state._remove_sole(k1, n)
    if len(state.sole[k1]) > 0 and abs(rate1_new - rate1_old) > 0:
        state.waterline[k1] = waterline_rate_shift(
            state.waterline[k1], rate1_old - rate1_new,
            len(state.sole[k1]), sc_bw)
    state.frozen_rate[k1] += rate1_new
    state.frozen_power[k1] += p1_f

    n2 = len(state.sole[k2])
    state.waterline[k2] = waterline_rate_shift(
        state.waterline[k2], -rate2, n2, sc_bw,
        sole_gains=state.sole_gains(k2), sigma2_w=s2)
    state.frozen_rate[k2] += rate2
    state.frozen_power[k2] += p2_f

    del state.first[n]
    state.mutuals.append(MutualPair(n, k1, r1, p1_f, rate1_new, p1i,
                                    k2, r2, p2_f, rate2))


# -- dispatch -----------------------------------------------------------------

def _finalize(state: AllocationState, algorithm: str,
              warnings=()) -> AllocationResult:
    P = state.power_tensor()
    per_user = P.sum(axis=(1, 2))
    S = state.num_subcarriers
    occ = np.zeros(S, dtype=int)
    for k in range(state.num_users):
        for n, _, _ in state.sole[k]:
            occ[n] += 1
    # subcarriers shared by two floating users (uc benchmark) count as
    # mutually multiplexed alongside the frozen pairs
    mut = len(state.mutuals) + int((occ == 2).sum())
    sing = len(state.singles)
    return AllocationResult(
        algorithm=algorithm,
        total_power_w=float(per_user.sum()),
        per_user_power_w=per_user,
        power_w=P,
        nonmux_sc=S - mut - sing,
        mutsic_sc=mut,
        singsic_sc=sing,
        state=state,
        warnings=tuple(warnings),
    )


def run_algorithm(channel: ChannelTensor,
                  config: AlgorithmConfig) -> AllocationResult:
    """Run one complete allocation algorithm on a channel realization."""
    state = AllocationState(channel, config)
    worst_best_h(state)
    oma_phase(state)
    alg = config.algorithm
    warnings = []

    if alg in ("SRRH", "NOMA-CAS"):
        single_sic_pairing(state, "ftpa")
    elif alg in ("SRRH-LPO", "SRRH-OPA"):
        single_sic_pairing(state, "lpo")
    elif alg == "MutSIC-UC":
        uc_extension_phase(state)
    elif alg.startswith("MutSIC-"):
        mutual_sic_pairing(state, alg.split("-", 1)[1].lower())
    elif alg == "MutAndSingSIC":
        mutual_sic_pairing(state, "sopad")
        single_sic_pairing(state, "lpo")

    result = _finalize(state, alg, warnings)
    if alg == "SRRH-OPA":
        opa = optimal_pa.optimal_power_allocation(state)
        if not opa.converged:
            warnings.append("optimal power allocation did not converge; "
                            "keeping waterfilled powers")
            result = _finalize(state, alg, warnings)
        else:
            per_user = opa.power_w.sum(axis=(1, 2))
            result = AllocationResult(
                algorithm=alg,
                total_power_w=float(per_user.sum()),
                per_user_power_w=per_user,
                power_w=opa.power_w,
                nonmux_sc=result.nonmux_sc,
                mutsic_sc=result.mutsic_sc,
                singsic_sc=result.singsic_sc,
                state=state,
                warnings=tuple(warnings),
            )
    return result
