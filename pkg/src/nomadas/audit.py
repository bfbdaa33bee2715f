"""Post-hoc invariant checks on finished allocations.

Every check recomputes from the result's power tensor and the channel
gains, not from the allocator's internal bookkeeping, so a bookkeeping bug
cannot hide itself. audit_result returns human-readable violation strings;
an empty list means the allocation is internally consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocators import AlgorithmConfig, AllocationResult, run_algorithm
from .channel import generate_channel
from .scenario import Scenario
from .waterfill import (InfeasibleWaterline, rate_second, rate_single,
                        waterline_from_rate)

RATE_RTOL = 1e-6
WINDOW_RTOL = 1e-12


def _role_map(state):
    """Subcarrier occupancy: n -> list of (role, user, rrh, gain)."""
    roles = {}
    G = state.gains
    for k in range(state.num_users):
        for n, r, g in state.sole[k]:
            roles.setdefault(n, []).append(("sole", k, r, g))
    for sp in state.singles:
        g1 = float(G[sp.k1, sp.n, sp.r])
        g2 = float(G[sp.k2, sp.n, sp.r])
        roles.setdefault(sp.n, []).append(("first", sp.k1, sp.r, g1))
        roles.setdefault(sp.n, []).append(("second", sp.k2, sp.r, g2))
    for mp in state.mutuals:
        roles.setdefault(mp.n, []).append(
            ("mut1", mp.k1, mp.r1, float(G[mp.k1, mp.n, mp.r1])))
        roles.setdefault(mp.n, []).append(
            ("mut2", mp.k2, mp.r2, float(G[mp.k2, mp.n, mp.r2])))
    return roles


def audit_result(result: AllocationResult) -> list[str]:
    """All invariant violations of one allocation, empty when clean."""
    state = result.state
    alg = result.algorithm
    s2 = state.sigma2_w
    sc_bw = state.sc_bw_hz
    P = result.power_w
    v = []

    # occupancy: at most two users per subcarrier, counters consistent
    roles = _role_map(state)
    shared_sole = 0
    for n, entries in roles.items():
        if len(entries) > 2:
            v.append(f"subcarrier {n} carries {len(entries)} users")
        if len(entries) == 2 and {e[0] for e in entries} == {"sole"}:
            # only the unconstrained benchmark may double-book a
            # subcarrier with two floating users, and only across RRHs
            if result.algorithm != "MutSIC-UC":
                v.append(f"subcarrier {n} has two sole owners")
            elif entries[0][1] == entries[1][1]:
                v.append(f"subcarrier {n} shared by one user twice")
            elif entries[0][2] == entries[1][2]:
                v.append(f"subcarrier {n} shared within one RRH")
            else:
                shared_sole += 1
    S = state.num_subcarriers
    n_mut = len(state.mutuals) + shared_sole
    if result.mutsic_sc != n_mut \
            or result.singsic_sc != len(state.singles) \
            or result.nonmux_sc != S - n_mut - len(state.singles):
        v.append("subcarrier counters disagree with pair records")

    # power appears only on assigned slots and is never negative
    mask = np.zeros(P.shape, dtype=bool)
    for n, entries in roles.items():
        for _, k, r, _g in entries:
            mask[k, n, r] = True
    if np.count_nonzero(P[~mask]):
        v.append("power on an unassigned (user, subcarrier, RRH) slot")
    if P.min() < -1e-15:
        v.append(f"negative transmit power {P.min():.3e}")
        # keep auditing the rest on a clamped tensor instead of letting
        # the rate helpers reject the corrupt values
        P = np.maximum(P, 0.0)

    # every user's demand is met exactly, recomputed from the tensor
    rates = np.zeros(state.num_users)
    for n, entries in roles.items():
        by_role = {e[0]: e for e in entries}
        if "first" in by_role:
            _, k1, r, g1 = by_role["first"]
            _, k2, _, g2 = by_role["second"]
            rates[k1] += rate_single(P[k1, n, r], g1, s2, sc_bw)
            rates[k2] += rate_second(P[k2, n, r], P[k1, n, r], g2, s2,
                                     sc_bw)
        else:
            for role, k, r, g in entries:
                rates[k] += rate_single(P[k, n, r], g, s2, sc_bw)
    for k in range(state.num_users):
        if abs(rates[k] - state.demands[k]) > RATE_RTOL * state.demands[k]:
            v.append(f"user {k} rate {rates[k]:.6e} misses demand "
                     f"{state.demands[k]:.6e}")

    # same-RRH pairs: the second user must be the weaker and stronger-powered
    for sp in state.singles:
        g1 = float(state.gains[sp.k1, sp.n, sp.r])
        g2 = float(state.gains[sp.k2, sp.n, sp.r])
        if not g2 < g1:
            v.append(f"pair on {sp.n}: second user's gain is not lower")
        if alg != "SRRH-OPA":
            p1, p2 = P[sp.k1, sp.n, sp.r], P[sp.k2, sp.n, sp.r]
            if p2 < p1 * (1.0 - WINDOW_RTOL) - 1e-15:
                v.append(f"pair on {sp.n}: p2 {p2:.3e} below p1 {p1:.3e}")

    # mutual pairs: power window and exact decodability margins
    if alg != "MutSIC-UC":
        G = state.gains
        for mp in state.mutuals:
            g11 = float(G[mp.k1, mp.n, mp.r1])
            g12 = float(G[mp.k1, mp.n, mp.r2])
            g21 = float(G[mp.k2, mp.n, mp.r1])
            g22 = float(G[mp.k2, mp.n, mp.r2])
            p1 = float(P[mp.k1, mp.n, mp.r1])
            p2 = float(P[mp.k2, mp.n, mp.r2])
            lo = p1 * g11 / g12
            hi = p1 * g21 / g22
            if not (lo * (1.0 - WINDOW_RTOL) <= p2
                    <= hi * (1.0 + WINDOW_RTOL)):
                v.append(f"mutual pair on {mp.n}: p2 {p2:.3e} outside "
                         f"[{lo:.3e}, {hi:.3e}]")
            cross = g12 * g21 - g22 * g11
            xy = p1 * p2 * cross + s2 * p2 * (g12 - g22)
            zt = p1 * p2 * cross + s2 * p1 * (g21 - g11)
            scale = p1 * p2 * (g12 * g21 + g22 * g11) \
                + s2 * (p2 * (g12 + g22) + p1 * (g21 + g11))
            if xy < -1e-9 * scale or zt < -1e-9 * scale:
                v.append(f"mutual pair on {mp.n}: decode margin negative")

    # floating sole powers must sit on a waterline that meets the residual
    # demand exactly (not meaningful once powers were re-optimized)
    if alg != "SRRH-OPA":
        for k in range(state.num_users):
            if not state.sole[k]:
                continue
            gains = state.sole_gains(k)
            want = state.sole_rate_bps(k)
            try:
                w_expect = waterline_from_rate(gains, want, s2, sc_bw)
            except InfeasibleWaterline:
                v.append(f"user {k}: residual demand infeasible on its "
                         f"sole set")
                continue
            w = state.waterline[k]
            if abs(w - w_expect) > 1e-9 * max(w_expect, w):
                v.append(f"user {k}: waterline {w:.6e} != recomputed "
                         f"{w_expect:.6e}")

    # each accepted greedy step must realize its predicted saving
    rho = state.config.rho_w
    for rec in state.log:
        if rec.phase == "wbh" or not rec.accepted:
            continue
        if not rec.predicted_dp_w < -rho:
            v.append(f"{rec.phase} step on {rec.subcarrier}: predicted "
                     f"saving {rec.predicted_dp_w:.3e} not below -rho")
        realized = rec.total_after_w - rec.total_before_w
        slack = 1e-9 * max(abs(rec.total_before_w), 1.0)
        if realized > -rho + slack:
            v.append(f"{rec.phase} step on {rec.subcarrier}: realized "
                     f"saving {realized:.3e} not below -rho")
        if abs(realized - rec.predicted_dp_w) > \
                1e-6 * max(abs(rec.total_before_w), 1.0):
            v.append(f"{rec.phase} step on {rec.subcarrier}: realized "
                     f"{realized:.3e} != predicted "
                     f"{rec.predicted_dp_w:.3e}")

    # loop budgets: every phase terminates within its structural bound
    for phase, (iters, limit) in state.phase_iterations.items():
        if iters > limit:
            v.append(f"{phase} phase ran {iters} iterations, bound {limit}")

    return v


@dataclass(frozen=True)
class AuditReport:
    """Aggregated outcome of auditing many trials."""

    results_checked: int
    violations: tuple  # (algorithm, trial, message)

    @property
    def ok(self) -> bool:
        return not self.violations


def run_invariant_audit(scenario: Scenario, algorithms, trials: int,
                        base_seed: int = 0) -> AuditReport:
    """Run every algorithm on fresh channel drops and audit each result.

    A crash during allocation counts as a violation of that algorithm.
    """
    bad = []
    checked = 0
    for t in range(trials):
        rng = np.random.default_rng(base_seed ^ t)
        channel = generate_channel(scenario, rng)
        for alg in algorithms:
            checked += 1
            try:
                result = run_algorithm(channel, AlgorithmConfig(alg))
            except Exception as exc:
                bad.append((alg, t, f"allocation crashed: {exc!r}"))
                continue
            for msg in audit_result(result):
                bad.append((alg, t, msg))
    return AuditReport(checked, tuple(bad))
