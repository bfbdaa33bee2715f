"""Jointly optimal power allocation for a fixed subcarrier assignment.

Once an assignment is fixed, total transmit power is a convex function of
the per-subcarrier rate variables, so the first-order (KKT) system fully
characterizes the optimum. Two solvers live here:

* ``optimal_power_allocation`` handles sole subcarriers plus same-RRH
  power-multiplexed pairs (the second user decodes under the first user's
  interference). Equality rate constraints only.
* ``constrained_mutual_pa_oracle`` handles sole subcarriers plus mutual-SIC
  pairs, enumerating every active-set combination of the per-pair power
  windows. Exponential in the pair count, so strictly a reference check
  for small instances.

Both solve a scale-normalized KKT system: stationarity rows are divided by
(1 + lambda) and rate rows by (1 + target), so one absolute residual
tolerance works across users whose marginal powers differ by many orders
of magnitude.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .solver import solve_system

LN2 = math.log(2.0)


class OracleInfeasible(RuntimeError):
    """No active-set branch of the oracle produced a valid KKT point."""


@dataclass(frozen=True)
class OpaResult:
    """Outcome of the joint power optimization."""

    power_w: np.ndarray
    total_power_w: float
    converged: bool
    iterations: int
    residual_norm: float


@dataclass(frozen=True)
class OracleBranch:
    """One active-set combination and its KKT solve outcome."""

    active: tuple
    total_power_w: float
    converged: bool
    feasible: bool


@dataclass(frozen=True)
class OracleResult:
    """Best branch of the constrained mutual-SIC power program."""

    total_power_w: float
    power_w: np.ndarray
    branch: OracleBranch
    branches: tuple


def _collect_slots(state):
    """Flatten a state's assignment into slot and pair index arrays.

    A slot is any subcarrier decoded interference-free by its first user:
    all sole entries plus the first position of every single-SIC pair.
    """
    slots = []      # (user, n, r, gain)
    pairs = []      # (slot_index, user2, gain2)
    for k in range(state.num_users):
        for n, r, g in state.sole[k]:
            slots.append((k, n, r, g))
    for sp in state.singles:
        g1 = float(state.gains[sp.k1, sp.n, sp.r])
        g2 = float(state.gains[sp.k2, sp.n, sp.r])
        pairs.append((len(slots), sp.k2, g2))
        slots.append((sp.k1, sp.n, sp.r, g1))
    return slots, pairs


def optimal_power_allocation(state, tol: float = 1e-8,
                             max_iter: int = 80) -> OpaResult:
    """Minimum-power rates for a fixed sole + single-SIC assignment.

    The rate variables must stay non-negative (a negative rate would mean
    the slot untransmits), so the KKT system is solved with an active-set
    loop: solve the equality system, pin variables that went negative to
    zero, release pins whose multipliers turn infeasible, repeat. Starts
    from the state's realized rates and falls back to the input powers
    (converged=False) if any solve stalls or fails to improve.
    """
    if state.mutuals:
        raise ValueError("assignment contains mutual-SIC pairs")
    s2 = state.sigma2_w
    sc_bw = state.sc_bw_hz
    K = state.num_users
    slots, pairs = _collect_slots(state)
    ns, npair = len(slots), len(pairs)

    slot_user = np.array([s[0] for s in slots], dtype=int)
    slot_u = np.array([s[3] for s in slots]) / s2
    pair_slot = np.array([p[0] for p in pairs], dtype=int)
    pair_user = np.array([p[1] for p in pairs], dtype=int)
    pair_u = np.array([p[2] for p in pairs]) / s2

    q = state.demands / sc_bw

    # start from the realized allocation: x, y are per-subcarrier rates
    p_now = state.power_tensor()
    input_total = float(p_now.sum())
    x0 = np.empty(ns)
    for i, (k, n, r, g) in enumerate(slots):
        x0[i] = math.log2(1.0 + p_now[k, n, r] * g / s2)
    y0 = np.array([sp.rate2_bps / sc_bw for sp in state.singles])

    lam0 = np.zeros(K)
    cnt = np.zeros(K)
    yx = np.zeros(ns)
    if npair:
        yx[pair_slot] = y0
    m_slot = LN2 * 2.0 ** (x0 + yx) / slot_u
    np.add.at(lam0, slot_user, m_slot)
    np.add.at(cnt, slot_user, 1.0)
    if npair:
        m_pair = LN2 * 2.0 ** y0 * ((2.0 ** x0[pair_slot] - 1.0)
                                    / slot_u[pair_slot] + 1.0 / pair_u)
        np.add.at(lam0, pair_user, m_pair)
        np.add.at(cnt, pair_user, 1.0)
    lam0 /= np.maximum(cnt, 1.0)

    def make_residual(pin_x, pin_y):
        def residual(z):
            # exploratory newton steps can overflow the exponentials; the
            # resulting inf/nan rows are rejected by the line search
            with np.errstate(over="ignore", invalid="ignore"):
                x = z[:ns]
                y = z[ns:ns + npair]
                lam = z[ns + npair:]
                ysl = np.zeros(ns)
                if npair:
                    ysl[pair_slot] = y
                f_slot = (LN2 * 2.0 ** (x + ysl) / slot_u
                          - lam[slot_user]) \
                    / (1.0 + np.abs(lam[slot_user]))
                f_slot = np.where(pin_x, x, f_slot)
                rates = np.bincount(slot_user, weights=x, minlength=K)
                if npair:
                    f_pair = (LN2 * 2.0 ** y
                              * ((2.0 ** x[pair_slot] - 1.0)
                                 / slot_u[pair_slot]
                                 + 1.0 / pair_u) - lam[pair_user]) \
                        / (1.0 + np.abs(lam[pair_user]))
                    f_pair = np.where(pin_y, y, f_pair)
                    rates = rates + np.bincount(pair_user, weights=y,
                                                minlength=K)
                else:
                    f_pair = np.zeros(0)
                f_rate = (rates - q) / (1.0 + q)
                return np.concatenate([f_slot, f_pair, f_rate])
        return residual

    pin_x = np.zeros(ns, dtype=bool)
    pin_y = np.zeros(npair, dtype=bool)
    z0 = np.concatenate([x0, y0, lam0])
    report = None
    for _ in range(2 + ns + npair):
        report = solve_system(make_residual(pin_x, pin_y), z0, tol=tol,
                              max_iter=max_iter)
        if not report.converged:
            return OpaResult(p_now, input_total, False, report.iterations,
                             report.residual_norm)
        z = report.solution
        x, y, lam = z[:ns], z[ns:ns + npair], z[ns + npair:]
        neg_x = ~pin_x & (x < -1e-9)
        neg_y = ~pin_y & (y < -1e-9)
        if neg_x.any() or neg_y.any():
            pin_x |= neg_x
            pin_y |= neg_y
            z0 = z.copy()
            z0[:ns][pin_x] = 0.0
            z0[ns:ns + npair][pin_y] = 0.0
            continue
        # dual feasibility: a pinned slot must not be cheaper than the
        # user's marginal power per bit, else it re-enters the basis
        ysl = np.zeros(ns)
        if npair:
            ysl[pair_slot] = y
        eta_x = LN2 * 2.0 ** (x + ysl) / slot_u - lam[slot_user]
        eta_y = (LN2 * 2.0 ** y * ((2.0 ** x[pair_slot] - 1.0)
                                   / slot_u[pair_slot] + 1.0 / pair_u)
                 - lam[pair_user]) if npair else np.zeros(0)
        tol_eta = 1e-9 * (1.0 + np.abs(lam))
        bad_x = pin_x & (eta_x < -tol_eta[slot_user])
        bad_y = pin_y & (eta_y < -tol_eta[pair_user]) if npair \
            else np.zeros(0, dtype=bool)
        if bad_x.any() or bad_y.any():
            # release the single worst pin to avoid add/release cycling
            cands = [(eta_x[i], "x", i) for i in np.flatnonzero(bad_x)]
            cands += [(eta_y[j], "y", j) for j in np.flatnonzero(bad_y)]
            _, kind, idx = min(cands)
            if kind == "x":
                pin_x[idx] = False
            else:
                pin_y[idx] = False
            z0 = z.copy()
            continue
        break
    else:
        return OpaResult(p_now, input_total, False, report.iterations,
                         report.residual_norm)

    P = np.zeros_like(state.gains)
    p1 = np.where(pin_x, 0.0, (2.0 ** x - 1.0) / slot_u)
    for i, (k, n, r, g) in enumerate(slots):
        P[k, n, r] = p1[i]
    for j, sp in enumerate(state.singles):
        i = pair_slot[j]
        P[sp.k2, sp.n, sp.r] = 0.0 if pin_y[j] else \
            (2.0 ** y[j] - 1.0) * (p1[i] + 1.0 / pair_u[j])
    total = float(P.sum())
    if total > input_total * (1.0 + 1e-9) + 1e-15:
        # a stationary point that does not improve the start is not the
        # optimum of this convex program; keep the input allocation
        return OpaResult(p_now, input_total, False, report.iterations,
                         report.residual_norm)
    return OpaResult(P, total, True, report.iterations,
                     report.residual_norm)


def opa_kkt_residual(state, result: OpaResult) -> float:
    """Normalized KKT residual of an OpaResult, recomputed from scratch.

    Rebuilds rates from the result's power tensor and restores multipliers
    from per-user mean marginals over the transmitting slots. Slots at zero
    power are treated as pinned: they contribute their dual-infeasibility
    max(0, lambda - marginal at zero) instead of a stationarity row.
    """
    s2 = state.sigma2_w
    slots, pairs = _collect_slots(state)
    K = state.num_users
    P = result.power_w
    x = np.array([math.log2(1.0 + P[k, n, r] * g / s2)
                  for (k, n, r, g) in slots])
    pair_of_slot = {p[0]: j for j, p in enumerate(pairs)}
    y = np.empty(len(pairs))
    marg_pair = np.empty(len(pairs))
    for j, (i, k2, g2) in enumerate(pairs):
        k1, n, r, g1 = slots[i]
        y[j] = math.log2(1.0 + P[k2, n, r] * g2
                         / (P[k1, n, r] * g2 + s2))
        marg_pair[j] = LN2 * 2.0 ** y[j] * ((2.0 ** x[i] - 1.0) * s2 / g1
                                            + s2 / g2)
    marg_slot = np.empty(len(slots))
    for i, (k, n, r, g) in enumerate(slots):
        j = pair_of_slot.get(i)
        yv = y[j] if j is not None else 0.0
        marg_slot[i] = LN2 * 2.0 ** (x[i] + yv) * s2 / g

    free_x = x > 1e-12
    free_y = y > 1e-12
    lam = np.zeros(K)
    cnt = np.zeros(K)
    for i, (k, n, r, g) in enumerate(slots):
        if free_x[i]:
            lam[k] += marg_slot[i]
            cnt[k] += 1.0
    for j, (i, k2, g2) in enumerate(pairs):
        if free_y[j]:
            lam[k2] += marg_pair[j]
            cnt[k2] += 1.0
    lam /= np.maximum(cnt, 1.0)

    res = []
    rates = np.zeros(K)
    for i, (k, n, r, g) in enumerate(slots):
        rates[k] += x[i]
        if free_x[i]:
            res.append((marg_slot[i] - lam[k]) / (1.0 + abs(lam[k])))
        else:
            res.append(max(0.0, lam[k] - marg_slot[i])
                       / (1.0 + abs(lam[k])))
    for j, (i, k2, g2) in enumerate(pairs):
        rates[k2] += y[j]
        if free_y[j]:
            res.append((marg_pair[j] - lam[k2]) / (1.0 + abs(lam[k2])))
        else:
            res.append(max(0.0, lam[k2] - marg_pair[j])
                       / (1.0 + abs(lam[k2])))
    q = state.demands / state.sc_bw_hz
    res.extend(((rates - q) / (1.0 + q)).tolist())
    return float(np.max(np.abs(res)))


# -- mutual-SIC oracle ---------------------------------------------------------

def constrained_mutual_pa_oracle(state, tol: float = 1e-9) -> OracleResult:
    """Reference optimum for a fixed sole + mutual-SIC assignment.

    Enumerates all 3^m combinations of {inactive, lower edge, upper edge}
    for the m per-pair power windows, solves each branch's equality KKT
    system, keeps branches whose inactive constraints hold and whose
    multipliers are non-negative, and returns the cheapest. Intended for
    small instances only.
    """
    if state.singles:
        raise ValueError("oracle does not handle same-RRH pairs")
    s2 = state.sigma2_w
    sc_bw = state.sc_bw_hz
    K = state.num_users
    soles = []
    for k in range(state.num_users):
        for n, r, g in state.sole[k]:
            soles.append((k, n, r, g))
    mp = state.mutuals
    m = len(mp)
    ns = len(soles)

    sole_user = np.array([s[0] for s in soles], dtype=int)
    sole_u = np.array([s[3] for s in soles]) / s2
    G = state.gains
    g11 = np.array([float(G[p.k1, p.n, p.r1]) for p in mp])
    g12 = np.array([float(G[p.k1, p.n, p.r2]) for p in mp])
    g21 = np.array([float(G[p.k2, p.n, p.r1]) for p in mp])
    g22 = np.array([float(G[p.k2, p.n, p.r2]) for p in mp])
    u11 = g11 / s2
    u22 = g22 / s2
    lo_ratio = g11 / g12
    hi_ratio = g21 / g22
    user1 = np.array([p.k1 for p in mp], dtype=int)
    user2 = np.array([p.k2 for p in mp], dtype=int)

    q = state.demands / sc_bw
    x0 = np.array([math.log2(max(state.waterline[k] * g / s2, 1.0))
                   for (k, n, r, g) in soles])
    a0 = np.array([p.rate1_bps / sc_bw for p in mp])
    b0 = np.array([p.rate2_bps / sc_bw for p in mp])

    def powers_of(x, a, b):
        return (2.0 ** x - 1.0) / sole_u, (2.0 ** a - 1.0) / u11, \
            (2.0 ** b - 1.0) / u22

    def solve_branch(active):
        act_idx = [j for j in range(m) if active[j] != 0]
        na = len(act_idx)
        act_arr = np.array(active, dtype=int) if m else np.zeros(0, int)
        # constraint gradients wrt (p1, p2): lo edge (lo_ratio, -1),
        # hi edge (-hi_ratio, 1); inactive pairs carry nu = 0
        c1 = np.where(act_arr == 1, lo_ratio, -hi_ratio)
        c2 = np.where(act_arr == 1, -1.0, 1.0)

        def residual(z):
            # exploratory newton steps can overflow the exponentials; the
            # resulting inf/nan rows are rejected by the line search
            with np.errstate(over="ignore", invalid="ignore"):
                x = z[:ns]
                a = z[ns:ns + m]
                b = z[ns + m:ns + 2 * m]
                lam = z[ns + 2 * m:ns + 2 * m + K]
                nu_full = np.zeros(m)
                if na:
                    nu_full[act_idx] = z[ns + 2 * m + K:]
                d_sole = LN2 * 2.0 ** x / sole_u
                da = LN2 * 2.0 ** a / u11
                db = LN2 * 2.0 ** b / u22
                f_sole = (d_sole - lam[sole_user]) \
                    / (1.0 + np.abs(lam[sole_user]))
                f_a = (da * (1.0 + nu_full * c1) - lam[user1]) \
                    / (1.0 + np.abs(lam[user1]))
                f_b = (db * (1.0 + nu_full * c2) - lam[user2]) \
                    / (1.0 + np.abs(lam[user2]))
                rates = np.bincount(sole_user, weights=x, minlength=K)
                if m:
                    rates = rates \
                        + np.bincount(user1, weights=a, minlength=K) \
                        + np.bincount(user2, weights=b, minlength=K)
                f_rate = (rates - q) / (1.0 + q)
                parts = [f_sole, f_a, f_b, f_rate]
                if na:
                    p1 = (2.0 ** a - 1.0) / u11
                    p2 = (2.0 ** b - 1.0) / u22
                    f_act = []
                    for j in act_idx:
                        scale = abs(p1[j]) * max(lo_ratio[j], hi_ratio[j]) \
                            + abs(p2[j]) + 1e-300
                        if active[j] == 1:
                            f_act.append((p1[j] * lo_ratio[j] - p2[j])
                                         / scale)
                        else:
                            f_act.append((p2[j] - p1[j] * hi_ratio[j])
                                         / scale)
                    parts.append(np.array(f_act))
                return np.concatenate(parts)

        lam0 = np.full(K, LN2)
        for k in range(K):
            vals = [LN2 * 2.0 ** x0[i] / sole_u[i]
                    for i in range(ns) if sole_user[i] == k]
            vals += [LN2 * 2.0 ** a0[j] / u11[j]
                     for j in range(m) if user1[j] == k]
            vals += [LN2 * 2.0 ** b0[j] / u22[j]
                     for j in range(m) if user2[j] == k]
            if vals:
                lam0[k] = float(np.mean(vals))
        z0 = np.concatenate([x0, a0, b0, lam0, np.zeros(na)])
        report = solve_system(residual, z0, tol=tol, max_iter=120)
        if not report.converged:
            return None
        z = report.solution
        x = z[:ns]
        a = z[ns:ns + m]
        b = z[ns + m:ns + 2 * m]
        nu = z[ns + 2 * m + K:]
        p_sole, p1, p2 = powers_of(x, a, b)
        if (p_sole < -1e-12).any() or (p1 < -1e-12).any() \
                or (p2 < -1e-12).any():
            return None
        # inactive window sides must hold, multipliers must be dual-feasible
        slack = 1e-7
        for j in range(m):
            wscale = p1[j] * max(lo_ratio[j], hi_ratio[j]) + p2[j] + 1e-300
            if active[j] != 1 and \
                    p1[j] * lo_ratio[j] - p2[j] > slack * wscale:
                return None
            if active[j] != 2 and \
                    p2[j] - p1[j] * hi_ratio[j] > slack * wscale:
                return None
        if na and (nu < -1e-7).any():
            return None
        total = float(p_sole.sum() + p1.sum() + p2.sum())
        P = np.zeros_like(state.gains)
        for i, (k, n, r, g) in enumerate(soles):
            P[k, n, r] = p_sole[i]
        for j, pair in enumerate(mp):
            P[pair.k1, pair.n, pair.r1] = p1[j]
            P[pair.k2, pair.n, pair.r2] = p2[j]
        return total, P

    branches = []
    best = None
    for active in itertools.product((0, 1, 2), repeat=m):
        sol = solve_branch(active)
        if sol is None:
            branches.append(OracleBranch(active, math.inf, False, False))
            continue
        total, P = sol
        branches.append(OracleBranch(active, total, True, True))
        if best is None or total < best[0]:
            best = (total, P, branches[-1])
    if best is None:
        raise OracleInfeasible("no active-set branch converged")
    return OracleResult(best[0], best[1], best[2], tuple(branches))
