"""Independent reference implementations used to cross-check closed forms.

Everything here deliberately avoids the closed-form shortcuts under test:
waterlines come from bisection on the monotone rate-of-waterline map, power
deltas from full recomputation of user totals, and the local power optimum
from dense grid search. Slow and simple on purpose.
"""

from __future__ import annotations

import numpy as np


def bisection_waterline(gains, rate_bps, sigma2_w, sc_bw_hz,
                        tol_rel=4e-16, max_iter=300):
    """Waterline meeting rate_bps over the sole set, by pure bisection.

    The total rate sum(sc_bw * log2(w * g / sigma2)) is strictly increasing
    in w, so bisection on w converges unconditionally. Assumes the all-active
    solution (every sole power positive), matching the closed form's domain.
    """
    g = np.asarray(gains, dtype=float)

    def rate_of(w):
        return float(np.sum(sc_bw_hz * np.log2(w * g / sigma2_w)))

    lo = sigma2_w / g.min()        # weakest subcarrier at zero power
    hi = max(2.0 * lo, sigma2_w / g.max() * 2.0 ** (rate_bps / sc_bw_hz))
    while rate_of(hi) < rate_bps:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if rate_of(mid) < rate_bps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol_rel * hi:
            break
    return 0.5 * (lo + hi)


def total_power_at_rate(gains, rate_bps, sigma2_w, sc_bw_hz):
    """Waterfilled total power of a sole set at an exact rate target."""
    g = np.asarray(gains, dtype=float)
    w = bisection_waterline(g, rate_bps, sigma2_w, sc_bw_hz)
    return float(np.sum(w - sigma2_w / g))


def second_user_rate(p2_w, p1_w, gain2, sigma2_w, sc_bw_hz):
    return sc_bw_hz * np.log2(1.0 + p2_w * gain2 / (p1_w * gain2 + sigma2_w))


def pairing_delta_from_scratch(sole_gains, rate_bps, p1_w, gain2, p2_w,
                               sigma2_w, sc_bw_hz):
    """Total-power change of taking one multiplexed subcarrier at p2_w.

    Recomputes the user's sole-set total power before and after offloading
    the second-user rate, both via the bisection waterline.
    """
    before = total_power_at_rate(sole_gains, rate_bps, sigma2_w, sc_bw_hz)
    moved = float(second_user_rate(p2_w, p1_w, gain2, sigma2_w, sc_bw_hz))
    after = total_power_at_rate(sole_gains, rate_bps - moved, sigma2_w,
                                sc_bw_hz)
    return after + p2_w - before


def grid_best_second_power(waterline_w, p1_w, gain2, sigma2_w, n_sole,
                           grid_points=10_000, lo=None):
    """Brute-force minimizer of the pairing delta over p2 >= lo.

    Returns (best_p2, best_delta) over a dense geometric grid from lo
    (default: the first user's power) up to far beyond any plausible
    optimum.
    """
    if lo is None:
        lo = p1_w
    hi = max(10.0 * waterline_w * n_sole, 10.0 * p1_w)
    p2 = np.geomspace(max(lo, 1e-300), hi, grid_points)
    rate2 = second_user_rate(p2, p1_w, gain2, sigma2_w, 1.0)
    w_new = waterline_w * 2.0 ** (-rate2 / n_sole)
    delta = n_sole * (w_new - waterline_w) + p2
    i = int(np.argmin(delta))
    return float(p2[i]), float(delta[i])


def pairing_delta_closed_over_grid(waterline_w, p1_w, gain2, sigma2_w,
                                   n_sole, p2_w):
    """Pairing delta at one p2, same closed accounting the grid uses."""
    rate2 = second_user_rate(p2_w, p1_w, gain2, sigma2_w, 1.0)
    w_new = waterline_w * 2.0 ** (-rate2 / n_sole)
    return float(n_sole * (w_new - waterline_w) + p2_w)


# -- shared random-instance samplers ------------------------------------------

SIGMA2_REF = 6.25e-16   # noise power at the default bandwidth split


def sample_pair_instance(rng, require_window=True, mu=0.01):
    """One random cross-RRH pair candidate in the algorithms' regime.

    Returns a dict with the four gains, both users' waterlines, the
    incumbent's initial power and both sole-set sizes. The gain quadruple
    always passes the cross-product feasibility test; with require_window
    the margined power window is non-degenerate as well.
    """
    from nomadas import PairGains

    s2 = SIGMA2_REF
    while True:
        g11, g12, g21, g22 = 10.0 ** rng.uniform(-11.0, -6.0, 4)
        if g11 * g22 > g21 * g12:
            g12, g21 = g21, g12    # swapping the cross links flips the test
        if require_window and \
                (1.0 + mu) * g11 / g12 > (1.0 - mu) * g21 / g22:
            continue
        gains = PairGains(g11, g12, g21, g22)
        n1 = int(rng.integers(2, 9))
        n2 = int(rng.integers(1, 9))
        w1 = (s2 / g11) * 10.0 ** rng.uniform(0.1, 2.5)
        w2 = (s2 / g22) * 10.0 ** rng.uniform(0.1, 2.5)
        return {"gains": gains, "sigma2_w": s2, "w1": w1, "w2": w2,
                "p1i": w1 - s2 / g11, "n1": n1, "n2": n2, "mu": mu}
