"""Self-contained correctness checks for the CLI `validate` command.

Each check re-derives its expected values from an independent route (dense
linear algebra, exhaustive enumeration, brute-force assignment) and prints one
PASS/FAIL line. The pytest suite runs the same families at full scale; this
module is the quick desk gate.
"""

from __future__ import annotations

import numpy as np

from .assoc import brute_force_assignment, build_benefits, check_epsilon_cs, fra_solve
from .config import SystemConfig
from .irs_opt import (
    ReflectionState,
    build_sfp,
    f1,
    majorizer_value,
    optimize_irs,
    quad_objective,
    random_reflection,
)
from .power import allocate_power, oracle_allocate
from .precode import transmit_power, zf_precoder

__all__ = ["run_all_checks"]


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _check_zf(rng, n=50) -> tuple:
    worst = 0.0
    for _ in range(n):
        K, M = int(rng.integers(1, 6)), int(rng.integers(6, 12))
        H = _crandn(rng, K, M)
        W = zf_precoder(H).W
        worst = max(worst, float(np.max(np.abs(H @ W - np.eye(K)))))
    return worst < 1e-8, f"max |H W - I| = {worst:.2e}"


def _check_quadratic_lift(rng, n=50) -> tuple:
    worst = 0.0
    for _ in range(n):
        N = int(rng.integers(1, 5))
        M = int(rng.integers(N, 9))
        K = N
        H_r = _crandn(rng, K, N)
        G = _crandn(rng, N, M)
        p = rng.uniform(0.5, 2.0, K)
        state = random_reflection(N, 2, rng)
        sfp = build_sfp(H_r, p, G)
        lhs = f1(state, H_r, p, G)
        rhs = quad_objective(state.y_diag, sfp)
        worst = max(worst, abs(lhs - rhs) / lhs)
    return worst < 1e-8, f"max rel. gap = {worst:.2e}"


def _check_majorizer(rng, n=50) -> tuple:
    worst = -np.inf
    eq_worst = 0.0
    for _ in range(n):
        N, K, M = 4, 3, 6
        sfp = build_sfp(_crandn(rng, K, N), rng.uniform(0.5, 2.0, K),
                        _crandn(rng, N, M))
        y = random_reflection(N, 3, rng).y_diag
        yt = random_reflection(N, 3, rng).y_diag
        gap = quad_objective(y, sfp) - majorizer_value(y, yt, sfp)
        worst = max(worst, gap)
        eq_worst = max(eq_worst, abs(quad_objective(yt, sfp)
                                     - majorizer_value(yt, yt, sfp)))
    ok = worst <= 1e-9 and eq_worst <= 1e-9
    return ok, f"max bound violation = {worst:.2e}, equality gap = {eq_worst:.2e}"


def _check_descent(rng, n=10) -> tuple:
    cfg = SystemConfig(S=1, K=4, M=8, N=8, b=2, bs_positions=((0.0, 0.0),))
    worst = -np.inf
    for _ in range(n):
        H_r = _crandn(rng, 4, 8)
        G = _crandn(rng, 8, 8)
        p = rng.uniform(0.5, 2.0, 4)
        _, trace = optimize_irs(H_r, G, p, cfg, rng=rng)
        worst = max(worst, float(np.max(np.diff(trace))) if len(trace) > 1 else 0.0)
    return worst <= 1e-9, f"max objective increase = {worst:.2e}"


def _check_exhaustive_irs(rng, n=10) -> tuple:
    hits = 0
    worst_excess = 0.0
    for _ in range(n):
        N = int(rng.integers(2, 5))
        cfg = SystemConfig(S=1, K=2, M=3, N=N, b=1, T_sfp=50,
                           bs_positions=((0.0, 0.0),))
        H_r = _crandn(rng, 2, N)
        G = _crandn(rng, N, 3)
        p = rng.uniform(0.5, 2.0, 2)
        state, _ = optimize_irs(H_r, G, p, cfg, rng=rng)
        got = f1(state, H_r, p, G)
        best = min(
            f1(ReflectionState(phase_idx=np.array(
                [(code >> e) & 1 for e in range(N)]), b=1), H_r, p, G)
            for code in range(2 ** N)
        )
        if got <= best * (1.0 + 1e-9):
            hits += 1
        worst_excess = max(worst_excess, got / best - 1.0)
    return (hits >= int(0.8 * n) and worst_excess <= 0.25,
            f"exact {hits}/{n}, worst excess {100 * worst_excess:.1f}%")


def _check_water_filling(rng, n=50) -> tuple:
    bad = 0
    gaps = []
    sigma2, P_max = 0.1, 2.0
    for _ in range(n):
        K, M = int(rng.integers(1, 5)), int(rng.integers(5, 9))
        R_min = float(rng.choice([0.0, 1.0]))
        H = _crandn(rng, K, M)
        p = allocate_power(H, P_max, sigma2, R_min)
        floor = sigma2 * (2.0 ** R_min - 1.0)
        if np.any(p < floor - 1e-12):
            bad += 1
        if transmit_power(H, p) > P_max * (1.0 + 1e-6):
            bad += 1
        ref = oracle_allocate(H, P_max, sigma2, R_min)
        obj = np.sum(np.log2(1.0 + p / sigma2))
        obj_ref = np.sum(np.log2(1.0 + ref / sigma2))
        gaps.append((obj_ref - obj) / obj_ref)
    med = float(np.median(gaps))
    return bad == 0 and med <= 0.05, f"violations {bad}, median oracle gap {med:.2%}"


def _check_auction(rng, n=50) -> tuple:
    wrong = 0
    cs_fail = 0
    for _ in range(n):
        S = int(rng.integers(2, 5))
        K = int(rng.integers(S, 11))
        rates = rng.integers(1, 101, (S, K)).astype(float)
        benefits = build_benefits(rates, R_min=0.0, scale=1)
        got = fra_solve(benefits, epsilon=0.2)
        ref = brute_force_assignment(benefits)
        if got.total_benefit(benefits) != ref.total_benefit(benefits):
            wrong += 1
        if not check_epsilon_cs(got, benefits, 0.2):
            cs_fail += 1
    return wrong == 0 and cs_fail == 0, f"suboptimal {wrong}, eps-CS failures {cs_fail}"


def _check_determinism(rng, n=1) -> tuple:
    from .harness import gen_scenario

    cfg = SystemConfig()
    _, ch1, _ = gen_scenario(cfg, scene=3)
    _, ch2, _ = gen_scenario(cfg, scene=3)
    same = (np.array_equal(ch1.G, ch2.G) and np.array_equal(ch1.h_r, ch2.h_r)
            and np.array_equal(ch1.blocked_direct, ch2.blocked_direct))
    return same, "bit-identical regeneration" if same else "regeneration differs"


CHECKS = [
    ("zf-residual", _check_zf),
    ("quadratic-lift-identity", _check_quadratic_lift),
    ("majorizer-bound", _check_majorizer),
    ("mm-descent", _check_descent),
    ("exhaustive-irs", _check_exhaustive_irs),
    ("water-filling", _check_water_filling),
    ("auction-vs-brute-force", _check_auction),
    ("seed-determinism", _check_determinism),
]


def run_all_checks(seed: int = 0, out=print) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        ok, detail = fn(rng)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    return failures
