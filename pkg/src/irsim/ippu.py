"""Outer alternating loop: IRS phases -> feasibility gate -> per-BS power ->
user association, iterated until the sum rate stabilizes.

Every BS allocates its budget over the full user population (its hypothetical
all-users ZF split), so each pair (s, k) carries an honest rate for the
association step and the auction objective equals the achieved sum rate. The
reflection step minimizes the transmit power the assisted BS needs for its
positive-power users; if even the optimized reflection cannot fit the budget
the run is declared infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assoc import Association, build_benefits, fra_solve
from .channel import ChannelSet, assemble_channel_matrix
from .config import Geometry, SystemConfig
from .errors import (
    AssociationInfeasibleError,
    DegenerateChannelError,
    QoSInfeasibleError,
    RankDeficientError,
)
from .irs_opt import ReflectionState, f1, feasibility_check, optimize_irs, random_reflection
from .power import allocate_power
from .precode import PowerAllocation, column_costs, rate

__all__ = [
    "IppuResult",
    "ippu",
    "candidate_rates",
    "hypothetical_allocations",
    "nearest_bs_assignment",
    "verify_constraints",
]

_INFEASIBLE_ERRORS = (
    AssociationInfeasibleError,
    DegenerateChannelError,
    QoSInfeasibleError,
    RankDeficientError,
)


@dataclass(frozen=True)
class IppuResult:
    """Final state of one optimization run.

    status is 'converged', 'hit_T_max' or 'infeasible'; on infeasible runs the
    remaining fields hold the last consistent partial state and must not be
    read as a solution. rate_trace has one entry per completed iteration.
    """

    phi: ReflectionState
    powers: PowerAllocation
    assoc: Association
    rate_trace: np.ndarray
    initial_r_sum: float
    iterations: int
    status: str
    r_sum: float
    per_user_rates: np.ndarray


def nearest_bs_assignment(geom: Geometry, cfg: SystemConfig) -> dict:
    """Distance-based association; every BS keeps at least one user."""
    bs = geom.bs_xy()
    users = geom.user_xy()
    dists = np.linalg.norm(users[:, None, :] - bs[None, :, :], axis=2)  # K x S
    assignment = {k: int(np.argmin(dists[k])) for k in range(cfg.K)}
    counts = np.bincount(list(assignment.values()), minlength=cfg.S)
    for s in range(cfg.S):
        if counts[s] > 0:
            continue
        movable = [k for k, b in assignment.items() if counts[b] > 1]
        k_move = min(movable, key=lambda k: (dists[k, s], k))
        counts[assignment[k_move]] -= 1
        assignment[k_move] = s
        counts[s] += 1
    return assignment


def _full_matrix(channels: ChannelSet, s: int, cfg: SystemConfig,
                 phi: ReflectionState) -> np.ndarray:
    return assemble_channel_matrix(s, range(cfg.K), channels, phi.phases,
                                   cfg.irs_assisted_bs)


def _equal_split_powers(channels: ChannelSet, cfg: SystemConfig,
                        phi: ReflectionState) -> PowerAllocation:
    """Equal per-user powers per BS over all K users, scaled onto the budget."""
    per_bs = []
    for s in range(cfg.S):
        H = _full_matrix(channels, s, cfg, phi)
        p = cfg.P_max / float(np.sum(column_costs(H)))
        per_bs.append({k: p for k in range(cfg.K)})
    return PowerAllocation(powers=tuple(per_bs))


def hypothetical_allocations(channels: ChannelSet, cfg: SystemConfig,
                             phi: ReflectionState) -> PowerAllocation:
    """Each BS's budget split over the full user population given `phi`."""
    per_bs = []
    for s in range(cfg.S):
        H = _full_matrix(channels, s, cfg, phi)
        p = allocate_power(H, cfg.P_max, cfg.sigma2, cfg.R_min)
        per_bs.append(dict(enumerate(p.tolist())))
    return PowerAllocation(powers=tuple(per_bs))


def candidate_rates(powers: PowerAllocation, cfg: SystemConfig) -> np.ndarray:
    """S x K rate table log2(1 + p_k^s / sigma^2) from the hypothetical splits."""
    rates = np.zeros((cfg.S, cfg.K))
    for s in range(cfg.S):
        bs_powers = powers.bs_powers(s)
        for k in range(cfg.K):
            rates[s, k] = rate(bs_powers[k] / cfg.sigma2)
    return rates


def _assoc_from_assignment(assignment: dict, cfg: SystemConfig) -> Association:
    return Association(assignment=dict(assignment), pi=np.zeros(cfg.S),
                       q=np.zeros(cfg.K), mu=0.0, epsilon=cfg.epsilon)


def _positive_power_rows(channels: ChannelSet, powers: PowerAllocation,
                         cfg: SystemConfig):
    """BS i's users with positive power; zero-power rows put no demand on the
    reflected link, and the whitening 1/sqrt(p) needs p > 0."""
    i = cfg.irs_assisted_bs
    bs_powers = powers.bs_powers(i)
    users = [k for k in sorted(bs_powers) if bs_powers[k] > 0.0]
    p = np.array([bs_powers[k] for k in users])
    return channels.h_r[users], p


def ippu(channels: ChannelSet, geom: Geometry, cfg: SystemConfig,
         rng: np.random.Generator) -> IppuResult:
    """Run the alternating optimization from a random feasible start."""
    phi = random_reflection(cfg.N, cfg.b, rng)
    assoc = _assoc_from_assignment(nearest_bs_assignment(geom, cfg), cfg)

    def bail(trace, r0: float) -> IppuResult:
        return IppuResult(
            phi=phi, powers=PowerAllocation(powers=tuple({} for _ in range(cfg.S))),
            assoc=assoc, rate_trace=np.asarray(trace), initial_r_sum=r0,
            iterations=len(trace), status="infeasible", r_sum=float("nan"),
            per_user_rates=np.full(cfg.K, np.nan),
        )

    try:
        powers = _equal_split_powers(channels, cfg, phi)
    except _INFEASIBLE_ERRORS:
        return bail([], float("nan"))
    rates = candidate_rates(powers, cfg)
    r_prev = float(sum(rates[s, k] for k, s in assoc.assignment.items()))
    initial_r_sum = r_prev
    trace: list = []
    status = "hit_T_max"

    for _ in range(cfg.T_max):
        try:
            H_r_pos, p_pos = _positive_power_rows(channels, powers, cfg)
            phi, _ = optimize_irs(H_r_pos, channels.G, p_pos, cfg,
                                  init=phi, rng=rng)
            if not feasibility_check(f1(phi, H_r_pos, p_pos, channels.G),
                                     cfg.P_max):
                return bail(trace, initial_r_sum)
            powers = hypothetical_allocations(channels, cfg, phi)
            rates = candidate_rates(powers, cfg)
            benefits = build_benefits(rates, cfg.R_min, cfg.benefit_scale)
            assoc = fra_solve(benefits, cfg.epsilon)
        except _INFEASIBLE_ERRORS:
            return bail(trace, initial_r_sum)
        r_sum = float(sum(rates[s, k] for k, s in assoc.assignment.items()))
        trace.append(r_sum)
        if (r_sum - r_prev) ** 2 <= cfg.xi_tol:
            status = "converged"
            r_prev = r_sum
            break
        r_prev = r_sum

    per_user = np.zeros(cfg.K)
    for k, s in assoc.assignment.items():
        per_user[k] = rates[s, k]
    return IppuResult(
        phi=phi, powers=powers, assoc=assoc, rate_trace=np.asarray(trace),
        initial_r_sum=initial_r_sum, iterations=len(trace), status=status,
        r_sum=float(per_user.sum()), per_user_rates=per_user,
    )


def verify_constraints(result: IppuResult, channels: ChannelSet,
                       cfg: SystemConfig, tol: float = 1e-6) -> dict:
    """Independent check of every constraint at termination.

    The budget is audited under the same model the allocation uses: the
    assigned users' powers weighted by the full-population ZF column costs.
    """
    checks = {}
    grid = cfg.phase_set()
    checks["phases_on_grid"] = bool(
        np.all(np.isclose(result.phi.phases[:, None], grid[None, :],
                          atol=1e-12).any(axis=1))
    )
    checks["qos"] = bool(np.all(result.per_user_rates >= cfg.R_min - 1e-9))
    budget_ok = True
    for s in range(cfg.S):
        H = _full_matrix(channels, s, cfg, result.phi)
        costs = column_costs(H)
        spent = sum(result.powers.bs_powers(s).get(k, 0.0) * costs[k]
                    for k in result.assoc.served_by(s))
        if spent > cfg.P_max * (1.0 + tol):
            budget_ok = False
    checks["power_budget"] = budget_ok
    counts = result.assoc.counts(cfg.S)
    checks["one_bs_per_user"] = len(result.assoc.assignment) == cfg.K
    checks["every_bs_serves"] = bool(np.all(counts >= 1))
    return checks
