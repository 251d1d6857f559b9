"""Per-BS power allocation: eigenvalue-shaped water-filling with QoS floors,
plus an independent bisection oracle over the exact constraint set.

allocate_power keeps the closed form's structure (water poured proportionally
to the eigenvalues of H H^H above per-user floors) but pins the water level by
bisection on the exact budget tr(H^+ P H^{+H}) = P_max, so the output is always
feasible. oracle_allocate solves the same problem with the true per-user costs
(KKT-exact for the diagonalizable case) and is used only to measure the gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, QoSInfeasibleError
from .precode import RANK_TOL, column_costs

__all__ = [
    "EigenProfile",
    "eig_profile",
    "water_level",
    "allocate_power",
    "oracle_allocate",
    "qos_floor",
]


@dataclass(frozen=True)
class EigenProfile:
    """Eigenvalues of H H^H in descending order and the count above tolerance."""

    lambdas: np.ndarray
    u: int


def eig_profile(H: np.ndarray) -> EigenProfile:
    """Descending eigenvalues of the Gram matrix; u counts those above RANK_TOL."""
    H = np.atleast_2d(np.asarray(H))
    lam = np.linalg.eigvalsh(H @ H.conj().T)[::-1]
    lam = np.clip(lam, 0.0, None)
    u = int(np.sum(lam > RANK_TOL * lam[0])) if lam[0] > 0 else 0
    return EigenProfile(lambdas=lam, u=u)


def water_level(profile: EigenProfile, P_max: float, sigma2: float,
                R_min: float) -> float:
    """Closed-form Lagrange multiplier over the u usable eigen-directions:

        w = (P_max - sigma2*(2^R_min - 2) * sum_k 1/lambda_k) / u
    """
    if profile.u < 1:
        raise DegenerateChannelError("no usable eigen-directions")
    lam = profile.lambdas[: profile.u]
    return float((P_max - sigma2 * (2.0 ** R_min - 2.0) * np.sum(1.0 / lam))
                 / profile.u)


def qos_floor(sigma2: float, R_min: float) -> float:
    """Minimum per-user power for log2(1 + p/sigma2) >= R_min."""
    return float(sigma2 * (2.0 ** R_min - 1.0))


def _shaped_powers(w: float, lam: np.ndarray, sigma2: float,
                   floor: float) -> np.ndarray:
    """Water level w poured by eigenvalue shape, clipped at the QoS floor."""
    return np.maximum(floor, w * lam - sigma2)


def _fill_level(costs: np.ndarray, lam: np.ndarray, sigma2: float,
                floor: float, P_max: float) -> float:
    """Largest water level whose shaped powers meet the exact budget.

    su(w) = sum_k costs_k * max(floor, w*lam_k - sigma2) is continuous and
    nondecreasing in w, so plain bisection suffices.
    """
    def spent(w):
        return float(np.dot(costs, _shaped_powers(w, lam, sigma2, floor)))

    base = spent(0.0)  # all users at the floor
    if base > P_max * (1.0 + 1e-12):
        raise QoSInfeasibleError(
            f"QoS floors need {base:.6e} W, budget is {P_max:.6e} W",
            required=base, budget=P_max,
        )
    lo = 0.0
    hi = max((P_max + sigma2 * np.sum(costs)) / np.dot(costs, lam), 1.0)
    while spent(hi) < P_max:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spent(mid) <= P_max:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    return lo


def allocate_power(H: np.ndarray, P_max: float, sigma2: float,
                   R_min: float) -> np.ndarray:
    """Optimal-shape power allocation for one BS; returns per-user powers.

    The k-th largest eigenvalue drives the k-th cheapest user (the exact
    correspondence when H H^H is diagonal). Rates satisfy the QoS floor
    exactly and the transmit-power budget is met tightly. Users that land on
    eigen-directions below the rank tolerance get zero power (and zero rate);
    with a positive rate floor such directions are a QoS infeasibility.
    """
    H = np.atleast_2d(np.asarray(H))
    n_users = H.shape[0]
    profile = eig_profile(H)
    if profile.u == 0:
        raise DegenerateChannelError("channel carries no usable direction")
    floor = qos_floor(sigma2, R_min)
    if profile.u < n_users and floor > 0:
        raise QoSInfeasibleError(
            f"rate floor on {n_users - profile.u} degenerate directions "
            f"(channel supports {profile.u} of {n_users} streams)",
            required=floor, budget=0.0,
        )
    lam = profile.lambdas[:n_users]
    costs = column_costs(H)                      # per-user transmit cost
    order = np.argsort(costs, kind="stable")     # cheapest user first
    lam_by_user = np.empty(n_users)
    lam_by_user[order] = lam                     # descending lambda <-> ascending cost
    active = np.zeros(n_users, dtype=bool)
    active[order[: profile.u]] = True
    p = np.zeros(n_users)
    w = _fill_level(costs[active], lam_by_user[active], sigma2, floor, P_max)
    p[active] = _shaped_powers(w, lam_by_user[active], sigma2, floor)
    return p


def oracle_allocate(H: np.ndarray, P_max: float, sigma2: float,
                    R_min: float) -> np.ndarray:
    """Reference solver: exact KKT water-filling on the true per-user costs.

    maximize sum log2(1 + p_k/sigma2)  s.t.  p_k >= floor,
    sum_k costs_k * p_k <= P_max, with costs_k = ||column k of H^+||^2.
    Stationarity gives p_k = max(floor, w/costs_k - sigma2); the level w is
    found by bisection on the budget.
    """
    H = np.atleast_2d(np.asarray(H))
    costs = column_costs(H)
    floor = qos_floor(sigma2, R_min)

    def powers(w):
        return np.maximum(floor, w / costs - sigma2)

    def spent(w):
        return float(np.dot(costs, powers(w)))

    base = spent(0.0)
    if base > P_max * (1.0 + 1e-12):
        raise QoSInfeasibleError(
            f"QoS floors need {base:.6e} W, budget is {P_max:.6e} W",
            required=base, budget=P_max,
        )
    lo = 0.0
    hi = max(P_max + sigma2 * float(np.sum(costs)), 1.0)
    while spent(hi) < P_max:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spent(mid) <= P_max:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    return powers(lo)
