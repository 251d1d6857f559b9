"""User association via a forward-reverse auction on integer benefits.

The forward phase lets every BS bid for its best-value user until each BS
holds one; the reverse phase attaches the remaining users, raising the chosen
BS's profit by delta = min(mu - pi_s, zeta - upsilon + eps). Whenever a BS's
profit rises, its incumbent users are released back into the pool: that is
what keeps the complementary-slackness certificate (price + profit equals the
benefit on every assigned pair, extra-load BSs sit at the maximum profit mu)
intact, and the certificate in turn guarantees the result is within S*eps of
optimal, hence exactly optimal for integer benefits with eps < 1/S.

A brute-force enumerator over all covering assignments serves as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssociationInfeasibleError, OracleTooLargeError

__all__ = [
    "BenefitMatrix",
    "Association",
    "AuctionState",
    "build_benefits",
    "forward_auction",
    "reverse_auction",
    "fra_solve",
    "brute_force_assignment",
    "check_epsilon_cs",
]

# Default cap on enumerated maps in the brute-force oracle (5^12 fits).
_ORACLE_MAX_MAPS = 2 ** 28
_ORACLE_CHUNK = 1 << 18


@dataclass(frozen=True)
class BenefitMatrix:
    """Integer S x K benefits with the feasibility mask D."""

    values: np.ndarray     # int64, round(scale * R / R_min)
    feasible: np.ndarray   # bool, True for pairs in D
    scale: int

    def __post_init__(self):
        vals = np.asarray(self.values)
        feas = np.asarray(self.feasible, dtype=bool)
        if vals.shape != feas.shape or vals.ndim != 2:
            raise AssociationInfeasibleError("benefit/feasibility shape mismatch")
        if np.any(vals[feas] < 0):
            raise AssociationInfeasibleError("negative benefit in D")
        users_short = np.flatnonzero(~feas.any(axis=0))
        if users_short.size:
            raise AssociationInfeasibleError(
                f"users {users_short.tolist()} have no feasible BS"
            )
        bs_short = np.flatnonzero(~feas.any(axis=1))
        if bs_short.size:
            raise AssociationInfeasibleError(
                f"BSs {bs_short.tolist()} have no feasible user"
            )

    @property
    def S(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Association:
    """Total user -> BS assignment plus the auction duals."""

    assignment: dict       # user -> BS
    pi: np.ndarray         # per-BS profit
    q: np.ndarray          # per-user price
    mu: float              # source-node price, max profit
    epsilon: float

    def served_by(self, s: int) -> list:
        return sorted(k for k, b in self.assignment.items() if b == s)

    def counts(self, S: int) -> np.ndarray:
        c = np.zeros(S, dtype=int)
        for b in self.assignment.values():
            c[b] += 1
        return c

    def total_benefit(self, benefits: BenefitMatrix) -> int:
        return int(sum(benefits.values[s, k] for k, s in self.assignment.items()))


@dataclass
class AuctionState:
    """Mutable auction bookkeeping shared by the two phases."""

    owner: np.ndarray      # user -> BS, -1 while unassigned
    pi: np.ndarray
    q: np.ndarray
    mu: float = 0.0


def build_benefits(rates: np.ndarray, R_min: float, scale: int) -> BenefitMatrix:
    """Integer benefits round(scale * R / R_min); pairs with R < R_min leave D.

    With R_min = 0 every pair is feasible and the denominator falls back to
    1 bit/s/Hz so the integers stay moderate.
    """
    rates = np.asarray(rates, dtype=float)
    if scale < 1:
        raise AssociationInfeasibleError(f"benefit scale must be >= 1, got {scale}")
    if R_min > 0:
        feasible = rates >= R_min
        denom = R_min
    else:
        feasible = np.ones_like(rates, dtype=bool)
        denom = 1.0
    values = np.rint(scale * rates / denom).astype(np.int64)
    values[~feasible] = 0
    return BenefitMatrix(values=values, feasible=feasible, scale=int(scale))


def _second_best_floor(benefits: BenefitMatrix) -> float:
    # finite stand-in for the -inf second-best value over an empty candidate set
    return -4.0 * (float(benefits.values.max()) + 1.0)


def forward_auction(state: AuctionState, benefits: BenefitMatrix,
                    epsilon: float) -> AuctionState:
    """Bid until every BS holds at least one user; prices only rise."""
    b = benefits.values.astype(float)
    neg = _second_best_floor(benefits)
    while True:
        counts = np.bincount(state.owner[state.owner >= 0],
                             minlength=benefits.S)
        idle = np.flatnonzero(counts == 0)
        if idle.size == 0:
            break
        s = int(idle[0])
        vals = np.where(benefits.feasible[s], b[s] - state.q, -np.inf)
        k_s = int(np.argmax(vals))
        others = vals.copy()
        others[k_s] = -np.inf
        ups = float(np.max(others))
        if not np.isfinite(ups):
            ups = neg
        state.q[k_s] = b[s, k_s] - ups + epsilon   # the winning bid
        state.owner[k_s] = s                       # displaces any previous pair
        state.pi[s] = ups - epsilon
        state.mu = float(np.max(state.pi))
    return state


def reverse_auction(state: AuctionState, benefits: BenefitMatrix,
                    epsilon: float) -> AuctionState:
    """Attach the remaining users; a profit rise releases incumbent users."""
    b = benefits.values.astype(float)
    neg = _second_best_floor(benefits)
    pool = [int(k) for k in np.flatnonzero(state.owner < 0)]
    while pool:
        k = pool.pop(0)
        vals = np.where(benefits.feasible[:, k], b[:, k] - state.pi, -np.inf)
        s_k = int(np.argmax(vals))
        zeta = float(vals[s_k])
        others = vals.copy()
        others[s_k] = -np.inf
        ups = float(np.max(others))
        if not np.isfinite(ups):
            ups = neg
        delta = min(state.mu - state.pi[s_k], zeta - ups + epsilon)
        if delta > 0:
            released = np.flatnonzero(state.owner == s_k)
            state.owner[released] = -1
            pool.extend(int(r) for r in released)
        state.owner[k] = s_k
        state.pi[s_k] += delta
        state.q[k] = zeta - delta
    return state


def fra_solve(benefits: BenefitMatrix, epsilon: float) -> Association:
    """Forward then reverse auction; optimal for integer benefits, eps < 1/S."""
    if epsilon <= 0:
        raise AssociationInfeasibleError("epsilon must be positive")
    state = AuctionState(
        owner=np.full(benefits.K, -1, dtype=int),
        pi=np.zeros(benefits.S),
        q=np.zeros(benefits.K),
    )
    state = forward_auction(state, benefits, epsilon)
    state = reverse_auction(state, benefits, epsilon)
    assignment = {int(k): int(state.owner[k]) for k in range(benefits.K)}
    return Association(assignment=assignment, pi=state.pi.copy(),
                       q=state.q.copy(), mu=state.mu, epsilon=epsilon)


def brute_force_assignment(benefits: BenefitMatrix) -> Association:
    """Exhaustive maximum over all user -> BS maps covering every BS.

    Enumerates the S^K maps in lexicographic order (chunked), so the returned
    maximizer is the lexicographically smallest one. Duals are left at zero.
    """
    S, K = benefits.S, benefits.K
    n_maps = S ** K
    if n_maps > _ORACLE_MAX_MAPS:
        raise OracleTooLargeError(
            f"{S}^{K} = {n_maps} maps exceeds the enumeration bound"
        )
    vals = np.where(benefits.feasible, benefits.values.astype(np.int64),
                    np.int64(-(1 << 40)))
    best_total = None
    best_map = None
    radix = S ** np.arange(K - 1, -1, -1, dtype=np.int64)
    for start in range(0, n_maps, _ORACLE_CHUNK):
        stop = min(start + _ORACLE_CHUNK, n_maps)
        codes = np.arange(start, stop, dtype=np.int64)
        maps = (codes[:, None] // radix[None, :]) % S     # rows are user->BS maps
        totals = vals[maps, np.arange(K)[None, :]].sum(axis=1)
        covered = np.zeros(len(codes), dtype=np.int64)
        for k in range(K):
            covered |= np.int64(1) << maps[:, k]
        full = np.int64((1 << S) - 1)
        totals = np.where(covered == full, totals, np.int64(-(1 << 60)))
        j = int(np.argmax(totals))
        if best_total is None or totals[j] > best_total:
            best_total = int(totals[j])
            best_map = maps[j].copy()
    if best_total is None or best_total < 0:
        raise AssociationInfeasibleError("no covering assignment inside D")
    assignment = {k: int(best_map[k]) for k in range(K)}
    return Association(assignment=assignment, pi=np.zeros(S), q=np.zeros(K),
                       mu=0.0, epsilon=0.0)


def check_epsilon_cs(assoc: Association, benefits: BenefitMatrix,
                     epsilon: float, tol: float = 1e-9) -> bool:
    """Certificate check: (a) pi_s + q_k >= benefit - eps on D, (b) equality on
    assigned pairs, (c) multi-user BSs sit at the maximum profit."""
    b = benefits.values.astype(float)
    pi, q = assoc.pi, assoc.q
    for s in range(benefits.S):
        for k in range(benefits.K):
            if benefits.feasible[s, k] and pi[s] + q[k] < b[s, k] - epsilon - tol:
                return False
    for k, s in assoc.assignment.items():
        if abs(pi[s] + q[k] - b[s, k]) > tol:
            return False
    counts = assoc.counts(benefits.S)
    top = float(np.max(pi))
    for s in range(benefits.S):
        if counts[s] > 1 and abs(pi[s] - top) > tol:
            return False
    return True
