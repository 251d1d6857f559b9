"""Zero-forcing precoding, SINR/rate evaluation and transmit-power accounting.

The precoder is the raw Moore-Penrose pseudo-inverse of the stacked channel
(no per-column normalization); the power cost of inverting the channel is
charged by the trace constraint tr(H^+ P H^{+H}) <= P_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficientError

__all__ = [
    "RANK_TOL",
    "Precoder",
    "PowerAllocation",
    "zf_precoder",
    "pinv_full_rank",
    "column_costs",
    "sinr",
    "rate",
    "transmit_power",
    "sum_rate",
]

# Relative singular-value cutoff shared by every rank decision in the package.
RANK_TOL = 1e-10


def pinv_full_rank(H: np.ndarray) -> np.ndarray:
    """Pseudo-inverse of a matrix required to have full row rank.

    Raises RankDeficientError (with the condition estimate) if the smallest
    singular value falls below RANK_TOL times the largest.
    """
    H = np.atleast_2d(np.asarray(H))
    rows, cols = H.shape
    if rows > cols:
        raise RankDeficientError(
            f"more streams ({rows}) than antennas ({cols})", condition=np.inf
        )
    u, s, vh = np.linalg.svd(H, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        cond = np.inf if s[-1] == 0.0 else s[0] / s[-1]
        raise RankDeficientError(
            f"rank-deficient channel ({rows}x{cols}), condition ~ {cond:.3e}",
            condition=cond,
        )
    return (vh.conj().T / s) @ u.conj().T


@dataclass(frozen=True)
class Precoder:
    """ZF precoder W = H^+ together with the channel it inverts."""

    W: np.ndarray        # M x K_s, columns are per-user precoding vectors
    source_H: np.ndarray  # K_s x M


@dataclass(frozen=True)
class PowerAllocation:
    """Per-BS map user -> power (Watts), in the objective's normalized scale."""

    powers: tuple  # length S; entry s is a dict {user: p}

    def bs_powers(self, s: int) -> dict:
        return self.powers[s]

    def total(self) -> float:
        return float(sum(p for per_bs in self.powers for p in per_bs.values()))


def zf_precoder(H: np.ndarray) -> Precoder:
    """Zero-forcing precoder for a full-row-rank K_s x M channel."""
    H = np.atleast_2d(np.asarray(H))
    return Precoder(W=pinv_full_rank(H), source_H=H)


def column_costs(H: np.ndarray) -> np.ndarray:
    """Transmit power per unit allocated power: ||column k of H^+||^2.

    Uses the rank-truncated pseudo-inverse, so the budget of an allocation
    that parks degenerate directions at zero power stays well defined; rank
    enforcement belongs to zf_precoder and the QoS path of allocate_power.
    """
    Hp = np.linalg.pinv(np.atleast_2d(np.asarray(H)), rcond=RANK_TOL)
    return np.sum(np.abs(Hp) ** 2, axis=0)


def sinr(H: np.ndarray, W: np.ndarray, p: np.ndarray, k: int,
         sigma2: float) -> float:
    """General SINR of user k: p_k|h_k w_k|^2 / (sum_{j!=k} p_j|h_k w_j|^2 + noise)."""
    H = np.atleast_2d(np.asarray(H))
    gains = np.abs(H[k] @ W) ** 2          # |h_k w_j|^2 for every j
    signal = p[k] * gains[k]
    interference = float(np.dot(p, gains) - p[k] * gains[k])
    return float(signal / (interference + sigma2))


def rate(gamma: float) -> float:
    """Achievable rate log2(1 + gamma), bit/s/Hz."""
    return float(np.log2(1.0 + gamma))


def transmit_power(H: np.ndarray, p: np.ndarray) -> float:
    """Actual radiated power tr(H^+ P H^{+H}) for diagonal P = diag(p)."""
    return float(np.dot(column_costs(H), np.asarray(p, dtype=float)))


def sum_rate(assignment: dict, powers: PowerAllocation, sigma2: float) -> float:
    """Objective value: sum over assigned (s, k) of log2(1 + p_k^s / sigma^2)."""
    total = 0.0
    for k, s in assignment.items():
        total += rate(powers.bs_powers(s)[k] / sigma2)
    return total
