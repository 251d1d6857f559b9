"""mmWave channel generation.

Every link is a (sum of) steering-vector outer products with complex gains
drawn from the distance-dependent path-loss statistics. The BS-to-IRS link
carries one LOS path plus G_p NLOS paths; IRS-to-user and direct BS-to-user
links are single-path LOS rows; the no-IRS benchmark replaces the blocked BS's
rows by NLOS-only sums.

Generation is purely functional given (config, rng); a ChannelSet is immutable
after construction and safe to share across trial workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Geometry, SystemConfig
from .errors import IrsimError

__all__ = [
    "ula_steering",
    "pathloss_db",
    "complex_gain",
    "gen_bs_irs_channel",
    "gen_irs_user_channel",
    "gen_direct_channel",
    "gen_blocked_direct_channel",
    "cascaded_channel",
    "assemble_channel_matrix",
    "ChannelSet",
    "generate_channel_set",
    "trial_rng",
]


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Per-trial RNG stream derived from (master seed, trial index)."""
    return np.random.default_rng([int(master_seed), int(trial_index)])


def ula_steering(theta: float, n: int, d_over_lambda: float) -> np.ndarray:
    """Unit-norm ULA response: element m is exp(j*2*pi*(d/lambda)*m*sin(theta))/sqrt(n)."""
    if n < 1:
        raise IrsimError(f"steering vector needs n >= 1, got {n}")
    if not np.isfinite(theta):
        raise IrsimError(f"non-finite steering angle {theta!r}")
    phase = 2.0 * np.pi * d_over_lambda * np.sin(theta) * np.arange(n)
    return np.exp(1j * phase) / np.sqrt(n)


def pathloss_db(distance_m: float, triple, shadow_draw: float = 0.0) -> float:
    """Distance path loss kappa_a + 10*kappa_b*log10(d) plus a shadowing draw (dB).

    The shadowing term is supplied by the caller (Normal(0, sigma_c^2) from its
    RNG, or 0 for deterministic use); sigma_c in the triple is not applied here.
    """
    if distance_m <= 0:
        raise IrsimError(f"path loss needs a positive distance, got {distance_m}")
    kappa_a, kappa_b, _sigma_c = triple
    return float(kappa_a + 10.0 * kappa_b * np.log10(distance_m) + shadow_draw)


def complex_gain(kappa_db: float, rng: np.random.Generator) -> complex:
    """Circularly-symmetric complex Gaussian gain with variance 10^(-0.1*kappa)."""
    if not np.isfinite(kappa_db):
        raise IrsimError(f"non-finite path loss {kappa_db!r}")
    std = np.sqrt(10.0 ** (-0.1 * kappa_db) / 2.0)
    re, im = rng.standard_normal(2)
    return complex(std * re, std * im)


def _los_angle(src_xy: np.ndarray, dst_xy: np.ndarray) -> float:
    """Azimuth of the displacement vector src -> dst."""
    d = np.asarray(dst_xy, dtype=float) - np.asarray(src_xy, dtype=float)
    return float(np.arctan2(d[1], d[0]))


def _path_gain(distance: float, triple, cfg: SystemConfig,
               rng: np.random.Generator) -> complex:
    shadow = rng.normal(0.0, triple[2])
    kappa = pathloss_db(distance, triple, shadow)
    return complex_gain(kappa, rng)


def gen_bs_irs_channel(geom: Geometry, cfg: SystemConfig,
                       rng: np.random.Generator) -> np.ndarray:
    """N x M BS->IRS channel: LOS path (geometric angles) plus G_p NLOS paths.

    G = sqrt(M*N) * sum_g alpha_g * xi_t * xi_r * a_N(aoa_g)^H a_M(aod_g);
    path 0 uses the LOS statistics at the BS-IRS distance, the rest the NLOS
    statistics at the same distance with angles uniform in [0, 2*pi).
    """
    bs = geom.bs_xy()[cfg.irs_assisted_bs]
    irs = geom.irs_xy()
    dist = float(np.linalg.norm(irs - bs))
    aod_los = _los_angle(bs, irs)   # departure seen at the BS array
    aoa_los = _los_angle(irs, bs)   # arrival seen at the IRS array

    G = np.zeros((cfg.N, cfg.M), dtype=complex)
    for g in range(cfg.G_p + 1):
        if g == 0:
            triple, aoa, aod = cfg.los_pl, aoa_los, aod_los
        else:
            triple = cfg.nlos_pl
            aoa, aod = rng.uniform(0.0, 2.0 * np.pi, 2)
        alpha = _path_gain(dist, triple, cfg, rng)
        a_n = ula_steering(aoa, cfg.N, cfg.d_over_lambda)
        a_m = ula_steering(aod, cfg.M, cfg.d_over_lambda)
        G += alpha * np.outer(a_n.conj(), a_m)
    return np.sqrt(cfg.M * cfg.N) * cfg.xi_t * cfg.xi_r * G


def gen_irs_user_channel(geom: Geometry, k: int, cfg: SystemConfig,
                         rng: np.random.Generator) -> np.ndarray:
    """Length-N IRS->user row: sqrt(N) * alpha_k * xi_t * xi_r * a_N(aod)."""
    irs = geom.irs_xy()
    user = geom.user_xy()[k]
    dist = float(np.linalg.norm(user - irs))
    alpha = _path_gain(dist, cfg.los_pl, cfg, rng)
    a_n = ula_steering(_los_angle(irs, user), cfg.N, cfg.d_over_lambda)
    return np.sqrt(cfg.N) * alpha * cfg.xi_t * cfg.xi_r * a_n


def gen_direct_channel(geom: Geometry, j: int, k: int, cfg: SystemConfig,
                       rng: np.random.Generator) -> np.ndarray:
    """Length-M direct BS j -> user k row (single LOS path, M-antenna array)."""
    bs = geom.bs_xy()[j]
    user = geom.user_xy()[k]
    dist = float(np.linalg.norm(user - bs))
    alpha = _path_gain(dist, cfg.los_pl, cfg, rng)
    a_m = ula_steering(_los_angle(bs, user), cfg.M, cfg.d_over_lambda)
    return np.sqrt(cfg.M) * alpha * cfg.xi_t * cfg.xi_r * a_m


def gen_blocked_direct_channel(geom: Geometry, k: int, cfg: SystemConfig,
                               rng: np.random.Generator) -> np.ndarray:
    """Length-M NLOS-only row between the blocked BS and user k.

    Used only by the no-IRS benchmark: G_p NLOS paths, no LOS term, so the row
    carries the large NLOS path loss of the blocked link.
    """
    bs = geom.bs_xy()[cfg.irs_assisted_bs]
    user = geom.user_xy()[k]
    dist = float(np.linalg.norm(user - bs))
    n_paths = max(cfg.G_p, 1)
    row = np.zeros(cfg.M, dtype=complex)
    for _ in range(n_paths):
        alpha = _path_gain(dist, cfg.nlos_pl, cfg, rng)
        aod = rng.uniform(0.0, 2.0 * np.pi)
        row += alpha * ula_steering(aod, cfg.M, cfg.d_over_lambda)
    return np.sqrt(cfg.M) * cfg.xi_t * cfg.xi_r * row


def cascaded_channel(h_r: np.ndarray, phases: np.ndarray,
                     G: np.ndarray) -> np.ndarray:
    """IRS-reflected row h_r * diag(exp(j*phases)) * G."""
    h_r = np.asarray(h_r)
    G = np.asarray(G)
    phases = np.asarray(phases, dtype=float)
    if h_r.shape != (G.shape[0],) or phases.shape != (G.shape[0],):
        raise IrsimError(
            f"cascade shape mismatch: h_r {h_r.shape}, phases {phases.shape}, "
            f"G {G.shape}"
        )
    return (h_r * np.exp(1j * phases)) @ G


@dataclass(frozen=True)
class ChannelSet:
    """One trial's random channels.

    G: N x M BS i -> IRS matrix; h_r: K x N IRS -> user rows; h_d: direct rows
    per non-assisted BS (K x M each, None at index i); blocked_direct: K x M
    NLOS rows for BS i, consumed only by the no-IRS benchmark.
    """

    G: np.ndarray
    h_r: np.ndarray
    h_d: tuple            # length S; entry j is K x M, entry i is None
    blocked_direct: np.ndarray

    def __post_init__(self):
        for arr in (self.G, self.h_r, self.blocked_direct):
            if not np.all(np.isfinite(arr)):
                raise IrsimError("non-finite channel entries")

    def user_row(self, s: int, k: int, phases: np.ndarray,
                 irs_assisted_bs: int) -> np.ndarray:
        """Channel row from BS s to user k under the given IRS phases."""
        if s == irs_assisted_bs:
            return cascaded_channel(self.h_r[k], phases, self.G)
        return self.h_d[s][k]


def assemble_channel_matrix(s: int, served, channels: ChannelSet,
                            phases: np.ndarray, irs_assisted_bs: int) -> np.ndarray:
    """Stack BS s's rows for the served users in ascending user order."""
    served = sorted(served)
    if not served:
        raise IrsimError(f"BS {s} has an empty served set")
    rows = [channels.user_row(s, k, phases, irs_assisted_bs) for k in served]
    return np.vstack(rows)


def generate_channel_set(geom: Geometry, cfg: SystemConfig,
                         rng: np.random.Generator) -> ChannelSet:
    """Draw every channel of one trial from a single RNG stream."""
    G = gen_bs_irs_channel(geom, cfg, rng)
    h_r = np.vstack([gen_irs_user_channel(geom, k, cfg, rng)
                     for k in range(cfg.K)])
    h_d = []
    for j in range(cfg.S):
        if j == cfg.irs_assisted_bs:
            h_d.append(None)
        else:
            h_d.append(np.vstack([gen_direct_channel(geom, j, k, cfg, rng)
                                  for k in range(cfg.K)]))
    blocked = np.vstack([gen_blocked_direct_channel(geom, k, cfg, rng)
                         for k in range(cfg.K)])
    return ChannelSet(G=G, h_r=h_r, h_d=tuple(h_d), blocked_direct=blocked)
