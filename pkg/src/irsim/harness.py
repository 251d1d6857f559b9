"""Scenario generation, Monte Carlo orchestration, baselines and reporting.

A run is a grid of scenes (user drops) times channel draws per scene, every
stream derived deterministically from (master seed, scene, channel). Reports
aggregate only feasible trials; infeasible ones are counted separately. CSV
output uses repr() floats, so equal (config, seed) reruns are byte-identical.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assoc import Association
from .channel import ChannelSet, assemble_channel_matrix, generate_channel_set
from .config import EnergyModel, Geometry, SystemConfig, config_to_text
from .errors import IrsimError
from .ippu import _assoc_from_assignment, ippu, nearest_bs_assignment
from .irs_opt import random_reflection
from .power import allocate_power
from .precode import PowerAllocation, rate

__all__ = [
    "TrialResult",
    "MonteCarloReport",
    "gen_scenario",
    "energy_efficiency",
    "outage_probability",
    "run_monte_carlo",
    "baseline_rpbf_nbua",
    "baseline_no_irs",
    "emit_report",
    "ALGORITHMS",
]


@dataclass(frozen=True)
class TrialResult:
    """Per-trial metrics; rates are NaN and status != 'converged'/'hit_T_max'
    when the trial was infeasible."""

    seed: int
    algorithm: str
    r_sum: float
    per_user_rates: np.ndarray
    served_counts: np.ndarray
    per_bs_avg_rate: np.ndarray
    ee: float
    status: str
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.status in ("converged", "hit_T_max")


def gen_scenario(cfg: SystemConfig, scene: int, chan: int = 0):
    """Draw one scenario: fixed sites, users uniform in the disk, channels.

    Returns (geometry, channels, rng); the rng continues the (seed, scene,
    channel) stream and seeds whatever randomness the algorithm needs.
    """
    geo_rng = np.random.default_rng([cfg.seed, scene, 0])
    radii = cfg.user_area_radius * np.sqrt(geo_rng.uniform(size=cfg.K))
    angles = geo_rng.uniform(0.0, 2.0 * np.pi, size=cfg.K)
    center = np.asarray(cfg.user_area_center)
    users = center + np.stack([radii * np.cos(angles),
                               radii * np.sin(angles)], axis=1)
    geom = Geometry(
        bs_positions=cfg.bs_positions,
        irs_position=cfg.irs_position,
        user_positions=tuple(map(tuple, users.tolist())),
    )
    rng = np.random.default_rng([cfg.seed, scene, 1 + chan])
    channels = generate_channel_set(geom, cfg, rng)
    return geom, channels, rng


def energy_efficiency(r_sum: float, powers: PowerAllocation,
                      assoc: Association, model: EnergyModel,
                      cfg: SystemConfig, with_irs: bool = True) -> float:
    """EE = R_sum / (eta * sum of assigned-pair powers + circuit terms).

    Only powers of pairs actually in the association count; the IRS term
    N * P_n is dropped for the system without IRS.
    """
    spent = sum(powers.bs_powers(s)[k] for k, s in assoc.assignment.items())
    circuit = cfg.S * model.P_BS + cfg.K * model.P_u
    if with_irs:
        circuit += cfg.N * model.P_n
    return float(r_sum / (model.eta * spent + circuit))


def outage_probability(per_user_mean_rates, R_min: float) -> float:
    """Fraction of per-user mean-rate samples at or below R_min."""
    rates = np.asarray(per_user_mean_rates, dtype=float).ravel()
    if rates.size == 0:
        raise IrsimError("outage probability needs at least one sample")
    return float(np.mean(rates <= R_min))


def _bs_matrix(channels: ChannelSet, s: int, served, phases, cfg: SystemConfig,
               no_irs: bool) -> np.ndarray:
    if no_irs and s == cfg.irs_assisted_bs:
        return channels.blocked_direct[sorted(served)]
    return assemble_channel_matrix(s, served, channels, phases,
                                   cfg.irs_assisted_bs)


def _baseline_trial(channels: ChannelSet, geom: Geometry, cfg: SystemConfig,
                    energy: EnergyModel, rng: np.random.Generator, seed: int,
                    tag: str) -> TrialResult:
    """Shared body of the two heuristic baselines (no outer iteration)."""
    no_irs = tag == "no-irs"
    phi = random_reflection(cfg.N, cfg.b, rng)
    if no_irs:
        # max-RSSI association on the direct rows (blocked NLOS rows for BS i)
        strength = np.zeros((cfg.S, cfg.K))
        for s in range(cfg.S):
            rows = (channels.blocked_direct if s == cfg.irs_assisted_bs
                    else channels.h_d[s])
            strength[s] = np.sum(np.abs(rows) ** 2, axis=1)
        assignment = {k: int(np.argmax(strength[:, k])) for k in range(cfg.K)}
        counts = np.bincount(list(assignment.values()), minlength=cfg.S)
        for s in range(cfg.S):       # keep constraint "every BS serves someone"
            if counts[s] > 0:
                continue
            movable = [k for k, b in assignment.items() if counts[b] > 1]
            k_move = max(movable, key=lambda k: (strength[s, k], -k))
            counts[assignment[k_move]] -= 1
            assignment[k_move] = s
            counts[s] += 1
    else:
        assignment = nearest_bs_assignment(geom, cfg)
    assoc = _assoc_from_assignment(assignment, cfg)

    per_bs = []
    try:
        for s in range(cfg.S):
            served = assoc.served_by(s)
            H = _bs_matrix(channels, s, served, phi.phases, cfg, no_irs)
            p = allocate_power(H, cfg.P_max, cfg.sigma2, cfg.R_min)
            per_bs.append(dict(zip(served, p.tolist())))
    except IrsimError:
        return _infeasible_trial(seed, tag, cfg)
    powers = PowerAllocation(powers=tuple(per_bs))
    per_user = np.zeros(cfg.K)
    for k, s in assoc.assignment.items():
        per_user[k] = rate(powers.bs_powers(s)[k] / cfg.sigma2)
    return _finish_trial(seed, tag, per_user, assoc, powers, cfg, energy,
                         with_irs=not no_irs, iterations=0)


def _infeasible_trial(seed: int, tag: str, cfg: SystemConfig) -> TrialResult:
    return TrialResult(
        seed=seed, algorithm=tag, r_sum=float("nan"),
        per_user_rates=np.full(cfg.K, np.nan),
        served_counts=np.zeros(cfg.S, dtype=int),
        per_bs_avg_rate=np.zeros(cfg.S), ee=float("nan"),
        status="infeasible", iterations=0,
    )


def _finish_trial(seed: int, tag: str, per_user: np.ndarray, assoc: Association,
                  powers: PowerAllocation, cfg: SystemConfig,
                  energy: EnergyModel, with_irs: bool,
                  iterations: int, status: str = "converged") -> TrialResult:
    counts = assoc.counts(cfg.S)
    avg = np.zeros(cfg.S)
    for s in range(cfg.S):
        served = assoc.served_by(s)
        avg[s] = float(np.mean(per_user[served])) if served else 0.0
    r_sum = float(per_user.sum())
    ee = energy_efficiency(r_sum, powers, assoc, energy, cfg, with_irs=with_irs)
    return TrialResult(
        seed=seed, algorithm=tag, r_sum=r_sum, per_user_rates=per_user,
        served_counts=counts, per_bs_avg_rate=avg, ee=ee, status=status,
        iterations=iterations,
    )


def baseline_rpbf_nbua(channels: ChannelSet, geom: Geometry, cfg: SystemConfig,
                       energy: EnergyModel, rng: np.random.Generator,
                       seed: int = 0) -> TrialResult:
    """Random IRS phases, nearest-BS association, full-budget water-filling."""
    return _baseline_trial(channels, geom, cfg, energy, rng, seed, "rpbf-nbua")


def baseline_no_irs(channels: ChannelSet, geom: Geometry, cfg: SystemConfig,
                    energy: EnergyModel, rng: np.random.Generator,
                    seed: int = 0) -> TrialResult:
    """No IRS: blocked BS keeps NLOS-only rows, max-RSSI association."""
    return _baseline_trial(channels, geom, cfg, energy, rng, seed, "no-irs")


def _ippu_trial(channels: ChannelSet, geom: Geometry, cfg: SystemConfig,
                energy: EnergyModel, rng: np.random.Generator,
                seed: int) -> TrialResult:
    result = ippu(channels, geom, cfg, rng)
    if result.status == "infeasible":
        return _infeasible_trial(seed, "ippu", cfg)
    trial = _finish_trial(seed, "ippu", result.per_user_rates, result.assoc,
                          result.powers, cfg, energy, with_irs=True,
                          iterations=result.iterations, status=result.status)
    return trial


# comparison schemes whose inner optimizers live in external references
_OUT_OF_SCOPE = ("pbf-uapc", "af-relay")
ALGORITHMS = ("ippu", "rpbf-nbua", "no-irs")


def run_trial(cfg: SystemConfig, energy: EnergyModel, algorithm: str,
              scene: int, chan: int = 0) -> TrialResult:
    """Generate scenario (seed, scene, chan) and run one algorithm on it."""
    if algorithm in _OUT_OF_SCOPE:
        raise IrsimError(
            f"algorithm '{algorithm}' is out of scope for this artifact "
            "(its optimization procedure lives in an external reference)"
        )
    if algorithm not in ALGORITHMS:
        raise IrsimError(f"unknown algorithm '{algorithm}'")
    geom, channels, rng = gen_scenario(cfg, scene, chan)
    if algorithm == "ippu":
        return _ippu_trial(channels, geom, cfg, energy, rng, seed=scene)
    return _baseline_trial(channels, geom, cfg, energy, rng, scene, algorithm)


def _run_trial_star(args):
    return run_trial(*args)


@dataclass
class MonteCarloReport:
    """Aggregated metrics over one run; trials kept for downstream analysis."""

    algorithm: str
    trials: list
    scenes: int
    channels_per_scene: int
    mean_r_sum: float
    std_r_sum: float
    percentiles: dict
    mean_ee: float
    cdf_points: np.ndarray          # (n, 2): sorted R_sum, empirical CDF
    per_bs_counts: np.ndarray
    per_bs_rates: np.ndarray
    outage_grid: np.ndarray
    outage: np.ndarray
    feasible_count: int
    infeasible_count: int
    user_mean_rates: np.ndarray     # per (scene, user) means over channel draws


def run_monte_carlo(cfg: SystemConfig, energy: EnergyModel, trials: int,
                    algorithm: str = "ippu", channels_per_scene: int = 1,
                    workers: int = 1,
                    outage_grid=None) -> MonteCarloReport:
    """Run `trials` scenes (x channels_per_scene draws) of one algorithm.

    Aggregation is a deterministic reduction in trial order, so reports are
    identical for equal (config, seed) regardless of worker count.
    """
    if trials < 1:
        raise IrsimError("need at least one trial")
    jobs = [(cfg, energy, algorithm, scene, chan)
            for scene in range(trials) for chan in range(channels_per_scene)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_star, jobs, chunksize=4))
    else:
        results = [run_trial(*job) for job in jobs]

    feasible = [t for t in results if t.feasible]
    r_sums = np.array([t.r_sum for t in feasible])
    ees = np.array([t.ee for t in feasible])
    if outage_grid is None:
        outage_grid = np.linspace(0.0, 9.0, 10)
    outage_grid = np.asarray(outage_grid, dtype=float)

    # per-user mean rate within each scene (expectation over channel draws)
    scene_rates: dict = {}
    for t in feasible:
        scene_rates.setdefault(t.seed, []).append(t.per_user_rates)
    user_means = (np.vstack([np.mean(np.vstack(v), axis=0)
                             for _, v in sorted(scene_rates.items())])
                  if scene_rates else np.zeros((0, cfg.K)))

    if len(feasible):
        order = np.sort(r_sums)
        cdf = np.column_stack([order, np.arange(1, len(order) + 1) / len(order)])
        pct = {p: float(np.percentile(r_sums, p)) for p in (10, 50, 90)}
        counts = np.mean([t.served_counts for t in feasible], axis=0)
        bs_rates = np.mean([t.per_bs_avg_rate for t in feasible], axis=0)
        outage = np.array([outage_probability(user_means, g) for g in outage_grid])
        mean_r, std_r = float(np.mean(r_sums)), float(np.std(r_sums))
        mean_ee = float(np.mean(ees))
    else:
        cdf = np.zeros((0, 2))
        pct = {p: float("nan") for p in (10, 50, 90)}
        counts = np.zeros(cfg.S)
        bs_rates = np.zeros(cfg.S)
        outage = np.full(outage_grid.shape, np.nan)
        mean_r = std_r = mean_ee = float("nan")

    return MonteCarloReport(
        algorithm=algorithm, trials=results, scenes=trials,
        channels_per_scene=channels_per_scene, mean_r_sum=mean_r,
        std_r_sum=std_r, percentiles=pct, mean_ee=mean_ee, cdf_points=cdf,
        per_bs_counts=np.asarray(counts), per_bs_rates=np.asarray(bs_rates),
        outage_grid=outage_grid, outage=outage,
        feasible_count=len(feasible),
        infeasible_count=len(results) - len(feasible),
        user_mean_rates=user_means,
    )


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_report(report: MonteCarloReport, cfg: SystemConfig,
                energy: EnergyModel, out_dir) -> list:
    """Write run metadata, the per-trial CSV and the curve CSVs.

    Returns the list of written paths. UTF-8, comma separators, '.' decimals,
    fixed column order; reruns with equal (config, seed) are byte-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    meta = {
        "algorithm": report.algorithm,
        "scenes": report.scenes,
        "channels_per_scene": report.channels_per_scene,
        "feasible": report.feasible_count,
        "infeasible": report.infeasible_count,
        "mean_r_sum": report.mean_r_sum,
        "mean_ee": report.mean_ee,
        "percentiles": report.percentiles,
    }
    meta_path = out / "run_meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    written.append(meta_path)

    cfg_path = out / "resolved_config.txt"
    cfg_path.write_text(config_to_text(cfg, energy), encoding="utf-8")
    written.append(cfg_path)

    k_users = cfg.K
    header = ["seed", "algorithm", "R_sum", "EE", "status"]
    header += [f"rate_u{k:03d}" for k in range(k_users)]
    lines = [",".join(header)]
    for t in report.trials:
        row = [str(t.seed), t.algorithm, _fmt(float(t.r_sum)),
               _fmt(float(t.ee)), t.status]
        row += [_fmt(float(r)) for r in t.per_user_rates]
        lines.append(",".join(row))
    trials_path = out / "trials.csv"
    trials_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(trials_path)

    cdf_lines = ["r_sum,cdf"]
    cdf_lines += [f"{_fmt(float(v))},{_fmt(float(p))}"
                  for v, p in report.cdf_points]
    cdf_path = out / "cdf.csv"
    cdf_path.write_text("\n".join(cdf_lines) + "\n", encoding="utf-8")
    written.append(cdf_path)

    out_lines = ["r_min,outage"]
    out_lines += [f"{_fmt(float(g))},{_fmt(float(o))}"
                  for g, o in zip(report.outage_grid, report.outage)]
    outage_path = out / "outage.csv"
    outage_path.write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    written.append(outage_path)

    cov_lines = ["bs,mean_served,mean_rate"]
    cov_lines += [f"{s},{_fmt(float(report.per_bs_counts[s]))},"
                  f"{_fmt(float(report.per_bs_rates[s]))}"
                  for s in range(len(report.per_bs_counts))]
    cov_path = out / "coverage.csv"
    cov_path.write_text("\n".join(cov_lines) + "\n", encoding="utf-8")
    written.append(cov_path)
    return written
