"""Scenario configuration and unit handling.

All internal math runs in linear scale (Watts, dimensionless gains). dB-type
inputs (dBm, dBW, dBi) are converted exactly once, when a config is built from
raw key/value input; the dataclasses below already hold linear values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = [
    "SystemConfig",
    "EnergyModel",
    "Geometry",
    "db_to_linear",
    "dbm_to_watts",
    "dbw_to_watts",
    "load_config_file",
    "make_config",
    "config_to_text",
]


def db_to_linear(x_db: float) -> float:
    return float(10.0 ** (x_db / 10.0))


def dbm_to_watts(x_dbm: float) -> float:
    return float(10.0 ** ((x_dbm - 30.0) / 10.0))


def dbw_to_watts(x_dbw: float) -> float:
    return float(10.0 ** (x_dbw / 10.0))


@dataclass(frozen=True)
class Geometry:
    """Planar deployment: BS sites, the IRS panel and user drop positions."""

    bs_positions: tuple  # S tuples of (x, y) in meters
    irs_position: tuple  # (x, y) in meters
    user_positions: tuple  # K tuples of (x, y) in meters

    def bs_xy(self) -> np.ndarray:
        return np.asarray(self.bs_positions, dtype=float)

    def irs_xy(self) -> np.ndarray:
        return np.asarray(self.irs_position, dtype=float)

    def user_xy(self) -> np.ndarray:
        return np.asarray(self.user_positions, dtype=float)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario constants, in linear units.

    Raw inputs in dBm/dBW/dBi (noise power, power cap, antenna gains) belong in
    :func:`make_config` / :func:`load_config_file`; the fields here are Watts
    and linear gains.
    """

    S: int = 3                    # number of BSs
    K: int = 16                   # number of users
    M: int = 32                   # antennas per BS (must exceed K)
    N: int = 32                   # IRS elements
    b: int = 2                    # phase resolution bits
    carrier_freq: float = 28e9    # Hz
    bandwidth: float = 500e6      # Hz
    d_over_lambda: float = 0.5    # antenna spacing / wavelength
    G_p: int = 5                  # NLOS path count (LOS path comes on top)
    sigma2: float = dbm_to_watts(-65.0)   # noise power, W
    P_max: float = dbm_to_watts(30.0)     # per-BS transmit power cap, W
    R_min: float = 0.0            # per-user rate floor, bit/s/Hz
    xi_t: float = db_to_linear(9.82)      # transmit antenna gain, linear
    xi_r: float = db_to_linear(0.0)       # receive antenna gain, linear
    los_pl: tuple = (61.4, 2.0, 5.8)      # (kappa_a, kappa_b, sigma_c) in dB
    nlos_pl: tuple = (72.0, 2.92, 8.7)    # NLOS triple in dB
    bs_positions: tuple = ((0.0, 0.0), (200.0, 200.0), (300.0, 0.0))
    irs_position: tuple = (50.0, 100.0)
    user_area_center: tuple = (150.0, 50.0)
    user_area_radius: float = 30.0
    irs_assisted_bs: int = 0      # index i of the blocked, IRS-assisted BS
    epsilon: float = 0.2          # auction bid increment
    benefit_scale: int = 100      # integer scaling of the auction benefits
    xi_tol: float = 1e-4          # convergence tolerance (squared deltas)
    T_max: int = 30               # outer iteration cap
    T_sfp: int = 50               # SFP iteration cap
    sfp_restarts: int = 32        # multi-start candidates per phase optimization
    seed: int = 0                 # master RNG seed

    def __post_init__(self):
        if not (self.M > self.K >= self.S >= 1):
            raise ConfigError(
                f"need M > K >= S >= 1, got M={self.M}, K={self.K}, S={self.S}"
            )
        if self.N < 1 or self.b < 1:
            raise ConfigError(f"need N >= 1 and b >= 1, got N={self.N}, b={self.b}")
        if self.sigma2 <= 0 or self.P_max <= 0:
            raise ConfigError("powers must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.R_min < 0:
            raise ConfigError("R_min must be nonnegative")
        if not (0 <= self.irs_assisted_bs < self.S):
            raise ConfigError("irs_assisted_bs out of range")
        if len(self.bs_positions) != self.S:
            raise ConfigError(
                f"{len(self.bs_positions)} BS positions for S={self.S} BSs"
            )
        if self.G_p < 0:
            raise ConfigError("G_p must be nonnegative")

    @property
    def n_phases(self) -> int:
        """Size of the discrete phase set F."""
        return 2 ** self.b

    def phase_set(self) -> np.ndarray:
        """The available IRS phases F = {2*pi*m / 2^b}."""
        return 2.0 * np.pi * np.arange(self.n_phases) / self.n_phases


@dataclass(frozen=True)
class EnergyModel:
    """Circuit power terms of the energy-efficiency metric, in Watts."""

    eta: float = 1.2                       # amplifier inefficiency
    P_BS: float = dbw_to_watts(5.0)        # per-BS circuit power (5 dBW)
    P_u: float = dbm_to_watts(10.0)        # per-user circuit power (10 dBm)
    P_n: float = dbm_to_watts(10.0)        # per-IRS-element circuit power (10 dBm)

    def __post_init__(self):
        if min(self.eta, self.P_BS, self.P_u, self.P_n) <= 0:
            raise ConfigError("energy model terms must be positive")


# Raw config keys given in dB units and how they convert to the linear fields.
_DB_CONVERTERS = {
    "sigma2": dbm_to_watts,   # dBm
    "P_max": dbm_to_watts,    # dBm
    "xi_t": db_to_linear,     # dBi
    "xi_r": db_to_linear,     # dBi
    "P_BS": dbw_to_watts,     # dBW
    "P_u": dbm_to_watts,      # dBm
    "P_n": dbm_to_watts,      # dBm
}

_INT_KEYS = {"S", "K", "M", "N", "b", "G_p", "irs_assisted_bs",
             "benefit_scale", "T_max", "T_sfp", "sfp_restarts", "seed"}
_TUPLE_KEYS = {"los_pl", "nlos_pl", "bs_positions", "irs_position",
               "user_area_center"}

_SYSTEM_KEYS = {f.name for f in fields(SystemConfig)}
_ENERGY_KEYS = {f.name for f in fields(EnergyModel)}


def _parse_value(key: str, raw: str):
    if key in _TUPLE_KEYS:
        try:
            vals = [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError as exc:
            raise ConfigError(f"cannot parse '{key} = {raw}'") from exc
        if key == "bs_positions":
            if len(vals) % 2:
                raise ConfigError("bs_positions needs an even number of values")
            return tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2))
        return tuple(vals)
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse '{key} = {raw}'") from exc


def make_config(overrides: dict | None = None) -> tuple[SystemConfig, EnergyModel]:
    """Build (SystemConfig, EnergyModel) from raw key/value overrides.

    Keys mirror the dataclass field names; dB-type keys (sigma2 in dBm, P_max
    in dBm, xi_t/xi_r in dBi, P_BS in dBW, P_u/P_n in dBm) are converted here,
    at the single conversion boundary. Unknown keys are errors.
    """
    overrides = dict(overrides or {})
    sys_kwargs: dict = {}
    energy_kwargs: dict = {}
    for key, value in overrides.items():
        if isinstance(value, str):
            value = _parse_value(key, value)
        if key in _DB_CONVERTERS:
            value = _DB_CONVERTERS[key](value)
        if key in _SYSTEM_KEYS:
            sys_kwargs[key] = value
        elif key in _ENERGY_KEYS:
            energy_kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key '{key}'")
    return SystemConfig(**sys_kwargs), EnergyModel(**energy_kwargs)


def load_config_file(path, overrides: dict | None = None
                     ) -> tuple[SystemConfig, EnergyModel]:
    """Parse a flat ``key = value`` config file ('#' starts a comment).

    `overrides` (raw values, same units as the file) win over file entries.
    """
    raw: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        raw[key] = value.strip()
    raw.update(overrides or {})
    return make_config(raw)


def config_to_text(cfg: SystemConfig, energy: EnergyModel) -> str:
    """Serialize the fully-resolved (linear-unit) configuration."""
    lines = ["# resolved configuration (linear units: W, linear gains)"]
    for f in fields(cfg):
        lines.append(f"{f.name} = {getattr(cfg, f.name)!r}")
    for f in fields(energy):
        lines.append(f"{f.name} = {getattr(energy, f.name)!r}")
    return "\n".join(lines) + "\n"


def with_updates(cfg: SystemConfig, **kwargs) -> SystemConfig:
    """Functional update helper (kwargs already in linear units)."""
    return replace(cfg, **kwargs)
