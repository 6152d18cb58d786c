"""Simulation configuration.

A config file is a flat YAML mapping whose keys are :class:`SimConfig`
field names.  Anything not given falls back to the defaults below: the
outdoor 28 GHz back-haul scenario with desk-scale arrays.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .arrays import Angle2D, ArrayGeometry
from .channel import LinkSetup, PathLossParams
from .codebook import RCS, STRATEGIES

SPEED_OF_LIGHT = 299_792_458.0

__all__ = ["ConfigError", "SimConfig", "dbm_to_watts", "load_config", "noise_power_dbm"]


class ConfigError(ValueError):
    pass


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def noise_power_dbm(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power over the band: ``PSD + 10 log10(BW)``."""
    return psd_dbm_per_hz + 10.0 * np.log10(bandwidth_hz)


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


@dataclass
class SimConfig:
    tx_pos: tuple = (3.0, 0.0, 12.0)
    ris_pos: tuple = (0.0, 3.0, 15.0)
    rx_pos: tuple = (3.0, 103.0, 6.0)
    carrier_freq: float = 28e9
    bandwidth: float = 100e6
    psd_dbm_per_hz: float = -174.0
    antenna_gain_dbi: float = 24.5
    # "power": G_t G_r enter H_eff as linear power ratios; "amplitude": as 10^(dBi/20)
    gain_convention: str = "power"
    nt: tuple = (4, 4)
    nr: tuple = (4, 4)
    n_ris: tuple = (6, 6)
    C_R: int = 8
    L_R: int = 10
    spread_deg: float = 7.5
    los_a: float = 61.4
    los_b: float = 2.0
    los_sigma_xi: float = 5.8
    nlos_a: float = 72.0
    nlos_b: float = 2.92
    nlos_sigma_xi: float = 8.7
    # "random": LOS angles drawn per realization like the cluster means;
    # "geometry": fixed LOS angles from the terminal coordinates, arrays in the x-y plane
    los_angles: str = "random"
    M: int = 4
    B: int = 2
    strategy: str = "BGCS-CIM"
    powers_dbm: list = field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0, 40.0, 50.0])
    trials_per_point: int = 10_000
    seed: int = 0
    angle_perturb_deg: float = 0.0
    # union bound averaged over the first N realizations; None means all of them
    bound_realizations: int | None = None
    block_size: int = 500
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("tx_pos", "ris_pos", "rx_pos"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 3:
                raise ConfigError(f"{name} must have 3 coordinates")
            setattr(self, name, v)
        for name in ("nt", "nr", "n_ris"):
            v = getattr(self, name)
            if isinstance(v, int):
                v = (v, v)
            v = tuple(int(x) for x in v)
            if len(v) != 2 or min(v) < 1:
                raise ConfigError(f"{name} must be two positive element counts")
            setattr(self, name, v)
        self.powers_dbm = [float(p) for p in self.powers_dbm]
        for name in ("C_R", "L_R", "block_size", "threads"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.trials_per_point < 0:
            raise ConfigError("trials_per_point must be >= 0")
        if not _is_pow2(self.M) or self.M < 2:
            raise ConfigError(f"M must be a power of two >= 2, got {self.M}")
        if not _is_pow2(self.B):
            raise ConfigError(f"B must be a power of two, got {self.B}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.strategy == RCS:
            self.B = 1
        elif self.strategy == "SSM":
            if self.B > self.C_R * self.L_R:
                raise ConfigError("B exceeds the number of paths")
        elif self.B > self.C_R:
            raise ConfigError(f"B={self.B} exceeds the number of clusters ({self.C_R})")
        if self.gain_convention not in ("power", "amplitude"):
            raise ConfigError("gain_convention must be 'power' or 'amplitude'")
        if self.los_angles not in ("geometry", "random"):
            raise ConfigError("los_angles must be 'geometry' or 'random'")
        if self.spread_deg < 0 or self.angle_perturb_deg < 0:
            raise ConfigError("angles must be non-negative")
        if self.bound_realizations is not None and self.bound_realizations < 0:
            raise ConfigError("bound_realizations must be >= 0")
        for a, b in (("tx_pos", "ris_pos"), ("ris_pos", "rx_pos"), ("tx_pos", "rx_pos")):
            if np.allclose(getattr(self, a), getattr(self, b)):
                raise ConfigError(f"{a} and {b} coincide")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def noise_dbm(self) -> float:
        return noise_power_dbm(self.psd_dbm_per_hz, self.bandwidth)

    @property
    def noise_w(self) -> float:
        return float(dbm_to_watts(self.noise_dbm))

    @property
    def array_gain(self) -> float:
        """Factor ``G_t G_r`` multiplying the effective channel."""
        per_side = 10.0 if self.gain_convention == "power" else 20.0
        return (10.0 ** (self.antenna_gain_dbi / per_side)) ** 2

    @property
    def bits_per_use(self) -> int:
        return int(np.log2(self.M)) + int(np.log2(self.B))

    def link(self) -> LinkSetup:
        lam = self.wavelength
        tx, ris, rx = (np.array(p) for p in (self.tx_pos, self.ris_pos, self.rx_pos))
        dep = arr = None
        if self.los_angles == "geometry":
            dep = Angle2D.from_vector(ris - tx)
            arr = Angle2D.from_vector(tx - ris)
        return LinkSetup(
            tx=ArrayGeometry.half_wavelength(*self.nt, lam),
            ris=ArrayGeometry.half_wavelength(*self.n_ris, lam),
            rx=ArrayGeometry.half_wavelength(*self.nr, lam),
            d_tx_ris=float(np.linalg.norm(ris - tx)),
            d_ris_rx=float(np.linalg.norm(rx - ris)),
            n_clusters=self.C_R, n_paths=self.L_R, spread_deg=self.spread_deg,
            los=PathLossParams(self.los_a, self.los_b, self.los_sigma_xi),
            nlos=PathLossParams(self.nlos_a, self.nlos_b, self.nlos_sigma_xi),
            los_departure=dep, los_arrival=arr,
        )


def load_config(path, **overrides) -> SimConfig:
    """Read a flat YAML mapping; ``overrides`` that are not ``None`` win."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a key-value mapping")
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SimConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
