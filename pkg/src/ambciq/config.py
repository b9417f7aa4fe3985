"""System configuration: physical constants, protocol sizes, and file loading.

All powers and variances are stored in linear units (watts for powers,
dimensionless for variances).  Config files may give them as plain linear
numbers or as strings with a ``dB``/``dBm`` suffix; conversion happens at
load time so the numerical core never sees logarithmic quantities.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class ConfigError(ValueError):
    """Raised when a configuration file or field is invalid."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def parse_quantity(value) -> float:
    """Parse a config scalar that may carry a ``dB`` or ``dBm`` suffix.

    Plain numbers are taken as already linear.  ``"-80 dBm"`` becomes watts,
    ``"-10 dB"`` becomes a linear ratio.
    """
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    low = text.lower()
    try:
        if low.endswith("dbm"):
            return dbm_to_watt(float(text[:-3].strip()))
        if low.endswith("db"):
            return db_to_linear(float(text[:-2].strip()))
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse quantity {value!r}") from exc


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in str(text).replace(",", " ").split())


def _parse_int(text) -> int:
    return int(float(text))


@dataclass(frozen=True)
class SystemConfig:
    """All physical and protocol constants for one simulated link.

    Per-tag fields (``d_k``, ``d_bar_k``, ``eta``) are length-K tuples.
    ``phi_T``/``phi_R`` set to ``None`` mean "draw uniformly on (0, 1) rad
    per trial"; a float pins the phase mismatch.
    """

    M: int = 4                       # AP antennas
    K: int = 2                       # tags
    d_R: float = 30.0                # LU -> AP distance, m
    d_k: tuple = (2.0, 2.0)          # tag -> AP distances, m
    d_bar_k: tuple = (30.0, 30.0)    # LU -> tag distances, m
    d_o: float = 1.0                 # pathloss reference distance, m
    f_c: float = 915e6               # carrier, Hz
    gamma: float = 2.5               # pathloss exponent
    m_nakagami: float = 3.0          # small-scale fading shape
    sigma_i_sq: float = 0.1          # RSI entry variance, linear
    eta: tuple = (0.6, 0.6)          # tag reflection coefficients
    g_T: float = 1.0                 # TX amplitude mismatch
    phi_T: float | None = None       # TX phase mismatch, rad (None = random)
    g_R: float = 1.0                 # RX amplitude mismatch
    phi_R: float | None = None       # RX phase mismatch, rad (None = random)
    P_T: float = 0.01                # transmit power, W
    sigma_sq: float = 1e-11          # receiver noise power, W
    N1: int = 16                     # phase-1 pilot length
    N2: int = 16                     # phase-2 pilot length (per sub-phase)
    N3: int = 16                     # phase-3 pilot length (per sub-stage)
    D: int = 200                     # data block length
    D_ser: int | None = None         # detection block for SER (None = D)
    ecm_iters: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.K < 1:
            raise ConfigError("M and K must be positive integers")
        if len(self.d_k) != self.K or len(self.d_bar_k) != self.K or len(self.eta) != self.K:
            raise ConfigError("d_k, d_bar_k and eta must all have length K")
        for d in (self.d_R, self.d_o, *self.d_k, *self.d_bar_k):
            if d <= 0:
                raise ConfigError("all distances must be positive")
        if not all(0.0 < e < 1.0 for e in self.eta):
            raise ConfigError("reflection coefficients must lie in (0, 1)")
        if self.gamma <= 0:
            raise ConfigError("pathloss exponent must be positive")
        if self.m_nakagami < 0.5:
            raise ConfigError("Nakagami shape must be >= 0.5")
        if self.P_T <= 0 or self.sigma_sq < 0 or self.sigma_i_sq < 0:
            raise ConfigError("powers must be positive (noise may be zero)")
        if min(self.N1, self.N2, self.N3) < 1 or self.D < 0:
            raise ConfigError("pilot lengths must be >= 1 and D >= 0")
        if self.ecm_iters < 0:
            raise ConfigError("ecm_iters must be >= 0")

    @property
    def P_x(self) -> float:
        """LU/AP data symbol power (single transmit-power convention)."""
        return self.P_T

    @property
    def ser_block(self) -> int:
        return self.D if self.D_ser is None else self.D_ser

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    def with_tags(self, K: int) -> "SystemConfig":
        """Return a copy with K tags, cycling the per-tag fields."""
        def cyc(vals):
            return tuple(vals[i % len(vals)] for i in range(K))
        return dataclasses.replace(
            self, K=K, d_k=cyc(self.d_k), d_bar_k=cyc(self.d_bar_k), eta=cyc(self.eta)
        )

    def fingerprint(self) -> str:
        """Stable hash of every field, used to tag exported results."""
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate_pilot_lengths(cfg: SystemConfig) -> None:
    """Check the three pilot-length feasibility bounds for (M, K)."""
    if cfg.N1 < 2 * cfg.M + 4:
        raise ConfigError(f"N1={cfg.N1} violates N1 >= 2M+4 = {2 * cfg.M + 4}")
    if cfg.N2 < 2 * cfg.K + 2:
        raise ConfigError(f"N2={cfg.N2} violates N2 >= 2K+2 = {2 * cfg.K + 2}")
    if cfg.N3 < 2 * cfg.M + 2:
        raise ConfigError(f"N3={cfg.N3} violates N3 >= 2M+2 = {2 * cfg.M + 2}")


_SCHEMA = {
    "system": {
        "antennas": ("M", _parse_int),
        "tags": ("K", _parse_int),
        "lu_ap_distance_m": ("d_R", float),
        "tag_ap_distances_m": ("d_k", _parse_float_list),
        "lu_tag_distances_m": ("d_bar_k", _parse_float_list),
        "reference_distance_m": ("d_o", float),
        "carrier_hz": ("f_c", float),
        "pathloss_exponent": ("gamma", float),
        "nakagami_m": ("m_nakagami", float),
        "rsi_power": ("sigma_i_sq", parse_quantity),
        "reflection_coeffs": ("eta", _parse_float_list),
        "noise_power": ("sigma_sq", parse_quantity),
    },
    "iq": {
        "tx_gain": ("g_T", float),
        "tx_phase_rad": ("phi_T", "phase"),
        "rx_gain": ("g_R", float),
        "rx_phase_rad": ("phi_R", "phase"),
    },
    "training": {
        "n1": ("N1", _parse_int),
        "n2": ("N2", _parse_int),
        "n3": ("N3", _parse_int),
    },
    "data": {
        "block_len": ("D", _parse_int),
        "ser_block_len": ("D_ser", _parse_int),
        "transmit_power": ("P_T", parse_quantity),
    },
    "estimation": {
        "ecm_iterations": ("ecm_iters", _parse_int),
    },
    "run": {
        "seed": ("seed", _parse_int),
    },
}


def load_config(path) -> SystemConfig:
    """Load a SystemConfig from an INI-style file (see README for the schema).

    Unknown sections or keys are rejected so typos do not silently fall back
    to defaults.  Pilot-length feasibility is validated here as well.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    kwargs = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            field, conv = _SCHEMA[section][key]
            if conv == "phase":
                kwargs[field] = None if raw.strip().lower() == "random" else float(raw)
            else:
                try:
                    kwargs[field] = conv(raw)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc

    try:
        cfg = SystemConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    validate_pilot_lengths(cfg)
    return cfg
