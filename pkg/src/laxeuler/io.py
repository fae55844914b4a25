"""File formats: flat run configs, LAXF snapshots, JSON reports and CSV diagnostics.

LAXF layout (little-endian)::

    b"LAXF" | uint32 version (=1) | uint32 n | float64 time | n*n float64

The payload is physical-space vorticity in row-major order with the x index
outermost.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import re
import struct
import tempfile
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import numpy as np

from .spectral import Grid, RealField

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config_text",
    "load_config",
    "Snapshot",
    "write_snapshot",
    "read_snapshot",
    "encode_snapshot",
    "decode_snapshot",
    "write_report",
    "write_diagnostics",
    "atomic_write",
    "DIAGNOSTICS_HEADER",
]

MAGIC = b"LAXF"
VERSION = 1
_HEADER = struct.Struct("<4sIId")
DIAGNOSTICS_HEADER = ["time", "energy", "enstrophy", "casimir3", "casimir4"]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


def _parse_float(text: str) -> float:
    text = text.strip()
    m = re.fullmatch(r"(-?)sqrt\(\s*([0-9.eE+-]+)\s*\)", text)
    if m:
        value = math.sqrt(float(m.group(2)))
        return -value if m.group(1) else value
    return float(text)


def _parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    if t.endswith("i") and not t.endswith("j"):
        t = t[:-1] + "j"
    if t in ("j", "+j"):
        t = "1j"
    return complex(t)


def _parse_int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [_parse_float(v) for v in str(text).split(",") if v.strip()]


@dataclass
class RunConfig:
    """Every setting a command can read. Unknown keys are rejected."""

    n: int = 128
    dt: float = 1e-3
    T: float = 1.0
    ic: str | None = None
    seed: int = 0
    K: list[int] = field(default_factory=lambda: [12])
    out: str = "out"
    snapshot_interval: float = 0.1
    suite: str | None = None
    dealias: str = "2/3"
    eps: float = 0.1
    m: int = 8
    amplitude: float = 1.0
    band: int = 8
    phi_band: int = 8
    trials: int = 10
    samples: int = 10
    alpha: float = 1.0
    beta: float = math.sqrt(2.0)
    gamma: float = 0.0
    delta: float = 1.0
    lam: list[complex] | None = None
    resonance_policy: str = "error"
    sample_times: list[float] = field(default_factory=lambda: [0.0, 0.5])
    mode_index: int | None = None
    tolerance: float = 1e-11
    transport_tolerance: float = 1e-6
    norm_tolerance: float = 1e-8
    drift_tolerance: float = 1e-6
    casimir_tolerance: float = math.inf
    perturbation: float = 1e-3
    halvings: int = 2

    def validate(self) -> "RunConfig":
        try:
            Grid(self.n)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        positive = ("dt", "T", "snapshot_interval", "tolerance", "transport_tolerance",
                    "norm_tolerance", "drift_tolerance", "casimir_tolerance", "perturbation")
        for name in positive:
            v = getattr(self, name)
            finite = math.isfinite(v) or (name == "casimir_tolerance" and v == math.inf)
            if not (isinstance(v, (int, float)) and finite and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        for name in ("trials", "samples", "band", "phi_band", "m", "halvings"):
            if getattr(self, name) < 0 or (name in ("trials", "samples", "m") and getattr(self, name) < 1):
                raise ConfigError(f"{name} out of range: {getattr(self, name)}")
        if not self.K or any(k < 1 for k in self.K):
            raise ConfigError(f"K must be positive, got {self.K}")
        if self.dealias != "2/3":
            raise ConfigError("only 2/3 dealiasing is supported")
        if self.resonance_policy not in ("error", "zero-gauge"):
            raise ConfigError(f"resonance_policy must be 'error' or 'zero-gauge', got {self.resonance_policy!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        return self

    def to_json(self) -> dict:
        d = asdict(self)
        if d["lam"] is not None:
            d["lam"] = [[z.real, z.imag] for z in d["lam"]]
        return d

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        """Inverse of :meth:`to_json`; unknown keys raise ``ConfigError``."""
        values = {canonical_key(k): v for k, v in data.items()}
        if values.get("lam") is not None:
            values["lam"] = [complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in values["lam"]]
        return cls().update(values)

    def update(self, values: dict) -> "RunConfig":
        for key, raw in values.items():
            setattr(self, key, _coerce(key, raw))
        return self


_KEY_ALIASES = {"lambda": "lam"}
_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if key in ("n", "seed", "band", "phi_band", "trials", "samples", "m", "halvings"):
            return int(raw)
        if key == "mode_index":
            return None if raw.lower() in ("", "none", "auto") else int(raw)
        if key == "K":
            return _parse_int_list(raw)
        if key == "sample_times":
            return _parse_float_list(raw)
        if key == "lam":
            return [_parse_complex(v) for v in raw.split(",") if v.strip()]
        if key in ("out", "ic", "suite", "dealias", "resonance_policy"):
            return raw
        return _parse_float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = _KEY_ALIASES.get(key, key)
    if key not in _FIELD_NAMES:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def parse_config_text(text: str) -> dict:
    """``key = value`` lines with ``#`` comments; returns raw strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = canonical_key(key)
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file, then explicit overrides.

    A ``.json`` file is read as a previously written report and its
    ``config`` block is replayed, so any run can be repeated exactly.
    """
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if str(path).endswith(".json"):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad JSON in {path}: {exc}") from None
            if not isinstance(doc, dict) or not isinstance(doc.get("config"), dict):
                raise ConfigError(f"{path} has no 'config' object")
            cfg = RunConfig.from_json(doc["config"])
        else:
            cfg.update(parse_config_text(text))
    if overrides:
        cfg.update({canonical_key(k): v for k, v in overrides.items()})
    return cfg.validate()


def atomic_write(path: str | os.PathLike, data: bytes):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True, eq=False)
class Snapshot:
    time: float
    field: RealField


def encode_snapshot(field: RealField, time: float) -> bytes:
    n = field.grid.n
    header = _HEADER.pack(MAGIC, VERSION, n, float(time))
    return header + np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, n, time = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} does not match n={n} (expected {expected})")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n).astype(float)
    return Snapshot(time, RealField(Grid(n), values))


def write_snapshot(path, field: RealField, time: float):
    atomic_write(path, encode_snapshot(field, time))


def read_snapshot(path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def write_report(path, name: str, config: RunConfig | dict, checks, **extra):
    """One JSON document: ``{name, config, checks: [...]}`` plus any extras."""
    cfg = config.to_json() if isinstance(config, RunConfig) else config
    doc = {"name": name, "config": cfg, "checks": [c.to_json() for c in checks]}
    doc.update(extra)
    text = json.dumps(doc, indent=2, sort_keys=False, allow_nan=True)
    atomic_write(path, (text + "\n").encode())
    return doc


def write_diagnostics(path, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGNOSTICS_HEADER)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    atomic_write(path, buf.getvalue().encode())
