"""Run configuration: a single JSON document with a content hash."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .schedule import ParamSchedule, ScheduleError, make_schedule

U64_MAX = (1 << 64) - 1


class ConfigError(ValueError):
    """Unusable configuration (maps to exit code 2)."""


def desk_schedule() -> ParamSchedule:
    """K_l = 4^l for l <= 8 with eps_l = 1/l."""
    return make_schedule("explicit", K=[0] + [4**ell for ell in range(1, 9)], eps="harmonic")


@dataclass
class RunConfig:
    schedule: dict = field(default_factory=lambda: desk_schedule().to_dict())
    seed: int = 0
    tol: float = 1e-9
    threads: int = 1
    out: str = "out"
    format: str = "csv"
    # budget caps
    N_max: int = 256
    k_max: int = 64
    samples: int = 100_000
    # lemma parameters
    alpha: str = "1/10"
    gamma: str = "2"
    kappa: float = 0.5
    # fourier
    etas: list[str] | None = None
    lyons_ells: list[int] = field(default_factory=lambda: [3, 4])
    lyons_count: int = 200
    # DEL
    h: int = 1
    r: int = 3
    # certificate
    b: int = 2
    ell: int = 6
    forced_zero_blocks: list[int] = field(default_factory=lambda: [6])
    # weyl
    weyl_x: str = "sample"
    weyl_b: int = 3
    weyl_h: int = 1
    weyl_N: int = 256
    # sample
    sample_depth: int = 64
    sample_streams: int = 16
    cylinder_bits: list[int] = field(default_factory=lambda: [2, 4])
    # admissibility
    R_values: list[str] = field(default_factory=lambda: [str(10**j) for j in range(2, 9)])
    # cache (None: <out>/cache/mu_hat.jsonl; "" disables)
    cache: str | None = None

    def __post_init__(self):
        self.validate()

    # -- validation ---------------------------------------------------------

    def validate(self):
        if not 0 <= int(self.seed) <= U64_MAX:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not float(self.tol) > 0:
            raise ConfigError("tol must be positive")
        for name in ("threads", "N_max", "k_max", "samples", "lyons_count", "weyl_N",
                     "sample_depth", "sample_streams"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        try:
            Fraction(self.alpha)
            Fraction(self.gamma)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad rational: {exc}") from None
        if not 0 < float(self.kappa) < 1:
            raise ConfigError("kappa must lie in (0, 1)")
        try:
            self.sched()
        except (ScheduleError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad schedule: {exc}") from None

    def sched(self) -> ParamSchedule:
        return ParamSchedule.from_dict(self.schedule)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seed"] = str(self.seed)
        d["tol"] = float(self.tol)
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def identity(self) -> dict:
        """Everything that can change a result; the output location is not part of it."""
        d = self.to_dict()
        del d["out"]
        return d

    def hash(self) -> str:
        text = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "seed" in d:
            try:
                d["seed"] = int(d["seed"])
            except (TypeError, ValueError):
                raise ConfigError("seed must be an integer") from None
        if "tol" in d:
            d["tol"] = float(d["tol"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(d)

    def cache_path(self) -> Path | None:
        if self.cache == "":
            return None
        if self.cache is None:
            return Path(self.out) / "cache" / "mu_hat.jsonl"
        return Path(self.cache)
