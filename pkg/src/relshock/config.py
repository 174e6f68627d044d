"""Experiment configuration: TOML file loading, validation, canonical echo.

A config file is a flat table of keys plus one nested [perturbation] table;
CLI flags override file values.  Validation errors carry the offending key.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = ["ExperimentConfig", "load_config_file"]

_PERTURBATION_KINDS = ("bump", "shift", "rough")


@dataclass
class ExperimentConfig:
    flux: object = None
    entropy: object = None
    u_minus: float = None
    epsilon: float = None
    lam: float = 0.25
    delta0: float = 0.3
    theta: float = 0.0           # 0 -> 3|u_minus|
    half_width: float = 0.0      # 0 -> 12/epsilon
    points: int = 8001
    dt_safety: float = 0.9
    T: float = 10.0
    snapshot_cadence: float = 0.25
    assert_theorem: bool = True
    shift_integrator: str = "implicit"
    outdir: str = "out"
    perturbation: dict = field(default_factory=lambda: {
        "kind": "bump", "amplitude": 0.3, "center": 0.0, "width": 2.0,
        "seed": 0})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        cfg = cls(**data)
        if "perturbation" in data:
            merged = dict(cls.__dataclass_fields__["perturbation"].default_factory())
            merged.update(data["perturbation"])
            cfg.perturbation = merged
        return cfg

    # -- derived values -----------------------------------------------------

    @property
    def theta_resolved(self) -> float:
        return self.theta if self.theta else 3.0 * abs(self.u_minus)

    @property
    def half_width_resolved(self) -> float:
        return self.half_width if self.half_width else 12.0 / self.epsilon

    @property
    def grid_h(self) -> float:
        n = self.points | 1
        return 2.0 * self.half_width_resolved / (n - 1)

    def validate(self, require=("flux", "entropy", "u_minus", "epsilon"),
                 run: bool = True) -> None:
        """Check required keys and invariants.  Gates that only matter for a
        coupled PDE run (theorem regime, grid resolution, time stepping) are
        skipped when `run` is false (profile/hypotheses-style commands)."""
        for key in require:
            if getattr(self, key) is None:
                raise ConfigError(f"missing required key '{key}'")
        if self.epsilon is not None and self.epsilon <= 0.0:
            raise ConfigError("key 'epsilon' must be positive")
        if not (0.0 < self.lam < 1.0):
            raise ConfigError("key 'lambda' must lie in (0, 1)")
        if not run:
            return
        if self.assert_theorem and self.epsilon is not None:
            if self.epsilon / self.lam >= self.delta0:
                raise ConfigError("key 'epsilon': epsilon/lambda must be "
                                  "< delta0 when assert_theorem is set")
            if self.lam >= self.delta0:
                raise ConfigError("key 'lambda': must be < delta0 when "
                                  "assert_theorem is set")
        if self.epsilon is not None:
            if self.half_width_resolved * self.epsilon < 8.0 - 1e-12:
                raise ConfigError("key 'half_width': half_width*epsilon must "
                                  "be >= 8 to contain the profile tails")
            if (1.0 / self.epsilon) / self.grid_h < 40.0 - 1e-12:
                raise ConfigError("key 'points': fewer than 40 cells across "
                                  "the shock transition width 1/epsilon")
        if not (0.0 < self.dt_safety <= 1.0):
            raise ConfigError("key 'dt_safety' must lie in (0, 1]")
        if self.T <= 0.0 or self.snapshot_cadence <= 0.0:
            raise ConfigError("keys 'T' and 'snapshot_cadence' must be positive")
        if self.points < 5:
            raise ConfigError("key 'points' must be >= 5")
        if self.shift_integrator not in ("implicit", "euler", "heun"):
            raise ConfigError("key 'shift_integrator' must be implicit, "
                              "euler, or heun")
        kind = self.perturbation.get("kind")
        if kind not in _PERTURBATION_KINDS:
            raise ConfigError(f"perturbation.kind must be one of "
                              f"{_PERTURBATION_KINDS}, got {kind!r}")

    # -- provenance ----------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("outdir", None)  # where results land is not part of the experiment
        blob = json.dumps(d, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_config_file(path: str) -> dict:
    """Parse a TOML config file into a plain dict (keys as in the file)."""
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
