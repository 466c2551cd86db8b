"""Tolerance bundle and experiment configs.

The tolerance bundle can be overridden through the ``HOROFLOW_TOL``
environment variable, e.g. ``HOROFLOW_TOL="trace=1e-8,proj=1e-8"``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

ENV_VAR = "HOROFLOW_TOL"


@dataclass(frozen=True)
class Tolerances:
    proj: float = 1e-9  # projective matrix equality
    trace: float = 1e-9  # | |trace| - 2 | wall for parabolics
    det_parse: float = 1e-9  # det check when reading group specs
    angle: float = 1e-9  # ties at pi/2 count as <= pi/2
    bound: float = 1e-8  # slack on the Busemann bounds of the return construction
    descent: float = 1e-12  # strict improvement in Dirichlet descent
    dedup: float = 1e-6  # geometric dedup of crossings / conjugacy classes


def parse_tolerances(text: str, base: Tolerances | None = None) -> Tolerances:
    """Parse ``key=value`` pairs separated by commas; unknown keys are rejected."""
    base = base or Tolerances()
    known = {f.name for f in fields(Tolerances)}
    updates = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise ValueError(f"bad tolerance override {item!r}")
        val = float(value)
        if not (val > 0):
            raise ValueError(f"tolerance {key} must be positive")
        updates[key] = val
    return replace(base, **updates)


def tolerances_from_env() -> Tolerances:
    text = os.environ.get(ENV_VAR, "")
    return parse_tolerances(text) if text else Tolerances()


try:
    TOL = tolerances_from_env()
    TOL_ERROR: str | None = None
except ValueError as _exc:  # surfaced by the CLI as a usage error
    TOL = Tolerances()
    TOL_ERROR = f"{ENV_VAR}: {_exc}"


@dataclass(frozen=True)
class KeyLemmaConfig:
    conjugator_length: int = 5
    core_length: int = 2
    max_word_length: int = 12
    band_factor: float = 4.0
    horizon: float = 40.0
    margin: float = 0.1
    eps_xi: float = 1e-3
    eps_B: float = 0.05
    seed_frame: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class GridSpec:
    x_bins: int = 20
    y_bins: int = 20
    angle_bins: int = 16


@dataclass(frozen=True)
class DensityConfig:
    flow: str = "horocycle"
    seed_frame: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)
    budgets: tuple[float, ...] = (1000.0, 4000.0, 16000.0)
    ds: float = 0.05
    grid: GridSpec = GridSpec()
    affine_rows: int = 9
    affine_t_max: float = 1.0
