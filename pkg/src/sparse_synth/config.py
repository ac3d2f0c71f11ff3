"""Scenario configuration (a single JSON document per run)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .hankel import HankelSpec
from .sampling import Notch

METHODS = ("logdet", "mpm", "both")


@dataclass(frozen=True)
class Taper:
    type: str = "chebyshev"
    sll_db: float | None = -30.0

    def __post_init__(self):
        if self.type not in ("chebyshev", "uniform"):
            raise ConfigError(f"unknown taper type {self.type!r}")
        if self.type == "chebyshev" and (self.sll_db is None or self.sll_db >= 0):
            raise ConfigError("chebyshev taper needs a negative sll_db")


@dataclass(frozen=True)
class SolverConfig:
    name: str = "scs"
    eps: float = 1e-5
    max_iters: int = 100_000
    warm_start: bool = False

    def __post_init__(self):
        if self.name not in ("scs", "clarabel"):
            raise ConfigError(f"unknown solver {self.name!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    elements: int = 20
    spacing_wl: float = 0.5
    taper: Taper = field(default_factory=Taper)
    samples: int = 81
    pencil_L: int = 40
    iterations: int = 10
    delta_rel: float = 1e-3
    eps_rel: float = 0.01
    match_offsets: tuple[int, ...] = (-1, 0, 2)
    sidelobe_db: float = -30.0
    notches: tuple[Notch, ...] = ()
    rank_tol: float = 1e-3
    method: str = "both"
    target_rank: int | None = None
    mpm_sigma_ratio: float = 1e-2
    pattern_points: int = 4001
    early_stop: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.elements < 1:
            raise ConfigError("elements must be >= 1")
        if self.spacing_wl <= 0:
            raise ConfigError("spacing_wl must be positive")
        if self.samples < 5 or self.samples % 2 == 0:
            raise ConfigError("samples must be an odd integer >= 5")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.delta_rel <= 0 or self.eps_rel <= 0:
            raise ConfigError("delta_rel and eps_rel must be positive")
        if self.sidelobe_db >= 0:
            raise ConfigError("sidelobe_db must be negative")
        if not 0 < self.rank_tol < 1:
            raise ConfigError("rank_tol must lie in (0, 1)")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.target_rank is not None and self.target_rank < 1:
            raise ConfigError("target_rank must be >= 1")
        if self.pattern_points < 5:
            raise ConfigError("pattern_points must be >= 5")
        try:
            self.hankel_spec.check_elements(self.elements)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.method in ("logdet", "both"):
            self._check_symmetric_notches()

    @property
    def N(self) -> int:
        return (self.samples - 1) // 2

    @property
    def hankel_spec(self) -> HankelSpec:
        try:
            return HankelSpec(self.N, self.pencil_L)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def _check_symmetric_notches(self):
        def key(n):
            return (round(n.u_lo, 9), round(n.u_hi, 9), n.level_db)

        present = {key(n) for n in self.notches}
        for n in self.notches:
            if key(n.mirrored()) not in present:
                raise ConfigError(
                    f"notch [{n.u_lo}, {n.u_hi}] at {n.level_db} dB has no mirror image;"
                    " notches must be symmetric about u = 0"
                )

    def with_overrides(self, **kw) -> "ScenarioConfig":
        data = self.to_dict()
        data.update(kw)
        return ScenarioConfig.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["match_offsets"] = list(self.match_offsets)
        d["notches"] = [asdict(n) for n in self.notches]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        try:
            if "taper" in kw:
                kw["taper"] = _nested(Taper, kw["taper"], "taper")
            if "solver" in kw:
                kw["solver"] = _nested(SolverConfig, kw["solver"], "solver")
            if "notches" in kw:
                kw["notches"] = tuple(_nested(Notch, n, "notches[]") for n in kw["notches"])
            if "match_offsets" in kw:
                kw["match_offsets"] = tuple(int(o) for o in kw["match_offsets"])
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _nested(kind, value, label):
    if isinstance(value, kind):
        return value
    if not isinstance(value, dict):
        raise ConfigError(f"{label} must be an object")
    known = {f.name for f in fields(kind)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"unknown keys in {label}: {sorted(unknown)}")
    return kind(**value)


def load_config(source: str | Path) -> ScenarioConfig:
    """Load a config file, or a bundled scenario by name (e.g. ``scenario_A``)."""
    path = Path(source)
    try:
        if path.exists():
            text = path.read_text()
        else:
            name = path.name if path.suffix == ".json" else f"{path.name}.json"
            res = resources.files("sparse_synth") / "scenarios" / name
            if not res.is_file():
                raise ConfigError(f"no config file or bundled scenario named {source!r}")
            text = res.read_text()
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)


def bundled_scenarios() -> list[str]:
    root = resources.files("sparse_synth") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
