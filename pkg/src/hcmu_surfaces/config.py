"""Run configuration: YAML/JSON loading, schema validation and hashing."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources

import jsonschema
import numpy as np
import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    min: float
    max: float
    n: int

    def points(self):
        if self.n < 1 or (self.n > 1 and not self.max > self.min):
            raise ConfigError("grid needs n >= 1 and max > min", grid=asdict(self))
        if self.n == 1:
            return np.array([float(self.min)])
        return np.linspace(self.min, self.max, self.n)

    @property
    def step(self):
        return (self.max - self.min) / (self.n - 1) if self.n > 1 else 0.0


@dataclass(frozen=True)
class Outputs:
    csv: str | None = None
    forms: str | None = None
    mesh: str | None = None
    report: str | None = None
    mesh_format: str = "obj"
    project: str = "none"


@dataclass(frozen=True)
class RunConfig:
    k1: float
    k2: float
    c: float = 0.0
    A: float = 0.0
    branch: str = "plus"
    s: float | None = 0.25
    K0: float | None = None
    H0: float | None = None
    window_margin: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: float = 1e-10
    on_event: str = "Stop"
    pairing: str = "standard"
    x_grid: GridSpec = GridSpec(-0.1, 0.1, 201)
    y_grid: GridSpec = GridSpec(-0.05, 0.05, 101)
    outputs: Outputs = field(default_factory=Outputs)
    seed: int = 0

    def to_dict(self):
        return asdict(self)

    def replace(self, **kw):
        return replace(self, **kw)

    def hash(self):
        """Short stable digest of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def schema():
    text = resources.files(__package__).joinpath("config_schema.json").read_text()
    return json.loads(text)


def from_dict(data) -> RunConfig:
    """Validate against the schema and build a RunConfig."""
    try:
        jsonschema.validate(data, schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"invalid config: {exc.message}", path=path) from None
    kw = dict(data)
    for name in ("x_grid", "y_grid"):
        if name in kw:
            kw[name] = GridSpec(**kw[name])
    if "outputs" in kw:
        kw["outputs"] = Outputs(**kw["outputs"])
    if "branch" in kw:
        kw["branch"] = {1: "plus", -1: "minus"}.get(kw["branch"], str(kw["branch"]).lower())
    for name in ("k1", "k2", "c", "A"):
        if name in kw:
            kw[name] = float(kw[name])
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping", path=str(path))
    return from_dict(data)


def dump_config(cfg: RunConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)


FIELD_NAMES = tuple(f.name for f in fields(RunConfig))
