"""Campaign configuration files (TOML)."""

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynsys import burgers_cells
from .exceptions import ConfigurationError, DiscretizationError
from .features import FEATURE_KINDS
from .integrator import SCHEMES
from .noise import NOISE_KINDS
from .regress.families import get_family
from .regress.training import default_grid

SYSTEMS = ("advection-diffusion", "burgers")
SURROGATES = ("pod-galerkin", "coarse-lfm")
RESPONSES = ("state-norm", "qoi")


@dataclass
class SystemConfig:
    name: str = "advection-diffusion"
    n_cells: int = 101
    cell_width: float = 0.1


@dataclass
class SurrogateConfig:
    type: str = "pod-galerkin"
    K: int = 5
    pod_grid: List[List[float]] = field(
        default_factory=lambda: [[-2.0, -1.05, -0.1], [0.1, 0.55, 1.0]])
    skip: int = 10
    x_ref: str = "initial-state"
    cell_width: float = 2.0


@dataclass
class IntegratorConfig:
    scheme: str = "crank-nicolson"
    dt: float = 3e-4
    n_steps: int = 1000


@dataclass
class GridConfig:
    stride: int = 20
    count: int = 50


@dataclass
class FeatureConfig:
    kinds: List[str] = field(default_factory=lambda: ["params+resnorm"])
    energy: float = 0.99


@dataclass
class SplitCounts:
    n_train: int = 40
    n_val: int = 10
    n_test: int = 50
    n_noise_train: int = 20


@dataclass
class TrainSection:
    response: str = "qoi"
    n_train: Optional[int] = None
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 1000
    patience: int = 20
    holdout: float = 0.2
    n_restarts: int = 20
    noise: List[str] = field(default_factory=lambda: list(NOISE_KINDS))
    modes: Dict[str, str] = field(default_factory=dict)
    grids: Dict[str, List[dict]] = field(default_factory=dict)


@dataclass
class CampaignConfig:
    """All settings for generate/train/evaluate runs."""

    seed: int = 0
    threads: int = 1
    system: SystemConfig = field(default_factory=SystemConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    coarse_grid: GridConfig = field(default_factory=GridConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    split: SplitCounts = field(default_factory=SplitCounts)
    train: TrainSection = field(default_factory=TrainSection)

    def to_dict(self):
        d = asdict(self)
        if d["train"]["n_train"] is None:
            del d["train"]["n_train"]
        return d

    def dumps(self):
        return tomli_w.dumps(self.to_dict())

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigurationError(msg)

        need(self.system.name in SYSTEMS, f"unknown system {self.system.name!r}; use {SYSTEMS}")
        need(self.surrogate.type in SURROGATES,
             f"unknown surrogate {self.surrogate.type!r}; use {SURROGATES}")
        need(self.integrator.scheme in SCHEMES,
             f"unknown scheme {self.integrator.scheme!r}; use {sorted(SCHEMES)}")
        need(self.integrator.dt > 0 and self.integrator.n_steps > 0, "dt and n_steps must be positive")
        need(self.coarse_grid.stride > 0 and self.coarse_grid.count > 0,
             "coarse grid stride and count must be positive")
        need(self.coarse_grid.stride * self.coarse_grid.count <= self.integrator.n_steps,
             "coarse grid extends beyond the final time step")
        need(self.features.kinds, "at least one feature kind is required")
        for k in self.features.kinds:
            need(k in FEATURE_KINDS, f"unknown feature kind {k!r}; use {list(FEATURE_KINDS)}")
        need(0 < self.features.energy <= 1, "energy must lie in (0, 1]")
        sp = self.split
        need(min(sp.n_train, sp.n_val, sp.n_test) > 0, "split counts must be positive")
        need(sp.n_train == 4 * sp.n_val, "training count must be four times validation count")
        need(0 <= sp.n_noise_train < sp.n_test, "noise-train count must be below the test count")
        need(self.train.response in RESPONSES,
             f"unknown response {self.train.response!r}; use {RESPONSES}")
        if self.train.n_train is not None:
            need(0 < self.train.n_train <= sp.n_train and self.train.n_train % 4 == 0,
                 "train.n_train must be a positive multiple of 4 not above split.n_train")
        for k in self.train.noise:
            need(k in NOISE_KINDS, f"unknown noise kind {k!r}; use {list(NOISE_KINDS)}")
        for fam in list(self.train.grids) + list(self.train.modes):
            get_family(fam)
        need(self.threads >= 0, "threads must be nonnegative")
        if self.surrogate.type == "pod-galerkin":
            need(self.surrogate.K > 0 and self.surrogate.skip > 0,
                 "POD dimension and snapshot skip must be positive")
            need(self.surrogate.x_ref in ("initial-state", "zero"), "x_ref must be initial-state or zero")
        if self.system.name == "burgers":
            burgers_cells(self.system.cell_width)
            if self.surrogate.type == "coarse-lfm":
                burgers_cells(self.surrogate.cell_width)
        elif self.surrogate.type == "coarse-lfm":
            cells = 2.0 / self.surrogate.cell_width
            if abs(cells - round(cells)) > 1e-9 or round(cells) < 3:
                raise DiscretizationError(
                    f"coarse width {self.surrogate.cell_width} does not divide the domain [0, 2]")
        return self


_SECTIONS = {"system": SystemConfig, "surrogate": SurrogateConfig, "integrator": IntegratorConfig,
             "coarse_grid": GridConfig, "features": FeatureConfig, "split": SplitCounts,
             "train": TrainSection}


def config_from_dict(d):
    d = dict(d)
    kwargs = {}
    for key in ("seed", "threads"):
        if key in d:
            kwargs[key] = d.pop(key)
    for name, cls in _SECTIONS.items():
        sec = d.pop(name, {})
        if not isinstance(sec, dict):
            raise ConfigurationError(f"[{name}] must be a table")
        try:
            kwargs[name] = cls(**sec)
        except TypeError as exc:
            raise ConfigurationError(f"invalid keys in [{name}]: {exc}") from None
    if d:
        raise ConfigurationError(f"unknown top-level keys: {sorted(d)}")
    return CampaignConfig(**kwargs).validate()


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from None
    return config_from_dict(raw)


def save_config(path, cfg):
    Path(path).write_text(cfg.dumps())


def family_grid(cfg, family):
    family = get_family(family)
    grid = cfg.train.grids.get(family)
    if grid is None:
        grid = next((v for k, v in cfg.train.grids.items() if get_family(k) == family), None)
    return list(grid) if grid is not None else default_grid(family)
