"""Run configuration shared by all CLI stages, persisted as YAML next to the outputs."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from corpus.errors import InvalidParameterError, UsageError
from profiles.aggregate import EPSILON
from profiles.policies import WeightPolicy
from spectral.model import resolve_kind
from stats.bootstrap import DEFAULT_REPLICATES

OUT_DIR_ENV = "EIGENMOOD_OUT_DIR"
CONFIG_FILE = "run_config.yaml"


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    out_dir: str = "runs/latest"
    # weighting
    tau: float | None = None  # keep label instances with p >= tau
    weight: str = "confidence"  # confidence | uniform
    epsilon: float = EPSILON  # recorded, never configurable
    # ingest
    strict: bool = True
    dedup: bool = False
    strip_diacritics_for_dedup: bool = False
    # spectral
    laplacian: str = "unnorm"  # unnorm | sym
    min_share: float = 1e-3
    k_max: int = 3
    top_n: int = 10
    # bootstrap
    replicates: int = DEFAULT_REPLICATES
    seed: int = 0
    bootstrap_poets: list[str] = field(default_factory=list)  # "all" -> every poet
    # extras
    augmented: bool = False
    render_svg: bool = False
    sheet: str | None = None
    sample_size: int = 500
    min_prevalence: float = 0.0
    workers: int = 1

    def __post_init__(self) -> None:
        self.epsilon = EPSILON
        WeightPolicy(kind=self.weight, threshold=self.tau)  # type: ignore[arg-type]
        resolve_kind(self.laplacian)
        if not 0.0 <= self.min_share < 1.0:
            raise InvalidParameterError(f"RunConfig: min_share {self.min_share} not in [0, 1)")
        if self.k_max < 1:
            raise InvalidParameterError(f"RunConfig: k_max must be >= 1, got {self.k_max}")
        if self.top_n < 0:
            raise InvalidParameterError(f"RunConfig: top_n must be >= 0, got {self.top_n}")
        if self.replicates < 1:
            raise InvalidParameterError(
                f"RunConfig: replicates must be >= 1, got {self.replicates}"
            )
        if self.workers < 1:
            raise InvalidParameterError(f"RunConfig: workers must be >= 1, got {self.workers}")

    @property
    def policy(self) -> WeightPolicy:
        return WeightPolicy(kind=self.weight, threshold=self.tau)  # type: ignore[arg-type]

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def stage_dir(self, stage: str) -> Path:
        path = self.out / stage
        path.mkdir(parents=True, exist_ok=True)
        return path

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def save(self, path: str | Path | None = None) -> Path:
        path = Path(path) if path is not None else self.out / CONFIG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True, allow_unicode=True)
        return path

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"RunConfig: unknown keys {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise UsageError(f"RunConfig: config file not found: {path}")
        with path.open("r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise UsageError(f"RunConfig: {path} is not a mapping")
        return cls.from_dict(data)


def default_out_dir() -> str:
    return os.getenv(OUT_DIR_ENV, RunConfig.out_dir)
