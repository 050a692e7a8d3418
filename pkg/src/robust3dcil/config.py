"""Experiment configuration: flat ``key = value`` files with dotted keys.

The file form is line-oriented text, ``#`` comments, one ``key = value``
pair per line. Every effective parameter (defaults included) appears in
the canonical echo, whose SHA-256 is the run's config hash.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .corruption import MixPolicy
from .dataset import LabeledSample, load_dataset
from .errors import InvalidConfigError, ToolkitError
from .replay import BudgetConfig
from .selection import strategy_from_name
from .synthetic import gen_synthetic_dataset

__all__ = ["ExperimentConfig", "parse_config", "read_config"]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic:classes=8,per_class=40"
    tasks: int = 4
    seed: int = 1
    out: str = "out"
    mix_rho_min: float = 0.5
    mix_rho_max: float = 0.95
    mix_level: int = 5
    budget_m: int = 20480
    budget_n: int = 1024
    budget_alpha: float = 0.5
    budget_r: float = 2.0
    selection: str = "farthest"
    fes_k: float = 20.0
    fes_c: float = 0.2
    split_test_fraction: float = 0.2

    def validate(self) -> "ExperimentConfig":
        """Re-run component-level validation; raises InvalidConfigError."""
        try:
            self.mix_policy()
            self.budget()
            self.strategy()
        except ToolkitError as exc:
            raise InvalidConfigError(str(exc)) from exc
        if self.tasks < 1:
            raise InvalidConfigError(f"tasks must be >= 1, got {self.tasks}")
        if not 0.0 < self.split_test_fraction < 1.0:
            raise InvalidConfigError(
                f"split.test_fraction must be in (0, 1), got {self.split_test_fraction}"
            )
        return self

    def mix_policy(self) -> MixPolicy:
        return MixPolicy(self.mix_rho_min, self.mix_rho_max, self.mix_level)

    def budget(self) -> BudgetConfig | None:
        """None when budget.m = 0 (replay disabled)."""
        if self.budget_m == 0:
            return None
        return BudgetConfig(
            M=self.budget_m, alpha=self.budget_alpha, r=self.budget_r, n=self.budget_n
        )

    def strategy(self):
        return strategy_from_name(self.selection, k=self.fes_k, c=self.fes_c)

    def load_samples(self) -> list[LabeledSample]:
        """Resolve the dataset field to in-memory clean samples."""
        if self.dataset.startswith("synthetic:"):
            params = _parse_synthetic_spec(self.dataset)
            _, samples = gen_synthetic_dataset(
                num_classes=params["classes"],
                per_class=params["per_class"],
                points_per_cloud=params.get("points", self.budget_n),
                seed=params.get("seed", self.seed),
            )
            return samples
        manifest_path = Path(self.dataset)
        if manifest_path.is_dir():
            manifest_path = manifest_path / "manifest.txt"
        _, samples = load_dataset(manifest_path)
        return samples

    def canonical_text(self) -> str:
        lines = [f"{key} = {_format_value(getattr(self, attr))}" for key, attr in _KEY_TO_ATTR.items()]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        """Hash of the experiment-defining parameters (output dir excluded)."""
        lines = [
            line
            for line in self.canonical_text().splitlines()
            if not line.startswith("out = ")
        ]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


_KEY_TO_ATTR = {
    "dataset": "dataset",
    "tasks": "tasks",
    "seed": "seed",
    "out": "out",
    "mix.rho_min": "mix_rho_min",
    "mix.rho_max": "mix_rho_max",
    "mix.level": "mix_level",
    "budget.m": "budget_m",
    "budget.n": "budget_n",
    "budget.alpha": "budget_alpha",
    "budget.r": "budget_r",
    "selection": "selection",
    "fes.k": "fes_k",
    "fes.c": "fes_c",
    "split.test_fraction": "split_test_fraction",
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(attr: str, raw: str):
    kind = _FIELD_TYPES[attr]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise InvalidConfigError(f"cannot parse {raw!r} as {kind} for key {attr}")


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse config text on top of defaults (or ``base``)."""
    cfg = base if base is not None else ExperimentConfig()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_TO_ATTR:
            raise InvalidConfigError(f"line {lineno}: unknown config key {key!r}")
        attr = _KEY_TO_ATTR[key]
        updates[attr] = _coerce(attr, raw)
    return replace(cfg, **updates)


def read_config(path: str | Path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a config file, apply dotted-key overrides, and validate."""
    cfg = parse_config(Path(path).read_text())
    if overrides:
        updates = {}
        for key, raw in overrides.items():
            if key not in _KEY_TO_ATTR:
                raise InvalidConfigError(f"unknown config key {key!r}")
            attr = _KEY_TO_ATTR[key]
            updates[attr] = _coerce(attr, raw)
        cfg = replace(cfg, **updates)
    return cfg.validate()


def _parse_synthetic_spec(spec: str) -> dict[str, int]:
    body = spec[len("synthetic:"):]
    params = {}
    for item in body.split(","):
        if not item:
            continue
        key, _, value = item.partition("=")
        if key not in ("classes", "per_class", "points", "seed"):
            raise InvalidConfigError(f"unknown synthetic dataset parameter {key!r}")
        try:
            params[key] = int(value)
        except ValueError:
            raise InvalidConfigError(f"cannot parse synthetic parameter {item!r}")
    for required in ("classes", "per_class"):
        if required not in params:
            raise InvalidConfigError(f"synthetic dataset spec needs {required}=<int>")
    return params
