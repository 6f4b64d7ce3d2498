"""Run configuration: an INI-style file whose values command-line flags override.

Example::

    [run]
    corpus = data/pages.jsonl
    approach = topic_integrated
    model = hsvm
    seed = 7
    folds = 10

    [lda]
    topics = 200
    epochs = 2000

    [neighbors]
    wp = 0.4
    wc = 0.0
    ws = 0.3
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .evaluation import APPROACHES, MODEL_KINDS, ExperimentConfig
from .neighbors import NeighborWeights

# config-file key -> (section, converter); flag names use the same keys
KEYS: dict[str, tuple[str, type]] = {
    "corpus": ("run", str),
    "approach": ("run", str),
    "model": ("run", str),
    "seed": ("run", int),
    "folds": ("run", int),
    "inner_folds": ("run", int),
    "step": ("run", float),
    "min_df": ("features", int),
    "top_k": ("features", int),
    "scale_bow": ("features", bool),
    "scale_topics": ("features", bool),
    "topics": ("lda", int),
    "epochs": ("lda", int),
    "alpha": ("lda", float),
    "beta": ("lda", float),
    "burn_in": ("lda", float),
    "sample_lag": ("lda", int),
    "per_fold": ("lda", bool),
    "foldin_iterations": ("lda", int),
    "wp": ("neighbors", float),
    "wc": ("neighbors", float),
    "ws": ("neighbors", float),
    "C": ("svm", float),
    "degree": ("svm", int),
    "coef0": ("svm", float),
    "tol": ("svm", float),
    "max_passes": ("svm", int),
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


def _convert(key: str, raw: Any) -> Any:
    kind = KEYS[key][1]
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    if kind is bool:
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Flat ``{key: value}`` from an INI file; unknown sections or keys are errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str            # keep "C" upper-case
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in KEYS:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            if KEYS[key][0] != section:
                raise ConfigError(f"{path}: key {key!r} belongs in [{KEYS[key][0]}], not [{section}]")
            values[key] = _convert(key, raw)
    return values


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI run needs. ``corpus=None`` selects the bundled synthetic corpus."""

    corpus: str | None = None
    approach: str = "topic_integrated"
    model: str = "hsvm"
    step: float = 0.1
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    def validate(self) -> None:
        if self.approach not in APPROACHES:
            raise ConfigError(f"approach must be one of {APPROACHES}, got {self.approach!r}")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if not 0 < self.step <= 1:
            raise ConfigError("step must lie in (0, 1]")
        if self.corpus is not None and not Path(self.corpus).is_file():
            raise ConfigError(f"corpus file not found: {self.corpus}")
        try:
            self.experiment.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {"corpus": self.corpus, "approach": self.approach, "model": self.model, "step": self.step,
                "experiment": self.experiment.to_dict()}


def build_run_config(values: dict[str, Any], base: RunConfig | None = None) -> RunConfig:
    """Apply flat ``values`` (file values, then flag overrides) on top of ``base``."""
    base = RunConfig() if base is None else base
    values = {k: _convert(k, v) for k, v in values.items() if v is not None}
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    exp = base.experiment
    lda, svm, w = exp.lda, exp.svm, exp.weights
    try:
        lda = replace(lda, **{dst: values[src] for src, dst in
                              (("topics", "n_topics"), ("epochs", "epochs"), ("alpha", "alpha"), ("beta", "beta"),
                               ("burn_in", "burn_in"), ("sample_lag", "sample_lag"), ("seed", "seed"))
                              if src in values})
        svm = replace(svm, **{k: values[k] for k in ("C", "degree", "coef0", "tol", "max_passes") if k in values})
        w = NeighborWeights(values.get("wp", w.parent), values.get("wc", w.child), values.get("ws", w.sibling))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    exp = replace(exp, lda=lda, svm=svm, weights=w,
                  **{k: values[k] for k in ("seed", "folds", "inner_folds", "min_df", "top_k", "scale_bow",
                                            "scale_topics", "foldin_iterations") if k in values})
    if "per_fold" in values:
        exp = replace(exp, lda_per_fold=values["per_fold"])
    return replace(base, experiment=exp,
                   **{k: values[k] for k in ("corpus", "approach", "model", "step") if k in values})

