"""Declarative run configuration: JSON file in, validated RunConfig out.

Every run is reproducible from the config plus seeds; the semantic
fingerprint (everything except output locations) is hashed into each
artifact manifest.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import backends as be
from .corpus import FORMATS
from .errors import ConfigError
from .scoring import CachedScoringBackend, ScoreCache, TaskSpec
from .synthesis import RetryPolicy
from .util import canonical_json, sha256_hex

METHODS = ("graft", "zerogen", "icg", "prompt-mine", "dcpmi-mine")
ABLATIONS = ("random-selection", "random-masking", "mf-icg")
SCORING_KINDS = ("mock", "http-completions")
GENERATION_KINDS = ("mock", "http-chat")

_NEEDS_SCORING = {"graft", "prompt-mine", "dcpmi-mine"}
_NEEDS_GENERATION = {"graft", "zerogen", "icg"}

DEFAULT_CONFIG: dict[str, Any] = {
    "corpus": {"path": None, "format": "jsonl", "downsample": None, "downsample_seed": 13},
    "task": {
        "class_name": None,
        "style": None,
        "k_percent": 25.0,
        "n_percent": 10.0,
        "mask_token": "_",
    },
    "method": "graft",
    "ablation": None,
    "scoring_backend": None,
    "generation_backend": None,
    "generation": {"max_attempts": 3, "max_tokens": 256, "temperature": 1.0, "seed": 11},
    "negatives": {"strategy": None, "ratio": 1.0, "seed": 17},
    "split": {"validation_fraction": 0.2, "seed": 19},
    "baselines": {
        "zerogen_count": 1000,
        "icg_count": 1000,
        "icg_examples_per_prompt": 3,
        "icg_seed": 23,
        "prompt_mine_rate_percent": 1.0,
        "dcpmi_rate_percent": 1.0,
    },
    "selection": {"template_count_cap": None, "random_seed": 29},
    "sweep": {"k_percent": None, "template_count": None},
    "runtime": {"parallelism": 4, "cache_dir": None, "exempt_punctuation": False},
    "output_dir": None,
}

_BACKEND_DEFAULTS: dict[str, Any] = {
    "kind": None,
    "model": None,
    "seed": 0,
    "base_url": None,
    "api_key_env": None,
    "requests_per_second": None,
    "max_attempts": 5,
    "backoff_base": 0.5,
    "timeout": 60.0,
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in merged:
            raise ConfigError(f"unknown config field: {path}{key}")
        if isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = _merge(merged[key], value, f"{path}{key}.")
        else:
            merged[key] = value
    return merged


@dataclass
class RunConfig:
    raw: dict[str, Any]
    task: TaskSpec = field(init=False)
    policy: RetryPolicy = field(init=False)

    def __post_init__(self) -> None:
        t = self.raw["task"]
        self.task = TaskSpec(
            class_name=t["class_name"],
            style=t["style"],
            k_percent=float(t["k_percent"]),
            n_percent=float(t["n_percent"]),
            mask_token=t["mask_token"],
        )
        g = self.raw["generation"]
        self.policy = RetryPolicy(
            max_attempts=int(g["max_attempts"]),
            max_tokens=int(g["max_tokens"]),
            temperature=float(g["temperature"]),
            seed=g["seed"],
        )

    def __getitem__(self, key: str) -> Any:
        return self.raw[key]

    @property
    def method(self) -> str:
        return self.raw["method"]

    @property
    def ablation(self) -> str | None:
        return self.raw["ablation"]

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output_dir"])

    def fingerprint(self) -> dict:
        """Semantic config: everything that affects artifact bytes.

        Output and cache locations are excluded so runs into different
        directories stay byte-identical.
        """
        fp = copy.deepcopy(self.raw)
        fp.pop("output_dir")
        fp["runtime"].pop("cache_dir")
        fp["runtime"].pop("parallelism")
        return fp

    def config_hash(self) -> str:
        return sha256_hex(canonical_json(self.fingerprint()))


def _validate_backend(cfg: Any, field_name: str, kinds: tuple[str, ...], errors: list[str]) -> None:
    if cfg is None:
        return
    if not isinstance(cfg, dict):
        errors.append(f"{field_name} must be an object")
        return
    kind = cfg.get("kind")
    if kind not in kinds:
        errors.append(f"{field_name}.kind must be one of {kinds}")
        return
    if not cfg.get("model"):
        errors.append(f"{field_name}.model is required")
    if kind.startswith("http") and not cfg.get("base_url"):
        errors.append(f"{field_name}.base_url is required for kind {kind}")


def validate_config(raw: dict[str, Any]) -> list[str]:
    """Return a list of error strings, each naming the offending field."""
    errors: list[str] = []
    corpus = raw["corpus"]
    if not corpus["path"]:
        errors.append("corpus.path is required")
    elif not Path(corpus["path"]).is_file():
        errors.append(f"corpus.path does not exist: {corpus['path']}")
    if corpus["format"] not in FORMATS:
        errors.append(f"corpus.format must be one of {FORMATS}")
    if corpus["downsample"] is not None and int(corpus["downsample"]) < 1:
        errors.append("corpus.downsample must be ≥ 1")

    task = raw["task"]
    task_errors_before = len(errors)
    if not task["class_name"]:
        errors.append("task.class_name is required")
    if not task["style"]:
        errors.append("task.style is required")
    if not 0 < float(task["k_percent"]) <= 100:
        errors.append("task.k_percent must be in (0,100]")
    if not 0 < float(task["n_percent"]) <= 100:
        errors.append("task.n_percent must be in (0,100]")
    if not task["mask_token"]:
        errors.append("task.mask_token must be non-empty")
    if len(errors) == task_errors_before:
        # remaining TaskSpec rules (e.g. the mask token surviving
        # tokenization as one word) live on the type itself
        try:
            TaskSpec(
                class_name=task["class_name"],
                style=task["style"],
                k_percent=float(task["k_percent"]),
                n_percent=float(task["n_percent"]),
                mask_token=task["mask_token"],
            )
        except ConfigError as exc:
            errors.append(f"task: {exc}")

    method = raw["method"]
    if method not in METHODS:
        errors.append(f"method must be one of {METHODS}")
    ablation = raw["ablation"]
    if ablation is not None:
        if ablation not in ABLATIONS:
            errors.append(f"ablation must be one of {ABLATIONS}")
        if method != "graft":
            errors.append("ablation requires method=graft")

    needs_scoring = method in _NEEDS_SCORING
    needs_generation = method in _NEEDS_GENERATION
    if needs_scoring and raw["scoring_backend"] is None:
        errors.append(f"scoring_backend is required for method={method}")
    if needs_generation and raw["generation_backend"] is None:
        errors.append(f"generation_backend is required for method={method}")
    _validate_backend(raw["scoring_backend"], "scoring_backend", SCORING_KINDS, errors)
    _validate_backend(raw["generation_backend"], "generation_backend", GENERATION_KINDS, errors)

    gen = raw["generation"]
    if int(gen["max_attempts"]) < 1:
        errors.append("generation.max_attempts must be ≥ 1")
    if int(gen["max_tokens"]) < 1:
        errors.append("generation.max_tokens must be ≥ 1")
    if float(gen["temperature"]) < 0:
        errors.append("generation.temperature must be ≥ 0")

    negatives = raw["negatives"]
    if negatives["strategy"] is not None and negatives["strategy"] not in (
        "raw-sample",
        "synthesized",
    ):
        errors.append("negatives.strategy must be raw-sample or synthesized")
    if float(negatives["ratio"]) <= 0:
        errors.append("negatives.ratio must be > 0")
    if negatives["strategy"] == "synthesized" and method in ("prompt-mine", "dcpmi-mine"):
        errors.append("negatives.strategy=synthesized is unavailable for mining methods")

    if not 0 < float(raw["split"]["validation_fraction"]) < 1:
        errors.append("split.validation_fraction must be in (0,1)")

    bl = raw["baselines"]
    for key in ("zerogen_count", "icg_count", "icg_examples_per_prompt"):
        if int(bl[key]) < 1:
            errors.append(f"baselines.{key} must be ≥ 1")
    for key in ("prompt_mine_rate_percent", "dcpmi_rate_percent"):
        if not 0 < float(bl[key]) <= 100:
            errors.append(f"baselines.{key} must be in (0,100]")

    cap = raw["selection"]["template_count_cap"]
    if cap is not None and int(cap) < 1:
        errors.append("selection.template_count_cap must be ≥ 1")

    sweep = raw["sweep"]
    if sweep["k_percent"] is not None:
        if not isinstance(sweep["k_percent"], list) or not sweep["k_percent"]:
            errors.append("sweep.k_percent must be a non-empty list")
        elif any(not 0 < float(k) <= 100 for k in sweep["k_percent"]):
            errors.append("sweep.k_percent values must be in (0,100]")
    if sweep["template_count"] is not None:
        if not isinstance(sweep["template_count"], list) or not sweep["template_count"]:
            errors.append("sweep.template_count must be a non-empty list")
        elif any(int(c) < 1 for c in sweep["template_count"]):
            errors.append("sweep.template_count values must be ≥ 1")

    if int(raw["runtime"]["parallelism"]) < 1:
        errors.append("runtime.parallelism must be ≥ 1")
    if not raw["output_dir"]:
        errors.append("output_dir is required")
    return errors


def resolve_defaults(raw: dict[str, Any]) -> dict[str, Any]:
    """Fill method-dependent defaults (currently the negative strategy)."""
    resolved = copy.deepcopy(raw)
    if resolved["negatives"]["strategy"] is None:
        synth = resolved["method"] in ("zerogen", "icg")
        resolved["negatives"]["strategy"] = "synthesized" if synth else "raw-sample"
    for name in ("scoring_backend", "generation_backend"):
        if resolved[name] is not None:
            merged = dict(_BACKEND_DEFAULTS)
            for key, value in resolved[name].items():
                if key not in merged:
                    raise ConfigError(f"unknown config field: {name}.{key}")
                merged[key] = value
            resolved[name] = merged
    return resolved


def load_config(path_or_dict: str | Path | dict, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load, merge overrides (dotted keys), resolve defaults, validate."""
    if isinstance(path_or_dict, dict):
        user = path_or_dict
    else:
        path = Path(path_or_dict)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    merged = _merge(DEFAULT_CONFIG, user)
    for dotted, value in (overrides or {}).items():
        node = merged
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config field: {dotted}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config field: {dotted}")
        node[parts[-1]] = value
    resolved = resolve_defaults(merged)
    errors = validate_config(resolved)
    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errors))
    return RunConfig(resolved)


# ---------------------------------------------------------------------------
# Backend construction

def _api_key(cfg: dict) -> str | None:
    env = cfg.get("api_key_env")
    if not env:
        return None
    value = os.environ.get(env)
    if not value:
        raise ConfigError(f"environment variable {env} is not set")
    return value


def build_scoring_backend(config: RunConfig) -> Any:
    cfg = config.raw["scoring_backend"]
    if cfg is None:
        raise ConfigError("scoring_backend is not configured")
    if cfg["kind"] == "mock":
        backend: Any = be.MockScoringBackend(seed=int(cfg["seed"]), model=cfg["model"])
    else:
        backend = be.CompletionsScoringClient(
            be.HttpBackendConfig(
                base_url=cfg["base_url"],
                model=cfg["model"],
                api_key=_api_key(cfg),
                timeout=float(cfg["timeout"]),
                max_attempts=int(cfg["max_attempts"]),
                backoff_base=float(cfg["backoff_base"]),
                requests_per_second=cfg["requests_per_second"],
            )
        )
    cache_dir = config.raw["runtime"]["cache_dir"]
    if cache_dir:
        backend = CachedScoringBackend(backend, ScoreCache(cache_dir))
    return backend


def build_generation_backend(config: RunConfig) -> Any:
    cfg = config.raw["generation_backend"]
    if cfg is None:
        raise ConfigError("generation_backend is not configured")
    if cfg["kind"] == "mock":
        return be.MockGenerationBackend(
            seed=int(cfg["seed"]),
            model=cfg["model"],
            mask_token=config.task.mask_token,
        )
    return be.ChatGenerationClient(
        be.HttpBackendConfig(
            base_url=cfg["base_url"],
            model=cfg["model"],
            api_key=_api_key(cfg),
            timeout=float(cfg["timeout"]),
            max_attempts=int(cfg["max_attempts"]),
            backoff_base=float(cfg["backoff_base"]),
            requests_per_second=cfg["requests_per_second"],
        )
    )
