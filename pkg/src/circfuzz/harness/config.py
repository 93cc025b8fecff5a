"""Campaign configuration: packaged defaults < JSON file < environment < flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError
from ..field import FieldModulus
from ..regex.syntax import Alphabet
from ..rng import RNG_METADATA
from ..transpiler import BugInjection

SEED_ENV = "CIRCFUZZ_SEED"
CATEGORIES = ("completeness", "correctness", "soundness")


def data_path(*parts: str) -> Path:
    """Location of a file shipped inside the package."""
    return Path(str(resources.files("circfuzz").joinpath(*parts)))


def packaged_defaults() -> dict[str, Any]:
    return json.loads(data_path("config", "defaults.json").read_text())


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    workers: int = 1
    iterations: int | None = None  # regex iterations (or inputs, for witness campaigns)
    seconds: float | None = None
    pairs: int | None = None  # (regex, string) pairs
    grammar: str = ""
    corpus: str | None = ""
    alphabet: str = "0x20-0x7e"
    max_len: int = 64
    max_string_len: int = 12
    valid_per_regex: int = 16
    invalid_per_regex: int = 16
    regex_max_depth: int = 8
    regex_max_len: int = 24
    dfa_state_cap: int = 4096
    injection: str | None = None
    reference: str = "builtin"
    modulus: str = ""
    modulus_name: str = ""
    out: str | None = None
    probe_iterations: int = 200
    probe_strings: int = 8
    stop_on: str | None = None  # a category, or "any"
    flush_seconds: float = 30.0
    batch_size: int = 8
    montgomery_A: str = "486662"
    montgomery_B: str = "1"

    # Parsed views, cheap enough to recompute on demand.
    @property
    def field_modulus(self) -> FieldModulus:
        return FieldModulus(int(self.modulus), self.modulus_name)

    @property
    def alphabet_range(self) -> Alphabet:
        return Alphabet.parse(self.alphabet)

    @property
    def bug_injection(self) -> BugInjection | None:
        return BugInjection.parse(self.injection) if self.injection else None

    def validate(self) -> CampaignConfig:
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for name in ("iterations", "seconds", "pairs"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"budget {name} must be > 0")
        if self.iterations is None and self.seconds is None and self.pairs is None:
            raise ConfigError("a budget (iterations, seconds or pairs) is required")
        if not Path(self.grammar).is_file():
            raise ConfigError(f"grammar file not found: {self.grammar}")
        if self.corpus and not Path(self.corpus).is_file():
            raise ConfigError(f"corpus file not found: {self.corpus}")
        if self.stop_on not in (None, "any", *CATEGORIES):
            raise ConfigError(f"stop_on must be a category or 'any', got {self.stop_on!r}")
        if not self.reference == "builtin" and not self.reference.startswith("external:"):
            raise ConfigError(f"reference must be 'builtin' or 'external:<command>', got {self.reference!r}")
        for name in ("max_len", "max_string_len", "dfa_state_cap", "batch_size", "probe_iterations"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.valid_per_regex < 0 or self.invalid_per_regex < 0 or self.probe_strings < 0:
            raise ConfigError("per-regex counts must be >= 0")
        self.field_modulus
        self.alphabet_range
        self.bug_injection
        return self

    def to_json(self) -> dict[str, Any]:
        return {**asdict(self), "rng": RNG_METADATA}


_FIELDS = {f.name for f in fields(CampaignConfig)}


def _coerce(values: Mapping[str, Any], origin: str) -> dict[str, Any]:
    out = {}
    for k, v in values.items():
        key = k.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"{origin}: unknown config key {k!r}")
        out[key] = v
    return out


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> CampaignConfig:
    """Merge every layer; ``None`` overrides mean "not given"."""
    env = os.environ if env is None else env
    raw = packaged_defaults()
    raw["max_len"] = raw.pop("max_input_len", 64)
    base = _coerce(raw, "defaults")
    merged: dict[str, Any] = {
        "grammar": str(data_path("grammar", "regex-fragment.bnf")),
        "corpus": str(data_path("corpus", "seed-regexes.txt")),
        **base,
    }
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        doc.pop("rng", None)  # informational, written into report bundles
        merged.update(_coerce(doc, str(path)))
    if env.get(SEED_ENV):
        try:
            merged["seed"] = int(env[SEED_ENV], 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    merged.update(_coerce({k: v for k, v in (overrides or {}).items() if v is not None}, "flags"))
    try:
        cfg = CampaignConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg = replace(cfg, seed=int(cfg.seed) & (2**64 - 1), modulus=str(cfg.modulus))
    return cfg


__all__ = ["CampaignConfig", "load_config", "packaged_defaults", "data_path", "SEED_ENV"]
