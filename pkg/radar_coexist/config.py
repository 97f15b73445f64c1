"""Scenario documents: ``section.key = value`` text parsed into a SimulationConfig."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import ValidationError

from radar_coexist.errors import ConfigError, ConfigValidationError
from radar_coexist.models import SimulationConfig

logger = logging.getLogger(__name__)

MANDATORY_KEYS = ("simulation.seed", "radar.distance_km")
_LIST_KEYS = {"simulation.seeds", "radar.distance_km"}
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")


# ── Document Parsing ───────────────────────────────────────────────────────────

def _scalar(raw: str) -> Any:
    text = raw.strip().strip('"').strip("'")
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null", ""):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _value(raw: str) -> Any:
    text = raw.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_scalar(part) for part in inner.split(",")] if inner else []
    if "," in text:
        return [_scalar(part) for part in text.split(",")]
    return _scalar(text)


def parse_document(text: str) -> dict[str, Any]:
    """Flat mapping of dotted keys to typed values; ``#`` starts a comment."""
    entries: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        key = key.strip()
        if not sep or not _KEY.match(key):
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line.strip()!r}")
        if key in entries:
            logger.warning("line %d: key %s given twice, keeping the last value", lineno, key)
        entries[key] = _value(raw)
    return entries


def _nest(flat: Mapping[str, Any]) -> dict[str, Any]:
    tree: dict[str, Any] = {}
    for key, value in flat.items():
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"key {key} nests under a scalar value")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"key {key} is a section, not a value")
        node[parts[-1]] = value
    return tree


def _problems(exc: ValidationError) -> list[str]:
    problems = []
    for err in exc.errors():
        msg = str(err.get("msg", "")).removeprefix("Value error, ")
        loc = ".".join(str(p) for p in err.get("loc", ()) if p != "__root__")
        problems.append(msg if not loc or loc in msg else f"{loc}: {msg}")
    return problems


# ── Public API ─────────────────────────────────────────────────────────────────

def parse_config(text: str, overrides: Optional[Mapping[str, Any]] = None) -> SimulationConfig:
    """Validate a scenario document, filling every unspecified field with its default.

    ``overrides`` are dotted keys applied on top of the document before
    validation (the CLI's ``--seed`` and ``--out``).
    """
    flat = parse_document(text)
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key] = value

    missing = [k for k in MANDATORY_KEYS if k not in flat]
    if missing:
        raise ConfigError(f"missing mandatory keys: {', '.join(missing)}", missing=missing)
    for key in _LIST_KEYS & flat.keys():
        if not isinstance(flat[key], list):
            flat[key] = [] if flat[key] is None else [flat[key]]

    tree = _nest(flat)
    simulation = tree.pop("simulation", {})
    radar = tree.setdefault("radar", {})
    distances = radar.pop("distance_km")
    document = {**simulation, "radar_distances_km": distances, **tree}

    try:
        cfg = SimulationConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigValidationError(_problems(exc)) from exc
    logger.debug(
        "parsed scenario: seed=%d distances=%s duration=%gs",
        cfg.seed,
        cfg.radar_distances_km,
        cfg.sim_duration_s,
    )
    return cfg


def load_config(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> SimulationConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return parse_config(text, overrides)
