"""Flat key-value run configs with unit-suffixed keys.

Files hold one ``section.name_unit = value`` assignment per line, with
``#`` comments and blank lines ignored.  Units live in the key suffix
(``chain.loop_inductance_nH = 5.7``) and are converted to SI on read,
so configs stay archivable and diffable.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import ConfigError

UNIT_SCALES = {
    "Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9,
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9,
    "m": 1.0, "mm": 1e-3, "um": 1e-6,
    "T": 1.0, "mT": 1e-3, "uT": 1e-6, "nT": 1e-9, "G": 1e-4,
    "H": 1.0, "nH": 1e-9,
    "F": 1.0, "pF": 1e-12, "fF": 1e-15,
    "W": 1.0, "mW": 1e-3,
    "A": 1.0, "mA": 1e-3,
    "ohm": 1.0,
    "rad": 1.0, "deg": math.pi / 180.0,
    "dB": 1.0, "ppm": 1.0,
}

FREQUENCY_UNITS = ("Hz", "kHz", "MHz", "GHz")
TIME_UNITS = ("s", "ms", "us", "ns")
LENGTH_UNITS = ("m", "mm", "um")
FIELD_UNITS = ("T", "mT", "uT", "nT", "G")

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def load_config(path) -> dict[str, str]:
    """Parse a config file into a raw key -> string mapping."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


class ConfigView:
    """Typed, unit-aware access to a raw config mapping.

    Consumed keys are tracked so that typos inside a scenario's own
    sections can be reported; sections belonging to other scenarios are
    left alone, letting one archived file drive several runs.
    """

    def __init__(self, raw: dict[str, str]):
        self._raw = dict(raw)
        self._consumed: set[str] = set()

    def _take(self, key: str) -> str | None:
        if key in self._raw:
            self._consumed.add(key)
            return self._raw[key]
        return None

    def _parse_float(self, key: str, text: str) -> float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}") from None

    def quantity(self, base: str, units: tuple[str, ...], default: float,
                 minimum: float | None = None, positive: bool = False) -> float:
        """SI value of ``<base>_<unit>`` for the first unit suffix present."""
        found = [(u, f"{base}_{u}") for u in units if f"{base}_{u}" in self._raw]
        if len(found) > 1:
            raise ConfigError(f"{base}: give exactly one of "
                              + ", ".join(k for _, k in found))
        if not found:
            value = default
            key = f"{base}_{units[0]}"
        else:
            unit, key = found[0]
            value = self._parse_float(key, self._take(key)) * UNIT_SCALES[unit]
        if positive and not value > 0:
            raise ConfigError(f"{key}: must be > 0")
        if minimum is not None and value < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}")
        return value

    def quantity_list(self, base: str, units: tuple[str, ...],
                      default: tuple[float, ...]) -> tuple[float, ...]:
        """Comma-separated list variant of :meth:`quantity`."""
        found = [(u, f"{base}_{u}") for u in units if f"{base}_{u}" in self._raw]
        if len(found) > 1:
            raise ConfigError(f"{base}: give exactly one of "
                              + ", ".join(k for _, k in found))
        if not found:
            return tuple(default)
        unit, key = found[0]
        text = self._take(key)
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise ConfigError(f"{key}: empty list")
        return tuple(self._parse_float(key, s) * UNIT_SCALES[unit] for s in items)

    def number(self, key: str, default: float) -> float:
        text = self._take(key)
        return default if text is None else self._parse_float(key, text)

    def integer(self, key: str, default: int, minimum: int | None = None) -> int:
        text = self._take(key)
        if text is None:
            value = default
        else:
            try:
                value = int(text)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}")
        return value

    def boolean(self, key: str, default: bool) -> bool:
        text = self._take(key)
        if text is None:
            return default
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{key}: expected true/false, got {text!r}")

    def string(self, key: str, default: str, choices: tuple[str, ...] | None = None) -> str:
        text = self._take(key)
        value = default if text is None else text
        if choices is not None and value not in choices:
            raise ConfigError(f"{key}: must be one of {choices}, got {value!r}")
        return value

    def has(self, key: str) -> bool:
        return key in self._raw

    def finish(self, sections: tuple[str, ...]) -> None:
        """Reject unconsumed keys inside the scenario's own sections."""
        stray = sorted(
            key for key in self._raw
            if key.split(".", 1)[0] in sections and key not in self._consumed
        )
        if stray:
            raise ConfigError("unknown config keys: " + ", ".join(stray))
