"""Shared value types and tuning parameters for the storage engine.

Keys and values are signed 32-bit integers in this reference build; the
rest of the engine only relies on total ordering and fixed-width
encodability, so other fixed-width types could be substituted.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import NamedTuple

KEY_MIN = -(2**31)
KEY_MAX = 2**31 - 1
VALUE_MIN = -(2**31)
VALUE_MAX = 2**31 - 1

ENV_PREFIX = "SLSM_"


class Entry(NamedTuple):
    """One stored record: a key, a value, and a deletion marker.

    A tombstone is an explicit flag rather than a reserved sentinel value,
    so the full 32-bit value range stays available to callers.  Tombstone
    entries carry value 0 (canonicalized at creation and on persistence so
    equal-key tombstones serialize to identical bytes).
    """

    key: int
    value: int
    tombstone: bool = False


def tombstone(key: int) -> Entry:
    """Build the canonical deletion entry for ``key``."""
    return Entry(key, 0, True)


def round_half_up(x: float) -> int:
    """Round with ties away from zero toward +inf (2.5 -> 3)."""
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class TuningParams:
    """The engine's tuning knobs.

    Defaults are a baseline configuration that performs well across mixed
    workloads, so a zero-flag run is already sensibly tuned.

    r           -- number of memory runs (skiplists) in the buffer
    run_size    -- max distinct keys per memory run
    epsilon     -- Bloom filter false-positive target, in (0, 1)
    d           -- disk runs per level before the level must merge down
    m           -- fraction of runs merged per flush/cascade, in (0, 1]
    mu          -- fence-pointer page size, in entries
    """

    r: int = 50
    run_size: int = 800
    epsilon: float = 0.001
    d: int = 20
    m: float = 1.0
    mu: int = 512

    @property
    def flush_runs(self) -> int:
        """Memory runs flushed per merge: round(m * r), half-up."""
        return round_half_up(self.m * self.r)

    @property
    def merge_runs(self) -> int:
        """Disk runs cascaded per full level: round(m * d), half-up."""
        return round_half_up(self.m * self.d)

    @property
    def flush_entries(self) -> int:
        """Upper bound on entries per flush batch."""
        return self.flush_runs * self.run_size

    def level_capacity(self, level: int) -> int:
        """Max entries in one run of disk level ``level`` (1-based)."""
        return self.flush_entries * self.merge_runs ** (level - 1)


def validate(params: TuningParams) -> TuningParams:
    """Check every parameter constraint; return ``params`` unchanged.

    Raises ValueError naming the first violated constraint.
    """
    if not isinstance(params.r, int) or params.r < 1:
        raise ValueError("r out of range: must be an integer >= 1")
    if not isinstance(params.run_size, int) or params.run_size < 1:
        raise ValueError("run_size out of range: must be an integer >= 1")
    if not (0.0 < params.epsilon < 1.0):
        raise ValueError("epsilon out of range: must lie in the open interval (0, 1)")
    if not isinstance(params.d, int) or params.d < 1:
        raise ValueError("d out of range: must be an integer >= 1")
    if not (0.0 < params.m <= 1.0):
        raise ValueError("m out of range: must lie in (0, 1]")
    if not isinstance(params.mu, int) or params.mu < 1:
        raise ValueError("mu out of range: must be an integer >= 1")
    if round_half_up(params.m * params.r) < 1:
        raise ValueError("m*r rounds below 1: no runs would flush")
    if round_half_up(params.m * params.d) < 1:
        raise ValueError("m*d rounds below 1: no runs would cascade")
    return params


_ENV_FIELDS = {
    "R": ("r", int),
    "RN": ("run_size", int),
    "EPSILON": ("epsilon", float),
    "D": ("d", int),
    "M": ("m", float),
    "MU": ("mu", int),
}


def params_from_env(base: TuningParams | None = None,
                    environ: dict[str, str] | None = None) -> TuningParams:
    """Overlay SLSM_R / SLSM_RN / SLSM_EPSILON / SLSM_D / SLSM_M / SLSM_MU
    environment variables onto ``base`` (defaults if omitted)."""
    env = os.environ if environ is None else environ
    params = base if base is not None else TuningParams()
    overrides = {}
    for suffix, (field, conv) in _ENV_FIELDS.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw is not None:
            try:
                overrides[field] = conv(raw)
            except ValueError as exc:
                raise ValueError(f"bad {ENV_PREFIX}{suffix}={raw!r}: {exc}") from exc
    if overrides:
        params = replace(params, **overrides)
    return validate(params)


def check_key(key: int) -> int:
    """Reject keys outside the signed 32-bit range."""
    if not (KEY_MIN <= key <= KEY_MAX):
        raise ValueError(f"key {key} outside signed 32-bit range")
    return key


def check_value(value: int) -> int:
    """Reject values outside the signed 32-bit range."""
    if not (VALUE_MIN <= value <= VALUE_MAX):
        raise ValueError(f"value {value} outside signed 32-bit range")
    return value
