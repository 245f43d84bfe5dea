from __future__ import annotations

import os

DEFAULT_MAX_ENUM = 1 << 16
ENV_VAR = "DUALITY_LAB_MAX_ENUM"


def max_enum() -> int:
    """Upper bound on materialised pair tables, overridable from the environment."""
    raw = os.environ.get(ENV_VAR)
    if not raw:
        return DEFAULT_MAX_ENUM
    value = int(raw, 0)
    if value <= 0:
        raise ValueError(f"{ENV_VAR} must be positive, got {raw!r}")
    return value
