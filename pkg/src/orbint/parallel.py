"""Worker-count policy and an order-preserving parallel map."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError

ENV_VAR = "ORBINT_THREADS"


def worker_count() -> int:
    """Workers allowed by ``ORBINT_THREADS`` (unset or ``0`` means one per CPU)."""
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_VAR} must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"{ENV_VAR} must be a non-negative integer, got {raw!r}")
    return n if n > 0 else (os.cpu_count() or 1)


def ordered_map(fn, items: list) -> list:
    """``[fn(x) for x in items]``, spread over worker threads; results keep input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
