import numbers
import os
import threading
import warnings
import weakref
from concurrent.futures import ThreadPoolExecutor

from .local_laws import DomainError

MAX_WORKERS = os.cpu_count() or 1
"""
Default number of worker threads for Monte Carlo estimation.

The exploration kernels release the GIL, so threads give real parallelism
and the work is CPU bound; hence one thread per logical CPU.
"""

MAX_POOL_WORKERS = 256
"""Largest size of a named shared thread pool."""


def check_workers(workers: int) -> int:
    if isinstance(workers, bool) or not isinstance(workers, numbers.Integral):
        raise DomainError(f"`workers` must be an integer; got {workers!r}")
    if not 1 <= workers <= MAX_POOL_WORKERS:
        raise DomainError(f"`workers` must be in [1, {MAX_POOL_WORKERS}]; got {workers}")
    return workers


def split_range(total: int, parts: int) -> list[tuple[int, int]]:
    """
    Split ``range(total)`` into at most ``parts`` contiguous ``(start, stop)`` pieces
    whose sizes differ by at most one. Empty pieces are omitted.
    """
    assert total >= 0
    parts = max(1, min(parts, total or 1))
    q, r = divmod(total, parts)
    out = []
    start = 0
    for i in range(parts):
        stop = start + q + (1 if i < r else 0)
        if stop > start:
            out.append((start, stop))
        start = stop
    return out


# Adapted from ``mpservice.concurrent.futures``.

_global_thread_pools_: dict[str, ThreadPoolExecutor] = weakref.WeakValueDictionary()
_global_thread_pools_lock: threading.Lock = threading.Lock()


def get_shared_thread_pool(
    name: str = "default", max_workers: int | None = None
) -> ThreadPoolExecutor:
    with _global_thread_pools_lock:
        executor = _global_thread_pools_.get(name)
        # If the named pool exists, it is returned; the input `max_workers` is ignored.
        # Callers that need a specific size put the size in the name.
        if executor is None or executor._shutdown:
            # `executor._shutdown` is True if user inadvertently called `shutdown` on the executor.
            if name == "default":
                if max_workers is not None:
                    warnings.warn(
                        f"size of the 'default' thread pool is determined internally; the input {max_workers} is ignored"
                    )
                    max_workers = None
            else:
                if max_workers is not None:
                    assert 1 <= max_workers <= MAX_POOL_WORKERS, max_workers
            executor = ThreadPoolExecutor(max_workers)
            _global_thread_pools_[name] = executor
    return executor


if hasattr(os, "register_at_fork"):  # not available on Windows

    def _clear_global_state():
        for box in (_global_thread_pools_,):
            for name in list(box.keys()):
                pool = box.get(name)
                if pool is not None:
                    pool.shutdown(wait=False)
                box.pop(name, None)

        global _global_thread_pools_lock
        try:
            _global_thread_pools_lock.release()
        except RuntimeError:  # 'release unlocked lock'
            pass
        _global_thread_pools_lock = threading.Lock()

    os.register_at_fork(after_in_child=_clear_global_state)
