"""
Seeded Monte Carlo estimators built on the exploration kernel.

Sample ``s`` of a run with seed ``seed`` draws every site's neighbor set from the stream
keyed by ``(seed, s, site)``, so an estimate depends on ``(law, d, n, semantics, samples, seed)``
only, not on the number of workers or on how samples are scheduled.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from tqdm import tqdm

from . import _kernels
from ._util import check_workers, get_shared_thread_pool, split_range
from .exploration import SEED_MASK, EdgeSemantics, derive_seed, sampler_arrays
from .lattice import MAX_BALL_SITES, ball, ball_size
from .local_laws import DomainError, LocalLaw

logger = logging.getLogger(__name__)


CONFIDENCE = 0.95

ESTIMATE_COLUMNS = (
    "model",
    "d",
    "n",
    "semantics",
    "p_hat",
    "stderr",
    "ci_low",
    "ci_high",
    "samples",
    "successes",
    "seed",
    "version",
)


class InsufficientDataError(ValueError):
    pass


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    p_hat: float
    stderr: float
    ci_low: float
    ci_high: float
    samples: int
    successes: int
    seed: int
    n: int
    d: int
    model: str
    semantics: str

    def as_row(self) -> dict:
        from . import __version__

        row = asdict(self)
        row["version"] = __version__
        return {k: row[k] for k in ESTIMATE_COLUMNS}


def wilson_interval(
    successes: int, samples: int, confidence: float = CONFIDENCE
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clipped to ``[0, 1]``."""
    assert 0 <= successes <= samples and samples >= 1
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    p = successes / samples
    z2n = z * z / samples
    denom = 1 + z2n
    center = (p + z2n / 2) / denom
    half = z * math.sqrt(p * (1 - p) / samples + z2n / (4 * samples)) / denom
    lo = 0.0 if successes == 0 else min(p, max(0.0, center - half))
    hi = 1.0 if successes == samples else max(p, min(1.0, center + half))
    return lo, hi


def _estimate(
    successes: int,
    samples: int,
    *,
    seed: int,
    n: int,
    d: int,
    model: str,
    semantics: str,
) -> Estimate:
    p = successes / samples
    lo, hi = wilson_interval(successes, samples)
    return Estimate(
        p_hat=p,
        stderr=math.sqrt(p * (1 - p) / samples),
        ci_low=lo,
        ci_high=hi,
        samples=samples,
        successes=successes,
        seed=seed,
        n=n,
        d=d,
        model=model,
        semantics=semantics,
    )


def model_name(law: LocalLaw | None, sem: EdgeSemantics) -> str:
    return str(sem) if law is None or not sem.needs_law else law.name


def estimate_one_arm(
    law: LocalLaw | None,
    d: int,
    n: int,
    sem: EdgeSemantics,
    samples: int,
    seed: int,
    *,
    workers: int = 1,
    reverse: bool = False,
    max_sites: int = MAX_BALL_SITES,
    model: str | None = None,
) -> Estimate:
    """
    Estimate ``P[o ⇝ ∂B_n]`` from ``samples`` independent explorations.

    Parameters
    ----------
    workers
        Number of threads. The kernel releases the GIL; the result does not depend
        on this value.
    reverse
        Process each generation in reverse order (for order-invariance checks).
    model
        Descriptor written to the output; defaults to the law's name.
    """
    if samples < 1:
        raise DomainError(f"`samples` must be >= 1; got {samples}")
    if n < 0:
        raise DomainError(f"radius must be >= 0; got {n}")
    check_workers(workers)
    support, cum, site_p = sampler_arrays(law, d, sem)
    bi = ball(d, n, max_sites=max_sites)
    useed = np.uint64(seed & SEED_MASK)
    args = (
        bi.neighbor_table,
        bi.norms,
        n,
        bi.origin,
        int(sem.variant),
        support,
        cum,
        site_p,
        useed,
    )
    if workers <= 1:
        successes = int(_kernels.count_one_arm(*args, 0, samples, reverse))
    else:
        logger.info(
            "running %d samples on %d workers (d=%d, n=%d, %s)", samples, workers, d, n, sem
        )
        pool = get_shared_thread_pool(f"locperc-mc-{workers}", workers)
        tasks = [
            pool.submit(_kernels.count_one_arm, *args, start, stop, reverse)
            for start, stop in split_range(samples, workers)
        ]
        successes = sum(int(t.result()) for t in tasks)
    return _estimate(
        successes,
        samples,
        seed=seed,
        n=n,
        d=d,
        model=model or model_name(law, sem),
        semantics=str(sem),
    )


def survival_proxy(
    law: LocalLaw | None,
    d: int,
    sem: EdgeSemantics,
    samples: int,
    seed: int,
    *,
    max_sites: int = MAX_BALL_SITES,
    workers: int = 1,
) -> Estimate:
    """
    One-arm estimate at the largest radius whose ball fits in ``max_sites``.

    This is an upper bound proxy for ``θ``; no extrapolation is done. The radius is
    part of the model descriptor.
    """
    n = 0
    while ball_size(d, n + 2) <= max_sites:
        n += 1
    name = model_name(law, sem)
    return estimate_one_arm(
        law,
        d,
        n,
        sem,
        samples,
        seed,
        workers=workers,
        max_sites=max_sites,
        model=f"{name}@theta-proxy(n={n})",
    )


def _check_grid(grid: Sequence[float]) -> list[float]:
    grid = [float(x) for x in grid]
    if not grid:
        raise DomainError("parameter grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("parameter grid must be sorted")
    return grid


def _build(family: Callable[[float], LocalLaw], x: float) -> LocalLaw:
    try:
        return family(x)
    except DomainError as e:
        raise DomainError(f"at parameter {x}: {e}") from e


def scan_parameter(
    family: Callable[[float], LocalLaw],
    grid: Sequence[float],
    d: int,
    n: int,
    sem: EdgeSemantics,
    samples: int,
    seed: int,
    *,
    workers: int = 1,
    common_random_numbers: bool = True,
    quiet: bool = True,
) -> list[Estimate]:
    """
    One estimate per grid point.

    With ``common_random_numbers`` every point uses the same seed, which smooths the
    curve; otherwise point ``i`` uses a seed derived from ``(seed, i)``.
    """
    grid = _check_grid(grid)
    out = []
    for i, x in enumerate(tqdm(grid, desc="scan", disable=quiet)):
        law = _build(family, x)
        s = seed if common_random_numbers else derive_seed(seed, i)
        out.append(estimate_one_arm(law, d, n, sem, samples, s, workers=workers))
    return out


@dataclass(frozen=True)
class DecayFit:
    c_hat: float
    intercept: float
    radii: list[int]
    log_estimates: list[float]
    r_squared: float
    dropped: list[int]

    def to_dict(self) -> dict:
        return asdict(self)


def fit_decay(
    law: LocalLaw | None,
    d: int,
    radii: Sequence[int],
    sem: EdgeSemantics,
    samples: int,
    seed: int,
    *,
    workers: int = 1,
) -> DecayFit:
    """
    Least-squares fit of ``log p_hat(n)`` against ``n``; ``c_hat`` is minus the slope.

    Radii from the first zero estimate onward are dropped. Fewer than three usable
    radii raise ``InsufficientDataError``.
    """
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly increasing")
    used = []
    logs = []
    for r in radii:
        est = estimate_one_arm(law, d, r, sem, samples, seed, workers=workers)
        logger.debug("radius %d: p_hat=%s", r, est.p_hat)
        if est.successes == 0:
            break
        used.append(r)
        logs.append(math.log(est.p_hat))
    dropped = radii[len(used) :]
    if dropped:
        logger.warning("dropping radii %s with zero one-arm estimate", dropped)
    if len(used) < 3:
        raise InsufficientDataError(
            f"need at least 3 radii with a positive estimate; got {len(used)}"
        )
    res = stats.linregress(used, logs)
    return DecayFit(
        c_hat=float(-res.slope),
        intercept=float(res.intercept),
        radii=used,
        log_estimates=logs,
        r_squared=float(res.rvalue**2),
        dropped=dropped,
    )


def pseudo_critical(
    family: Callable[[float], LocalLaw],
    d: int,
    n: int,
    sem: EdgeSemantics,
    threshold: float,
    samples: int,
    seed: int,
    tol: float,
    *,
    lo: float = 0.0,
    hi: float = 1.0,
    common_random_numbers: bool = False,
    workers: int = 1,
    quiet: bool = True,
) -> float:
    """
    Finite-size pseudo-critical parameter: bisect ``[lo, hi]`` for the point where the
    one-arm estimate at radius ``n`` crosses ``threshold``, down to width ``tol``.

    The family is assumed increasing in its parameter. Every evaluation uses a fresh
    seed derived from ``seed`` unless ``common_random_numbers`` is set.
    """
    if not 0 < threshold < 1:
        raise DomainError(f"`threshold` must be in (0, 1); got {threshold}")
    if tol <= 0 or not lo < hi:
        raise DomainError(f"need tol > 0 and lo < hi; got tol={tol}, lo={lo}, hi={hi}")
    calls = 0

    def evaluate(x: float) -> float:
        nonlocal calls
        s = seed if common_random_numbers else derive_seed(seed, calls)
        calls += 1
        est = estimate_one_arm(_build(family, x), d, n, sem, samples, s, workers=workers)
        return est.p_hat

    f_lo = evaluate(lo)
    if f_lo >= threshold:
        raise BracketError(
            f"lower endpoint {lo} already has estimate {f_lo} >= threshold {threshold}"
        )
    f_hi = evaluate(hi)
    if f_hi < threshold:
        raise BracketError(
            f"upper endpoint {hi} has estimate {f_hi} < threshold {threshold}"
        )
    logger.info("bisecting [%s, %s] for threshold %s", lo, hi, threshold)
    steps = max(0, math.ceil(math.log2((hi - lo) / tol)))
    for _ in tqdm(range(steps), desc="bisect", disable=quiet):
        mid = (lo + hi) / 2
        f = evaluate(mid)
        logger.debug("bisection: f(%s) = %s", mid, f)
        if f >= threshold:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2
