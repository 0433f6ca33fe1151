"""
The breadth-first exploration of the cluster of the origin, with lazy per-site sampling.

Generations follow the usual recursion: ``C_0 = {o}`` and ``C_{k+1}`` collects the
not-yet-seen sites joined by an open edge to a site of ``C_k``. The one-arm event
``{o ⇝ ∂B_n}`` occurs when some generation meets ``∂B_n``; the exploration stops there,
so it never touches a site outside ``B_{n+1}``.

Which edges are open is decided by :class:`EdgeSemantics`:

- ``directed``: ``u → v`` iff ``v ∈ N(u)``;
- ``union``: ``{u, v}`` iff ``v ∈ N(u)`` or ``u ∈ N(v)``;
- ``intersection``: ``{u, v}`` iff ``v ∈ N(u)`` and ``u ∈ N(v)``;
- ``site:p``: independent site percolation with open probability ``p``; a path counts
  only if every vertex on it, the origin and the terminal boundary vertex included, is open.
  The local law is ignored.

Each site's neighbor set is sampled at most once per run, on first touch, from a
counter-based stream keyed by ``(seed, sample, site)``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from typing_extensions import Self

from . import _kernels
from .lattice import MAX_BALL_SITES, ball
from .local_laws import DomainError, LocalLaw

logger = logging.getLogger(__name__)

SEED_MASK = 2**64 - 1


class Semantics(enum.IntEnum):
    DIRECTED = _kernels.DIRECTED
    UNION = _kernels.UNION
    INTERSECTION = _kernels.INTERSECTION
    SITE = _kernels.SITE


_ALIASES = {
    "directed": Semantics.DIRECTED,
    "dng": Semantics.DIRECTED,
    "union": Semantics.UNION,
    "undirected": Semantics.UNION,
    "ung": Semantics.UNION,
    "intersection": Semantics.INTERSECTION,
    "bidirectional": Semantics.INTERSECTION,
    "bng": Semantics.INTERSECTION,
    "site": Semantics.SITE,
}


@dataclass(frozen=True)
class EdgeSemantics:
    variant: Semantics
    site_p: float | None = None

    def __post_init__(self):
        if self.variant is Semantics.SITE:
            if self.site_p is None or not 0 <= self.site_p <= 1:
                raise DomainError(
                    f"site semantics needs an open probability in [0, 1]; got {self.site_p}"
                )
        elif self.site_p is not None:
            raise DomainError(f"`site_p` is only meaningful for site semantics")

    def __str__(self) -> str:
        name = self.variant.name.lower()
        if self.variant is Semantics.SITE:
            return f"{name}:{self.site_p:g}"
        return name

    @property
    def needs_law(self) -> bool:
        return self.variant is not Semantics.SITE

    @classmethod
    def site(cls, p: float) -> Self:
        return cls(Semantics.SITE, float(p))

    @classmethod
    def parse(cls, text: str) -> Self:
        """
        Parse ``'directed'``, ``'union'``, ``'intersection'`` (or ``'dng'``, ``'ung'``, ``'bng'``)
        and ``'site:<p>'``.
        """
        name, _, param = text.strip().lower().partition(":")
        try:
            variant = _ALIASES[name]
        except KeyError:
            raise DomainError(
                f"unknown semantics '{text}'; expected one of {sorted(_ALIASES)}"
            ) from None
        if variant is Semantics.SITE:
            if not param:
                raise DomainError("site semantics needs a probability, e.g. 'site:0.5'")
            try:
                return cls.site(float(param))
            except ValueError:
                raise DomainError(f"bad site probability '{param}'") from None
        if param:
            raise DomainError(f"semantics '{name}' takes no parameter")
        return cls(variant)


DIRECTED = EdgeSemantics(Semantics.DIRECTED)
UNION = EdgeSemantics(Semantics.UNION)
INTERSECTION = EdgeSemantics(Semantics.INTERSECTION)


@dataclass(frozen=True)
class ExplorationResult:
    reached_boundary: bool
    generations_used: int
    cluster_size: int  #: Sites of the cluster within ``B_{n+1}`` when the run stopped.
    sites_sampled: int  #: Sites whose neighbor set (or open flag) was drawn.


def derive_seed(seed: int, key: int) -> int:
    """A 64-bit seed derived from ``seed`` and ``key``, independent across keys."""
    return int(
        _kernels.split_seed(np.uint64(key & SEED_MASK), np.uint64(seed & SEED_MASK))
    )


def sampler_arrays(
    law: LocalLaw | None, d: int, sem: EdgeSemantics
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    The ``(support, cumulative probabilities, site_p)`` triple the kernels draw from.
    """
    if not sem.needs_law:
        return np.zeros(1, np.int64), np.ones(1), float(sem.site_p)
    if law is None:
        raise DomainError(f"semantics '{sem}' needs a local law")
    if law.dim != d:
        raise DomainError(f"law has dimension {law.dim} but d = {d}")
    probs = law.as_float().probs
    support = np.flatnonzero(probs > 0).astype(np.int64)
    cum = np.cumsum(probs[support])
    return support, cum, 0.0


def explore(
    law: LocalLaw | None,
    d: int,
    n: int,
    sem: EdgeSemantics,
    seed: int,
    *,
    sample: int = 0,
    reverse: bool = False,
    max_sites: int = MAX_BALL_SITES,
) -> ExplorationResult:
    """
    Run one exploration of the cluster of the origin up to ``∂B_n``.

    Parameters
    ----------
    law
        The local law; ignored (may be ``None``) under site semantics.
    seed, sample
        Key the counter-based stream; identical inputs give identical results.
    reverse
        Process each generation in reverse order. The one-arm outcome is the same either
        way, because every site owns its random variate.
    """
    if n < 0:
        raise DomainError(f"radius must be >= 0; got {n}")
    support, cum, site_p = sampler_arrays(law, d, sem)
    bi = ball(d, n, max_sites=max_sites)
    size = len(bi)
    reached, gens, csize, sampled = _kernels.explore_one(
        bi.neighbor_table,
        bi.norms,
        n,
        bi.origin,
        int(sem.variant),
        support,
        cum,
        site_p,
        np.uint64(seed & SEED_MASK),
        sample,
        reverse,
        np.zeros(size, np.int64),
        np.zeros(size, np.int64),
        np.zeros(size, np.int64),
        1,
        np.empty(size, np.int64),
        np.empty(size, np.int64),
    )
    return ExplorationResult(bool(reached), int(gens), int(csize), int(sampled))
