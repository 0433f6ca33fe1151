"""
Geometry of :math:`\\mathbb{Z}^d` as used by the exploration process and the exact oracle:
closed :math:`\\ell_1`-balls ``B_n``, their outer boundaries ``∂B_n = B_{n+1} \\ B_n``,
and nearest-neighbor bookkeeping in the canonical direction order
``(+e1, -e1, ..., +ed, -ed)``.

A :class:`BallIndex` materializes ``B_{n+1}`` once, in lexicographic order, and assigns
every point an ordinal. The hot loops work on ordinals only, through the precomputed
``neighbor_table``.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .local_laws import DomainError

logger = logging.getLogger(__name__)


MAX_BALL_SITES = 2**22
"""Largest ``|B_{n+1}|`` that :func:`ball` will materialize."""

LatticePoint = tuple[int, ...]


class ResourceGuardError(MemoryError):
    pass


def unit_vector(direction: int, d: int) -> LatticePoint:
    """The unit vector of direction ``direction`` (canonical index) in dimension ``d``."""
    assert 0 <= direction < 2 * d
    x = [0] * d
    x[direction // 2] = -1 if direction % 2 else 1
    return tuple(x)


def neighbors(x: Sequence[int]) -> list[LatticePoint]:
    """
    The ``2d`` nearest neighbors of ``x``; ``neighbors(x)[i] - x`` is the ``i``-th unit direction.
    """
    x = tuple(int(c) for c in x)
    out = []
    for j in range(len(x)):
        for step in (1, -1):
            y = list(x)
            y[j] += step
            out.append(tuple(y))
    return out


def l1_norm(x: Sequence[int]) -> int:
    return sum(abs(int(c)) for c in x)


def ball_size(d: int, n: int) -> int:
    """``|B_n|`` in dimension ``d``."""
    return sum(2**k * math.comb(d, k) * math.comb(n, k) for k in range(min(d, n) + 1))


@functools.cache
def _ball_points(d: int, r: int) -> np.ndarray:
    # All x in Z^d with |x|_1 <= r, in lexicographic order.
    if d == 1:
        pts = np.arange(-r, r + 1, dtype=np.int64)[:, None]
    else:
        blocks = []
        for c in range(-r, r + 1):
            rest = _ball_points(d - 1, r - abs(c))
            blocks.append(
                np.column_stack([np.full(len(rest), c, dtype=np.int64), rest])
            )
        pts = np.concatenate(blocks)
    pts.flags.writeable = False
    return pts


@dataclass(frozen=True, eq=False)
class BallIndex:
    """
    Enumeration of ``B_{n+1}`` in dimension ``d`` (the ball ``B_n`` plus its boundary).

    Attributes
    ----------
    points
        Array of shape ``(N, d)``, all ``x`` with ``|x|_1 <= n + 1`` in lexicographic order.
    norms
        ``|x|_1`` for every point.
    neighbor_table
        Array of shape ``(N, 2d)``; entry ``[u, i]`` is the ordinal of the ``i``-th neighbor
        of point ``u``, or ``-1`` if that neighbor lies outside ``B_{n+1}``.
    origin
        Ordinal of the origin.
    """

    d: int
    n: int
    points: np.ndarray
    norms: np.ndarray
    neighbor_table: np.ndarray
    origin: int
    _keys: np.ndarray
    _base: int

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(d={self.d}, n={self.n}, sites={len(self)})"

    def _key(self, x: Sequence[int]) -> int:
        shift = self.n + 2
        key = 0
        for c in x:
            key = key * self._base + int(c) + shift
        return key

    def ordinal(self, x: Sequence[int]) -> int:
        """Ordinal of point ``x``; ``KeyError`` if ``x`` is not in ``B_{n+1}``."""
        if len(x) != self.d or l1_norm(x) > self.n + 1:
            raise KeyError(tuple(x))
        return int(np.searchsorted(self._keys, self._key(x)))

    def point(self, ordinal: int) -> LatticePoint:
        return tuple(int(c) for c in self.points[ordinal])

    def inner(self) -> np.ndarray:
        """Ordinals of ``B_n``."""
        return np.flatnonzero(self.norms <= self.n)

    def boundary_ordinals(self) -> np.ndarray:
        """Ordinals of ``∂B_n``."""
        return np.flatnonzero(self.norms == self.n + 1)

    def ball_points(self, radius: int | None = None) -> list[LatticePoint]:
        """Points of ``B_radius`` (default ``B_n``) in lexicographic order."""
        r = self.n if radius is None else radius
        assert 0 <= r <= self.n + 1
        return [self.point(i) for i in np.flatnonzero(self.norms <= r)]


@functools.lru_cache(maxsize=32)
def ball(d: int, n: int, *, max_sites: int = MAX_BALL_SITES) -> BallIndex:
    """
    Materialize ``B_{n+1}`` with ordinals and neighbor table.

    Raises ``ResourceGuardError`` if ``|B_{n+1}|`` exceeds ``max_sites``.
    """
    if d < 1 or n < 0:
        raise DomainError(f"need d >= 1 and n >= 0; got d={d}, n={n}")
    r = n + 1
    size = ball_size(d, r)
    if size > max_sites:
        raise ResourceGuardError(
            f"|B_{r}| = {size} in dimension {d} exceeds the limit of {max_sites} sites"
        )
    base = 2 * r + 3
    if base**d >= 2**62:
        raise ResourceGuardError(
            f"coordinates of B_{r} in dimension {d} cannot be indexed"
        )
    points = _ball_points(d, r)
    assert points.shape[0] == size
    norms = np.abs(points).sum(axis=1)
    shift = r + 1
    weights = base ** np.arange(d - 1, -1, -1, dtype=np.int64)
    keys = (points + shift) @ weights
    # Lexicographic order of points is increasing order of keys.
    assert bool(np.all(np.diff(keys) > 0))

    table = np.full((size, 2 * d), -1, dtype=np.int64)
    for j in range(d):
        for s, step in enumerate((1, -1)):
            nb_keys = keys + step * weights[j]
            pos = np.searchsorted(keys, nb_keys)
            pos = np.minimum(pos, size - 1)
            found = keys[pos] == nb_keys
            table[found, 2 * j + s] = pos[found]

    origin = int(np.searchsorted(keys, shift * int(weights.sum())))
    for arr in (norms, table, keys):
        arr.flags.writeable = False
    logger.debug("materialized ball d=%d n=%d with %d sites", d, n, size)
    return BallIndex(d, n, points, norms, table, origin, keys, base)


def boundary(bi: BallIndex) -> list[LatticePoint]:
    """``∂B_n = B_{n+1} \\ B_n`` in lexicographic order."""
    return [bi.point(i) for i in bi.boundary_ordinals()]
