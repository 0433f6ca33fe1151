"""
Local laws are probability measures on the subsets of the ``2d`` nearest-neighbor
directions of a site of :math:`\\mathbb{Z}^d`. Every site samples its neighbor set
``N(u)`` independently from the same local law.

A subset of directions is a *mask*: an ``int`` whose bit ``i`` is set iff direction ``i``
is in the subset. The direction ordering is fixed as ``(+e1, -e1, +e2, -e2, ..., +ed, -ed)``,
so ``+ej`` has bit ``2(j-1)`` and ``-ej`` has bit ``2(j-1) + 1``; the opposite of
direction ``i`` is ``i ^ 1``.

A :class:`LocalLaw` stores the dense vector of ``4**d`` mask probabilities. Two number
systems are supported: 64-bit floats (the default), and exact rationals
(``fractions.Fraction``) when a constructor is called with ``exact=True``.
Exact laws make equality cases of the comparison conditions decidable without a tolerance.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
from typing_extensions import Self

logger = logging.getLogger(__name__)


MAX_DIM = 12
"""Hard limit on the dimension; the dense vector has ``4**d`` entries."""

TOL_EQ = 1e-12
"""Tolerance for equalities in float mode."""

TOL_INEQ = 1e-9
"""Tolerance for inequality checks in float mode."""

Number = Union[float, Fraction]


class DomainError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    """
    Convert ``x`` to a ``Fraction``. Floats go through their shortest ``repr``,
    so ``0.1`` becomes ``1/10`` rather than the binary expansion.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as e:
            raise DomainError(f"not a number: '{x}'") from e
    raise TypeError(f"`{type(x)}` cannot be converted to a Fraction")


def format_number(x: Number) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{float(x):.10g}"


def _check_dim(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise DomainError(f"dimension must be an integer; got {d!r}")
    if not 1 <= d <= MAX_DIM:
        raise DomainError(f"dimension must be in [1, {MAX_DIM}]; got {d}")


def _prob(p, exact: bool, what: str = "p") -> Number:
    p = as_fraction(p) if exact else float(p)
    if not 0 <= p <= 1:
        raise DomainError(f"`{what}` must be in [0, 1]; got {p}")
    return p


def full_mask(d: int) -> int:
    return (1 << (2 * d)) - 1


def _axis_name(j: int, d: int) -> str:
    # j is 0-based
    if d <= 3:
        return "xyz"[j]
    return f"e{j + 1}"


@functools.cache
def direction_names(d: int) -> tuple[str, ...]:
    """
    Names of the ``2d`` directions in canonical order, e.g. ``('+x', '-x', '+y', '-y')``
    for ``d=2``; for ``d > 3`` the axes are named ``e1, e2, ...``.
    """
    out = []
    for j in range(d):
        a = _axis_name(j, d)
        out += ["+" + a, "-" + a]
    return tuple(out)


@functools.cache
def popcounts(d: int) -> np.ndarray:
    """Read-only array of ``|S|`` for every mask ``S`` of dimension ``d``."""
    masks = np.arange(1 << (2 * d), dtype=np.int64)
    pc = np.zeros_like(masks)
    for i in range(2 * d):
        pc += (masks >> i) & 1
    pc.flags.writeable = False
    return pc


@dataclass(frozen=True)
class NeighborMask:
    """
    A subset of the ``2d`` neighbor directions. Internally the package passes
    masks around as plain ``int``; this class is the checked, printable form.
    """

    bits: int
    dim: int

    def __post_init__(self):
        _check_dim(self.dim)
        if not 0 <= self.bits <= full_mask(self.dim):
            raise DomainError(
                f"mask {self.bits} out of range for dimension {self.dim}"
            )

    def __int__(self) -> int:
        return self.bits

    def __str__(self) -> str:
        return "{" + ",".join(self.names()) + "}"

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, direction: int) -> bool:
        return bool((self.bits >> direction) & 1)

    def names(self) -> list[str]:
        names = direction_names(self.dim)
        return [names[i] for i in range(2 * self.dim) if (self.bits >> i) & 1]

    def complement(self) -> Self:
        return self.__class__(full_mask(self.dim) ^ self.bits, self.dim)

    @classmethod
    def from_names(cls, names: Iterable[str], dim: int) -> Self:
        lookup = {n: i for i, n in enumerate(direction_names(dim))}
        bits = 0
        for name in names:
            try:
                bits |= 1 << lookup[name.strip()]
            except KeyError:
                raise DomainError(
                    f"unknown direction '{name}' for dimension {dim}"
                ) from None
        return cls(bits, dim)


def _as_prob_array(values, exact: bool) -> np.ndarray:
    if exact:
        return np.array([as_fraction(v) for v in values], dtype=object)
    return np.array(values, dtype=np.float64)


def _zeros(d: int, exact: bool) -> np.ndarray:
    if exact:
        return np.array([Fraction(0)] * (1 << (2 * d)), dtype=object)
    return np.zeros(1 << (2 * d))


def _sum(values: np.ndarray) -> Number:
    if values.dtype == object:
        return sum(values, Fraction(0))
    return math.fsum(values)


@dataclass(frozen=True, eq=False)
class LocalLaw:
    """
    A probability measure on the subsets of the neighbor set of a site.

    ``probs[S]`` is the probability that ``N(o)`` equals mask ``S``.
    The object is immutable; ``probs`` is a read-only array.
    ``name`` is a descriptor used in reports and output rows.
    """

    dim: int
    probs: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        _check_dim(self.dim)
        probs = np.asarray(self.probs)
        exact = probs.dtype == object
        probs = _as_prob_array(probs, exact)
        if probs.shape != (1 << (2 * self.dim),):
            raise DomainError(
                f"probability vector must have length {1 << (2 * self.dim)} for dimension {self.dim}; got shape {probs.shape}"
            )
        negative = any(v < 0 for v in probs) if exact else bool((probs < 0).any())
        if negative:
            raise DomainError("probabilities must be non-negative")
        total = _sum(probs)
        if exact:
            if total != 1:
                raise DomainError(f"probabilities sum to {total}, not 1")
        elif not abs(total - 1) <= TOL_EQ:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(dim={self.dim}, name='{self.name}')"

    def __eq__(self, other) -> bool:
        if other.__class__ is not self.__class__:
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.probs, other.probs))

    __hash__ = None

    def __getitem__(self, mask: int) -> Number:
        return self.probs[int(mask)]

    @property
    def is_exact(self) -> bool:
        return self.probs.dtype == object

    @property
    def full(self) -> int:
        return full_mask(self.dim)

    def support(self) -> np.ndarray:
        """Masks carrying positive probability, in increasing order."""
        return np.flatnonzero(self.as_float().probs > 0)

    def as_float(self) -> LocalLaw:
        if not self.is_exact:
            return self
        return LocalLaw(
            self.dim, np.array([float(v) for v in self.probs]), name=self.name
        )

    def allclose(self, other: LocalLaw, tol: float = TOL_EQ) -> bool:
        if self.dim != other.dim:
            return False
        a = self.as_float().probs
        b = other.as_float().probs
        return bool(np.all(np.abs(a - b) <= tol))

    def with_name(self, name: str) -> Self:
        return self.__class__(self.dim, self.probs, name=name)


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """
    Distribution of the out-degree ``|N(o)|``: ``alphas[n] = P[|N(o)| = n]`` for ``n = 0..2d``.
    """

    dim: int
    alphas: np.ndarray

    def __post_init__(self):
        _check_dim(self.dim)
        alphas = np.asarray(self.alphas)
        exact = alphas.dtype == object
        alphas = _as_prob_array(alphas, exact)
        if alphas.shape != (2 * self.dim + 1,):
            raise DomainError(
                f"degree distribution must have {2 * self.dim + 1} entries for dimension {self.dim}; got shape {alphas.shape}"
            )
        if any(v < 0 for v in alphas):
            raise DomainError("degree probabilities must be non-negative")
        total = _sum(alphas)
        if (total != 1) if exact else not abs(total - 1) <= TOL_EQ:
            raise DomainError(f"degree probabilities sum to {total}, not 1")
        alphas.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(dim={self.dim}, alphas={list(self.alphas)})"

    @classmethod
    def from_law(cls, law: LocalLaw) -> Self:
        pc = popcounts(law.dim)
        if law.is_exact:
            alphas = [Fraction(0)] * (2 * law.dim + 1)
            for k, v in zip(pc, law.probs):
                alphas[int(k)] += v
            return cls(law.dim, np.array(alphas, dtype=object))
        return cls(
            law.dim, np.bincount(pc, weights=law.probs, minlength=2 * law.dim + 1)
        )

    @property
    def is_exact(self) -> bool:
        return self.alphas.dtype == object

    @property
    def mean(self) -> Number:
        if self.is_exact:
            return sum((a * n for n, a in enumerate(self.alphas)), Fraction(0))
        return math.fsum(a * n for n, a in enumerate(self.alphas))

    def support(self) -> list[int]:
        return [n for n, a in enumerate(self.alphas) if a > 0]

    @property
    def range_(self) -> int:
        """``R = max support - min support``."""
        s = self.support()
        return s[-1] - s[0]


def _by_size(d: int, values: Sequence[Number], exact: bool) -> np.ndarray:
    # `values[n]` is the probability of each individual mask of size n.
    table = np.array(list(values), dtype=object if exact else np.float64)
    return table[popcounts(d)]


def make_iid(d: int, p, *, exact: bool = False) -> LocalLaw:
    """
    Each of the ``2d`` directed edges is open independently with probability ``p``.
    """
    _check_dim(d)
    p = _prob(p, exact)
    m = 2 * d
    values = [p**k * (1 - p) ** (m - k) for k in range(m + 1)]
    return LocalLaw(d, _by_size(d, values, exact), name=f"iid({format_number(p)})")


def dng_parameters(d: int, p) -> tuple[int, Number]:
    """
    Return ``(k, eps)`` with ``k = floor(2dp)`` and ``eps = 2dp - k``;
    at ``p = 1`` this is ``(2d, 0)``.
    """
    m = 2 * d
    if p == 1:
        return m, p - p
    x = m * p
    if not isinstance(x, Fraction) and abs(x - round(x)) < TOL_EQ:
        x = float(round(x))
    k = math.floor(x)
    return k, x - k


def make_dng(d: int, p, *, exact: bool = False) -> LocalLaw:
    """
    The local law of the ``2dp``-directed nearest-neighbor graph: choose ``k = floor(2dp)``
    directions uniformly at random, and with probability ``eps = 2dp - k`` one more
    direction uniformly from the remaining ones.
    """
    _check_dim(d)
    p = _prob(p, exact)
    m = 2 * d
    k, eps = dng_parameters(d, p)
    zero = Fraction(0) if exact else 0.0
    values = [zero] * (m + 1)
    values[k] = (1 - eps) / math.comb(m, k)
    if k < m:
        values[k + 1] = eps / math.comb(m, k + 1)
    return LocalLaw(d, _by_size(d, values, exact), name=f"dng({format_number(p)})")


def make_aon(d: int, p, *, exact: bool = False) -> LocalLaw:
    """The all-or-nothing law: all ``2d`` edges with probability ``p``, none otherwise."""
    _check_dim(d)
    p = _prob(p, exact)
    m = 2 * d
    zero = Fraction(0) if exact else 0.0
    values = [zero] * (m + 1)
    values[0] = 1 - p
    values[m] = p
    return LocalLaw(d, _by_size(d, values, exact), name=f"aon({format_number(p)})")


def make_exchangeable(dd: DegreeDistribution) -> LocalLaw:
    """Spread ``alphas[n]`` uniformly over the masks of size ``n``."""
    m = 2 * dd.dim
    values = [a / math.comb(m, n) for n, a in enumerate(dd.alphas)]
    return LocalLaw(dd.dim, _by_size(dd.dim, values, dd.is_exact), name="exchangeable")


def make_bond(d: int, p, *, exact: bool = False) -> LocalLaw:
    """
    Forward-edge law: each positive direction ``+ej`` independently with probability ``p``,
    negative directions never. Under union-undirected semantics every undirected edge
    ``{x, x + ej}`` is then open independently with probability ``p``, i.e. this is
    independent bond percolation.
    """
    _check_dim(d)
    p = _prob(p, exact)
    masks = np.arange(1 << (2 * d))
    backward = sum(1 << (2 * j + 1) for j in range(d))
    pc = popcounts(d)
    probs = _zeros(d, exact)
    for s in np.flatnonzero((masks & backward) == 0):
        k = int(pc[s])
        probs[s] = p**k * (1 - p) ** (d - k)
    return LocalLaw(d, probs, name=f"bond({format_number(p)})")


# Planar masks, with +x=1, -x=2, +y=4, -y=8.
CORNERS = (1 | 4, 1 | 8, 2 | 4, 2 | 8)
STICKS = (1 | 2, 4 | 8)
SINGLETONS = (1, 2, 4, 8)


def make_corner_stick(alpha, *, exact: bool = False) -> LocalLaw:
    """
    Planar law with exactly two outgoing edges: each of the four corners
    (one horizontal plus one vertical direction) has probability ``alpha``, each of the two
    sticks (both horizontal or both vertical) has probability ``beta = (1 - 4 alpha) / 2``.
    """
    alpha = as_fraction(alpha) if exact else float(alpha)
    if not 0 <= alpha <= Fraction(1, 4):
        raise DomainError(f"`alpha` must be in [0, 1/4]; got {alpha}")
    beta = (1 - 4 * alpha) / 2
    probs = _zeros(2, exact)
    for m in CORNERS:
        probs[m] = alpha
    for m in STICKS:
        probs[m] = beta
    return LocalLaw(2, probs, name=f"corner-stick({format_number(alpha)})")


def make_soft_opposite(eps, *, exact: bool = False) -> LocalLaw:
    """
    Planar law: one direction uniformly at random; with probability ``eps`` the
    opposite direction is opened too. Soft version of the stick model.
    """
    eps = _prob(eps, exact, "eps")
    probs = _zeros(2, exact)
    for m in SINGLETONS:
        probs[m] = (1 - eps) / 4
    for m in STICKS:
        # reached from either of its two directions
        probs[m] = eps / 2
    return LocalLaw(2, probs, name=f"soft-opposite({format_number(eps)})")


def make_soft_perpendicular(eps, *, exact: bool = False) -> LocalLaw:
    """
    Planar law: one direction uniformly at random; with probability ``eps`` one of the two
    perpendicular directions, chosen uniformly, is opened too. Soft version of the corner model.
    """
    eps = _prob(eps, exact, "eps")
    probs = _zeros(2, exact)
    for m in SINGLETONS:
        probs[m] = (1 - eps) / 4
    for m in CORNERS:
        # 2 starting directions x 1/4 x eps x 1/2
        probs[m] = eps / 4
    return LocalLaw(2, probs, name=f"soft-perpendicular({format_number(eps)})")


def mix_with_empty(q: LocalLaw, p) -> LocalLaw:
    """``p * q + (1 - p) * delta_empty``."""
    p = _prob(p, q.is_exact)
    probs = q.probs * p
    probs[0] = probs[0] + (1 - p)
    return LocalLaw(q.dim, probs, name=f"mix({q.name},{format_number(p)})")


def expected_degree(law: LocalLaw) -> Number:
    return DegreeDistribution.from_law(law).mean


def zeta_transform(values: np.ndarray) -> np.ndarray:
    """
    Sum-over-subsets transform ``g[B] = sum(values[S] for S subset of B)``,
    computed in place on a copy in ``O(2^m m)`` for an array of length ``2^m``.
    Works for float, integer, boolean (as logical or) and object (Fraction) arrays.
    """
    z = np.array(values, copy=True)
    nbits = z.shape[0].bit_length() - 1
    assert z.shape[0] == 1 << nbits
    for i in range(nbits):
        v = z.reshape(-1, 2, 1 << i)
        if z.dtype == bool:
            v[:, 1, :] |= v[:, 0, :]
        else:
            v[:, 1, :] += v[:, 0, :]
    return z


@dataclass(frozen=True, eq=False)
class HittingProfile:
    """
    ``hit[A] = P[N(o) ∩ A ≠ ∅]`` and ``zeta[B] = P[N(o) ⊆ B]`` for every mask.
    """

    dim: int
    hit: np.ndarray
    zeta: np.ndarray

    @property
    def is_exact(self) -> bool:
        return self.hit.dtype == object

    @property
    def full(self) -> int:
        return full_mask(self.dim)

    def joint_hit(self, a: int, b: int) -> Number:
        """
        ``P[N(o) ∩ A ≠ ∅ and N(o) ∩ B ≠ ∅]`` by inclusion-exclusion on the complements.
        """
        f = self.full
        z = self.zeta
        return 1 - z[f ^ a] - z[f ^ b] + z[f ^ (a | b)]

    def joint_hits(self, a: int, bs: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`joint_hit` for one ``a`` and an array of ``b``."""
        f = self.full
        z = self.zeta
        return 1 - z[f ^ a] - z[f ^ bs] + z[f ^ (a | bs)]


def hitting_profile(law: LocalLaw) -> HittingProfile:
    z = zeta_transform(law.probs)
    hit = 1 - z[::-1]  # complement of A is full - A
    hit[0] = Fraction(0) if law.is_exact else 0.0
    hit.flags.writeable = False
    z.flags.writeable = False
    return HittingProfile(law.dim, hit, z)


def is_exchangeable(
    law: LocalLaw, tol: float = TOL_EQ
) -> tuple[bool, tuple[int, int] | None]:
    """
    Whether all masks of equal size carry equal probability (within ``tol``;
    exactly for exact laws). On failure, also return a pair of same-size masks,
    the more probable one first.
    """
    pc = popcounts(law.dim)
    for n in range(2 * law.dim + 1):
        masks = np.flatnonzero(pc == n)
        vals = [law.probs[m] for m in masks]
        hi = max(range(len(vals)), key=vals.__getitem__)
        lo = min(range(len(vals)), key=vals.__getitem__)
        gap = vals[hi] - vals[lo]
        if (gap > 0) if law.is_exact else (gap > tol):
            return False, (int(masks[hi]), int(masks[lo]))
    return True, None


@dataclass(frozen=True)
class LawFamily:
    """
    A one-parameter family of local laws in a fixed dimension, e.g. ``iid`` in ``d = 2``.
    Calling it with the parameter builds the law.
    """

    name: str
    dim: int

    def __call__(self, x, *, exact: bool = False) -> LocalLaw:
        build = FAMILIES[self.name]
        if self.name in PLANAR_FAMILIES:
            return build(x, exact=exact)
        return build(self.dim, x, exact=exact)

    def __str__(self) -> str:
        return self.name


FAMILIES: dict[str, Callable[..., LocalLaw]] = {
    "iid": make_iid,
    "dng": make_dng,
    "aon": make_aon,
    "bond": make_bond,
    "corner-stick": make_corner_stick,
    "soft-opposite": make_soft_opposite,
    "soft-perpendicular": make_soft_perpendicular,
}

PLANAR_FAMILIES = ("corner-stick", "soft-opposite", "soft-perpendicular")


def family(name: str, d: int) -> LawFamily:
    if name not in FAMILIES:
        raise DomainError(
            f"unknown law family '{name}'; expected one of {sorted(FAMILIES)}"
        )
    _check_dim(d)
    if name in PLANAR_FAMILIES and d != 2:
        raise DomainError(f"law family '{name}' exists only in dimension 2; got {d}")
    return LawFamily(name, d)
