"""
Exact one-arm probabilities on small balls by exhaustive enumeration.

Every configuration of the relevant sites is run through the same exploration kernel
the Monte Carlo estimator uses; the resulting boolean event table is then contracted
with per-site weight vectors. Because the table does not depend on the weights, one
table serves every product measure over the same per-site alphabets, in particular the
whole interpolation family ``Q_U`` (law ``Q`` on the sites of ``U``, law ``P`` elsewhere).

Relevant sites and their alphabets:

- ``directed``: the sites of ``B_n``, each over the masks that carry positive probability
  under any of the laws involved.
- ``union``/``intersection``: additionally the sites of ``∂B_n``. A boundary site only
  matters through the edges into ``B_n``, so its masks are projected onto those directions.
- ``site:p``: the sites of ``B_{n+1}``, each open or closed.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from ._util import check_workers, get_shared_thread_pool, split_range
from .domination import check_local_domination, check_pairwise_domination
from .exploration import DIRECTED, UNION, EdgeSemantics, Semantics
from .lattice import BallIndex, LatticePoint, ResourceGuardError, ball
from .local_laws import (
    DomainError,
    LocalLaw,
    Number,
    full_mask,
    hitting_profile,
    make_aon,
    make_bond,
    make_iid,
)

logger = logging.getLogger(__name__)


DEFAULT_BUDGET = 2**26
"""Largest number of configurations the oracle will enumerate."""

_CHUNK = 2**20
_PARALLEL_THRESHOLD = 2**16


class BudgetExceededError(ResourceGuardError):
    pass


class HypothesisViolatedError(ValueError):
    pass


def _projected(values: np.ndarray, keep: int) -> np.ndarray:
    return np.unique(values & keep)


class OneArmOracle:
    """
    Event table of ``{o ⇝ ∂B_n}`` over all configurations of the relevant sites.

    Parameters
    ----------
    laws
        The laws whose supports make up the per-site alphabets. Ignored under site
        semantics. Any law later passed to :meth:`probability` must be supported
        on these alphabets.
    budget
        Upper limit on the number of configurations.
    workers
        Threads used to fill the table.
    """

    def __init__(
        self,
        d: int,
        n: int,
        sem: EdgeSemantics,
        laws: Sequence[LocalLaw] = (),
        *,
        budget: int = DEFAULT_BUDGET,
        workers: int = 1,
    ):
        if n < 0:
            raise DomainError(f"radius must be >= 0; got {n}")
        check_workers(workers)
        for law in laws:
            if law.dim != d:
                raise DomainError(f"law has dimension {law.dim} but d = {d}")
        if sem.needs_law and not laws:
            raise DomainError(f"semantics '{sem}' needs a local law")
        self.d = d
        self.n = n
        self.sem = sem
        self.bi: BallIndex = ball(d, n)
        self._workers = workers
        self._table: np.ndarray | None = None

        bi = self.bi
        if sem.variant is Semantics.SITE:
            sites = np.arange(len(bi))
            keeps = [0] * len(sites)
            alphabets = [np.array([0, 1], dtype=np.int64)] * len(sites)
        else:
            support = np.zeros(1 << (2 * d), dtype=bool)
            for law in laws:
                support |= law.as_float().probs > 0
            support = np.flatnonzero(support).astype(np.int64)
            if sem.variant is Semantics.DIRECTED:
                sites = bi.inner()
            else:
                sites = np.flatnonzero(bi.norms <= n + 1)
            keeps = [self._inward(u) for u in sites]
            alphabets = [_projected(support, keep) for keep in keeps]

        self.sites: np.ndarray = sites.astype(np.int64)
        self._keeps = keeps
        self._alphabets = alphabets
        self.radices = np.array([len(a) for a in alphabets], dtype=np.int64)
        self.configurations: int = math.prod(int(r) for r in self.radices)
        if self.configurations > budget:
            raise BudgetExceededError(
                f"{self.configurations} configurations over {len(sites)} sites exceed the budget of {budget}"
            )
        self._index = {int(u): k for k, u in enumerate(self.sites)}

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(d={self.d}, n={self.n}, sem='{self.sem}', configurations={self.configurations})"

    def _inward(self, u: int) -> int:
        # Directions that matter for site `u`: all of them inside B_n,
        # only those pointing into B_n on the boundary.
        if self.bi.norms[u] <= self.n:
            return full_mask(self.d)
        keep = 0
        for i, v in enumerate(self.bi.neighbor_table[u]):
            if v >= 0 and self.bi.norms[v] <= self.n:
                keep |= 1 << i
        return keep

    def points(self) -> list[LatticePoint]:
        return [self.bi.point(u) for u in self.sites]

    def site_index(self, x: LatticePoint | int) -> int:
        """Position of a site (given by point or ball ordinal) in :attr:`sites`."""
        u = x if isinstance(x, (int, np.integer)) else self.bi.ordinal(x)
        try:
            return self._index[int(u)]
        except KeyError:
            raise DomainError(f"site {x} is not relevant for this event") from None

    def table(self) -> np.ndarray:
        """Boolean event table of length :attr:`configurations`, computed on first use."""
        if self._table is None:
            self._table = self._build()
        return self._table

    def _build(self) -> np.ndarray:
        bi = self.bi
        values = np.concatenate(self._alphabets).astype(np.int64)
        offsets = np.concatenate([[0], np.cumsum(self.radices)[:-1]]).astype(np.int64)
        out = np.zeros(self.configurations, dtype=bool)
        args = (
            bi.neighbor_table,
            bi.norms,
            self.n,
            bi.origin,
            int(self.sem.variant),
            self.sites,
            self.radices,
            offsets,
            values,
        )
        logger.info(
            "enumerating %d configurations of %d sites (d=%d, n=%d, %s)",
            self.configurations,
            len(self.sites),
            self.d,
            self.n,
            self.sem,
        )
        if self._workers <= 1 or self.configurations < _PARALLEL_THRESHOLD:
            _kernels.event_table(*args, 0, self.configurations, out)
        else:
            pool = get_shared_thread_pool(f"locperc-oracle-{self._workers}", self._workers)
            tasks = [
                pool.submit(_kernels.event_table, *args, start, stop, out)
                for start, stop in split_range(self.configurations, self._workers)
            ]
            for t in tasks:
                t.result()
        return out

    def site_weights(self, law: LocalLaw | None, k: int) -> np.ndarray:
        """Probabilities of the alphabet of site number ``k`` under ``law``."""
        alphabet = self._alphabets[k]
        if self.sem.variant is Semantics.SITE:
            p = self.sem.site_p
            return np.array([1 - p, p])
        proj = np.arange(1 << (2 * self.d)) & self._keeps[k]
        probs = law.probs
        if law.is_exact:
            w = [sum(probs[proj == v], Fraction(0)) for v in alphabet]
            total = sum(w, Fraction(0))
            if total != 1:
                raise DomainError(f"law '{law.name}' puts mass outside the oracle's alphabet")
            return np.array(w, dtype=object)
        w = np.array([probs[proj == v].sum() for v in alphabet])
        if abs(w.sum() - 1) > 1e-9:
            raise DomainError(f"law '{law.name}' puts mass outside the oracle's alphabet")
        return w

    def probability(self, site_laws: Sequence[LocalLaw | None]) -> Number:
        """
        ``P[o ⇝ ∂B_n]`` when site number ``k`` samples from ``site_laws[k]``.
        """
        assert len(site_laws) == len(self.sites)
        weights = [self.site_weights(law, k) for k, law in enumerate(site_laws)]
        return contract(self.table(), self.radices, weights)

    def value(self, law: LocalLaw | None = None) -> Number:
        return self.probability([law] * len(self.sites))

    def interpolated(self, P: LocalLaw, Q: LocalLaw, U: Iterable[int]) -> Number:
        """The value under ``Q`` on site numbers in ``U`` and ``P`` elsewhere."""
        U = set(U)
        return self.probability([Q if k in U else P for k in range(len(self.sites))])


def contract(table: np.ndarray, radices: np.ndarray, weights: list[np.ndarray]) -> Number:
    """
    ``sum_c table[c] * prod_k weights[k][digit_k(c)]``, one site at a time from the last.
    """
    t = table
    for r, w in zip(reversed(radices), reversed(weights)):
        t = t.reshape(-1, int(r))
        if t.dtype == bool and w.dtype != object and t.shape[0] > _CHUNK:
            out = np.empty(t.shape[0])
            for start in range(0, t.shape[0], _CHUNK):
                out[start : start + _CHUNK] = t[start : start + _CHUNK] @ w
            t = out
        else:
            t = t @ w
    assert t.shape == (1,)
    return t[0]


def exact_one_arm(
    law: LocalLaw | None,
    d: int,
    n: int,
    sem: EdgeSemantics = DIRECTED,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> Number:
    """
    Exact ``P[o ⇝ ∂B_n]``. A ``Fraction`` if ``law`` is exact, otherwise a float.

    Raises ``BudgetExceededError`` if the configuration count is above ``budget``.
    """
    laws = [law] if sem.needs_law else []
    oracle = OneArmOracle(d, n, sem, laws, budget=budget, workers=workers)
    return oracle.value(law)


@dataclass(frozen=True)
class InterpolationSpec:
    """
    The product measure with law ``Q`` on the sites of ``U`` and ``P`` on all other sites.

    ``U`` may contain sites of ``B_{n+1}``; under directed semantics only ``B_n`` matters.
    """

    P: LocalLaw
    Q: LocalLaw
    U: frozenset[LatticePoint]
    d: int
    n: int

    def __post_init__(self):
        if self.P.dim != self.d or self.Q.dim != self.d:
            raise DomainError(
                f"law dimensions {self.P.dim}, {self.Q.dim} do not match d = {self.d}"
            )
        U = frozenset(tuple(int(c) for c in x) for x in self.U)
        for x in U:
            if len(x) != self.d or sum(abs(c) for c in x) > self.n + 1:
                raise DomainError(f"site {x} is outside B_{self.n + 1}")
        object.__setattr__(self, "U", U)


def exact_one_arm_interpolated(
    spec: InterpolationSpec,
    sem: EdgeSemantics = DIRECTED,
    *,
    budget: int = DEFAULT_BUDGET,
) -> Number:
    oracle = OneArmOracle(spec.d, spec.n, sem, [spec.P, spec.Q], budget=budget)
    U = [oracle.site_index(x) for x in spec.U if _relevant(oracle, x)]
    return oracle.interpolated(spec.P, spec.Q, U)


def _relevant(oracle: OneArmOracle, x: LatticePoint) -> bool:
    return oracle.bi.ordinal(x) in oracle._index


@dataclass
class InterpolationCheck:
    holds: bool
    counterexample: tuple[frozenset[LatticePoint], LatticePoint, Number, Number] | None
    pairs_checked: int
    exhaustive: bool

    def to_dict(self) -> dict:
        out = {
            "holds": self.holds,
            "pairs_checked": self.pairs_checked,
            "exhaustive": self.exhaustive,
            "counterexample": None,
        }
        if self.counterexample is not None:
            U, a, lhs, rhs = self.counterexample
            out["counterexample"] = {
                "U": sorted(list(x) for x in U),
                "a": list(a),
                "lhs": float(lhs),
                "rhs": float(rhs),
            }
        return out


def verify_interpolation_monotonicity(
    P: LocalLaw,
    Q: LocalLaw,
    d: int,
    n: int,
    sem: EdgeSemantics = DIRECTED,
    *,
    tol: float = 1e-12,
    budget: int = DEFAULT_BUDGET,
    max_exhaustive_sites: int = 14,
    chains: int = 64,
    seed: int = 0,
) -> InterpolationCheck:
    """
    Check ``Q_U[o ⇝ ∂B_n] <= Q_{U ∪ {a}}[o ⇝ ∂B_n]`` (within ``tol``).

    With at most ``max_exhaustive_sites`` relevant sites every pair ``(U, a)`` with
    ``a ∉ U`` is checked; otherwise ``chains`` random increasing chains from ``∅`` to
    all sites are followed.

    Directed semantics require the local comparison condition, intersection semantics
    the pairwise one; if it fails, ``HypothesisViolatedError`` is raised.
    """
    if sem.variant is Semantics.DIRECTED:
        if not check_local_domination(P, Q, "weak").holds:
            raise HypothesisViolatedError(
                f"{P.name} and {Q.name} violate the local comparison condition; interpolation monotonicity is not implied"
            )
    elif sem.variant is Semantics.INTERSECTION:
        if not check_pairwise_domination(P, Q).holds:
            raise HypothesisViolatedError(
                f"{P.name} and {Q.name} violate the pairwise comparison condition; interpolation monotonicity is not implied"
            )
    else:
        raise DomainError(f"no interpolation result is available for semantics '{sem}'")

    oracle = OneArmOracle(d, n, sem, [P, Q], budget=budget)
    s = len(oracle.sites)
    points = oracle.points()
    values: dict[int, Number] = {}

    def value(bits: int) -> Number:
        if bits not in values:
            values[bits] = oracle.interpolated(
                P, Q, [k for k in range(s) if (bits >> k) & 1]
            )
        return values[bits]

    def failure(bits, k, lhs, rhs):
        U = frozenset(points[j] for j in range(s) if (bits >> j) & 1)
        logger.info("interpolation monotonicity fails at U=%s, a=%s", sorted(U), points[k])
        return InterpolationCheck(False, (U, points[k], lhs, rhs), checked, exhaustive)

    checked = 0
    exhaustive = s <= max_exhaustive_sites
    if exhaustive:
        for bits in range(1 << s):
            lhs = value(bits)
            for k in range(s):
                if (bits >> k) & 1:
                    continue
                rhs = value(bits | (1 << k))
                checked += 1
                if lhs > rhs + tol:
                    return failure(bits, k, lhs, rhs)
    else:
        rng = np.random.default_rng(seed)
        for _ in range(chains):
            bits = 0
            for k in rng.permutation(s):
                k = int(k)
                lhs = value(bits)
                rhs = value(bits | (1 << k))
                checked += 1
                if lhs > rhs + tol:
                    return failure(bits, k, lhs, rhs)
                bits |= 1 << k
    logger.info("interpolation monotonicity holds over %d pairs", checked)
    return InterpolationCheck(True, None, checked, exhaustive)


# Pivotality


class PivotalCase(enum.Enum):
    CONNECTED = "connected-without-a"
    BLOCKED = "blocked-even-if-full"
    PIVOTAL = "pivotal"


@dataclass(frozen=True)
class Pivotality:
    case: PivotalCase
    mask: int | None = None  #: In the pivotal case, the neighbors of ``a`` that lead to ``∂B_n``.


_NO_SUPPORT = np.zeros(1, np.int64)
_NO_CUM = np.ones(1)


def _reached(bi: BallIndex, masks: np.ndarray) -> bool:
    size = len(bi)
    reached, _, _, _ = _kernels.explore_one(
        bi.neighbor_table,
        bi.norms,
        bi.n,
        bi.origin,
        _kernels.DIRECTED,
        _NO_SUPPORT,
        _NO_CUM,
        0.0,
        np.uint64(0),
        0,
        False,
        masks,
        np.ones(size, np.int64),
        np.zeros(size, np.int64),
        1,
        np.empty(size, np.int64),
        np.empty(size, np.int64),
    )
    return bool(reached)


def _classify(bi: BallIndex, masks: np.ndarray, a: int) -> Pivotality:
    masks = masks.copy()
    masks[a] = 0
    if _reached(bi, masks):
        return Pivotality(PivotalCase.CONNECTED)
    masks[a] = full_mask(bi.d)
    if not _reached(bi, masks):
        return Pivotality(PivotalCase.BLOCKED)
    A = 0
    for i in range(2 * bi.d):
        masks[a] = 1 << i
        if _reached(bi, masks):
            A |= 1 << i
    return Pivotality(PivotalCase.PIVOTAL, A)


def pivotality_cases(
    config: Mapping[LatticePoint, int], a: LatticePoint, d: int, n: int
) -> Pivotality:
    """
    Classify site ``a`` given the neighbor sets of all other sites of ``B_n`` under
    directed semantics; sites missing from ``config`` have no outgoing edges.

    - ``CONNECTED``: the origin reaches ``∂B_n`` whatever ``N(a)`` is;
    - ``BLOCKED``: it does not, even if ``N(a)`` is everything;
    - ``PIVOTAL``: it does iff ``N(a)`` meets the returned mask.
    """
    bi = ball(d, n)
    a = tuple(int(c) for c in a)
    if len(a) != d or sum(abs(c) for c in a) > n:
        raise DomainError(f"site {a} is outside B_{n}")
    masks = np.zeros(len(bi), np.int64)
    f = full_mask(d)
    for x, m in config.items():
        if not 0 <= int(m) <= f:
            raise DomainError(f"mask {m} out of range for dimension {d}")
        masks[bi.ordinal(x)] = int(m)
    return _classify(bi, masks, bi.ordinal(a))


def conditional_one_arm(
    spec: InterpolationSpec, a: LatticePoint, *, budget: int = DEFAULT_BUDGET
) -> Number:
    """
    Recompute the directed one-arm probability of ``spec`` by conditioning on every site
    except ``a``: weight each outer configuration by its probability and by the chance,
    under the law of ``a``, that ``N(a)`` completes the connection.
    """
    oracle = OneArmOracle(spec.d, spec.n, DIRECTED, [spec.P, spec.Q], budget=budget)
    bi = oracle.bi
    ka = oracle.site_index(a)
    U = {oracle.site_index(x) for x in spec.U if _relevant(oracle, x)}
    laws = [spec.Q if k in U else spec.P for k in range(len(oracle.sites))]
    hit_a = hitting_profile(laws[ka]).hit

    others = [k for k in range(len(oracle.sites)) if k != ka]
    alphabets = [oracle._alphabets[k] for k in others]
    weights = [oracle.site_weights(laws[k], k) for k in others]
    exact = all(law.is_exact for law in laws)
    masks = np.zeros(len(bi), np.int64)
    terms = []
    a_ord = int(oracle.sites[ka])
    for digits in itertools.product(*(range(len(x)) for x in alphabets)):
        w = 1
        for k, j in enumerate(digits):
            w = w * weights[k][j]
        if w == 0:
            continue
        for k, j in enumerate(digits):
            masks[oracle.sites[others[k]]] = alphabets[k][j]
        piv = _classify(bi, masks, a_ord)
        if piv.case is PivotalCase.CONNECTED:
            terms.append(w)
        elif piv.case is PivotalCase.PIVOTAL:
            terms.append(w * hit_a[piv.mask])
    if exact:
        return sum(terms, Fraction(0))
    return math.fsum(terms)


# Identities


def exact_dir_undir_check(
    p, d: int, n: int, *, budget: int = DEFAULT_BUDGET
) -> tuple[Number, Number]:
    """
    Directed i.i.d. one-arm probability and the undirected bond-percolation one at the
    same ``p``, from two separate enumerations.
    """
    exact = isinstance(p, Fraction)
    directed = exact_one_arm(make_iid(d, p, exact=exact), d, n, DIRECTED, budget=budget)
    undirected = exact_one_arm(make_bond(d, p, exact=exact), d, n, UNION, budget=budget)
    return directed, undirected


def exact_aon_site_check(
    p, d: int, n: int, *, budget: int = DEFAULT_BUDGET
) -> tuple[Number, Number]:
    """
    All-or-nothing one-arm probability at radius ``n + 1`` and the site-percolation
    one at radius ``n``.
    """
    aon = exact_one_arm(make_aon(d, p), d, n + 1, DIRECTED, budget=budget)
    site = exact_one_arm(None, d, n, EdgeSemantics.site(float(p)), budget=budget)
    return aon, site
