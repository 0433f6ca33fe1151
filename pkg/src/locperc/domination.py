"""
Comparison conditions between two local laws ``P`` and ``Q`` of the same dimension.

- :func:`check_local_domination`: ``P[N(o) ∩ A ≠ ∅] <= Q[N(o) ∩ A ≠ ∅]`` for every proper
  nonempty ``A``, in a weak or a strict form.
- :func:`check_pairwise_domination`: the same with the joint event
  ``{N(o) ∩ A ≠ ∅ and N(o) ∩ B ≠ ∅}`` over disjoint nonempty ``A, B``.
- :func:`check_stochastic_domination`: existence of a monotone coupling, decided as a
  maximum-flow problem on the subset lattice.

The module also carries the mass-moving reduction of exchangeable laws toward the
degree-constrained law of the same mean, and the exact convexity checks behind it.

When both laws are exact (``Fraction``-valued) every comparison is exact and ``tol``
is ignored.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np

from .local_laws import (
    TOL_INEQ,
    DegreeDistribution,
    DomainError,
    LocalLaw,
    NeighborMask,
    Number,
    as_fraction,
    format_number,
    full_mask,
    hitting_profile,
    make_aon,
    make_dng,
    make_exchangeable,
    popcounts,
    zeta_transform,
)

logger = logging.getLogger(__name__)


MAX_PAIRWISE_DIM = 6
MAX_STOCHASTIC_DIM = 3


class UnsupportedDimensionError(NotImplementedError):
    pass


def _common_mode(P: LocalLaw, Q: LocalLaw, tol: float) -> tuple[LocalLaw, LocalLaw, Number]:
    if P.dim != Q.dim:
        raise DomainError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    if P.is_exact and Q.is_exact:
        return P, Q, Fraction(0)
    return P.as_float(), Q.as_float(), tol


def _to_json_number(x: Number) -> float:
    return float(x)


@dataclass(frozen=True)
class Violation:
    mask: int
    lhs: Number
    rhs: Number


@dataclass
class DominationReport:
    holds: bool
    strict: bool
    violations: list[Violation]
    equalities: list[int]
    mode: str
    dim: int
    exact: bool = False

    def to_dict(self) -> dict:
        def render(m):
            return {"mask": int(m), "directions": NeighborMask(int(m), self.dim).names()}

        return {
            "holds": self.holds,
            "strict": self.strict,
            "mode": self.mode,
            "exact": self.exact,
            "violations": [
                render(v.mask)
                | {"lhs": _to_json_number(v.lhs), "rhs": _to_json_number(v.rhs)}
                for v in self.violations
            ],
            "equalities": [render(m) for m in self.equalities],
        }


def check_local_domination(
    P: LocalLaw,
    Q: LocalLaw,
    mode: str = "weak",
    tol: float = TOL_INEQ,
    *,
    full_range: bool = False,
) -> DominationReport:
    """
    Compare the hitting profiles of ``P`` and ``Q``.

    ``weak`` requires ``lhs <= rhs + tol`` for every mask; ``strict`` requires
    ``lhs < rhs - tol``. Masks with ``|lhs - rhs| <= tol`` are listed as equalities.

    By default the masks ``∅ ⊊ A ⊊ N_o`` are checked; ``full_range=True`` also includes
    ``A = ∅`` and ``A = N_o``.
    """
    if mode not in ("weak", "strict"):
        raise DomainError(f"mode must be 'weak' or 'strict'; got '{mode}'")
    P, Q, tol = _common_mode(P, Q, tol)
    hp = hitting_profile(P)
    hq = hitting_profile(Q)
    f = full_mask(P.dim)
    masks = np.arange(f + 1) if full_range else np.arange(1, f)
    lhs = hp.hit[masks]
    rhs = hq.hit[masks]
    diff = lhs - rhs
    equal = np.asarray(abs(diff) <= tol, dtype=bool)
    if mode == "weak":
        bad = np.asarray(diff > tol, dtype=bool)
    else:
        bad = np.asarray(diff >= -tol, dtype=bool)
    violations = [Violation(int(masks[i]), lhs[i], rhs[i]) for i in np.flatnonzero(bad)]
    equalities = [int(m) for m in masks[equal]]
    holds = not violations
    report = DominationReport(
        holds=holds,
        strict=holds and not equalities,
        violations=violations,
        equalities=equalities,
        mode=mode,
        dim=P.dim,
        exact=P.is_exact,
    )
    logger.debug(
        "local domination %s <= %s (%s): holds=%s, %d violations, %d equalities",
        P.name,
        Q.name,
        mode,
        holds,
        len(violations),
        len(equalities),
    )
    return report


@dataclass(frozen=True)
class PairViolation:
    a: int
    b: int
    lhs: Number
    rhs: Number


@dataclass
class PairwiseReport:
    holds: bool
    violations: list[PairViolation]
    pairs_checked: int
    equalities: int
    dim: int

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "pairs_checked": self.pairs_checked,
            "equalities": self.equalities,
            "violations": [
                {
                    "a": v.a,
                    "b": v.b,
                    "a_directions": NeighborMask(v.a, self.dim).names(),
                    "b_directions": NeighborMask(v.b, self.dim).names(),
                    "lhs": _to_json_number(v.lhs),
                    "rhs": _to_json_number(v.rhs),
                }
                for v in self.violations
            ],
        }


def submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` (including 0 and ``mask``) in increasing order."""
    bits = [i for i in range(mask.bit_length()) if (mask >> i) & 1]
    idx = np.arange(1 << len(bits), dtype=np.int64)
    out = np.zeros_like(idx)
    for j, b in enumerate(bits):
        out |= ((idx >> j) & 1) << b
    return out


def check_pairwise_domination(
    P: LocalLaw, Q: LocalLaw, tol: float = TOL_INEQ
) -> PairwiseReport:
    """
    Check ``P[N(o)∩A≠∅, N(o)∩B≠∅] <= Q[N(o)∩A≠∅, N(o)∩B≠∅]`` for every unordered pair
    of disjoint nonempty masks ``A, B``.
    """
    if P.dim > MAX_PAIRWISE_DIM:
        raise UnsupportedDimensionError(
            f"pairwise check supports d <= {MAX_PAIRWISE_DIM}; got {P.dim}"
        )
    P, Q, tol = _common_mode(P, Q, tol)
    hp = hitting_profile(P)
    hq = hitting_profile(Q)
    f = full_mask(P.dim)
    violations = []
    checked = 0
    equalities = 0
    for a in range(1, f + 1):
        bs = submasks(f ^ a)
        bs = bs[bs > a]
        if bs.size == 0:
            continue
        lhs = hp.joint_hits(a, bs)
        rhs = hq.joint_hits(a, bs)
        diff = lhs - rhs
        checked += bs.size
        equalities += int(np.count_nonzero(np.asarray(abs(diff) <= tol, dtype=bool)))
        for i in np.flatnonzero(np.asarray(diff > tol, dtype=bool)):
            violations.append(PairViolation(a, int(bs[i]), lhs[i], rhs[i]))
    assert checked == (3 ** (2 * P.dim) - 2 * 4**P.dim + 1) // 2
    return PairwiseReport(not violations, violations, checked, equalities, P.dim)


def _integer_weights(P: LocalLaw, Q: LocalLaw) -> tuple[list[int], list[int], int]:
    # Scale both vectors by a common denominator so that the flow is exact.
    p = [as_fraction(v) for v in P.probs]
    q = [as_fraction(v) for v in Q.probs]
    scale = 1
    for v in p + q:
        scale = math.lcm(scale, v.denominator)
    return (
        [int(v * scale) for v in p],
        [int(v * scale) for v in q],
        scale,
    )


def check_stochastic_domination(
    P: LocalLaw, Q: LocalLaw, tol: float = TOL_INEQ
) -> tuple[bool, list[int] | None]:
    """
    Decide whether ``Q`` stochastically dominates ``P`` on the subset lattice, i.e. whether
    there is a coupling with ``N_P ⊆ N_Q``.

    The transportation network has an arc ``S → T`` of unbounded capacity for every
    ``S ⊆ T``; domination holds iff the maximum flow carries all of ``P``'s mass.
    On failure, return the sorted masks of an up-set ``U`` with ``P[U] > Q[U]``. If some
    level ``{S: |S| >= j}`` separates the laws, ``U`` is the level with the smallest such
    ``j``; otherwise it is the up-closure of the source side of a minimum cut.
    """
    if P.dim != Q.dim:
        raise DomainError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    if P.dim > MAX_STOCHASTIC_DIM:
        raise UnsupportedDimensionError(
            f"stochastic domination check supports d <= {MAX_STOCHASTIC_DIM}; got {P.dim}"
        )
    f = full_mask(P.dim)
    pw, qw, scale = _integer_weights(P, Q)
    slack = 0 if (P.is_exact and Q.is_exact) else tol * scale

    G = nx.DiGraph()
    G.add_node("source")
    G.add_node("sink")
    q_support = [t for t in range(f + 1) if qw[t] > 0]
    for t in q_support:
        G.add_edge(("Q", t), "sink", capacity=qw[t])
    for s in range(f + 1):
        if pw[s] == 0:
            continue
        G.add_edge("source", ("P", s), capacity=pw[s])
        for t in q_support:
            if s & t == s:
                # No capacity attribute: unbounded.
                G.add_edge(("P", s), ("Q", t))

    total = sum(pw)
    flow, (reachable, _) = nx.minimum_cut(G, "source", "sink")
    logger.debug(
        "stochastic domination %s <= %s: flow %s of %s", P.name, Q.name, flow, total
    )
    if total - flow <= slack:
        return True, None

    pc = popcounts(P.dim)
    for j in range(1, 2 * P.dim + 1):
        level = np.flatnonzero(pc >= j)
        if sum(pw[m] for m in level) - sum(qw[m] for m in level) > slack:
            return False, [int(m) for m in level]

    seeds = np.zeros(f + 1, dtype=bool)
    for node in reachable:
        if isinstance(node, tuple) and node[0] == "P":
            seeds[node[1]] = True
    # Up-closure: B is in U iff some seed S is a subset of B.
    upset = np.flatnonzero(zeta_transform(seeds))
    assert sum(pw[m] for m in upset) > sum(qw[m] for m in upset)
    return False, [int(m) for m in upset]


def up_set_mass(law: LocalLaw, upset) -> Number:
    if law.is_exact:
        return sum((law.probs[m] for m in upset), Fraction(0))
    return math.fsum(law.probs[m] for m in upset)


# Exchangeable reduction


def exchangeable_reduce_step(dd: DegreeDistribution) -> DegreeDistribution | None:
    """
    One mass-moving step on the degree distribution; ``None`` if the range ``R <= 1``.

    With ``n+``/``n-`` the largest/smallest degree in the support and
    ``m = min(alpha[n+], alpha[n-])``, remove ``m`` from both ends and put ``2m`` at
    the midpoint if ``n+ + n-`` is even, otherwise ``m`` at each of the two
    middle degrees. The mean is unchanged and the range drops by at least one.
    """
    support = dd.support()
    lo, hi = support[0], support[-1]
    if hi - lo <= 1:
        return None
    alphas = list(dd.alphas)
    a_lo, a_hi = alphas[lo], alphas[hi]
    m = min(a_lo, a_hi)
    zero = m - m
    # The exhausted end is set to an exact zero so that the range shrinks.
    alphas[lo] = zero if a_lo == m else a_lo - m
    alphas[hi] = zero if a_hi == m else a_hi - m
    if (lo + hi) % 2 == 0:
        mid = (lo + hi) // 2
        alphas[mid] += 2 * m
    else:
        mid = (lo + hi) // 2
        alphas[mid] += m
        alphas[mid + 1] += m
    out = DegreeDistribution(
        dd.dim, np.array(alphas, dtype=object if dd.is_exact else np.float64)
    )
    assert out.range_ < dd.range_
    return out


def exchangeable_reduce(
    dd: DegreeDistribution, tol: float = TOL_INEQ
) -> list[DegreeDistribution]:
    """
    Apply :func:`exchangeable_reduce_step` until the range is at most one.

    Returns the whole chain, starting with ``dd``. The last element is the degree
    distribution of the degree-constrained law with the same mean.
    """
    chain = [dd]
    while (nxt := exchangeable_reduce_step(chain[-1])) is not None:
        chain.append(nxt)
    last = chain[-1]
    m = 2 * dd.dim
    p = dd.mean / m
    if not dd.is_exact:
        p = min(max(p, 0.0), 1.0)
    target = DegreeDistribution.from_law(make_dng(dd.dim, p, exact=dd.is_exact))
    if dd.is_exact:
        assert list(last.alphas) == list(target.alphas)
    else:
        assert np.allclose(last.alphas, target.alphas, rtol=0, atol=tol)
    logger.debug("exchangeable reduction finished in %d steps", len(chain) - 1)
    return chain


def exchangeable_spread_step(
    dd: DegreeDistribution, lo: int, hi: int, amount: Number
) -> DegreeDistribution:
    """
    The reverse of :func:`exchangeable_reduce_step`: take ``amount`` from each middle
    degree of ``[lo, hi]`` (twice ``amount`` from the midpoint if ``lo + hi`` is even)
    and put ``amount`` at ``lo`` and at ``hi``. The mean is unchanged.
    """
    m = 2 * dd.dim
    if not (0 <= lo and lo + 2 <= hi <= m):
        raise DomainError(f"need 0 <= lo <= hi - 2 <= {m - 2}; got lo={lo}, hi={hi}")
    alphas = list(dd.alphas)
    mid = (lo + hi) // 2
    takes = [(mid, 2 * amount)] if (lo + hi) % 2 == 0 else [(mid, amount), (mid + 1, amount)]
    for k, t in takes:
        if t < 0 or alphas[k] < t:
            raise DomainError(
                f"cannot move {format_number(t)} from degree {k} holding {format_number(alphas[k])}"
            )
        alphas[k] -= t
    alphas[lo] += amount
    alphas[hi] += amount
    return DegreeDistribution(
        dd.dim, np.array(alphas, dtype=object if dd.is_exact else np.float64)
    )


def random_exchangeable(
    d: int, p: float, rng: np.random.Generator, *, steps: int | None = None
) -> DegreeDistribution:
    """
    A random degree distribution with mean ``2dp``.

    Starts from the degree-constrained law of mean ``2dp`` and applies ``steps``
    random :func:`exchangeable_spread_step` moves. Each move picks a feasible
    ``(lo, hi)`` uniformly and moves a uniform share of the mass available in the
    middle. ``steps`` defaults to a uniform draw from ``1..4d``.
    """
    if not 0 <= p <= 1:
        raise DomainError(f"`p` must be in [0, 1]; got {p}")
    m = 2 * d
    dd = DegreeDistribution.from_law(make_dng(d, p))
    if steps is None:
        steps = int(rng.integers(1, 2 * m + 1))
    for _ in range(steps):
        moves = [
            (lo, hi, room)
            for lo in range(m - 1)
            for hi in range(lo + 2, m + 1)
            if (room := _spread_room(dd.alphas, lo, hi)) > 0
        ]
        if not moves:
            break
        lo, hi, room = moves[int(rng.integers(len(moves)))]
        dd = exchangeable_spread_step(dd, lo, hi, room * rng.uniform())
    return dd


def _spread_room(alphas, lo: int, hi: int):
    # Largest amount exchangeable_spread_step can move for this (lo, hi).
    mid = (lo + hi) // 2
    if (lo + hi) % 2 == 0:
        return alphas[mid] / 2
    return min(alphas[mid], alphas[mid + 1])


# Exact convexity machinery


def f_value(n: int, ell: int, d: int) -> Fraction:
    """Probability that a uniform ``n``-subset of the ``2d`` directions hits a fixed ``ell``-set."""
    m = 2 * d
    return 1 - Fraction(math.comb(m - n, ell), math.comb(m, ell))


def f_concavity_check(d: int) -> bool:
    m = 2 * d
    for ell in range(m + 1):
        f = [f_value(n, ell, d) for n in range(m + 1)]
        for n in range(1, m):
            if f[n - 1] + f[n + 1] - 2 * f[n] > 0:
                logger.info("concavity fails at d=%d, n=%d, ell=%d", d, n, ell)
                return False
    return True


def binomial_convexity_check(d: int) -> bool:
    """``n -> C(n, ell)`` has non-negative second differences on ``{0, ..., 2d}`` for every ``ell``."""
    m = 2 * d
    return all(
        math.comb(n - 1, ell) + math.comb(n + 1, ell) - 2 * math.comb(n, ell) >= 0
        for ell in range(m + 1)
        for n in range(1, m)
    )


@dataclass
class SandwichResult:
    p: Number
    lower: DominationReport  #: all-or-nothing law vs. the exchangeable law
    upper: DominationReport  #: the exchangeable law vs. the degree-constrained law

    @property
    def holds(self) -> bool:
        return self.lower.holds and self.upper.holds


def check_sandwich(dd: DegreeDistribution, tol: float = TOL_INEQ) -> SandwichResult:
    """
    Compare the exchangeable law of ``dd`` against the all-or-nothing law (below) and the
    degree-constrained law (above) with the same mean ``2dp``, over all masks including
    ``∅`` and ``N_o``.
    """
    law = make_exchangeable(dd)
    p = dd.mean / (2 * dd.dim)
    if not dd.is_exact:
        p = min(max(p, 0.0), 1.0)
    lower = check_local_domination(
        make_aon(dd.dim, p, exact=dd.is_exact), law, tol=tol, full_range=True
    )
    upper = check_local_domination(
        law, make_dng(dd.dim, p, exact=dd.is_exact), tol=tol, full_range=True
    )
    return SandwichResult(p, lower, upper)
