"""
Numba kernels shared by the exploration, Monte Carlo and exact-oracle modules.

Randomness is counter based: the uniform variate of a site is a hash of
``(seed, sample index, site ordinal)``. A site's neighbor set therefore does not depend
on the order in which the exploration reveals sites, and a sample's outcome does not
depend on which worker runs it.

Per-site state is kept in flat arrays indexed by ball ordinal. Instead of clearing the
arrays between samples, an entry is valid only when its stamp equals the current stamp.
"""

import numpy as np
from numba import njit, uint64

DIRECTED = 0
UNION = 1
INTERSECTION = 2
SITE = 3

# murmur_hash64a constants
_MULTIPLIER = uint64(0xC6A4A7935BD1E995)
_LENGTH = uint64(8)
_ROTATOR = uint64(47)
_ELEVEN = uint64(11)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


@njit(nogil=True, cache=True)
def split_seed(key, seed):
    """
    Mix ``key`` into ``seed`` (murmur_hash64a of one 8-byte word).

    If called from non-jitted code, pass ``numpy.uint64`` arguments.
    """
    k = uint64(key)
    h = uint64(seed) ^ (_LENGTH * _MULTIPLIER)

    k = k * _MULTIPLIER
    k ^= k >> _ROTATOR
    k = k * _MULTIPLIER
    h ^= k
    h = h * _MULTIPLIER

    h ^= h >> _ROTATOR
    h = h * _MULTIPLIER
    h ^= h >> _ROTATOR
    return h


@njit(nogil=True, cache=True)
def site_uniform(seed, sample, site):
    """Uniform variate in [0, 1) owned by ``site`` in sample number ``sample``."""
    h = split_seed(site, split_seed(sample, seed))
    return (h >> _ELEVEN) * _TO_UNIT


@njit(nogil=True, cache=True)
def _draw(site, sem, support, cum, site_p, seed, sample):
    u = site_uniform(seed, sample, site)
    if sem == SITE:
        return 1 if u < site_p else 0
    k = np.searchsorted(cum, u * cum[-1], side="right")
    if k >= support.shape[0]:
        k = support.shape[0] - 1
    return support[k]


@njit(nogil=True, cache=True)
def explore_one(
    nbr,
    norm,
    radius,
    origin,
    sem,
    support,
    cum,
    site_p,
    seed,
    sample,
    reverse,
    masks,
    mask_stamp,
    cluster_stamp,
    stamp,
    frontier,
    nextf,
):
    """
    Breadth-first exploration of the cluster of the origin inside ``B_{radius+1}``.

    ``masks[u]`` holds ``N(u)`` (or the open flag of ``u`` under site semantics) where
    ``mask_stamp[u] == stamp``; other sites are drawn on first touch from ``support``/``cum``
    (or with probability ``site_p``). Stops as soon as a site with norm ``radius + 1`` joins.

    Returns ``(reached, generations, cluster_size, sites_sampled)``.
    """
    ndir = nbr.shape[1]
    sampled = 0
    if mask_stamp[origin] != stamp:
        masks[origin] = _draw(origin, sem, support, cum, site_p, seed, sample)
        mask_stamp[origin] = stamp
        sampled += 1
    if sem == SITE and masks[origin] == 0:
        return False, 0, 0, sampled

    cluster_stamp[origin] = stamp
    size = 1
    frontier[0] = origin
    nf = 1
    gen = 0
    while True:
        nn = 0
        for idx in range(nf):
            if reverse:
                u = frontier[nf - 1 - idx]
            else:
                u = frontier[idx]
            if mask_stamp[u] != stamp:
                masks[u] = _draw(u, sem, support, cum, site_p, seed, sample)
                mask_stamp[u] = stamp
                sampled += 1
            mu = masks[u]
            for i in range(ndir):
                v = nbr[u, i]
                if v < 0 or cluster_stamp[v] == stamp:
                    continue
                if sem == DIRECTED:
                    is_open = (mu >> i) & 1 == 1
                else:
                    if mask_stamp[v] != stamp:
                        masks[v] = _draw(v, sem, support, cum, site_p, seed, sample)
                        mask_stamp[v] = stamp
                        sampled += 1
                    if sem == SITE:
                        is_open = masks[v] == 1
                    else:
                        out = (mu >> i) & 1 == 1
                        back = (masks[v] >> (i ^ 1)) & 1 == 1
                        if sem == UNION:
                            is_open = out or back
                        else:
                            is_open = out and back
                if is_open:
                    cluster_stamp[v] = stamp
                    size += 1
                    if norm[v] > radius:
                        return True, gen + 1, size, sampled
                    nextf[nn] = v
                    nn += 1
        if nn == 0:
            return False, gen, size, sampled
        gen += 1
        frontier, nextf = nextf, frontier
        nf = nn


@njit(nogil=True, cache=True)
def count_one_arm(
    nbr, norm, radius, origin, sem, support, cum, site_p, seed, start, stop, reverse
):
    """Number of samples ``start <= s < stop`` in which the origin reaches ``∂B_radius``."""
    size = nbr.shape[0]
    masks = np.zeros(size, np.int64)
    mask_stamp = np.zeros(size, np.int64)
    cluster_stamp = np.zeros(size, np.int64)
    frontier = np.empty(size, np.int64)
    nextf = np.empty(size, np.int64)
    hits = 0
    for s in range(start, stop):
        reached, _, _, _ = explore_one(
            nbr,
            norm,
            radius,
            origin,
            sem,
            support,
            cum,
            site_p,
            seed,
            s,
            reverse,
            masks,
            mask_stamp,
            cluster_stamp,
            s - start + 1,
            frontier,
            nextf,
        )
        if reached:
            hits += 1
    return hits


@njit(nogil=True, cache=True)
def event_table(
    nbr, norm, radius, origin, sem, sites, radices, offsets, values, start, stop, out
):
    """
    Evaluate the one-arm event on configurations ``start <= c < stop`` of ``sites``.

    Site ``sites[k]`` takes the values ``values[offsets[k] : offsets[k] + radices[k]]``;
    configurations are numbered as a mixed-radix counter with the last site fastest,
    so ``out`` reshaped to ``radices`` (C order) is indexed by per-site digits.
    Only ``out[start:stop]`` is written.
    """
    size = nbr.shape[0]
    nsites = sites.shape[0]
    masks = np.zeros(size, np.int64)
    mask_stamp = np.zeros(size, np.int64)
    cluster_stamp = np.zeros(size, np.int64)
    frontier = np.empty(size, np.int64)
    nextf = np.empty(size, np.int64)
    digits = np.zeros(nsites, np.int64)
    rem = start
    for k in range(nsites - 1, -1, -1):
        digits[k] = rem % radices[k]
        rem //= radices[k]
    # Sites outside `sites` are never revealed by a correct caller.
    no_support = np.zeros(1, np.int64)
    no_cum = np.ones(1)
    for c in range(start, stop):
        stamp = c - start + 1
        for k in range(nsites):
            s = sites[k]
            masks[s] = values[offsets[k] + digits[k]]
            mask_stamp[s] = stamp
        reached, _, _, _ = explore_one(
            nbr,
            norm,
            radius,
            origin,
            sem,
            no_support,
            no_cum,
            0.0,
            uint64(0),
            0,
            False,
            masks,
            mask_stamp,
            cluster_stamp,
            stamp,
            frontier,
            nextf,
        )
        out[c] = reached
        k = nsites - 1
        while k >= 0:
            digits[k] += 1
            if digits[k] < radices[k]:
                break
            digits[k] = 0
            k -= 1
