"""
Percolation thresholds of the degree-constrained nearest-neighbor graphs that follow
from an upper bound on the bond percolation threshold ``p_c(d)``.

For ``k = 2dp``:

- the DnG percolates if ``2dp > 2d * p_c(d)``, and does not if ``2dp <= 1``;
- the BnG percolates if ``2dp`` is an integer with ``2dp > 1 + 2d * sqrt(p_c(d))``,
  and does not if ``2dp <= floor(sqrt(2d))``;
- the UnG percolates whenever the DnG does, and does not if ``2dp <= 1``.

Only these formulas and the shipped constants are evaluated; the known status of
the remaining integer cases is carried as metadata in :data:`LITERATURE_STATUS`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

from .local_laws import DomainError, format_number

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcBound:
    d: int
    value: float
    citation: str
    #: The value of ``2d * p_c`` as printed in the literature, when it differs in
    #: rounding from the product of the shipped constants.
    quoted_product: str | None = None


PC_UPPER: dict[int, PcBound] = {
    2: PcBound(2, 0.5, "Kesten (1980): p_c(2) = 1/2 for bond percolation on Z^2"),
    3: PcBound(3, 0.347297, "published rigorous upper bound p_c(3) <= 0.347297"),
    4: PcBound(
        4,
        0.2788,
        "Gomes et al. (2021), upper bounds for bond percolation, p. 14: p_c(4) <= 0.2788",
        quoted_product="2.2305",
    ),
    5: PcBound(
        5,
        0.2284,
        "Gomes et al. (2021), upper bounds for bond percolation, p. 14: p_c(5) <= 0.2284",
    ),
}


class Status(NamedTuple):
    bng: str
    dng: str
    ung: str

    def __str__(self) -> str:
        return f"{self.bng}/{self.dng}/{self.ung}"


def _row(*cells: str) -> dict[str, Status]:
    keys = ["1", "2", "3", "4", "5", "6", ">=7"]
    return {k: Status(*c.split("/")) for k, c in zip(keys, cells)}


LITERATURE_STATUS: dict[str, dict[str, Status]] = {
    "1": _row("no/no/no", "yes/yes/yes"),
    "2": _row("no/no/no", "no/yes/yes", "open/yes/yes", "yes/yes/yes"),
    "3": _row(
        "no/no/no", "no/open/open", "no/yes/yes", "open/yes/yes", "yes/yes/yes", "yes/yes/yes"
    ),
    "4": _row(
        "no/no/no",
        "no/open/open",
        "no/yes/yes",
        "open/yes/yes",
        "open/yes/yes",
        "yes/yes/yes",
        "yes/yes/yes",
    ),
    "5": _row(
        "no/no/no",
        "no/open/open",
        "no/yes/yes",
        "open/yes/yes",
        "open/yes/yes",
        "yes/yes/yes",
        "yes/yes/yes",
    ),
    ">=6": _row(
        "no/no/no",
        "no/open/open",
        "no/yes/yes",
        "open/yes/yes",
        "open/yes/yes",
        "open/yes/yes",
        "open/yes/yes",
    ),
    "large": _row(
        "no/no/no",
        "no/yes/yes",
        "no/yes/yes",
        "no/yes/yes",
        "no/yes/yes",
        "no/yes/yes",
        "open/yes/yes",
    ),
}
"""
Known status (BnG/DnG/UnG) of the ``k``-neighbor graphs for integer ``k``, by dimension
row (``'1'`` to ``'5'``, ``'>=6'``, ``'large'`` for all sufficiently large ``d``) and ``k``
column (``'1'`` to ``'6'``, ``'>=7'``).
"""


def literature_status(d: int, k: int) -> Status | None:
    if not 1 <= k <= 2 * d:
        return None
    row = LITERATURE_STATUS[str(d) if d <= 5 else ">=6"]
    return row.get(str(k) if k <= 6 else ">=7")


@dataclass(frozen=True)
class Zone:
    k: int
    derived: Status
    literature: Status | None


@dataclass
class ThresholdReport:
    d: int
    pc_upper: float
    citation: str
    dng_threshold: str  #: DnG percolates for ``2dp`` above this value.
    bng_from: int | None  #: Smallest integer ``2dp`` for which the BnG provably percolates.
    bng_none_up_to: int  #: The BnG does not percolate for integer ``2dp`` up to this value.
    zones: list[Zone]

    def lines(self) -> list[str]:
        d = self.d
        out = [
            f"d = {d}, p_c({d}) <= {format_number(self.pc_upper)}  [{self.citation}]",
            f"DnG percolates for 2dp > {self.dng_threshold}",
        ]
        if self.bng_from is None:
            out.append(f"BnG: no integer 2dp <= {2 * d} is covered by the bound")
        else:
            out.append(f"BnG percolates for integer 2dp ≥ {self.bng_from}")
        out.append(f"BnG does not percolate for 2dp ≤ {self.bng_none_up_to}")
        out.append("k   derived (BnG/DnG/UnG)   literature")
        for z in self.zones:
            lit = "-" if z.literature is None else str(z.literature)
            out.append(f"{z.k:<3} {str(z.derived):<23} {lit}")
        return out

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "pc_upper": self.pc_upper,
            "citation": self.citation,
            "dng_threshold": self.dng_threshold,
            "bng_from": self.bng_from,
            "bng_none_up_to": self.bng_none_up_to,
            "zones": [
                {
                    "k": z.k,
                    "derived": str(z.derived),
                    "literature": None if z.literature is None else str(z.literature),
                }
                for z in self.zones
            ],
        }


def threshold_report(d: int, pc_upper: float | None = None) -> ThresholdReport:
    """
    Evaluate the threshold formulas in dimension ``d``.

    ``pc_upper`` defaults to the shipped constant for ``d``; dimensions without one
    need it explicitly.
    """
    if d < 1:
        raise DomainError(f"dimension must be >= 1; got {d}")
    quoted = None
    if pc_upper is None:
        if d not in PC_UPPER:
            raise DomainError(
                f"no built-in upper bound on p_c({d}); pass one explicitly (known: d in {sorted(PC_UPPER)})"
            )
        bound = PC_UPPER[d]
        pc_upper, citation, quoted = bound.value, bound.citation, bound.quoted_product
    else:
        citation = "user-supplied"
    if not 0 < pc_upper <= 1:
        raise DomainError(f"`pc_upper` must be in (0, 1]; got {pc_upper}")

    m = 2 * d
    dng_x = m * pc_upper
    bng_x = 1 + m * math.sqrt(pc_upper)
    bng_from = math.floor(bng_x) + 1
    if bng_from > m or d < 2:
        bng_from = None
    bng_none = math.isqrt(m)

    zones = []
    for k in range(1, m + 1):
        dng = "yes" if k > dng_x else ("no" if k <= 1 else "open")
        if bng_from is not None and k >= bng_from:
            bng = "yes"
        elif k <= bng_none:
            bng = "no"
        else:
            bng = "open"
        # DnG percolation implies UnG percolation; at k = 1 neither percolates.
        ung = dng
        zones.append(Zone(k, Status(bng, dng, ung), literature_status(d, k)))

    logger.debug("threshold report for d=%d with p_c <= %s", d, pc_upper)
    return ThresholdReport(
        d=d,
        pc_upper=pc_upper,
        citation=citation,
        dng_threshold=quoted or f"{dng_x:.10g}",
        bng_from=bng_from,
        bng_none_up_to=bng_none,
        zones=zones,
    )
