"""
Codecs for laws, reports and estimates.

Every serializer turns an object into ``bytes`` and back; ``dump`` and ``load`` move the
bytes through a ``Upath``, so the target may be a local file or a blob in cloud storage.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping
from fractions import Fraction
from typing import Protocol, TypeVar

import numpy as np
import orjson

from .local_laws import DomainError, LocalLaw, as_fraction, direction_names

T = TypeVar("T")


class Serializer(Protocol):
    @classmethod
    def serialize(cls, x: T, **kwargs) -> bytes: ...

    @classmethod
    def deserialize(cls, y: bytes, **kwargs) -> T: ...

    @classmethod
    def dump(cls, x: T, file, *, overwrite: bool = False, **kwargs) -> None:
        # `file` is a `Upath` object.
        y = cls.serialize(x, **kwargs)
        file.write_bytes(y, overwrite=overwrite)

    @classmethod
    def load(cls, file, **kwargs) -> T:
        # `file` is a `Upath` object.
        y = file.read_bytes()
        return cls.deserialize(y, **kwargs)


def _default(x):
    if isinstance(x, Fraction):
        return str(x)
    raise TypeError


class OrjsonSerializer(Serializer):
    """JSON for reports and results; numpy arrays and ``Fraction`` values are accepted."""

    @classmethod
    def serialize(cls, x, **kwargs) -> bytes:
        return orjson.dumps(
            x,
            default=_default,
            option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE,
            **kwargs,
        )

    @classmethod
    def deserialize(cls, y: bytes, **kwargs):
        return orjson.loads(y, **kwargs)


def _check_ordering(ordering: str | None, d: int) -> None:
    if ordering is None:
        return
    expected = ",".join(direction_names(d))
    if ordering.replace(" ", "") != expected:
        raise DomainError(
            f"law file uses direction ordering '{ordering}'; expected '{expected}'"
        )


class LawJsonSerializer(Serializer):
    """
    ``{"dim": d, "name": ..., "ordering": "+x,-x,...", "probs": [...]}``.

    Exact laws write their probabilities as fraction strings such as ``"1/16"``
    and carry ``"exact": true``.
    """

    @classmethod
    def to_dict(cls, law: LocalLaw) -> dict:
        if law.is_exact:
            probs = [str(v) for v in law.probs]
        else:
            probs = [float(v) for v in law.probs]
        z = {
            "dim": law.dim,
            "name": law.name,
            "ordering": ",".join(direction_names(law.dim)),
            "probs": probs,
        }
        if law.is_exact:
            z["exact"] = True
        return z

    @classmethod
    def from_dict(cls, z: Mapping) -> LocalLaw:
        try:
            d = int(z["dim"])
            probs = z["probs"]
        except KeyError as e:
            raise DomainError(f"law object is missing field {e}") from None
        _check_ordering(z.get("ordering"), d)
        if z.get("exact"):
            arr = np.array([as_fraction(v) for v in probs], dtype=object)
        else:
            arr = np.asarray(probs, dtype=np.float64)
        return LocalLaw(d, arr, name=z.get("name", "custom"))

    @classmethod
    def serialize(cls, x: LocalLaw) -> bytes:
        return OrjsonSerializer.serialize(cls.to_dict(x))

    @classmethod
    def deserialize(cls, y: bytes) -> LocalLaw:
        try:
            z = orjson.loads(y)
        except orjson.JSONDecodeError as e:
            raise DomainError(f"law file is not valid JSON: {e}") from e
        return cls.from_dict(z)


class LawCsvSerializer(Serializer):
    """
    Compact ``mask,probability`` rows, one per mask of positive probability.
    The dimension is not stored, so :meth:`deserialize` needs ``dim``.
    """

    @classmethod
    def serialize(cls, x: LocalLaw) -> bytes:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mask", "probability"])
        for m in x.support():
            v = x.probs[m]
            writer.writerow([int(m), str(v) if x.is_exact else repr(float(v))])
        return buf.getvalue().encode("utf-8")

    @classmethod
    def deserialize(cls, y: bytes, *, dim: int, exact: bool = False, name: str = "custom") -> LocalLaw:
        size = 1 << (2 * dim)
        probs = np.array([Fraction(0)] * size, dtype=object) if exact else np.zeros(size)
        reader = csv.reader(io.StringIO(y.decode("utf-8")))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["mask", "probability"]:
            raise DomainError(f"law CSV must start with the header 'mask,probability'; got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                mask, value = int(row[0]), row[1]
            except (ValueError, IndexError):
                raise DomainError(f"bad law CSV row at line {lineno}: {row}") from None
            if not 0 <= mask < size:
                raise DomainError(
                    f"mask {mask} at line {lineno} is out of range for dimension {dim}"
                )
            probs[mask] = as_fraction(value) if exact else float(value)
        return LocalLaw(dim, probs, name=name)


class EstimateCsvSerializer(Serializer):
    """CSV rows of Monte Carlo estimates with their provenance columns."""

    @classmethod
    def serialize(cls, x: Iterable, *, header: bool = True) -> bytes:
        from .monte_carlo import ESTIMATE_COLUMNS

        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=ESTIMATE_COLUMNS, lineterminator="\n")
        if header:
            writer.writeheader()
        for est in x:
            writer.writerow(est.as_row())
        return buf.getvalue().encode("utf-8")

    @classmethod
    def deserialize(cls, y: bytes) -> list[dict]:
        rows = list(csv.DictReader(io.StringIO(y.decode("utf-8"))))
        for row in rows:
            for key in ("d", "n", "samples", "successes", "seed"):
                row[key] = int(row[key])
            for key in ("p_hat", "stderr", "ci_low", "ci_high"):
                row[key] = float(row[key])
        return rows
