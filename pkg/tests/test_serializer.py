from fractions import Fraction

import pytest
from cloudly.upathlib import resolve_path

from locperc.exploration import DIRECTED
from locperc.local_laws import DomainError, make_corner_stick, make_dng, make_iid
from locperc.monte_carlo import ESTIMATE_COLUMNS, estimate_one_arm
from locperc.serializer import (
    EstimateCsvSerializer,
    LawCsvSerializer,
    LawJsonSerializer,
    OrjsonSerializer,
)


def test_law_json(tmp_path):
    law = make_dng(2, 0.5)
    file = resolve_path(str(tmp_path / "dng.json"))
    LawJsonSerializer.dump(law, file)
    z = OrjsonSerializer.load(file)
    print(z)
    assert z["dim"] == 2
    assert z["ordering"] == "+x,-x,+y,-y"
    assert "exact" not in z
    assert LawJsonSerializer.load(file) == law

    with pytest.raises(FileExistsError):
        LawJsonSerializer.dump(law, file)
    LawJsonSerializer.dump(make_iid(2, 0.5), file, overwrite=True)
    assert LawJsonSerializer.load(file).name == "iid(0.5)"


def test_law_json_exact():
    law = make_corner_stick(Fraction(1, 6), exact=True)
    z = LawJsonSerializer.to_dict(law)
    assert z["exact"] is True
    assert z["probs"][1 | 2] == "1/12"
    back = LawJsonSerializer.from_dict(z)
    assert back.is_exact
    assert list(back.probs) == list(law.probs)


def test_law_json_errors():
    z = LawJsonSerializer.to_dict(make_iid(1, 0.5))
    z["ordering"] = "-x,+x"
    with pytest.raises(DomainError, match="ordering"):
        LawJsonSerializer.from_dict(z)
    del z["probs"]
    with pytest.raises(DomainError, match="probs"):
        LawJsonSerializer.from_dict(z)
    with pytest.raises(DomainError):
        LawJsonSerializer.deserialize(b"{not json")
    with pytest.raises(DomainError):
        LawJsonSerializer.deserialize(b'{"dim": 1, "probs": [0.5, 0.5]}')


def test_law_csv():
    law = make_iid(1, Fraction(1, 3), exact=True)
    y = LawCsvSerializer.serialize(law)
    assert y.decode().splitlines() == ["mask,probability", "0,4/9", "1,2/9", "2,2/9", "3,1/9"]
    back = LawCsvSerializer.deserialize(y, dim=1, exact=True)
    assert list(back.probs) == list(law.probs)

    # Missing masks have probability zero.
    back = LawCsvSerializer.deserialize(b"mask,probability\n0,0.25\n15,0.75\n", dim=2)
    assert back.probs[15] == 0.75
    assert back.support().tolist() == [0, 15]

    with pytest.raises(DomainError, match="header"):
        LawCsvSerializer.deserialize(b"m,p\n0,1\n", dim=1)
    with pytest.raises(DomainError, match="line 3"):
        LawCsvSerializer.deserialize(b"mask,probability\n0,0.5\nx,0.5\n", dim=1)
    with pytest.raises(DomainError, match="out of range"):
        LawCsvSerializer.deserialize(b"mask,probability\n4,1\n", dim=1)


def test_estimate_csv(tmp_path):
    ests = [
        estimate_one_arm(make_iid(1, p), 1, 1, DIRECTED, 200, seed=3) for p in (0.2, 0.8)
    ]
    file = resolve_path(str(tmp_path / "est.csv"))
    EstimateCsvSerializer.dump(ests, file)
    text = file.read_text()
    assert text.splitlines()[0] == ",".join(ESTIMATE_COLUMNS)
    rows = EstimateCsvSerializer.load(file)
    assert len(rows) == 2
    assert rows[0]["model"] == "iid(0.2)"
    assert rows[1]["successes"] == ests[1].successes
    assert rows[1]["p_hat"] == ests[1].p_hat

    y = EstimateCsvSerializer.serialize(ests[:1], header=False)
    assert len(y.decode().splitlines()) == 1
