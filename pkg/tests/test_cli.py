import orjson
import pytest

from locperc import __version__
from locperc.cli import COMMANDS, ERROR, HOLDS, VIOLATED, main, parse_law_spec
from locperc.local_laws import DomainError, make_iid


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    print(out)
    print(err)
    return status, out, err


def test_parse_law_spec():
    assert parse_law_spec("iid:0.5", 2) == make_iid(2, 0.5)
    law = parse_law_spec("dng:3/8", 2, exact=True)
    assert law.is_exact
    law = parse_law_spec("exchangeable:0.5,0,0,0,0.5", 2)
    assert law.support().tolist() == [0, 15]
    law = parse_law_spec("mix:0.5,dng:0.5", 2)
    assert law.probs[0] == pytest.approx(0.5)
    for bad in ("iid", "nope:0.5", "iid:1.5", "mix:0.5", "exchangeable:1,0"):
        with pytest.raises(DomainError):
            parse_law_spec(bad, 2)


def test_check_domination(capsys):
    status, out, _ = run(capsys, "check-domination", "--p", "iid:0.5", "--q", "dng:0.5", "--d", "2")
    assert status == HOLDS
    assert "equalities (4): {+x}, {-x}, {+y}, {-y}" in out

    status, out, _ = run(capsys, "check-domination", "--p", "dng:0.5", "--q", "iid:0.5", "--d", "2")
    assert status == VIOLATED
    assert "violations: 10" in out

    status, out, _ = run(
        capsys, "check-domination", "--p", "iid:1/2", "--q", "dng:1/2", "--d", "2", "--exact", "--format", "json"
    )
    assert status == HOLDS
    z = orjson.loads(out)
    assert z["holds"] is True
    assert z["P"] == "iid(1/2)"
    assert z["version"] == __version__


def test_check_pairwise(capsys):
    status, out, _ = run(capsys, "check-pairwise", "--p", "iid:0.25", "--q", "dng:0.5", "--d", "2")
    assert status == HOLDS
    assert "pairs checked: 25" in out


def test_check_stochastic(capsys):
    status, out, _ = run(
        capsys, "check-stochastic", "--p", "iid:1/2", "--q", "dng:1/2", "--d", "2", "--exact"
    )
    assert status == VIOLATED
    assert "up-set witness (5 masks)" in out
    assert "P[U] = 5/16 > Q[U] = 0" in out

    status, out, _ = run(
        capsys, "check-stochastic", "--p", "dng:1/2", "--q", "iid:1/2", "--d", "2", "--exact", "--format", "json"
    )
    assert status == VIOLATED
    z = orjson.loads(out)
    assert z["version"] == __version__
    assert len(z["witness"]["masks"]) == 15
    assert z["witness"]["P_mass"] == 1


def test_reduce_exchangeable(capsys):
    status, out, _ = run(capsys, "reduce-exchangeable", "--d", "2", "--alphas", "0.5,0,0,0,0.5")
    assert status == HOLDS
    lines = out.splitlines()
    assert "step 0: 0.5,0,0,0,0.5" in lines
    assert "step 1: 0,0,1,0,0" in lines


def test_exact(capsys):
    status, out, _ = run(capsys, "exact", "--law", "iid:0.5", "--d", "1", "--n", "1", "--sem", "directed")
    assert status == HOLDS
    assert out.strip() == "0.4375"

    status, out, _ = run(capsys, "exact", "--law", "iid:1/2", "--d", "1", "--n", "1", "--exact")
    assert out.strip() == "7/16"

    status, out, _ = run(capsys, "exact", "--law", "iid:0.5", "--d", "1", "--n", "1", "--format", "json")
    z = orjson.loads(out)
    assert z["exact_value"] == 0.4375
    assert z["configurations_enumerated"] == 64
    assert z["version"] == __version__

    status, _, err = run(capsys, "exact", "--law", "iid:0.5", "--d", "2", "--n", "2")
    assert status == ERROR
    assert "budget" in err


def test_check_identity(capsys):
    status, out, _ = run(
        capsys, "check-identity", "--identity", "dir-undir", "--p", "1/2", "--d", "1", "--n", "1", "--exact"
    )
    assert status == HOLDS
    assert out.splitlines() == ["directed iid: 7/16", "undirected bond: 7/16", "equal"]

    status, out, _ = run(capsys, "check-identity", "--identity", "aon-site", "--p", "0.5", "--d", "1", "--n", "0")
    assert status == HOLDS


def test_verify_interpolation(capsys):
    status, out, _ = run(
        capsys, "verify-interpolation", "--p", "iid:0.5", "--q", "dng:0.5", "--d", "2", "--n", "1"
    )
    assert status == HOLDS
    assert "monotone over 80 pairs" in out

    status, out, _ = run(
        capsys, "verify-interpolation", "--p", "iid:0.5", "--q", "dng:0.5", "--d", "2", "--n", "1",
        "--seed", "5", "--format", "json",
    )
    z = orjson.loads(out)
    assert z["holds"] is True
    assert z["seed"] == 5
    assert z["version"] == __version__

    status, _, err = run(
        capsys, "verify-interpolation", "--p", "dng:0.5", "--q", "iid:0.5", "--d", "2", "--n", "1"
    )
    assert status == ERROR
    assert "local comparison condition" in err


def test_report_thresholds(capsys):
    status, out, _ = run(capsys, "report-thresholds", "--d", "4")
    assert status == HOLDS
    assert "DnG percolates for 2dp > 2.2305" in out
    assert "BnG percolates for integer 2dp ≥ 6" in out
    assert "Gomes" in out

    status, out, _ = run(capsys, "report-thresholds", "--d", "3", "--format", "json")
    assert orjson.loads(out)["dng_threshold"] == "2.083782"

    status, _, err = run(capsys, "report-thresholds", "--d", "7")
    assert status == ERROR
    assert "p_c(7)" in err
    status, out, _ = run(capsys, "report-thresholds", "--d", "7", "--pc-upper", "0.15")
    assert status == HOLDS


def test_estimate(capsys, tmp_path):
    argv = ["estimate", "--law", "dng:0.5", "--d", "2", "--n", "8", "--samples", "2e3", "--seed", "7"]
    path1 = str(tmp_path / "a.csv")
    path2 = str(tmp_path / "b.csv")
    assert main([*argv, "--output", path1]) == HOLDS
    assert main([*argv, "--output", path2, "--workers", "2"]) == HOLDS
    with open(path1) as f1, open(path2) as f2:
        a, b = f1.read(), f2.read()
    assert a == b
    header, row = a.splitlines()
    assert header.startswith("model,d,n,semantics,p_hat")
    assert row.startswith("dng(0.5),2,8,directed,")
    assert row.endswith(f",2000,{row.split(',')[9]},7,{__version__}")

    status, out, _ = run(capsys, "estimate", "--d", "2", "--n", "3", "--sem", "site:1", "--samples", "10")
    assert status == HOLDS
    assert out.splitlines()[1].startswith("site:1,2,3,site:1,1.0,")

    status, _, err = run(capsys, "estimate", "--d", "2", "--n", "3", "--samples", "10")
    assert status == ERROR
    assert "--law" in err

    status, _, _ = run(capsys, "estimate", "--law", "dng:0.5", "--d", "2", "--n", "3", "--samples", "0.5")
    assert status == ERROR


def test_scan(capsys):
    status, out, _ = run(
        capsys, "scan", "--family", "iid", "--grid", "0.2:0.8:3", "--d", "1", "--n", "1", "--samples", "500", "--quiet"
    )
    assert status == HOLDS
    rows = out.splitlines()[1:]
    assert [r.split(",")[0] for r in rows] == ["iid(0.2)", "iid(0.5)", "iid(0.8)"]


def test_config(capsys, tmp_path):
    out_path = tmp_path / "exact.json"
    cfg = tmp_path / "job.toml"
    cfg.write_text(
        "\n".join(
            [
                'command = "exact"',
                "[law]",
                'law = "iid:0.5"',
                "d = 1",
                "[run]",
                "n = 1",
                'sem = "directed"',
                "[output]",
                f'path = "{out_path}"',
            ]
        )
    )
    assert main(["--config", str(cfg)]) == HOLDS
    z = orjson.loads(out_path.read_bytes())
    assert z["exact_value"] == 0.4375

    # Command line overrides the file.
    assert main(["exact", "--config", str(cfg), "--n", "0", "--format", "text"]) == HOLDS
    assert out_path.read_text().strip() == "0.75"

    status, _, err = run(capsys, "estimate", "--config", str(cfg))
    assert status == ERROR
    assert "conflicts" in err

    cfg.write_text('command = "exact"\n[run]\nradius = 3\n')
    status, _, err = run(capsys, "--config", str(cfg))
    assert status == ERROR
    assert "[run] radius" in err

    cfg.write_text('command = "exact"\n[run]\nn = "three"\n')
    status, _, err = run(capsys, "--config", str(cfg))
    assert status == ERROR
    assert "[run] n" in err

    cfg.write_text('command = "exact"\n[run\nn = 3\n')
    status, _, err = run(capsys, "--config", str(cfg))
    assert status == ERROR
    assert "line 2" in err


def test_emit_law(capsys, tmp_path):
    path = str(tmp_path / "law.json")
    status, first, _ = run(capsys, "hitting-profile", "--law", "dng:0.5", "--d", "2", "--emit-law", path)
    assert status == HOLDS
    assert "hitting profile of dng(0.5) (d = 2)" in first

    status, second, _ = run(capsys, "hitting-profile", "--law", f"file:{path}", "--d", "2")
    assert second == first

    status, out, _ = run(capsys, "exact", "--law", f"file:{path}", "--d", "2", "--n", "0")
    assert status == HOLDS
    assert out.strip() == "1"

    status, _, err = run(capsys, "hitting-profile", "--law", f"file:{path}", "--d", "3")
    assert status == ERROR
    assert "dimension" in err


def test_csv_law_named_after_file(capsys, tmp_path):
    path = str(tmp_path / "half.csv")
    status, _, _ = run(capsys, "hitting-profile", "--law", "iid:1/2", "--d", "1", "--exact", "--emit-law", path)
    assert status == HOLDS
    status, out, _ = run(capsys, "exact", "--law", f"file:{path}", "--d", "1", "--n", "1", "--exact", "--format", "json")
    assert status == HOLDS
    z = orjson.loads(out)
    assert z["model"] == "half"
    assert z["exact_value"] == "7/16"


def test_workers_out_of_range(capsys):
    argv = ["estimate", "--law", "iid:0.5", "--d", "2", "--n", "3", "--samples", "100", "--seed", "1"]
    for workers in ("300", "0"):
        status, _, err = run(capsys, *argv, "--workers", workers)
        assert status == ERROR
        assert "`workers` must be in [1, 256]" in err

    status, _, err = run(capsys, "exact", "--law", "iid:0.5", "--d", "1", "--n", "1", "--workers", "300")
    assert status == ERROR
    assert "workers" in err


def test_common_options_before_command(capsys):
    argv = ["--law", "dng:0.5", "--d", "2", "--n", "4", "--samples", "500"]
    status, after, _ = run(capsys, "estimate", *argv, "--seed", "7", "--workers", "2")
    assert status == HOLDS
    status, before, _ = run(capsys, "--seed", "7", "--workers", "2", "estimate", *argv)
    assert status == HOLDS
    assert before == after
    assert before.splitlines()[1].endswith(f",7,{__version__}")

    status, _, err = run(capsys, "--budget", "10", "exact", "--law", "iid:0.5", "--d", "1", "--n", "1")
    assert status == ERROR
    assert "budget" in err


def test_unexpected_failure_is_an_error(capsys, monkeypatch):
    def broken(args):
        raise AssertionError("inconsistent table")

    monkeypatch.setitem(COMMANDS, "report-thresholds", broken)
    status, _, err = run(capsys, "report-thresholds", "--d", "2")
    assert status == ERROR
    assert "AssertionError: inconsistent table" in err
