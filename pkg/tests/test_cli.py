from fractions import Fraction

import pytest

from conftest import DATA, MOORE_BARD
from miblp import kopt
from miblp.bench import read_records
from miblp.cli import agreement_failures, main
from miblp.instance import parse_instance

MB = str(DATA / "moore_bard.miblp")
TD = str(DATA / "three_d.miblp")


def result_kv(out: str, cmd: str) -> dict:
    lines = [l for l in out.splitlines() if l.startswith(f"RESULT cmd={cmd}")]
    assert lines, out
    return dict(pair.split("=", 1) for pair in lines[-1].split()[1:])


def test_solve_reports_optimum(capsys):
    assert main(["solve", MB]) == 0
    kv = result_kv(capsys.readouterr().out, "solve")
    assert kv["status"] == "optimal"
    assert kv["value"] == "-22"
    assert kv["gap"] == "0"
    assert int(kv["nodes"]) < 100


def test_solve_flags_and_trace(capsys, tmp_path):
    trace = tmp_path / "trace.txt"
    rc = main(["solve", MB, "--oracle", "legacy", "--cuts", "idic,isic",
               "--branch", "linking", "--direction-method", "local-search",
               "--k", "2", "--trace", str(trace)])
    assert rc == 0
    kv = result_kv(capsys.readouterr().out, "solve")
    assert kv["value"] == "-22"
    text = trace.read_text().splitlines()
    assert text and text[0].startswith("node 0 depth 0")


def test_solve_limit_exit_code(capsys):
    assert main(["solve", MB, "--node-limit", "0"]) == 1
    kv = result_kv(capsys.readouterr().out, "solve")
    assert kv["status"] == "limit-reached"


def test_solve_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["solve", MB, "--k", "2"])            # needs milp-k/local-search
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", MB, "--cuts", "bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", MB, "--ls-depth-lb", "3"])  # needs local-search
    assert exc.value.code == 2
    assert main(["solve", str(tmp_path / "missing.miblp")]) == 2


def test_oracle_found(capsys):
    assert main(["oracle", MB, "--x", "2", "--y", "4"]) == 0
    kv = result_kv(capsys.readouterr().out, "oracle")
    assert kv["outcome"] == "found"
    assert kv["w"] == "-1" and kv["norm1"] == "1" and kv["d2w"] == "-1"
    assert kv["in_s"] == "yes" and kv["bilevel_feasible"] == "no"


def test_oracle_certificate(capsys):
    assert main(["oracle", MB, "--x", "2", "--y", "2"]) == 0
    kv = result_kv(capsys.readouterr().out, "oracle")
    assert kv["outcome"] == "no-improving-direction"
    assert kv["bilevel_feasible"] == "yes"


def test_oracle_heuristic_window(capsys):
    rc = main(["oracle", MB, "--x", "2", "--y", "4",
               "--direction-method", "local-search", "--k", "1",
               "--ls-depth-lb", "0", "--ls-depth-ub", "inf"])
    assert rc == 0
    kv = result_kv(capsys.readouterr().out, "oracle")
    assert kv["outcome"] == "found"
    with pytest.raises(SystemExit):
        main(["oracle", MB, "--x", "2", "--y", "4,4"])   # wrong dimension


def test_kopt_listing(capsys):
    assert main(["kopt", TD, "--k", "4"]) == 0
    out = capsys.readouterr().out
    kv = result_kv(out, "kopt")
    assert kv["kbar"] == "13" and kv["points"] == "12" and kv["extra"] == "1"
    tagged = [l for l in out.splitlines() if "not bilevel feasible" in l]
    assert tagged == ["x=3 y=4,1  [in F(k) but not bilevel feasible]"]


def test_kopt_level_zero_counts(capsys):
    assert main(["kopt", MB, "--k", "0"]) == 0
    kv = result_kv(capsys.readouterr().out, "kopt")
    assert kv["points"] == "16" and kv["extra"] == "8"
    with pytest.raises(SystemExit):
        main(["kopt", MB, "--k", "-1"])


def test_kopt_slice(capsys, tmp_path, three_d):
    out_file = tmp_path / "slice.csv"
    assert main(["kopt", TD, "--k", "0", "--slice", "x=1",
                 "--out", str(out_file)]) == 0
    expected = kopt.slice_csv(kopt.make_context(three_d), (Fraction(1),))
    assert out_file.read_text() == expected
    assert main(["kopt", TD, "--k", "0", "--slice", "1"]) == 0
    out = capsys.readouterr().out
    assert "y0,y1,in_slice,level" in out


def test_verify_examples(capsys):
    assert main(["verify", MB]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert result_kv(out, "verify")["failures"] == "0"


def test_verify_rejects_mixed(tmp_path, capsys):
    mixed = tmp_path / "mixed.miblp"
    mixed.write_text(MOORE_BARD.replace("VARS 1 1 1 1", "VARS 1 1 1 0"))
    assert main(["verify", str(mixed)]) == 2
    frac = tmp_path / "frac.miblp"
    frac.write_text(MOORE_BARD.replace("2 10 >= 15", "2 10 >= 31/2"))
    assert main(["verify", str(frac)]) == 2


def test_agreement_failures_clean(moore_bard):
    assert agreement_failures(moore_bard, ks=(1, 2)) == []


def test_gen_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["gen", "--seed", "3", "--count", "2", "--n1", "1",
                     "--n2", "1", "--m1", "1", "--m2", "2", "--bound", "3",
                     "--out-dir", str(out)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["rand_3.miblp", "rand_4.miblp"]
    for name in names:
        assert (a / name).read_text() == (b / name).read_text()
        inst = parse_instance((a / name).read_text())
        assert inst.is_pure_integer()
    kv = result_kv(capsys.readouterr().out, "gen")
    assert kv["count"] == "2"


def test_bench_and_profile(tmp_path, capsys):
    csv_path = tmp_path / "runs.csv"
    rc = main(["bench", MB, TD, "--configs", "id-milp,legacy",
               "--out", str(csv_path)])
    assert rc == 0
    kv = result_kv(capsys.readouterr().out, "bench")
    assert kv["records"] == "4" and kv["solved"] == "4"
    assert len(read_records(csv_path)) == 4

    out_dir = tmp_path / "prof"
    rc = main(["profile", "--csv", str(csv_path), "--kind", "performance",
               "--time-filter", "0", "--out-dir", str(out_dir)])
    assert rc == 0
    kv = result_kv(capsys.readouterr().out, "profile")
    assert kv["curves"] == "2" and kv["instances"] == "2"
    assert sorted(p.name for p in out_dir.iterdir()) == \
        ["profile_id-milp.dat", "profile_legacy.dat"]

    rc = main(["profile", "--csv", str(csv_path), "--kind", "baseline",
               "--baseline", "legacy", "--time-filter", "0",
               "--out-dir", str(out_dir), "--prefix", "base"])
    assert rc == 0
    assert "better than baseline" in capsys.readouterr().out

    rc = main(["profile", "--csv", str(csv_path), "--kind", "cumulative",
               "--out-dir", str(out_dir), "--prefix", "cum"])
    assert rc == 0
    assert result_kv(capsys.readouterr().out, "profile")["curves"] == "4"


def test_profile_usage_errors(tmp_path, capsys):
    csv_path = tmp_path / "runs.csv"
    main(["bench", MB, "--configs", "id-milp,legacy", "--out", str(csv_path)])
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["profile", "--csv", str(csv_path), "--kind", "baseline"])
    assert exc.value.code == 2
    assert main(["profile", "--csv", str(csv_path), "--measure", "bogus"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", MB, "--configs", "nope"])
    assert exc.value.code == 2
