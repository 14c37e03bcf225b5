import json

import pytest

from semilag.cli import main
from semilag.io import loads


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_solve_e1(capsys):
    code, out = run(capsys, "solve", "builtin:e1")
    assert code == 0
    assert abs(json.loads(out)["result"]["value"] + 1) < 1e-6


def test_solve_missing_file(capsys, tmp_path):
    code, _ = run(capsys, "solve", str(tmp_path / "missing.json"))
    assert code == 3


def test_solve_infeasible_file(capsys, tmp_path):
    main(["corpus", "--only", "infeasible", "--export", str(tmp_path)])
    capsys.readouterr()
    code, out = run(capsys, "solve", str(tmp_path / "infeasible.json"))
    assert code == 2
    assert json.loads(out)["result"]["value"] == "inf"


def test_gap_e1(capsys):
    code, out = run(capsys, "gap", "builtin:e1")
    rep = json.loads(out)
    assert code == 0
    assert rep["result"]["classification"] == "infinite_gap"
    assert rep["result"]["dual_value"] == "-inf"


def test_certify_hqp(capsys):
    code, out = run(capsys, "certify", "builtin:hqp_neg_identity")
    certs = json.loads(out)["result"]
    assert code == 0
    assert certs[0]["kind"] == "hqp_strong_convexifiable" and certs[0]["verdict"] == "holds"


def test_reformulate_pd_round_trips(capsys):
    code, out = run(capsys, "reformulate", "builtin:knapsack", "--target", "pd")
    assert code == 0
    inst = loads(out)
    assert inst.m == 4 * 1 + 2 * 2
    assert json.loads(out)["provenance"]["target"] == "pd"


def test_reformulate_ap_round_trips(capsys):
    code, out = run(capsys, "reformulate", "builtin:robust_toy", "--target", "ap")
    assert code == 0 and loads(out).m == 4 * (1 + 2 + 2) + 2 * 2


def test_reformulate_cp(capsys):
    code, out = run(capsys, "reformulate", "builtin:e1", "--target", "cp")
    assert code == 0
    assert json.loads(out)["relaxation"]["H"] == [[0.0, 0.0], [0.0, -1.0]]


@pytest.mark.parametrize("argv", [
    ("reformulate", "builtin:e1", "--target", "pd"),
    ("reformulate", "builtin:knapsack", "--target", "ap"),
    ("reformulate", "builtin:knapsack", "--target", "cp"),
])
def test_kind_mismatch(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == 4


def test_bad_json(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{")
    assert run(capsys, "dual", str(f))[0] == 3


def test_text_format_is_tab_delimited(capsys):
    code, out = run(capsys, "solve", "builtin:knapsack", "--format", "text")
    rows = dict(line.split("\t", 1) for line in out.rstrip("\n").split("\n"))
    assert code == 0 and float(rows["result.value"]) == -1.0
    assert rows["provenance.version"]


def test_deterministic(capsys):
    a = run(capsys, "dual", "builtin:image_membership", "--seed", "3")[1]
    b = run(capsys, "dual", "builtin:image_membership", "--seed", "3")[1]
    assert a == b


def test_figures_written(capsys, tmp_path):
    code, out = run(capsys, "gap", "builtin:hqp_1d", "--figures", str(tmp_path))
    figs = json.loads(out)["figures"]
    assert code == 0 and figs and all((tmp_path / f.split("/")[-1]).stat().st_size > 0 for f in figs)
    code, out = run(capsys, "membership", "builtin:upsilon", "--point", "0,-0.5", "--figures", str(tmp_path))
    res = json.loads(out)
    assert res["result"][0]["verdict"] == "non_member" and res["figures"]


def test_invalid_config(capsys):
    assert run(capsys, "solve", "builtin:e1", "--tol-gap", "-1")[0] == 1


def test_corpus_table(capsys, tmp_path):
    code, out = run(capsys, "corpus", "--only", "e1", "--only", "closure_gap", "--format", "text",
                    "--figures", str(tmp_path))
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0].split("\t")[:2] == ["instance", "check"]
    assert all(l.split("\t")[4] == "PASS" for l in lines[1:] if not l.startswith("figure"))
    assert (tmp_path / "corpus.png").exists()
