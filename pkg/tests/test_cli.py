import json

import pytest

from lllsample.cli import dispatch
from lllsample.projection import ProjectionScheme


@pytest.fixture
def cnf_file(tmp_path):
    path = tmp_path / "two.cnf"
    path.write_text("p cnf 2 1\n1 2 0\n")
    return str(path)


@pytest.fixture
def collapsed_scheme_file(tmp_path):
    scheme = ProjectionScheme((((0, 1),), ((0, 1),)), eta=0.25)
    path = tmp_path / "scheme.json"
    path.write_text(scheme.to_json())
    return str(path)


def _run(capsys, argv):
    code = dispatch(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_sample_basic(capsys, cnf_file, collapsed_scheme_file):
    code, payload = _run(
        capsys,
        ["sample", "--input", cnf_file, "--eps", "0.1", "--eta", "0.25",
         "--seed", "42", "--scheme", collapsed_scheme_file],
    )
    assert code == 0
    assert payload["error"] is None
    assert payload["assignment"] in [[0, 1], [1, 0], [1, 1]]
    manifest = payload["manifest"]
    assert manifest["seed"] == 42 and manifest["epsilon"] == 0.1
    assert manifest["scheme_source"].startswith("file:")


def test_sample_deterministic_output(capsys, cnf_file):
    code1, p1 = _run(capsys, ["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "7"])
    code2, p2 = _run(capsys, ["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "7"])
    assert code1 == code2 == 0 and p1 == p2


def test_sample_multi_count(capsys, cnf_file):
    code, payload = _run(
        capsys,
        ["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "3", "--count", "4"],
    )
    assert code == 0 and len(payload["results"]) == 4


def test_sample_auto_seed_echoed(capsys, cnf_file):
    code, payload = _run(capsys, ["sample", "--input", cnf_file, "--eps", "0.1"])
    assert code == 0 and isinstance(payload["manifest"]["seed"], int)


def test_sample_error_i1_exit_code(capsys, tmp_path):
    # long chain of pairwise-overlapping clauses, fully collapsed scheme:
    # every clause is unsatisfied in the constant projected state, forming one
    # component larger than the size threshold -> deterministic I1
    n = 1501
    lines = [f"p cnf {n} {n - 1}"] + [f"{i} {i + 1} 0" for i in range(1, n)]
    cnf = tmp_path / "chain.cnf"
    cnf.write_text("\n".join(lines) + "\n")
    scheme = ProjectionScheme(tuple(((0, 1),) for _ in range(n)))
    sfile = tmp_path / "collapsed.json"
    sfile.write_text(scheme.to_json())
    code, payload = _run(
        capsys,
        ["sample", "--input", str(cnf), "--eps", "0.49", "--seed", "1",
         "--scheme", str(sfile), "--c-t", "0.0001"],
    )
    assert code == 1
    assert payload["error"] == "I1"


def test_find(capsys, cnf_file):
    code, payload = _run(capsys, ["find", "--input", cnf_file, "--seed", "5"])
    assert code == 0 and payload["success"]
    assert payload["assignment"] != [0, 0]


def test_count(capsys, cnf_file, collapsed_scheme_file):
    code, payload = _run(
        capsys,
        ["count", "--input", cnf_file, "--delta", "0.2", "--seed", "9",
         "--scheme", collapsed_scheme_file],
    )
    assert code == 0
    assert payload["estimate"] == pytest.approx(3.0, rel=0.25)
    assert payload["manifest"]["delta"] == 0.2


def test_check_projection_hypergraph(capsys, tmp_path):
    hyp = tmp_path / "edge.hyp"
    hyp.write_text("0 1 2\n")
    code, payload = _run(
        capsys,
        ["check-projection", "--input", str(hyp), "--format", "hypergraph",
         "--q", "16", "--seed", "2"],
    )
    assert code == 0
    report = payload["report"]
    assert set(report) >= {"a1", "a2", "a3", "a4", "kappa", "zeta"}
    assert payload["manifest"]["scheme_source"].startswith("auto:")


def test_verify(capsys):
    code, payload = _run(capsys, ["verify"])
    assert code == 0 and payload["all_pass"]


def test_pretty_output_multiline(capsys, cnf_file):
    code = dispatch(["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "1",
                     "--pretty"])
    out = capsys.readouterr().out
    assert code == 0 and out.count("\n") > 3
    json.loads(out)


def test_check_projection_identity_scheme_strict_json(capsys, tmp_path, cnf_file):
    # identity blocks give b = 1: the report carries non-finite internal
    # margins, but the JSON surface must stay strict (no Infinity tokens)
    from lllsample.csp import parse_dimacs
    from lllsample.projection import identity_scheme

    scheme = identity_scheme(parse_dimacs(open(cnf_file).read()))
    sfile = tmp_path / "ident.json"
    sfile.write_text(scheme.to_json())
    code = dispatch(["check-projection", "--input", cnf_file, "--scheme", str(sfile)])
    out = capsys.readouterr().out
    assert code == 0 and "Infinity" not in out
    payload = json.loads(out)
    assert payload["report"]["a1"]["pass"] is False


def test_scheme_csp_mismatch_is_usage_error(capsys, tmp_path, cnf_file):
    from lllsample.projection import ProjectionScheme

    wrong = ProjectionScheme((((0, 1),),))  # one variable, CSP has two
    sfile = tmp_path / "wrong.json"
    sfile.write_text(wrong.to_json())
    assert dispatch(["check-projection", "--input", cnf_file, "--scheme", str(sfile)]) == 2


def test_usage_errors(capsys, tmp_path):
    assert dispatch(["sample", "--input", "missing.cnf", "--eps", "0.1"]) == 2
    bad = tmp_path / "bad.cnf"
    bad.write_text("p cnf 1 1\n2 0\n")
    assert dispatch(["sample", "--input", str(bad), "--eps", "0.1"]) == 2
    assert dispatch(["sample", "--eps", "0.1"]) == 2  # missing --input
    assert dispatch(["nonsense"]) == 2
    hyp = tmp_path / "edge.hyp"
    hyp.write_text("0 1\n")
    assert dispatch(["sample", "--input", str(hyp), "--format", "hypergraph",
                     "--eps", "0.1"]) == 2  # missing --q


def test_sample_worker_pool_matches_sequential(capsys, cnf_file):
    code1, seq = _run(
        capsys,
        ["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "8", "--count", "3"],
    )
    code2, par = _run(
        capsys,
        ["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "8", "--count", "3",
         "--workers", "2"],
    )
    assert code1 == code2 == 0
    assert seq == par  # ordered by chain index, independent of the pool


def test_env_override_ct(capsys, cnf_file, monkeypatch):
    monkeypatch.setenv("LLLSAMPLE_CT", "0.5")
    code, payload = _run(capsys, ["sample", "--input", cnf_file, "--eps", "0.1", "--seed", "4"])
    assert code == 0
    assert payload["manifest"]["overrides"]["c_t"] == 0.5
    assert payload["diagnostics"]["c_t"] == 0.5
