import json
import subprocess
import sys

import pytest

NF = {
    "variables": ["x", "y"],
    "equations": [
        "-y + (0.5*x - 1.0*y)*(x^2 + y^2)",
        "x + (1.0*x + 0.5*y)*(x^2 + y^2)",
    ],
}

FAMILY = {
    "variables": ["x", "y"],
    "parameters": {"mu": 0.0},
    "equations": [
        "-y + ((mu - 0.3)*x - 0.7*y)*(x^2 + y^2)",
        "x + (0.7*x + (mu - 0.3)*y)*(x^2 + y^2)",
    ],
}


def run(*args):
    p = subprocess.run([sys.executable, "-m", "lyapcoef.cli", *map(str, args)], capture_output=True)
    return p.returncode, p.stdout.decode(), p.stderr.decode()


def write(tmp_path, doc, name="p.json"):
    f = tmp_path / name
    f.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return f


def test_analyze_json(tmp_path):
    code, out, _ = run("analyze", write(tmp_path, NF))
    assert code == 0
    assert json.loads(out)["l"]["1"] == pytest.approx(0.5)


def test_analyze_is_byte_reproducible(tmp_path):
    f = write(tmp_path, NF | {"order": 2})
    outs = {run("analyze", f, "--no-timing")[1] for _ in range(2)}
    assert len(outs) == 1


def test_analyze_text_with_order_override(tmp_path):
    code, out, _ = run("analyze", write(tmp_path, NF), "--order", "2", "--format", "text")
    assert code == 0
    assert "l2" in out


def test_sweep_cli(tmp_path):
    code, out, _ = run("sweep", write(tmp_path, FAMILY), "--param", "mu", "--from", 0, "--to", 1,
                       "--steps", 3, "--locate", "l1")
    assert code == 0
    lines = [json.loads(s) for s in out.splitlines()]
    assert len(lines) == 4
    assert lines[-1]["zero"] == "l1" and lines[-1]["mu"] == pytest.approx(0.3, abs=1e-8)


def test_transversality_cli(tmp_path):
    doc = FAMILY | {"parameters": {"mu": 0.3, "nu": 0.0},
                    "equations": ["nu*x - y + ((mu - 0.3)*x - 0.7*y)*(x^2 + y^2)",
                                  "x + nu*y + (0.7*x + (mu - 0.3)*y)*(x^2 + y^2)"]}
    code, out, _ = run("transversality", write(tmp_path, doc), "--order", 2)
    assert code == 0
    d = json.loads(out)
    assert d["full_rank"] and d["rows"] == ["eta", "l1"]


def test_check_cli(tmp_path):
    code, out, _ = run("check", write(tmp_path, NF | {"order": 3}))
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") == 8


@pytest.mark.parametrize(
    "doc, code, fragment",
    [
        ('{"variables": ["x", "y"], "equations": [', 2, "ParseError"),
        (NF | {"equations": ["-y +", "x"]}, 2, "equations[0]"),
        (NF | {"order": 7}, 2, "SchemaError"),
        (NF | {"equations": ["-y + log(x - 1)", "x"]}, 3, "DomainError"),
        ({"variables": ["x", "y", "z"], "equations": ["-y", "x", "z^2"]}, 4, "ExtraCriticalEigenvalueError"),
        (NF | {"equations": ["-y + 1", "x"]}, 4, "EquilibriumResidualError"),
        (NF | {"equations": ["-x", "-y"]}, 4, "NoCriticalPairError"),
    ],
)
def test_exit_codes(tmp_path, doc, code, fragment):
    got, out, err = run("analyze", write(tmp_path, doc))
    assert got == code
    assert fragment in err
    assert out == ""


def test_missing_file_is_io_error(tmp_path):
    code, _, err = run("analyze", tmp_path / "nope.json")
    assert code == 5
    assert "ProblemIOError" in err
