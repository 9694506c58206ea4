import json
import subprocess
import sys

import numpy as np
import pytest

from chaoslab.cli import build_parser, main
from chaoslab.kernel import Grid, adjoint, cell, random_kernel, save_kernel

SUBCOMMANDS = ["contract", "symmetrize", "moment", "isometry-check", "semicircle", "cramer", "transfer"]


@pytest.fixture
def kernels(tmp_path):
    grid = Grid(4)
    rng = np.random.default_rng(3)
    e0, e1 = cell(0, grid), cell(1, grid)
    save_kernel(e0 @ e0, tmp_path / "a.json")
    save_kernel(e1 @ e1, tmp_path / "b.json")
    f = random_kernel(3, grid, rng, symmetry="mirror")
    save_kernel(f / (f.values.std() * 4), tmp_path / "m.json")
    save_kernel(e0 @ e1, tmp_path / "skew.json")
    save_kernel(random_kernel(2, grid, rng, symmetry="full"), tmp_path / "s.json")
    return tmp_path


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_lists_flags_with_defaults(cmd, capsys):
    with pytest.raises(SystemExit) as info:
        main([cmd, "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--seed", "--workers", "--out-dir"):
        assert flag in out
    assert "default" in out


def test_contract_disjoint_prints_zero(kernels, capsys):
    k = kernels
    code = run(k, "contract", "--f", str(k / "a.json"), "--g", str(k / "b.json"), "--l", "1", "--nested", "--out", "c.json")
    assert code == 0
    assert "norm 0.0" in capsys.readouterr().out
    doc = json.loads((k / "c.json").read_text())
    assert doc["order"] == 2 and doc["meta"]["config"]["nested"] is True


def test_contract_range_is_usage_error(kernels, capsys):
    k = kernels
    code = run(k, "contract", "--f", str(k / "a.json"), "--g", str(k / "b.json"), "--l", "3")
    assert code == 2
    assert "min(2, 2)" in capsys.readouterr().err


def test_missing_file_is_usage_error(kernels):
    assert run(kernels, "contract", "--f", "nope.json", "--g", "nope.json", "--l", "0") == 2


def test_bad_flag_value_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["moment", "--word", "x.json", "--seed", "-4"])
    assert info.value.code == 2


def test_symmetrize(kernels):
    k = kernels
    assert run(k, "symmetrize", "--f", str(k / "skew.json"), "--out", "sym.json") == 0
    doc = json.loads((k / "sym.json").read_text())
    v = np.array(doc["values"]).reshape(4, 4)
    assert np.array_equal(v, v.T)


def test_moment_exact_wigner_unit_norm(kernels, capsys):
    k = kernels
    a = str(k / "a.json")
    assert run(k, "moment", "--side", "wigner", "--method", "exact", "--word", f"{a},{a}") == 0
    assert "value 1.0" in capsys.readouterr().out
    doc = json.loads((k / "moment.json").read_text())
    assert doc["result"]["value"] == pytest.approx(1.0)
    assert doc["config"]["side"] == "wigner" and doc["seed"] == 0


def test_moment_degree_cap_exit_3(kernels, capsys):
    k = kernels
    assert run(k, "moment", "--word", str(k / "m.json"), "--p", "6") == 3
    assert "12" in capsys.readouterr().err


def test_moment_rejects_mismatched_backend(kernels):
    k = kernels
    assert run(k, "moment", "--side", "wiener", "--method", "matrix", "--word", str(k / "a.json")) == 2


def test_moment_mc_bitwise_repeatable(kernels):
    k = kernels
    outs = []
    for i, workers in enumerate(["1", "2"]):
        d = k / f"run{i}"
        argv = ["moment", "--side", "wiener", "--method", "mc", "--word", str(k / "s.json"),
                "--p", "4", "--paths", "20000", "--seed", "7", "--workers", workers]
        assert main([*argv, "--out-dir", str(d)]) == 0
        outs.append((d / "moment.json").read_bytes())
    assert outs[0] == outs[1]


def test_isometry_check(kernels, capsys):
    k = kernels
    assert run(k, "isometry-check", "--f", str(k / "m.json")) == 0
    assert run(k, "isometry-check", "--f", str(k / "a.json"), "--g", str(k / "m.json")) == 0
    # a tolerance below zero can never be met
    assert run(k, "isometry-check", "--f", str(k / "m.json"), "--tol", "-1") == 1


def test_semicircle(tmp_path, capsys):
    assert run(tmp_path, "semicircle", "--var", "2", "--x", "0,1") == 0
    doc = json.loads((tmp_path / "semicircle.json").read_text())
    assert doc["result"]["centered_moments"]["4"] == 8.0
    assert abs(doc["result"]["mass"] - 1.0) < 1e-12
    assert run(tmp_path, "semicircle", "--var", "0") == 2


def test_cramer_list(capsys):
    assert main(["cramer", "--list"]) == 0
    assert "classical_q2_q3" in capsys.readouterr().out


def test_cramer_exit_codes(tmp_path):
    assert run(tmp_path, "cramer", "--config", "classical_q2_q3") == 0
    assert run(tmp_path, "cramer", "--config", "classical_constant_control") == 0
    assert run(tmp_path, "cramer", "--config", "classical_overlap_gate") == 4
    assert run(tmp_path, "cramer", "--config", "free_overlap_gate") == 4
    assert run(tmp_path, "cramer") == 2
    assert run(tmp_path, "cramer", "--config", "no_such_config") == 2


def test_cramer_expected_verdict_mismatch(tmp_path):
    cfg = {
        "mode": "classical",
        "families": [{"label": "X", "kind": "constant", "q": 2}, {"label": "Y", "kind": "clt", "q": 2, "block_offset": 1}],
        "expected_verdict": "pass",
    }
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert run(tmp_path, "cramer", "--config", str(p)) == 1


def test_cramer_malformed_config(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    assert run(tmp_path, "cramer", "--config", str(p)) == 2
    p.write_text(json.dumps({"mode": "classical", "families": [{"label": "X", "q": 9}, {"label": "Y", "q": 1}]}))
    assert run(tmp_path, "cramer", "--config", str(p)) == 2


def test_cramer_capacity_exit_3(tmp_path):
    cfg = {"mode": "classical", "indices": [1, 2, 32],
           "families": [{"label": "X", "q": 2}, {"label": "Y", "q": 2, "block_index": 1}]}
    p = tmp_path / "big.json"
    p.write_text(json.dumps(cfg))
    assert run(tmp_path, "cramer", "--config", str(p)) == 3


def test_cramer_outputs_record_config(tmp_path):
    assert run(tmp_path, "cramer", "--config", "free_q2_q2", "--seed", "9") == 0
    doc = json.loads((tmp_path / "free_q2_q2.json").read_text())
    assert doc["tool"] == "chaoslab" and doc["seed"] == 9
    assert doc["config"]["indices"] == [1, 2, 4, 8, 16]
    assert doc["config"]["tolerances"]["final_fraction"] == 0.15
    text = (tmp_path / "free_q2_q2.csv").read_text()
    assert text.startswith("# chaoslab 0.1.0")
    assert "\"seed\":9" in text.splitlines()[1]


def test_transfer_flags_and_config(tmp_path):
    assert run(tmp_path, "transfer", "--q", "2") == 0
    assert (tmp_path / "transfer.free.csv").exists()
    assert run(tmp_path, "transfer", "--config", "transfer_constant") == 0
    assert run(tmp_path, "transfer", "--config", "classical_q2_q3") == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "chaoslab", "semicircle", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "m4 2" in out.stdout


def test_parser_has_all_subcommands():
    parser = build_parser()
    choices = parser._subparsers._group_actions[0].choices
    assert sorted(choices) == sorted(SUBCOMMANDS)
