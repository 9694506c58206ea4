import csv
import json

import numpy as np
import pytest

from chaoslab.cramer import (
    ConfigError,
    KernelFamily,
    Tolerances,
    assess_series,
    bundled_config,
    clt_family,
    grid_for,
    list_bundled_configs,
    load_config,
    rate_fit,
    resolve_config,
    run_classical_cramer,
    run_experiment,
    run_free_cramer,
    run_free_multi,
    transfer_check,
    write_report,
)
from chaoslab.errors import CapacityError, HypothesisViolation, NonPositiveValueError, SymmetryError
from chaoslab.kernel import Grid, Kernel, cell, is_fully_symmetric, is_mirror_symmetric, norm, random_kernel, save_kernel
from chaoslab.wiener import fourth_moment_gap
from chaoslab.wigner import free_fourth_moment_gap

LADDER = [1, 2, 4, 8, 16]


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 3, 8])
def test_clt_family_shape(q, m):
    f = clt_family(q, m, 2, Grid(16))
    assert norm(f) == pytest.approx(1.0, abs=1e-14)
    assert is_fully_symmetric(f) and is_mirror_symmetric(f)


def test_clt_family_capacity():
    with pytest.raises(CapacityError):
        clt_family(2, 4, 1, Grid(4))


def test_clt_gap_values():
    g = Grid(4)
    assert fourth_moment_gap(clt_family(1, 4, 0, g)) == pytest.approx(0.0, abs=1e-12)
    assert fourth_moment_gap(clt_family(2, 4, 0, g)) == pytest.approx(3.0)
    assert free_fourth_moment_gap(clt_family(2, 4, 0, g)) == pytest.approx(0.25)


def test_grid_policy():
    fam = KernelFamily.clt("Y", 3, 0, 1)
    assert grid_for([fam], 4).n == 8
    assert grid_for([fam], 3).n == 8
    assert grid_for([KernelFamily.clt("X", 2, 0, 0)], 5).n == 8
    with pytest.raises(CapacityError):
        grid_for([KernelFamily.clt("Z", 2, 0, 2)], 16)


def test_rate_fit_examples():
    ms = [1, 2, 4, 8, 16]
    assert rate_fit([(m, 12 / m) for m in ms]) == pytest.approx(-1.0, abs=1e-12)
    assert rate_fit([(m, 5.0) for m in ms]) == pytest.approx(0.0, abs=1e-12)
    assert rate_fit([(m, m**-2.0) for m in ms]) == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(NonPositiveValueError):
        rate_fit([(1, 1.0), (2, 0.0), (4, 1.0)])
    with pytest.raises(ValueError):
        rate_fit([(1, 1.0), (2, 0.5)])


def test_assess_series():
    tol = Tolerances()
    assert assess_series(LADDER, [0.0] * 5, tol)["converged"]
    assert not assess_series(LADDER, [1.0] * 5, tol)["converged"]
    # a slow decay fails the final-fraction test
    slow = [m**-0.6 for m in LADDER]
    assert not assess_series(LADDER, slow, tol)["converged"]
    assert assess_series(LADDER, [12 / m for m in LADDER], tol)["converged"]


def test_classical_q2_q3_rows_are_exact():
    r = run_classical_cramer(KernelFamily.clt("X", 2), KernelFamily.clt("Y", 3, 0, 1), LADDER)
    assert r.verdict
    for row in r.rows:
        m = row["index"]
        gx, gy = row["classical"][0]["gap"], row["classical"][1]["gap"]
        assert gx == pytest.approx(12 / m, abs=1e-10)
        assert gy == pytest.approx(90 / m, abs=1e-10)
        assert row["residual"] <= 1e-10
        assert row["variance_residual"] <= 1e-12
        assert row["cross_term"] == pytest.approx(0.0, abs=1e-12)
        assert row["independence_defect"] == 0.0
    for slope in r.fitted_rate.values():
        assert slope == pytest.approx(-1.0, abs=0.1)
    assert [row["index"] for row in r.rows] == LADDER


def test_zero_partner_degenerates_to_single_sequence():
    r = run_classical_cramer(KernelFamily.clt("X", 2), KernelFamily.zero("Y", 2), LADDER)
    assert r.verdict
    assert r.series["Y"]["zero"]
    r = run_classical_cramer(KernelFamily.constant("X", 2), KernelFamily.zero("Y", 2), LADDER)
    assert not r.verdict


def test_classical_negative_control():
    r = run_classical_cramer(KernelFamily.constant("X", 2), KernelFamily.clt("Y", 2, 1), LADDER)
    assert not r.verdict
    assert r.fitted_rate["X"] == pytest.approx(0.0, abs=1e-12)
    assert all(row["classical"][0]["gap"] == pytest.approx(12.0) for row in r.rows)
    assert not r.series["X+Y"]["converged"]


def test_classical_gate_names_index_and_moment():
    with pytest.raises(HypothesisViolation) as info:
        run_classical_cramer(KernelFamily.clt("X", 1), KernelFamily.clt("Y", 3), LADDER)
    assert info.value.index == 1
    assert info.value.quantity == "E[X^3 Y]"
    assert "m=1" in str(info.value)


def test_free_pairs():
    for q2 in (2, 3):
        r = run_free_cramer(KernelFamily.clt("X", 2), KernelFamily.clt("Y", q2, 0, 1), LADDER)
        assert r.verdict
        for row in r.rows:
            assert row["residual"] <= 1e-10
            assert row["lemma_fourth_residual"] <= 1e-10
            assert row["free"][0]["gap"] == pytest.approx(1 / row["index"], abs=1e-10)
        assert r.fitted_rate["X+Y"] == pytest.approx(-1.0, abs=0.1)


def test_free_gate():
    with pytest.raises(HypothesisViolation):
        run_free_cramer(KernelFamily.clt("X", 2), KernelFamily.clt("Y", 2), LADDER)


def test_free_requires_mirror_symmetry():
    grid = Grid(4)
    k = cell(0, grid) @ cell(1, grid)
    fam = KernelFamily.from_kernel("K", k)
    with pytest.raises(SymmetryError):
        run_free_cramer(fam, KernelFamily.zero("Z", 2), [1, 2, 4])


def test_free_multi_matches_pair_run():
    fx, fy = KernelFamily.clt("X", 2), KernelFamily.clt("Y", 3, 0, 1)
    a = run_free_cramer(fx, fy, LADDER)
    b = run_free_multi([fx, fy], LADDER)
    assert a.to_dict() == b.to_dict()


def test_free_multi_three_q1_all_zero():
    fams = [KernelFamily.clt(c, 1, 0, i) for i, c in enumerate("ABC")]
    r = run_free_multi(fams, [1, 2, 4, 8])
    assert r.verdict
    assert all(s["zero"] for s in r.series.values())


def test_free_multi_three_q2():
    fams = [KernelFamily.clt(c, 2, 0, i) for i, c in enumerate("ABC")]
    r = run_free_multi(fams, [1, 2, 4, 8])
    assert r.verdict
    for row in r.rows:
        for comp in row["free"][:3]:
            assert comp["gap"] == pytest.approx(1 / row["index"], abs=1e-10)
        # total raw gap 3/m over variance 9
        assert row["free"][3]["gap"] == pytest.approx(1 / (3 * row["index"]), abs=1e-10)
        assert row["residual"] <= 1e-10


def test_free_multi_caps_components():
    fams = [KernelFamily.clt(c, 1, 0, i) for i, c in enumerate("ABCD")]
    with pytest.raises(CapacityError):
        run_free_multi(fams, [1, 2, 4])


def test_transfer():
    r = transfer_check(KernelFamily.clt("F", 2), LADDER)
    assert r.verdict and r.checks["classical_converges"] and r.checks["free_converges"]
    for row in r.rows:
        m = row["index"]
        assert row["classical"][0]["gap"] == pytest.approx(12 / m, abs=1e-10)
        assert row["free"][0]["gap"] == pytest.approx(1 / m, abs=1e-10)
        assert row["classical"][0]["variance"] == pytest.approx(2 * row["free"][0]["variance"])
    r = transfer_check(KernelFamily.constant("F", 2), LADDER)
    assert r.verdict and not r.checks["classical_converges"]
    r = transfer_check(KernelFamily.clt("F", 1), LADDER)
    assert all(s["zero"] for s in r.series.values())


def test_transfer_needs_full_symmetry(rng):
    k = random_kernel(3, Grid(4), rng, symmetry="mirror")
    with pytest.raises(SymmetryError):
        transfer_check(KernelFamily.from_kernel("K", k), [1, 2, 4])


def test_file_family_roundtrip(tmp_path):
    grid = Grid(8)
    save_kernel(clt_family(2, 2, 0, grid), tmp_path / "f.json")
    cfg = {
        "mode": "transfer",
        "families": [{"label": "F", "kind": "file", "kernel_path": "f.json"}],
        "indices": [1, 2, 4],
        "expected_verdict": "pass",
    }
    r = run_experiment(cfg, tmp_path)
    assert r.checks["verdicts_agree"] and not r.checks["classical_converges"]


@pytest.mark.parametrize("name", list_bundled_configs())
def test_bundled_configs_resolve(name):
    cfg = resolve_config(load_config(bundled_config(name)))
    assert cfg["mode"] in ("classical", "free", "free_multi", "transfer")


@pytest.mark.parametrize(
    "raw",
    [
        {},
        {"mode": "classical", "families": []},
        {"mode": "classical", "families": [{"label": "X", "q": 2}]},
        {"mode": "free", "families": [{"label": "X", "q": 2}, {"label": "Y", "q": 2}], "indices": [1, 2]},
        {"mode": "transfer", "families": [{"label": "X", "q": 2}], "tolerances": {"bogus": 1}},
        {"mode": "transfer", "families": [{"label": "X", "q": 2}], "expected_verdict": "maybe"},
    ],
)
def test_resolve_rejects_malformed(raw):
    with pytest.raises(ConfigError):
        resolve_config(raw)


def test_report_files(tmp_path):
    cfg = resolve_config(load_config(bundled_config("transfer_clt_q2")))
    report = run_experiment(cfg)
    written = write_report(report, cfg, tmp_path / "t.json", tmp_path / "t.csv")
    assert [p.name for p in written] == ["t.json", "t.csv", "t.free.csv"]
    doc = json.loads((tmp_path / "t.json").read_text())
    assert doc["version"] == "0.1.0" and doc["config"] == cfg and doc["seed"] == 0
    lines = [l for l in (tmp_path / "t.free.csv").read_text().splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(lines))
    assert list(rows[0]) == ["family", "index", "q", "phi2", "phi4", "free_gap", "oracle_value", "oracle_stderr", "d", "seed"]
    assert len(rows) == 5


def test_reports_are_deterministic():
    cfg = load_config(bundled_config("free_q2_q3"))
    assert run_experiment(cfg).to_dict() == run_experiment(cfg).to_dict()


def test_free_oracle_columns():
    r = run_free_cramer(
        KernelFamily.clt("X", 1), KernelFamily.clt("Y", 1, 0, 1), [1, 2, 4], oracle={"d": 16, "paths": 2}
    )
    comp = r.rows[0]["free"][0]
    assert comp["oracle_d"] == 16 and np.isfinite(comp["oracle_value"])
