import numpy as np
import pytest

from perturbkit.exceptions import DegenerateFitError, InfeasiblePerturbationError
from perturbkit.harness import (
    CSV_COLUMNS,
    fit_slope,
    lemmas_to_csv,
    report_to_csv,
    run_convergence,
    run_lemma_suite,
)

FAST = {"trials": 3, "t_max": 1e-2, "t_points": 6}


def test_fit_slope_synthetic():
    t = np.geomspace(1e-4, 1e-2, 10)
    assert fit_slope(t, 3.7 * t**3) == pytest.approx(3.0, abs=1e-9)
    assert fit_slope(t, 0.2 * t**1.5) == pytest.approx(1.5, abs=1e-9)
    assert fit_slope(t, 2 * t**3 + 5 * t**4) == pytest.approx(3.0, abs=0.05)


def test_fit_slope_degenerate():
    with pytest.raises(DegenerateFitError):
        fit_slope([1e-3, 1e-2, 1e-1], [1, 2, 3])
    with pytest.raises(DegenerateFitError):
        fit_slope([1e-3] * 5, [1e-9] * 5)
    with pytest.raises(DegenerateFitError):
        fit_slope(np.geomspace(1e-3, 1e-1, 5), [0.0, 0.0, 1e-9, 1e-8, 1e-7])


def test_entropy_preserving_passes():
    rep = run_convergence({"measure": "entropy", "kind": "preserving", "dim": 4, **FAST})
    assert rep.passed and rep.expected_slope == 3.0
    assert abs(rep.fitted_slope - 3.0) <= 0.2


def test_fidelity_extending_passes():
    rep = run_convergence({"measure": "fidelity", "kind": "extending", "dim": 3, **FAST})
    assert rep.expected_slope == 1.5 and rep.pass_mode == "at_least"
    assert rep.passed


def test_quadratic_is_exact():
    rep = run_convergence({"measure": "dk_expand", "function": "square", "order": 2, **FAST})
    assert rep.exact and rep.passed and rep.fitted_slope is None


def test_truncation_order_lowers_slope():
    base = {"measure": "dk_expand", "function": "log", "seed": 4, **FAST}
    s2 = run_convergence({**base, "order": 2}).fitted_slope
    s1 = run_convergence({**base, "order": 1}).fitted_slope
    assert s2 == pytest.approx(3.0, abs=0.2) and s1 == pytest.approx(2.0, abs=0.2)


def test_root_blocks_have_no_combined_verdict():
    rep = run_convergence({"measure": "root_blocks", "s": 0.5, "dim": 3, **FAST})
    assert rep.passed is None
    assert set(rep.block_slopes) == {"support", "cross", "kernel"}
    assert rep.block_slopes["support"] == pytest.approx(2.0, abs=0.2)
    text = report_to_csv(rep)
    assert "median/kernel" in text


def test_csv_format_and_determinism():
    cfg = {"measure": "qre", "kind": "preserving", "dim": 3, **FAST}
    a, b = report_to_csv(run_convergence(cfg)), report_to_csv(run_convergence({**cfg, "workers": 4}))
    assert a == b
    lines = a.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[-1].startswith("median,")
    assert len(lines) == 1 + 3 * 6 + 1


def test_grid_trimmed_and_infeasible():
    with pytest.raises(InfeasiblePerturbationError):
        run_convergence({"measure": "entropy", "kind": "extending", "dim": 3, "t_min": 0.5,
                         "t_max": 50.0, "t_points": 6, "trials": 1})


def test_config_validation():
    with pytest.raises(ValueError, match="measure"):
        run_convergence({})
    with pytest.raises(ValueError, match="unknown measure"):
        run_convergence({"measure": "purity"})
    with pytest.raises(ValueError, match="t_min"):
        run_convergence({"measure": "entropy", "t_min": 1.0, "t_max": 0.1})


def test_lemma_suite_records():
    records = run_lemma_suite({"scenarios": 10})
    assert all(r.passed for r in records)
    assert {r.lemma for r in records} == {1, 2, 3, 4, 5}
    lemma4 = [r for r in records if r.lemma == 4]
    assert all(r.sign == -1 for r in lemma4)
    pairs = {r.functions for r in records if r.lemma == 5}
    assert "pow:0.3,pow:0.7" in pairs and "x,log" in pairs
    text = lemmas_to_csv(records)
    assert text.splitlines()[0].startswith("lemma,functions,max_deviation")


def test_lemma_suite_on_singular_states():
    records = run_lemma_suite({"scenarios": 5, "dim": 5, "rank": 3, "seed": 2})
    assert all(r.passed for r in records)


def test_lemma_one_identity_function():
    rec = run_lemma_suite({"scenarios": 5, "functions": ["x"], "pairs": []})
    assert rec[0].max_deviation <= 1e-12
