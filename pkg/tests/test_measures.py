import numpy as np
import pytest
from hypothesis import given, strategies as st

from perturbkit.exact import (
    bures_distance,
    chernoff_bound,
    fidelity,
    quantum_relative_entropy,
    von_neumann_entropy,
)
from perturbkit.exceptions import ClassificationError, DomainError
from perturbkit.linalg import apply_function_exact
from perturbkit.measures import (
    bures_se,
    bures_sp,
    chernoff_s_sp,
    dk_expand_state,
    entropy_se,
    entropy_sp,
    expand_measure,
    exact_measure,
    fidelity_se,
    fidelity_sp,
    qcb_se,
    qcb_sp,
    qre_se,
    qre_sp,
)
from perturbkit.states import make_scenario, random_density, random_perturbation, random_scenario

d = lambda *v: np.diag(v).astype(complex)
HALF = np.eye(2) / 2
PURE = d(1.0, 0.0)
EPS = 0.01


@pytest.fixture
def se_pair():
    return make_scenario(PURE, d(-EPS, EPS), d(-2 * EPS, 2 * EPS))


def test_dk_expand_state_examples():
    sc = random_scenario(3, 3, "preserving", 0.0, seed=1)
    np.testing.assert_allclose(dk_expand_state(sc, "log").value, apply_function_exact(sc.rho0.op, "log"))
    sc = random_scenario(3, 3, "preserving", 1e-2, seed=1)
    np.testing.assert_allclose(dk_expand_state(sc, "square").value, sc.rho1 @ sc.rho1, atol=1e-14)
    delta = 0.01
    nu = d(delta, -delta)
    res = dk_expand_state(make_scenario(HALF, nu), "log", 2)
    # f'(1/2) = 2, f''(1/2) = -4
    np.testing.assert_allclose(res.value, np.log(0.5) * np.eye(2) + 2 * nu - 2 * nu @ nu, atol=1e-15)
    assert res.claimed_residual_exponent == 3


def test_dk_expand_state_singular_rho0():
    rho = random_density(3, 2, seed=4)
    nu = random_perturbation(rho, "preserving", 1e-3, seed=1)
    sc = make_scenario(rho, nu)
    res = dk_expand_state(sc, "sqrt", 2)
    assert np.linalg.norm(res.value - apply_function_exact(sc.rho1, "sqrt")) < 1e-8
    with pytest.raises(DomainError):
        dk_expand_state(sc, "log", 2)


def test_sp_measures_reject_extending(se_pair):
    for func in (dk_expand_state, entropy_sp, qre_sp, qcb_sp, fidelity_sp, bures_sp):
        with pytest.raises(ClassificationError, match="support-extending variant"):
            func(se_pair) if func is not dk_expand_state else func(se_pair, "log")


def test_se_measures_reject_preserving():
    sc = make_scenario(HALF, d(0.01, -0.01), d(-0.01, 0.01))
    for func in (entropy_se, qre_se, qcb_se, fidelity_se, bures_se):
        with pytest.raises(ClassificationError, match="support-preserving variant"):
            func(sc)


def test_entropy_sp_examples():
    sc = random_scenario(3, 3, "preserving", 0.0, seed=2)
    assert entropy_sp(sc).value == pytest.approx(von_neumann_entropy(sc.rho0.op), abs=1e-15)
    sc = make_scenario(HALF, d(0.01, -0.01))
    val = entropy_sp(sc).value
    assert val == pytest.approx(np.log(2) - 2e-4, abs=1e-15)
    # 0.6929472 is the expansion rounded to 7 digits; the oracle is 0.69294716722
    assert abs(val - 0.6929472) <= 5e-8
    assert abs(val - von_neumann_entropy(sc.rho1)) <= 2e-8
    delta = 1e-3
    p = np.array([2 / 3, 1 / 3])
    sc = make_scenario(np.diag(p), d(delta, -delta))
    S0 = -np.sum(p * np.log(p))
    expected = S0 - delta * np.log(2) - 0.5 * delta**2 * (1.5 + 3.0)
    assert entropy_sp(sc).value == pytest.approx(expected, abs=1e-15)


def test_qre_sp_examples():
    nu = d(0.01, -0.01)
    sc = make_scenario(HALF, nu, nu)
    assert qre_sp(sc).value == 0.0
    sc = make_scenario(HALF, nu, np.zeros((2, 2)))
    assert qre_sp(sc).value == pytest.approx(2.0e-4, abs=1e-17)
    oracle = quantum_relative_entropy(sc.rho1, sc.rho2)
    assert abs(2.0e-4 - oracle) <= 1e-7


def test_qre_sp_symmetry_and_shift():
    sc = random_scenario(4, 4, "preserving", 1e-2, seed=3, pair=True)
    swapped = make_scenario(sc.rho0, sc.nu2, sc.nu1)
    assert qre_sp(sc).value == qre_sp(swapped).value
    mu = random_perturbation(sc.rho0, "preserving", 1e-3, seed=8).op
    shifted = make_scenario(sc.rho0, sc.nu1.op + mu, sc.nu2.op + mu)
    for func in (qre_sp, qcb_sp, fidelity_sp, bures_sp):
        assert func(shifted).value == pytest.approx(func(sc).value, rel=1e-10, abs=1e-15)


def test_qcb_sp_examples():
    rho = random_density(3, seed=1)
    nu = random_perturbation(rho, "preserving", 1e-2, seed=1)
    res = qcb_sp(make_scenario(rho, nu, nu))
    assert res.value == 0.0 and res.s_star == 0.5
    sc = make_scenario(HALF, d(0.01, -0.01), d(-0.01, 0.01))
    assert qcb_sp(sc).value == pytest.approx(2.0e-4, rel=1e-12)


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_chernoff_sp_maximized_at_half(dim, seed):
    sc = random_scenario(dim, dim, "preserving", 1e-2, seed=seed, pair=True)
    half = chernoff_s_sp(sc, 0.5).value
    assert half == pytest.approx(qcb_sp(sc).value, rel=1e-12)
    assert chernoff_s_sp(sc, 0.3).value <= half * (1 + 1e-12)


def test_fidelity_sp_examples():
    rho = random_density(3, seed=1)
    nu = random_perturbation(rho, "preserving", 1e-2, seed=1)
    assert fidelity_sp(make_scenario(rho, nu, nu)).value == 1.0
    delta = 0.01
    sc = make_scenario(HALF, d(delta, -delta), np.zeros((2, 2)))
    assert fidelity_sp(sc).value == pytest.approx(1 - delta**2, abs=1e-15)
    assert fidelity(sc.rho1, sc.rho2) == pytest.approx(0.9999, abs=2e-8)


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_fidelity_sp_double_sum(dim, seed):
    sc = random_scenario(dim, dim, "preserving", 1e-2, seed=seed, pair=True)
    spec = sc.rho0.spectral
    diff = spec.to_eigenbasis(sc.nu1.op - sc.nu2.op)
    lam = spec.eigenvalues
    explicit = 1 - 0.25 * np.sum(np.abs(diff) ** 2 * 2 / (lam[:, None] + lam[None, :]))
    assert fidelity_sp(sc).value == pytest.approx(explicit, abs=1e-14)
    assert bures_sp(sc).value == pytest.approx(1 - explicit, rel=1e-10)


def test_bures_sp_diagonal_and_consistency():
    p = np.array([0.5, 0.3, 0.2])
    dp = np.array([0.004, -0.001, -0.003])
    sc = make_scenario(np.diag(p), np.diag(dp), np.zeros((3, 3)))
    assert bures_sp(sc).value == pytest.approx(0.25 * np.sum(dp**2 / p), rel=1e-12)
    sc = random_scenario(4, 4, "preserving", 1e-2, seed=5, pair=True)
    b = bures_sp(sc).value
    assert abs(b - 2 * (1 - np.sqrt(fidelity_sp(sc).value))) <= 10 * 1e-2**3


def test_entropy_se_examples():
    sc = make_scenario(PURE, d(-EPS, EPS))
    val = entropy_se(sc).value
    assert val == pytest.approx(EPS - EPS * np.log(EPS), abs=1e-15)
    assert val == pytest.approx(0.0560517, abs=1e-7)
    oracle = von_neumann_entropy(sc.rho1)
    assert oracle == pytest.approx(0.0560015, abs=1e-7)
    assert val - oracle == pytest.approx(EPS**2 / 2, rel=0.02)
    assert entropy_se(sc).claimed_residual_exponent == 2


def test_entropy_se_kernel_sector():
    D = np.array([0.004, 0.006])
    a = D.sum()
    sc = make_scenario(d(1.0, 0.0, 0.0), d(-a, *D))
    kernel_part = -np.sum(D * np.log(D))
    # linear support term is exactly a; the oracle's is -(1-a) log(1-a) = a + O(a^2)
    assert entropy_se(sc).value - kernel_part == pytest.approx(a, abs=1e-15)
    assert abs(von_neumann_entropy(sc.rho1) - kernel_part - a) <= a**2


def test_entropy_se_warns_on_singular_kernel_block():
    sc = make_scenario(d(1.0, 0.0, 0.0), d(-0.01, 0.01, 0.0))
    with pytest.warns(RuntimeWarning, match="singular"):
        entropy_se(sc)


def test_entropy_se_warns_on_small_kernel_block():
    nu = np.array([[-0.001, 0, 0.02], [0, 0, 0], [0.02, 0, 0.001]], dtype=complex)
    sc = make_scenario(d(0.6, 0.4, 0.0), nu)
    with pytest.warns(RuntimeWarning, match="below"):
        entropy_se(sc)


def test_qre_se_examples(se_pair):
    same = make_scenario(PURE, d(-EPS, EPS), d(-EPS, EPS))
    assert qre_se(same).value == pytest.approx(0.0, abs=1e-18)
    val = qre_se(se_pair).value
    assert val == pytest.approx(EPS - EPS * np.log(2), abs=1e-15)
    assert val == pytest.approx(3.06853e-3, abs=1e-8)
    # 0.99 log(.99/.98) + 0.01 log(.01/.02)
    oracle = quantum_relative_entropy(se_pair.rho1, se_pair.rho2)
    assert oracle == pytest.approx(3.119375943778275e-3, rel=1e-10)
    assert abs(val - oracle) <= EPS**2
    swapped = make_scenario(PURE, d(-2 * EPS, 2 * EPS), d(-EPS, EPS))
    assert qre_se(swapped).value != pytest.approx(val)


def test_qre_se_support_violation_is_infinite():
    sc = make_scenario(d(1.0, 0.0, 0.0), d(-EPS, EPS, 0.0), d(-EPS, 0.0, EPS))
    assert qre_se(sc).value == np.inf


def test_qcb_se_examples(se_pair):
    nu = d(-EPS, EPS)
    same = make_scenario(PURE, nu, nu)
    assert qcb_se(same).value == pytest.approx(0.0, abs=1e-15)
    res = qcb_se(se_pair)
    # maximize eps (2 - s - 2^(1-s))
    assert res.value == pytest.approx(8.6071e-4, abs=1e-8)
    assert res.s_star == pytest.approx(0.471234, abs=1e-5)
    assert abs(res.s_star - 0.5) > 0.02
    _, s_oracle = chernoff_bound(se_pair.rho1, se_pair.rho2)
    assert abs(s_oracle - 0.471234) <= 2e-3


def test_fidelity_se_examples(se_pair):
    rho = random_density(3, 2, seed=2)
    nu = random_perturbation(rho, "extending", 1e-2, seed=3)
    assert fidelity_se(make_scenario(rho, nu, nu)).value == pytest.approx(1.0, abs=1e-15)
    val = fidelity_se(se_pair).value
    assert val == pytest.approx(1 - 3 * EPS + 2 * np.sqrt(2) * EPS, abs=1e-15)
    assert abs(val - 0.9982843) <= 1e-7
    oracle = fidelity(se_pair.rho1, se_pair.rho2)
    assert abs(oracle - 0.9982596) <= 1e-7
    ortho = make_scenario(d(1.0, 0.0, 0.0), d(-EPS, EPS, 0.0), d(-EPS, 0.0, EPS))
    assert fidelity_se(ortho).value == pytest.approx(1 - 2 * EPS, abs=1e-15)


def test_bures_se_examples():
    rho = random_density(3, 2, seed=2)
    nu = random_perturbation(rho, "extending", 1e-2, seed=3)
    assert bures_se(make_scenario(rho, nu, nu)).value == pytest.approx(0.0, abs=1e-12)
    sc = make_scenario(PURE, np.zeros((2, 2)), d(-EPS, EPS))
    res = bures_se(sc)
    assert res.value == EPS
    assert res.notes
    oracle = bures_distance(sc.rho1, sc.rho2)
    assert oracle == pytest.approx(EPS + EPS**2 / 4, rel=1e-3)


def test_bures_se_with_zero_first_is_kernel_weight():
    rho = random_density(4, 2, seed=5)
    nu2 = random_perturbation(rho, "extending", 1e-2, seed=6)
    sc = make_scenario(rho, np.zeros((4, 4)), nu2)
    assert bures_se(sc).value == pytest.approx(np.trace(nu2.blocks.D).real, abs=1e-16)


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_oracle_chernoff_maximizer_near_half(eps):
    for seed in range(5):
        sc = random_scenario(3, 3, "preserving", eps, seed=seed, pair=True)
        _, s = chernoff_bound(sc.rho1, sc.rho2)
        assert abs(s - 0.5) <= 5e-2


def test_dispatch_by_kind(se_pair):
    assert expand_measure("fidelity", se_pair).claimed_residual_exponent == 1.5
    assert exact_measure("fidelity", se_pair).value == pytest.approx(0.9982596482389852)
    with pytest.raises(ValueError, match="unknown measure"):
        expand_measure("purity", se_pair)
