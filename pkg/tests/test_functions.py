import numpy as np
import pytest
from hypothesis import given, strategies as st

from perturbkit.exceptions import DomainError
from perturbkit.functions import (
    DEGENERACY_TOL,
    first_divided_difference,
    first_divided_difference_extended,
    get_function,
    power,
    second_divided_difference,
)

positive_spectra = st.lists(st.floats(0.05, 3.0), min_size=1, max_size=6).map(np.array)


def test_registry_names():
    for name in ("log", "xlogx", "sqrt", "invsqrt", "square", "x", "pow:0.3"):
        assert get_function(name).name == name
    assert get_function("pow:0.5").name == "sqrt"
    with pytest.raises(ValueError):
        get_function("exp")


def test_power_derivatives():
    f = power(0.3)
    assert f.df(2.0) == pytest.approx(0.3 * 2.0 ** -0.7)
    assert f.d2f(2.0) == pytest.approx(0.3 * -0.7 * 2.0 ** -1.7)


def test_domain_check():
    with pytest.raises(DomainError):
        get_function("log").check_domain([1.0, 0.0])
    get_function("xlogx").check_domain([0.0], allow_boundary=True)


def test_first_dd_sqrt_examples():
    dd = first_divided_difference("sqrt", np.array([4.0, 1.0])).values
    # (2 - 1) / (4 - 1) off the diagonal, 1/(2 sqrt(lam)) on it
    np.testing.assert_allclose(dd, [[0.25, 1 / 3], [1 / 3, 0.5]])
    dd = first_divided_difference("sqrt", np.array([0.5, 0.5])).values
    np.testing.assert_allclose(dd, np.full((2, 2), 1 / np.sqrt(2)))


def test_first_dd_identity_is_ones():
    np.testing.assert_allclose(first_divided_difference("x", np.array([0.1, 2.0, 5.0])).values,
                               np.ones((3, 3)))


def test_extended_dd_examples():
    dd = first_divided_difference_extended(0.5, np.array([1.0, 0.0])).values
    np.testing.assert_allclose(dd, [[0.5, 1.0], [1.0, 1.0]])
    dd = first_divided_difference_extended(1.0, np.array([0.3, 0.0, 0.7])).values
    np.testing.assert_allclose(dd, np.ones((3, 3)))
    dd = first_divided_difference_extended(0.5, np.array([4.0, 0.0])).values
    assert dd[0, 1] == pytest.approx(0.5)


def test_second_dd_examples():
    lam = np.array([0.2, 1.0, 3.0])
    np.testing.assert_allclose(second_divided_difference("square", lam).values, np.ones((3, 3, 3)))
    np.testing.assert_allclose(second_divided_difference("x", lam).values, np.zeros((3, 3, 3)),
                               atol=1e-15)
    np.testing.assert_allclose(second_divided_difference("log", np.ones(3)).values,
                               np.full((3, 3, 3), -0.5))


def test_second_dd_matches_scalar_definition():
    lam = np.array([0.5, 1.5, 2.5])
    f = get_function("log")
    a, b, c = lam
    ab = (f(a) - f(b)) / (a - b)
    bc = (f(b) - f(c)) / (b - c)
    expected = (ab - bc) / (a - c)
    assert second_divided_difference(f, lam).values[0, 1, 2] == pytest.approx(expected, rel=1e-12)


@given(positive_spectra)
def test_first_dd_symmetric(lam):
    dd = first_divided_difference("log", lam).values
    np.testing.assert_array_equal(dd, dd.T)


@given(positive_spectra)
def test_second_dd_symmetric_under_outer_swap(lam):
    dd = second_divided_difference("pow:0.3", lam).values
    np.testing.assert_array_equal(dd, dd.transpose(2, 1, 0))


@given(positive_spectra)
def test_sqrt_closed_forms(lam):
    dd = first_divided_difference("sqrt", lam).values
    r = np.sqrt(lam)
    np.testing.assert_allclose(dd, 1 / (r[:, None] + r[None, :]), rtol=1e-12)
    dd = first_divided_difference("invsqrt", lam).values
    closed = -1 / (np.sqrt(np.outer(lam, lam)) * (r[:, None] + r[None, :]))
    np.testing.assert_allclose(dd, closed, rtol=1e-12)


@given(positive_spectra, st.floats(0.0, 1.0))
def test_product_bounded_by_sqrt_square(lam, s):
    a = first_divided_difference(power(s), lam).values
    b = first_divided_difference(power(1 - s), lam).values
    bound = first_divided_difference("sqrt", lam).values ** 2
    assert np.all(a * b.T <= bound * (1 + 1e-10))


@pytest.mark.parametrize("name", ["log", "sqrt", "pow:0.3"])
@pytest.mark.parametrize("lam0", [0.1, 1.0, 3.0])
def test_continuity_across_degeneracy_switch(name, lam0):
    f = get_function(name)
    delta = 2 * DEGENERACY_TOL * lam0
    dd = first_divided_difference(f, np.array([lam0, lam0 + delta])).values[0, 1]
    assert abs(dd - f.df(lam0)) <= 10 * abs(f.d2f(lam0)) * delta
