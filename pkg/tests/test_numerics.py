import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asiantheta.errors import DomainError, NonConvergenceError
from asiantheta.numerics import (
    PrecisionContext,
    erfc_scaled,
    falling_factorial,
    gauss_laguerre,
    laguerre,
    laguerre_all,
    laguerre_explicit,
    lower_gamma,
    pochhammer,
    quad_checked,
    sum_series,
    upper_gamma,
    upper_gamma_scaled,
    upper_gamma_scaled_all,
)

CTX = PrecisionContext(60)


def close(a, b, rel=50):
    mp = CTX.mp
    return abs(a - b) <= mp.mpf(10) ** (-rel) * max(abs(a), abs(b), mp.one)


def test_context_rejects_low_precision():
    with pytest.raises(DomainError):
        PrecisionContext(20)


def test_contexts_are_independent():
    a, b = PrecisionContext(50), PrecisionContext(200)
    assert a.mp.dps == 50 and b.mp.dps == 200
    assert mpmath.mp.dps == 15


def test_float_input_goes_through_repr():
    assert CTX.real(0.1) == CTX.mp.mpf("0.1")


def test_pochhammer_rising_and_falling():
    half = CTX.mp.mpf(1) / 2
    assert pochhammer(half, 2, CTX) == CTX.mp.mpf(3) / 4
    assert falling_factorial(half, 2, CTX) == -CTX.mp.mpf(1) / 4
    assert pochhammer(half, 0, CTX) == 1


@given(st.fractions(min_value=-5, max_value=5), st.integers(0, 15))
@settings(max_examples=40, deadline=None)
def test_pochhammer_step(lam, k):
    lam = CTX.mp.mpf(lam.numerator) / lam.denominator
    assert close(pochhammer(lam, k + 1, CTX), pochhammer(lam, k, CTX) * (lam + k))


@pytest.mark.parametrize("n", [0, 1, 5, 12])
@pytest.mark.parametrize("alpha", ["0", "0.5", "-0.5", "3"])
def test_laguerre_at_zero(n, alpha):
    alpha = CTX.real(alpha)
    assert close(laguerre(n, alpha, 0, CTX), CTX.mp.binomial(n + alpha, n))


@given(st.integers(0, 20), st.floats(-0.9, 4), st.floats(0, 40))
@settings(max_examples=40, deadline=None)
def test_laguerre_recurrence_matches_explicit_sum(n, alpha, z):
    a, b = laguerre(n, alpha, z, CTX), laguerre_explicit(n, alpha, z, CTX)
    assert abs(a - b) <= CTX.mp.mpf(10) ** -35 * max(1, abs(b)) * CTX.mp.exp(z / 2)


def test_laguerre_rejects_bad_alpha():
    with pytest.raises(DomainError):
        laguerre_all(3, -1, 1, CTX)


@pytest.mark.parametrize("alpha", ["0", "0.5"])
def test_laguerre_orthogonality(alpha):
    mp = CTX.mp
    alpha = CTX.real(alpha)
    nodes, weights = gauss_laguerre(14, alpha, CTX)
    L = [laguerre_all(12, alpha, x, CTX) for x in nodes]
    for n in range(13):
        for m in range(13):
            inner = mp.fsum(w * Lx[n] * Lx[m] for w, Lx in zip(weights, L))
            expected = mp.gamma(n + alpha + 1) / mp.factorial(n) if n == m else 0
            assert abs(inner - expected) < mp.mpf(10) ** -40 * max(1, expected)


@pytest.mark.parametrize("z", ["0", "0.3", "1.999", "2", "2.001", "5", "30", "1000"])
def test_erfc_scaled_matches_mpmath(z):
    ctx = PrecisionContext(160)
    mp = ctx.mp
    z = ctx.real(z)
    ref = mp.exp(z * z) * mp.erfc(z) if z < 100 else mp.erfc(z) * mp.exp(z * z)
    assert abs(erfc_scaled(z, ctx) - ref) <= mp.mpf(10) ** -155 * ref


def test_erfc_scaled_domain():
    with pytest.raises(DomainError):
        erfc_scaled(-1, CTX)


@pytest.mark.parametrize("s,a", [("0.5", "0.1"), ("1", "1"), ("3.5", "2"), ("20", "7")])
def test_incomplete_gamma_pair_adds_to_gamma(s, a):
    s, a = CTX.real(s), CTX.real(a)
    assert close(lower_gamma(s, a, CTX) + upper_gamma(s, a, CTX), CTX.mp.gamma(s))


@pytest.mark.parametrize("s,a", [(0, 1), (1, 0), (-1, 2)])
def test_lower_gamma_domain(s, a):
    with pytest.raises(DomainError):
        lower_gamma(s, a, CTX)


@pytest.mark.parametrize("x", ["0", "0.25", "1", "3", "12"])
def test_upper_gamma_scaled_matches_definition(x):
    mp = CTX.mp
    x = CTX.real(x)
    W = upper_gamma_scaled_all(9, x, CTX)
    for ell in range(10):
        ref = mp.exp(x * x) * mp.gammainc(mp.mpf(ell + 1) / 2, x * x)
        assert close(W[ell], ref, 45)
        assert close(upper_gamma_scaled(ell, x, CTX), W[ell], 45)


def test_sum_series_reports_non_convergence():
    ctx = PrecisionContext(50, max_terms=200)
    with pytest.raises(NonConvergenceError):
        sum_series((ctx.mp.one / k for k in range(1, 10**6)), ctx)


def test_sum_series_geometric():
    s = sum_series((CTX.mp.mpf(2) ** -k for k in range(10**4)), CTX)
    assert close(s.value, 2)


def test_quad_checked_raises_when_inaccurate():
    with pytest.raises(NonConvergenceError):
        quad_checked(lambda x: CTX.mp.sin(1 / x), [0, 1], CTX, tol="1e-50")
