import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asiantheta.errors import ContractError, DomainError
from asiantheta.numerics import PrecisionContext
from asiantheta.theta import (
    hyperbolic_kernel,
    laplace_theta_quad,
    reduce_nu,
    theta_fn,
    theta_integral,
    theta_integral_quad,
    theta_integral_series,
    theta_jacobi_lhs,
    theta_table,
    theta_value,
)

CTX = PrecisionContext(80)
QUAD = PrecisionContext(50)
H = "0.0225"


@given(st.floats(-2, 2), st.floats(0.02, 8))
@settings(max_examples=30, deadline=None)
def test_jacobi_transformation(x, t):
    mp = CTX.mp
    lhs = theta_jacobi_lhs(x, t, CTX)
    rhs = theta_fn(CTX.real(x) - mp.mpf(1) / 2, t, CTX)
    assert abs(lhs - rhs) <= mp.mpf(10) ** -70 * abs(rhs)


def test_theta_is_even_and_periodic():
    z, t = CTX.real("0.3"), CTX.real("0.7")
    v = theta_value(z, t, CTX)
    assert abs(theta_value(-z, t, CTX) - v) < CTX.mp.mpf(10) ** -75
    assert abs(theta_value(z + 1, t, CTX) - v) < CTX.mp.mpf(10) ** -75


def test_theta_rejects_nonpositive_t():
    with pytest.raises(DomainError):
        theta_fn(0, 0, CTX)


@pytest.mark.parametrize("nu,y", [("0", "1"), ("1", "0.5"), ("2", "2"), ("0.5", "3")])
def test_laplace_theta_identity(nu, y):
    k = hyperbolic_kernel(nu, y, QUAD)
    assert abs(laplace_theta_quad(nu, y, QUAD, "1e-24") - k) <= QUAD.mp.mpf(10) ** -20 * k


@pytest.mark.parametrize("nu,y", [("3", "1"), ("-0.5", "1"), ("1", "0")])
def test_hyperbolic_kernel_domain(nu, y):
    with pytest.raises(DomainError):
        hyperbolic_kernel(nu, y, CTX)


@pytest.mark.parametrize("nu,expected", [("0.3", "0.3"), ("-0.3", "0.3"), ("2.3", "0.3"), ("1.7", "0.3"), ("4", "0")])
def test_reduce_nu(nu, expected):
    assert abs(reduce_nu(nu, CTX) - CTX.real(expected)) < CTX.mp.mpf(10) ** -70


@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("nu", ["1", "0.25"])
def test_series_matches_quadrature(n, nu):
    s = theta_integral(n, nu, H, ctx=CTX)
    q = theta_integral_quad(n, nu, H, QUAD, "1e-24")
    assert abs(s - q) <= QUAD.mp.mpf(10) ** -20 * s


@pytest.mark.parametrize("n", [1, 5, 12])
def test_split_point_invariance(n):
    ctx = PrecisionContext(160)
    vals = [theta_integral(n, "1", H, B, ctx) for B in ("0.1", "0.3", "1.0")]
    assert max(vals) - min(vals) < ctx.mp.mpf(10) ** -30


def test_series_depends_on_nu_through_its_representative():
    a = theta_integral(3, "0.4", H, ctx=CTX)
    b = theta_integral(3, "3.6", H, ctx=CTX)
    assert abs(a - b) < CTX.mp.mpf(10) ** -70 * a


def test_partial_sums_settle():
    s = theta_integral_series(5, "1", H, ctx=PrecisionContext(160))
    assert s.n_c == len(s.c_partial) and s.n_d == len(s.d_partial)
    assert s.c_partial[-1] + s.d_partial[-1] > 0


@pytest.mark.parametrize("n,h", [(0, H), (-1, H), (1, "0"), (1, "-1")])
def test_theta_integral_domain(n, h):
    with pytest.raises(DomainError):
        theta_integral(n, "1", h, ctx=CTX)


def test_table_indexing():
    t = theta_table(3, "1", H, ctx=CTX)
    assert t.N == 3 and t[1] == t.values[0]
    for bad in (0, 4):
        with pytest.raises(ContractError):
            t[bad]
