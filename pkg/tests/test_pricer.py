import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asiantheta.errors import ContractError, DomainError, UnsupportedConfigurationError
from asiantheta.numerics import PrecisionContext, laguerre_all
from asiantheta.pricer import (
    MarketParams,
    NormalizedParams,
    denormalize,
    direct_coefficients,
    normalize,
    price,
    price_degenerate,
    price_direct,
    price_ladder,
)

BASE = dict(spot=100, strike=100, drift="0.09", rate="0.09", sigma="0.3", T=1)


def test_normalize_worked_example(ctx, example):
    mp = ctx.mp
    assert example.nu == 1
    assert example.h == ctx.real("0.0225")
    assert example.q == example.h and example.k == 1 and example.q_star == 0
    assert abs(example.scale - ctx.real("4061.91637898")) < mp.mpf("1e-8")


def test_normalize_with_running_average(ctx):
    m = MarketParams(**dict(BASE, t="0.5", running_integral=50))
    p = normalize(m, ctx)
    # (sigma^2 / 4S) (K (t - t0) - running) = 0.000225 * (50 - 50)
    assert p.q_star == 0
    assert p.h == ctx.real("0.09") * ctx.real("0.5") / 4


@given(st.floats(0.05, 1.0), st.floats(50, 150), st.floats(-0.05, 0.2))
@settings(max_examples=25, deadline=None)
def test_normalize_invariants(sigma, strike, drift):
    ctx = PrecisionContext(50)
    p = normalize(MarketParams(100, strike, drift, "0.05", sigma, 2), ctx)
    s2 = ctx.real(sigma) ** 2
    assert abs(p.nu - (2 * ctx.real(drift) / s2 - 1)) < ctx.mp.mpf(10) ** -40
    assert abs(p.q - p.k * p.h) < ctx.mp.mpf(10) ** -45
    assert p.scale > 0


@pytest.mark.parametrize(
    "override",
    [dict(sigma=0), dict(T=0), dict(t=2), dict(spot=-1), dict(running_integral=5), dict(running_integral=-1, t="0.5")],
)
def test_normalize_domain(ctx, override):
    with pytest.raises(DomainError):
        normalize(MarketParams(**dict(BASE, **override)), ctx)


def test_degenerate_route(ctx):
    p = NormalizedParams(nu=ctx.real(1), h=ctx.real("0.0225"), q=ctx.real("-0.01"), scale=ctx.mp.one)
    r = price(p, ctx=ctx)
    assert r.series_kind == "closed-form" and len(r.partial) == 1
    assert r.final_normalized == ctx.mp.expm1(ctx.real("0.09")) / 4 + ctx.real("0.01")
    with pytest.raises(ContractError):
        price_degenerate(NormalizedParams(1, "0.0225", "0.01", 1), ctx)


@pytest.mark.parametrize("alpha", ["0", "0.5"])
def test_direct_coefficients_synthesize_hinge(alpha):
    # sum_n c_n L_n(x) -> (c - x)^+ in the weighted L2 sense
    ctx = PrecisionContext(60)
    mp = ctx.mp
    c, alpha = ctx.real(3), ctx.real(alpha)
    coef = direct_coefficients(60, c, alpha, ctx)
    for x in ("0.5", "1.5", "5"):
        x = ctx.real(x)
        L = laguerre_all(60, alpha, x, ctx)
        s = mp.fsum(coef[n] * L[n] for n in range(61))
        assert abs(s - max(c - x, 0)) < mp.mpf("0.05")


def test_ladder_first_row_of_worked_example(ctx, example, example_moments):
    r = price_ladder(example, "1.367054258545", N=1, ctx=ctx, moments=example_moments)
    assert abs(r.row(1).value - ctx.real("0.0041430388")) < ctx.mp.mpf("0.6e-10")


def test_series_agree_near_convergence(ctx, example, example_moments):
    lad = price_ladder(example, 22, N=25, ctx=ctx, moments=example_moments).final_normalized
    dirc = price_direct(example, 22, N=25, ctx=ctx, moments=example_moments).final_normalized
    assert abs(lad - dirc) < ctx.mp.mpf("1e-9")
    assert abs(lad - ctx.real("0.00217354504625")) < ctx.mp.mpf("1e-9")


def test_price_within_payoff_bounds(ctx, example, example_moments):
    r = price_ladder(example, 20, N=25, ctx=ctx, moments=example_moments)
    ex = ctx.mp.expm1(ctx.real("0.09")) / 4
    assert ex - example.q <= r.final_normalized <= ex


def test_report_and_denormalize(ctx, example, example_moments):
    r = price(example, c=6, N=5, ctx=ctx, reference="0.002")
    assert [p.n for p in r.partial] == list(range(6))
    assert r.reference_source == "supplied"
    assert denormalize(r, example) == [p.money for p in r.partial]
    assert r.final_money == r.final_normalized * example.scale
    assert r.row(3).delta == r.row(3).value - ctx.real("0.002")


def test_normalized_input_without_scale(ctx):
    p = NormalizedParams(nu=1, h="0.0225", q="0.0225", scale=None)
    r = price(p, c=6, N=2, ctx=ctx)
    assert r.final_money is None and r.partial[0].money is None


@pytest.mark.parametrize("series", ["ladder", "direct"])
def test_qc_bound_is_loud(ctx, example, series):
    with pytest.raises(DomainError, match="qc < 1/2"):
        price(example, c=25, series=series, N=3, ctx=ctx)


def test_missing_c(ctx, example):
    with pytest.raises(ContractError):
        price(example, ctx=ctx)


def test_unknown_series(ctx, example):
    with pytest.raises(UnsupportedConfigurationError):
        price(example, c=6, series="spectral", ctx=ctx)


@pytest.mark.parametrize("alpha,beta,error", [("0.5", "0", UnsupportedConfigurationError),
                                              ("-1", "0", DomainError),
                                              ("0", "-1", DomainError)])
def test_ladder_parameter_checks(ctx, example, example_moments, alpha, beta, error):
    with pytest.raises(error):
        price_ladder(example, 6, alpha, beta, N=3, ctx=ctx, moments=example_moments)


def test_ladder_with_shifted_order(ctx, example, example_moments):
    # alpha + beta = 1 uses m_2.. instead of m_1..; the limit is the same price
    a = price_ladder(example, 20, "0.5", "0.5", N=24, ctx=ctx, moments=example_moments).final_normalized
    b = price_ladder(example, 20, 0, 0, N=24, ctx=ctx, moments=example_moments).final_normalized
    assert abs(a - b) < ctx.mp.mpf("1e-6")


def test_moment_table_mismatch(ctx, example, example_moments):
    other = NormalizedParams(nu=ctx.real(2), h=example.h, q=example.q, scale=example.scale)
    with pytest.raises(ContractError):
        price_ladder(other, 6, N=3, ctx=ctx, moments=example_moments)
    with pytest.raises(ContractError):
        price_ladder(example, 6, N=30, ctx=ctx, moments=example_moments)


def test_small_strike_continuity(ctx, example_moments):
    # q -> 0+: the series price approaches the closed form E[X] - q
    p = NormalizedParams(nu=ctx.real(1), h=ctx.real("0.0225"), q=ctx.real("1e-6"), scale=1)
    r = price_ladder(p, 6, N=15, ctx=ctx, moments=example_moments)
    ex = ctx.mp.expm1(ctx.real("0.09")) / 4
    assert abs(r.final_normalized - (ex - p.q)) < ctx.mp.mpf("1e-5")
