"""Fixed-strike arithmetic Asian call under Black-Scholes.

Market data are reduced to the normalized triple (nu, h, q) in which the
time-t price is scale * E[(A_h - q)^+] with A_h = int_0^h exp(2(B_w + nu w)) dw.
For q <= 0 the option is certain to finish in the money and the price is
closed form.  For q > 0 two Laguerre series are available:

* ``price_direct`` expands (c - x)^+ in Laguerre polynomials of x = qc/A_h;
* ``price_ladder`` expands the twice-iterated ladder-height density of qc/A_h.

Both consume the negative moments of A_h from :mod:`asiantheta.moments`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ContractError, DomainError, UnsupportedConfigurationError
from .moments import MomentTable, negative_moments, positive_first_moment
from .numerics import PrecisionContext, laguerre_all, lower_gamma
from .theta import DEFAULT_B


@dataclass(frozen=True)
class MarketParams:
    """Contract and model data.  Times are in years, t0 <= t <= T."""

    spot: object
    strike: object
    drift: object
    rate: object
    sigma: object
    T: object
    t0: object = 0
    t: object = 0
    running_integral: object = 0


@dataclass(frozen=True)
class NormalizedParams:
    """(nu, h, q) and the factor turning a normalized price into money."""

    nu: object
    h: object
    q: object
    scale: object
    k: object = None
    q_star: object = None


def normalize(market: MarketParams, ctx: PrecisionContext | None = None) -> NormalizedParams:
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    S, K = ctx.real(market.spot), ctx.real(market.strike)
    drift, rate, sigma = ctx.real(market.drift), ctx.real(market.rate), ctx.real(market.sigma)
    t0, t, T = ctx.real(market.t0), ctx.real(market.t), ctx.real(market.T)
    running = ctx.real(market.running_integral)
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if not T > t0:
        raise DomainError("expiry must lie after the start of averaging")
    if not t0 <= t <= T:
        raise DomainError("valuation time must lie in [t0, T]")
    if S <= 0 or K <= 0:
        raise DomainError("spot and strike must be positive")
    if running < 0:
        raise DomainError("running integral must be non-negative")
    if t == t0 and running != 0:
        raise DomainError("running integral must vanish when t = t0")
    s2 = sigma * sigma
    nu = 2 * drift / s2 - 1
    h = s2 * (T - t) / 4
    k = K / S
    q_star = s2 / (4 * S) * (K * (t - t0) - running)
    scale = mp.exp(-rate * (T - t)) / (T - t0) * 4 * S / s2
    return NormalizedParams(nu=nu, h=h, q=k * h + q_star, scale=scale, k=k, q_star=q_star)


class PartialSum(NamedTuple):
    n: int
    value: object
    delta: object
    money: object
    money_delta: object


@dataclass(frozen=True)
class PriceReport:
    """Partial sums of one series run, with deltas against ``reference``."""

    series_kind: str
    c: object
    alpha: object
    beta: object
    scale: object
    reference: object
    reference_source: str
    partial: tuple = field(default_factory=tuple)
    final_normalized: object = None
    final_money: object = None

    def row(self, n: int) -> PartialSum:
        for p in self.partial:
            if p.n == n:
                return p
        raise KeyError(n)


def _report(kind, c, alpha, beta, params: NormalizedParams, sums, reference, ctx) -> PriceReport:
    # scale is unknown when only normalized inputs were given; money columns are then None
    scale = ctx.real(params.scale) if params.scale is not None else None
    if reference is None:
        ref, source = sums[-1][1], "last partial sum"
    else:
        ref, source = ctx.real(reference), "supplied"

    def money(v):
        return None if scale is None else v * scale

    rows = tuple(PartialSum(n, v, v - ref, money(v), money(v - ref)) for n, v in sums)
    final = sums[-1][1]
    return PriceReport(kind, c, alpha, beta, scale, ref, source, rows, final, money(final))


def price_degenerate(params: NormalizedParams, ctx: PrecisionContext | None = None):
    """E[A_h] - q, the price when q <= 0."""
    ctx = ctx or PrecisionContext()
    q = ctx.real(params.q)
    if q > 0:
        raise ContractError("closed form applies only for q <= 0; use a series")
    return positive_first_moment(params.nu, params.h, ctx) - q


def _moments(params, order, moments, ctx, B):
    if order <= 0:
        return None
    if moments is None:
        return negative_moments(order, params.nu, params.h, ctx=ctx, B=B)
    if moments.N < order:
        raise ContractError(f"moment table reaches m_{moments.N}, series needs m_{order}")
    if ctx.real(moments.nu) != ctx.real(params.nu) or ctx.real(moments.h) != ctx.real(params.h):
        raise ContractError("moment table was computed at a different (nu, h)")
    return moments


def _check_series_inputs(params, c, alpha, ctx):
    q, h = ctx.real(params.q), ctx.real(params.h)
    c, alpha = ctx.real(c), ctx.real(alpha)
    if q <= 0:
        raise ContractError("series pricing needs q > 0; use price_degenerate")
    if h <= 0:
        raise DomainError("series pricing needs h > 0")
    if c <= 0:
        raise DomainError("convergence parameter c must be positive")
    if alpha <= -1:
        raise DomainError("Laguerre order alpha must exceed -1")
    if not q * c < ctx.mp.mpf(1) / 2:
        raise DomainError(f"the series converges only for 0 < qc < 1/2, got qc = {ctx.mp.nstr(q * c, 8)}")
    return q, c, alpha


def direct_coefficients(N: int, c, alpha, ctx: PrecisionContext) -> list:
    """Laguerre coefficients of (c - x)^+ for the weight x^alpha e^{-x}, n = 0..N."""
    mp = ctx.mp
    c, alpha = ctx.real(c), ctx.real(alpha)
    inner = []
    for k in range(N + 1):
        s = k + alpha + 1
        # int_0^c (c - x) x^{s-1} e^{-x} dx
        inner.append((c * lower_gamma(s, c, ctx) - lower_gamma(s + 1, c, ctx)) / mp.gamma(s))
    return [mp.fsum((-1) ** k * mp.binomial(n, k) * inner[k] for k in range(n + 1)) for n in range(N + 1)]


def price_direct(params: NormalizedParams, c, alpha=0, N: int = 19, ctx: PrecisionContext | None = None,
                 moments: MomentTable | None = None, reference=None, B=DEFAULT_B) -> PriceReport:
    """C = (1/c) sum_n c_n E[X L_n^alpha(qc/X)], X = A_h, partial sums n = 0..N."""
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    q, c, alpha = _check_series_inputs(params, c, alpha, ctx)
    table = _moments(params, N - 1, moments, ctx, B)
    # E[X^{1-k}]: k = 0 is the positive first moment, k = 1 is one, k >= 2 is m_{k-1}
    ex = [positive_first_moment(params.nu, params.h, ctx), mp.one] + [table[j] for j in range(1, N)]
    coef = direct_coefficients(N, c, alpha, ctx)
    qc = q * c
    sums, acc = [], mp.zero
    for n in range(N + 1):
        g = mp.gamma(n + alpha + 1)
        expect = mp.fsum(
            (-1) ** k * g / (mp.gamma(k + alpha + 1) * mp.factorial(k) * mp.factorial(n - k)) * qc**k * ex[k]
            for k in range(n + 1)
        )
        acc += coef[n] * expect / c
        sums.append((n, acc))
    return _report("direct", c, alpha, ctx.mp.zero, params, sums, reference, ctx)


def price_ladder(params: NormalizedParams, c, alpha=0, beta=0, N: int = 19, ctx: PrecisionContext | None = None,
                 moments: MomentTable | None = None, reference=None, B=DEFAULT_B) -> PriceReport:
    """Ladder-height Laguerre series with delta = -1, partial sums n = 0..N.

    C = E[X] - q + q^2 c^(1-beta) e^(-c) sum_n c_n L_n^alpha(c) with
    c_n = sum_k (-1)^k binom(n,k) / Gamma(k+alpha+1) * (qc)^(s+k-1) m_{s+k} / ((s+k)(s+k+1)),
    s = alpha + beta + 1.
    """
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    q, c, alpha = _check_series_inputs(params, c, alpha, ctx)
    beta = ctx.real(beta)
    if not alpha + 2 * beta > -1:
        raise DomainError("the ladder series needs alpha + 2 beta > -1")
    shift = alpha + beta
    if shift != mp.floor(shift) or shift < 0:
        raise UnsupportedConfigurationError(
            "alpha + beta must be a non-negative integer so that only integer negative moments appear"
        )
    shift = int(shift)
    table = _moments(params, shift + N + 1, moments, ctx, B)
    qc = q * c
    I = []
    for k in range(N + 1):
        p = shift + k + 1
        I.append(qc ** (p - 1) / (p * (p + 1)) * table[p])
    L = laguerre_all(N, alpha, c, ctx)
    base = positive_first_moment(params.nu, params.h, ctx) - q
    pref = q * q * c ** (1 - beta) * mp.exp(-c)
    sums, acc = [], mp.zero
    for n in range(N + 1):
        cn = mp.fsum((-1) ** k * mp.binomial(n, k) / mp.gamma(k + alpha + 1) * I[k] for k in range(n + 1))
        acc += cn * L[n]
        sums.append((n, base + pref * acc))
    return _report("ladder", c, alpha, beta, params, sums, reference, ctx)


def price(params: NormalizedParams, c=None, series: str = "ladder", alpha=0, beta=0, N: int = 19,
          ctx: PrecisionContext | None = None, reference=None, B=DEFAULT_B) -> PriceReport:
    """Route to the closed form (q <= 0) or to the requested series."""
    ctx = ctx or PrecisionContext()
    if ctx.real(params.q) <= 0:
        value = price_degenerate(params, ctx)
        return _report("closed-form", None, None, None, params, [(0, value)], reference, ctx)
    if c is None:
        raise ContractError("a convergence parameter c is required when q > 0")
    if series == "ladder":
        return price_ladder(params, c, alpha, beta, N, ctx, reference=reference, B=B)
    if series == "direct":
        return price_direct(params, c, alpha, N, ctx, reference=reference, B=B)
    raise UnsupportedConfigurationError(f"unknown series {series!r}")


def denormalize(report: PriceReport, params: NormalizedParams) -> list:
    """Money values of every partial sum."""
    return [p.value * params.scale for p in report.partial]
