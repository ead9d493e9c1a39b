"""Riemann theta function and the Theta integrals

    Theta_n(h) = 1/(2 sqrt 2) * int_0^inf theta(nu/2 | w) w^(n-1) / (w h + 1/2)^(n+1/2) dw.

The integrals are evaluated by splitting at a point B: on [B, inf) the theta
factor is replaced by its Jacobi transform (fast for large w), on (0, B] by the
direct Gaussian sum (fast for small w).  Both halves then integrate in closed
form term by term, giving the c-series and d-series below.  A tanh-sinh
quadrature of the defining integral serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import count

from .errors import ContractError, DomainError
from .numerics import (
    PrecisionContext,
    erfc_scaled,
    pochhammer,
    quad_checked,
    sum_series,
)

DEFAULT_B = "0.3"


def _positive(name, value):
    if value <= 0:
        raise DomainError(f"{name} must be positive, got {value}")


def theta_fn(z, t, ctx: PrecisionContext):
    """theta(z|t) = (pi t)^(-1/2) sum_{n in Z} exp(-(z+n)^2/t)."""
    mp = ctx.mp
    z = ctx.real(z)
    t = ctx.real(t)
    _positive("t", t)
    n0 = -int(mp.nint(z))

    def terms():
        yield mp.exp(-((z + n0) ** 2) / t)
        for j in count(1):
            yield mp.exp(-((z + n0 + j) ** 2) / t) + mp.exp(-((z + n0 - j) ** 2) / t)

    return sum_series(terms(), ctx).value / mp.sqrt(mp.pi * t)


def theta_jacobi_lhs(x, t, ctx: PrecisionContext):
    """1 + 2 sum_{n>=1} (-1)^n exp(-(pi n)^2 t) cos(2 pi n x), which equals theta(x - 1/2 | t)."""
    mp = ctx.mp
    x = ctx.real(x)
    t = ctx.real(t)
    _positive("t", t)

    def terms():
        yield mp.one
        for n in count(1):
            yield 2 * (-1) ** n * mp.exp(-((mp.pi * n) ** 2) * t) * mp.cos(2 * mp.pi * n * x)

    return sum_series(terms(), ctx, min_terms=2).value


def theta_value(z, t, ctx: PrecisionContext):
    """theta(z|t), choosing whichever representation converges faster."""
    t = ctx.real(t)
    if t < 1:
        return theta_fn(z, t, ctx)
    return theta_jacobi_lhs(ctx.real(z) + ctx.mp.mpf(1) / 2, t, ctx)


def hyperbolic_kernel(nu, y, ctx: PrecisionContext):
    """cosh((nu-1) y) / (y sinh y), the Laplace transform at y^2 of w -> theta(nu/2 | w)."""
    mp = ctx.mp
    nu = ctx.real(nu)
    y = ctx.real(y)
    _positive("y", y)
    if abs(nu - 1) > 1:
        raise DomainError("hyperbolic_kernel requires |nu - 1| <= 1")
    return mp.cosh((nu - 1) * y) / (y * mp.sinh(y))


def laplace_theta_quad(nu, y, ctx: PrecisionContext, tol=None):
    """Quadrature of int_0^inf exp(-y^2 w) theta(nu/2 | w) dw."""
    mp = ctx.mp
    nu = ctx.real(nu)
    y = ctx.real(y)
    z = nu / 2
    f = lambda w: mp.exp(-y * y * w) * theta_value(z, w, ctx)
    return quad_checked(f, [0, mp.mpf(1) / 4, 1, 4, mp.inf], ctx, tol, what="Laplace transform of theta")


def reduce_nu(nu, ctx: PrecisionContext):
    """Representative of nu in [0, 1]; theta(nu/2 | w) is even and 2-periodic in nu."""
    nu = ctx.real(nu)
    r = nu - 2 * ctx.mp.floor(nu / 2)
    return 2 - r if r > 1 else r


@dataclass(frozen=True)
class ThetaSeries:
    """Value of one Theta integral together with its series partial sums.

    ``c_partial[M]`` is the c-series summed over 0 <= m <= M and
    ``d_partial[M]`` the d-series over |m| <= M.
    """

    n: int
    value: object
    c_partial: tuple
    d_partial: tuple

    @property
    def n_c(self) -> int:
        return len(self.c_partial)

    @property
    def n_d(self) -> int:
        return len(self.d_partial)


def _guard(n: int, x) -> int:
    # C^(1) + C^(2) (and D^(1) + D^(2)) is the remainder of an asymptotic
    # expansion of W; it cancels roughly 2n log10(x) digits.
    return int(2 * n * math.log10(1 + float(x))) + 15


def _c_zero(n, h, B, ctx):
    mp = ctx.mp
    half = mp.mpf(1) / 2
    s = mp.fsum(
        (-1) ** (n - 1 - k) / (n - k - half) * mp.binomial(n - 1, k) / (2 * h * B + 1) ** (n - k - half)
        for k in range(n)
    )
    return s / (2 * h**n)


def _c_term(n, m, nu, h, B, ctx):
    """c_{B,m}: the m-th Jacobi mode integrated over [B, inf)."""
    pm_float = math.pi * m
    x_float = pm_float * math.sqrt(float(B) + 1 / (2 * float(h)))
    work = ctx.extended(_guard(n, x_float))
    mp = work.mp
    nu, h, B = work.real(nu), work.real(h), work.real(B)
    half = mp.mpf(1) / 2
    cosine = mp.cos(mp.pi * m * nu)
    if cosine == 0:
        return ctx.mp.zero
    pm = mp.pi * m
    s2 = pm**2 * (B + 1 / (2 * h))
    gauss = mp.exp(-(pm**2) * B)
    w = erfc_scaled(mp.sqrt(s2), work)
    gamma = cosine / mp.sqrt(2) * (-1) ** (n - 1) / 2 ** (n - 1) * pm ** (2 * n - 1) / h ** (2 * n - half)
    total = mp.zero
    for k in range(n):
        p = n - k
        ph = pochhammer(half, p, work)
        c1 = (-1) ** (p - 1) * mp.fsum(
            (-1) ** ell * pochhammer(half, ell, work) / ph * gauss / s2 ** (ell + half) for ell in range(p)
        )
        c2 = mp.sqrt(mp.pi) * (-1) ** p / ph * gauss * w
        total += (-2) ** k * mp.binomial(n - 1, k) * h**k / pm ** (2 * k) * (c1 + c2)
    return ctx.real(gamma * total)


def _d_term(n, m, nu, h, B, ctx):
    """d_{B,m}: the m-th Gaussian image integrated over (0, B]."""
    a_float = abs(m + float(nu) / 2)
    work = ctx.extended(_guard(n, a_float * math.sqrt(1 / float(B) + 2 * float(h))))
    mp = work.mp
    nu, h, B = work.real(nu), work.real(h), work.real(B)
    half = mp.mpf(1) / 2
    a = m + nu / 2
    if a == 0:
        value = 2 ** (n - 1) / (mp.sqrt(mp.pi) * (n - half)) * B ** (n - half) / (2 * h * B + 1) ** (n - half)
        return ctx.real(value)
    r = 1 / B + 2 * h
    gauss = mp.exp(-a * a / B)
    pn = pochhammer(half, n, work)
    d1 = mp.fsum(
        (-1) ** k * pochhammer(half, k, work) / pn * a ** (2 * (n - k - 1)) / r ** (k + half) * gauss
        for k in range(n)
    )
    d2 = 2 ** (n - 1) * (-1) ** n / pn * abs(a) ** (2 * n - 1) * gauss * erfc_scaled(abs(a) * mp.sqrt(r), work)
    return ctx.real((-2) ** (n - 1) / mp.sqrt(mp.pi) * d1 + d2)


def theta_integral_series(n: int, nu, h, B=DEFAULT_B, ctx: PrecisionContext | None = None) -> ThetaSeries:
    """Theta_n(h) by the split c/d series, keeping partial sums for diagnostics."""
    ctx = ctx or PrecisionContext()
    if not isinstance(n, int) or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    h = ctx.real(h)
    B = ctx.real(B)
    _positive("h", h)
    _positive("B", B)
    nu = reduce_nu(nu, ctx)

    c_partial = []

    def c_terms():
        yield _c_zero(n, h, B, ctx)
        for m in count(1):
            yield _c_term(n, m, nu, h, B, ctx)

    d_partial = []

    def d_terms():
        yield _d_term(n, 0, nu, h, B, ctx)
        for m in count(1):
            yield _d_term(n, m, nu, h, B, ctx) + _d_term(n, -m, nu, h, B, ctx)

    def recording(gen, sink):
        acc = ctx.mp.zero
        for term in gen:
            acc += term
            sink.append(acc)
            yield term

    c_sum = sum_series(recording(c_terms(), c_partial), ctx, min_terms=2).value
    d_sum = sum_series(recording(d_terms(), d_partial), ctx, min_terms=2).value
    return ThetaSeries(n, c_sum + d_sum, tuple(c_partial), tuple(d_partial))


def theta_integral(n: int, nu, h, B=DEFAULT_B, ctx: PrecisionContext | None = None):
    """Theta_n(h) by the split c/d series (independent of the split point B)."""
    return theta_integral_series(n, nu, h, B, ctx).value


def theta_integral_quad(n: int, nu, h, ctx: PrecisionContext | None = None, tol=None, B=DEFAULT_B):
    """Theta_n(h) by tanh-sinh quadrature of its defining integral.

    The direct theta sum is used on (0, B] and the Jacobi form beyond.  Raises
    NonConvergenceError when the error estimate exceeds ``tol`` (relative,
    default 1e-40).
    """
    ctx = ctx or PrecisionContext(60)
    if not isinstance(n, int) or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    mp = ctx.mp
    nu = ctx.real(nu)
    h = ctx.real(h)
    B = ctx.real(B)
    _positive("h", h)
    half = mp.mpf(1) / 2
    z = nu / 2
    tol = mp.mpf(10) ** -40 if tol is None else tol

    def weight(w):
        return w ** (n - 1) / (w * h + half) ** (n + half)

    def small(w):
        return theta_fn(z, w, ctx) * weight(w)

    def large(w):
        return theta_jacobi_lhs(z + half, w, ctx) * weight(w)

    # the weight turns over near w = (n-1)/(h) scale; extra breakpoints keep tanh-sinh happy
    knee = max(mp.mpf(n) / h, B * 2)
    lower = quad_checked(small, [0, B / 10, B], ctx, tol, what="Theta integral on (0, B]")
    upper = quad_checked(large, [B, 1, knee / 4, knee, 4 * knee, mp.inf], ctx, tol, what="Theta integral on [B, inf)")
    return (lower + upper) / (2 * mp.sqrt(2))


@dataclass(frozen=True)
class ThetaIntegralTable:
    """Theta_1..Theta_N at fixed (nu, h, B) with (n_c, n_d) term counts."""

    nu: object
    h: object
    B: object
    values: tuple
    diagnostics: tuple

    @property
    def N(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int):
        if not 1 <= n <= len(self.values):
            raise ContractError(f"Theta_{n} not in table (have 1..{len(self.values)})")
        return self.values[n - 1]


def theta_table(N: int, nu, h, B=DEFAULT_B, ctx: PrecisionContext | None = None) -> ThetaIntegralTable:
    ctx = ctx or PrecisionContext()
    series = [theta_integral_series(n, nu, h, B, ctx) for n in range(1, N + 1)]
    return ThetaIntegralTable(
        nu=ctx.real(nu),
        h=ctx.real(h),
        B=ctx.real(B),
        values=tuple(s.value for s in series),
        diagnostics=tuple((s.n_c, s.n_d) for s in series),
    )
