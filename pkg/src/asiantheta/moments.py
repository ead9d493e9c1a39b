"""Negative moments m_n(h) = E[(A_h)^(-n)] of the exponential Brownian functional

    A_h = int_0^h exp(2 (B_w + nu w)) dw.

For |nu - 1| <= 1 the moments are finite combinations of Theta integrals,
e^{nu^2 h/2} m_N = sum_k a_{N,k} Theta_k.  Otherwise finitely many extra terms
appear, one for each positive exponent b = |nu-1| - 2n - 1 (n < n*).  Each
adds 2 b e^{b^2 h/2} times a product that the a-recursion generates from a
pure exponential seed.

The printed correction functions C_{n,k}, D_{n,k} and the coefficient table
b_{n,k,l} are also provided (``coeff_b``, ``correction_C``, ``correction_D``,
``printed_correction``).  They do NOT reproduce the moments and are kept only
for comparison; ``negative_moments`` uses the closed form above.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError, DomainError
from .numerics import PrecisionContext, erfc_scaled, pochhammer, quad_checked, upper_gamma_scaled_all
from .theta import ThetaIntegralTable, theta_table, DEFAULT_B


def _growth(n: int, nu):
    # multiplier shared by every recursion step n -> n+1
    return 2 * (n - nu) + nu**2 / (2 * n)


@dataclass(frozen=True)
class CoefficientTriangle:
    """a_{n,k} (1 <= k <= n <= N) and, when requested, the printed b_{n,k,l}."""

    nu: object
    N: int
    a: dict
    b: dict | None = None

    def b_function(self, n: int, k: int, h, ctx: PrecisionContext):
        """b_{n,k}(h) = sum_l b_{n,k,l} h^(-(3/2 + k + l))."""
        if self.b is None:
            raise ContractError("triangle was built without b coefficients")
        h = ctx.real(h)
        return ctx.mp.fsum(v * h ** (-(ctx.mp.mpf(3) / 2 + k + l)) for (nn, kk, l), v in self.b.items()
                           if nn == n and kk == k)


def coeff_a(N: int, nu, ctx: PrecisionContext | None = None) -> dict:
    """The triangle a_{n,k}, keyed by (n, k)."""
    ctx = ctx or PrecisionContext()
    if N < 1:
        raise DomainError("N must be positive")
    nu = ctx.real(nu)
    one = ctx.mp.one
    a = {(1, 1): one}
    for n in range(1, N):
        f = _growth(n, nu)
        a[(n + 1, 1)] = f * a[(n, 1)]
        for k in range(2, n + 1):
            a[(n + 1, k)] = f * a[(n, k)] + (one * (k - 1) / n + one / (2 * n)) * a[(n, k - 1)]
        a[(n + 1, n + 1)] = (1 + one / (2 * n)) * a[(n, n)]
    return a


def coeff_b(N: int, nu, ctx: PrecisionContext | None = None) -> dict:
    """The printed coefficient table b_{n,k,l}, keyed by (n, k, l).

    Seeds at n = 1, 2 followed by the four recursion branches for n >= 2.
    The n = 2, l = 0 seed uses the 2/sqrt(2 pi) normalization of its sibling
    seeds.
    """
    ctx = ctx or PrecisionContext()
    if N < 1:
        raise DomainError("N must be positive")
    mp = ctx.mp
    nu = ctx.real(nu)
    b = {(1, 0, 0): 2 / mp.sqrt(mp.pi)}
    if N >= 2:
        r2pi = mp.sqrt(2 * mp.pi)
        b[(2, 0, 0)] = 2 / r2pi * (2 * (1 - nu) + nu**2 / 2)
        b[(2, 0, 1)] = 3 / r2pi
        b[(2, 1, 1)] = -2 / r2pi
    g = lambda *key: b.get(key, mp.zero)
    three_halves = mp.mpf(3) / 2
    for n in range(2, N):
        f = _growth(n, nu)
        b[(n + 1, n, n)] = -g(n, n - 1, n - 1) / n
        b[(n + 1, n - 1, 0)] = mp.zero
        for l in range(1, n - 1):
            b[(n + 1, n - 1, l)] = -g(n, n - 2, l - 1) / n
        b[(n + 1, n - 1, n - 1)] = f * g(n, n - 1, n - 1) - g(n, n - 2, n - 1) / n
        b[(n + 1, n - 1, n)] = (three_halves + 2 * (n - 1)) / n * g(n, n - 1, n - 1) - g(n, n - 2, n - 1) / n
        for k in range(1, n - 1):
            b[(n + 1, k, 0)] = f * g(n, k, 0)
            for l in range(1, n):
                b[(n + 1, k, l)] = (f * g(n, k, l) + (three_halves + k + l - 1) / n * g(n, k, l - 1)
                                    - g(n, n - 1, l - 1) / n)
            b[(n + 1, k, n)] = (three_halves + k + n - 1) / n * g(n, k, n - 1) - g(n, n - 1, n - 1) / n
        b[(n + 1, 0, 0)] = f * g(n, 0, 0)
        for l in range(1, n):
            b[(n + 1, 0, l)] = f * g(n, 0, l) + (three_halves + l - 1) / n * g(n, 0, l - 1)
        b[(n + 1, 0, n)] = (three_halves + n - 1) / n * g(n, 0, n - 1)
    return b


def coefficient_triangle(N: int, nu, ctx: PrecisionContext | None = None, with_b: bool = False) -> CoefficientTriangle:
    ctx = ctx or PrecisionContext()
    return CoefficientTriangle(ctx.real(nu), N, coeff_a(N, nu, ctx), coeff_b(N, nu, ctx) if with_b else None)


def n_star(nu) -> int:
    """Smallest m >= 0 with 2m + 1 - |nu - 1| >= 0."""
    mu = abs(nu - 1)
    m = 0
    while 2 * m + 1 - mu < 0:
        m += 1
    return m


def correction_exponents(nu, ctx: PrecisionContext) -> list:
    """The positive exponents b_n = |nu-1| - 2n - 1 for 0 <= n < n*."""
    nu = ctx.real(nu)
    mu = abs(nu - 1)
    return [mu - 2 * n - 1 for n in range(n_star(nu))]


def correction_term(N: int, nu, h, ctx: PrecisionContext | None = None):
    """sum_{n < n*} 2 b_n e^{b_n^2 h/2} prod_{j=1}^{N-1} (2(j - nu) + (nu^2 - b_n^2)/(2j)).

    This is what must be added to sum_k a_{N,k} Theta_k to obtain
    e^{nu^2 h/2} m_N outside the basic range.  It vanishes when n* = 0.
    """
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    nu = ctx.real(nu)
    h = ctx.real(h)
    total = mp.zero
    for b in correction_exponents(nu, ctx):
        prod = mp.one
        for j in range(1, N):
            prod *= 2 * (j - nu) + (nu**2 - b**2) / (2 * j)
        total += 2 * b * mp.exp(b * b * h / 2) * prod
    return total


def correction_C(n: int, k: int, h, nu, ctx: PrecisionContext | None = None):
    """Printed C_{n,k}(h) with beta_n = 2n + 1 - |nu - 1|."""
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    h = ctx.real(h)
    nu = ctx.real(nu)
    if h <= 0:
        raise DomainError("h must be positive")
    beta = 2 * n + 1 - abs(nu - 1)
    if beta == 0:
        return mp.zero
    x = beta * mp.sqrt(2 * h) / 2
    W = upper_gamma_scaled_all(2 * k + 1, x, ctx)
    s = mp.fsum((-1) ** (l - 1) * mp.binomial(2 * k + 1, l) * W[l] * x ** (-l) for l in range(2 * k + 2))
    return mp.sqrt(h) * (beta * h / mp.sqrt(2)) ** (2 * k + 1) * s


def correction_D(n: int, k: int, h, nu, ctx: PrecisionContext | None = None):
    """Printed D_{n,k}(h) with gamma_n = (|nu-1| - 1 - 2n)^2 / 4; undefined at gamma_n = 0."""
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    h = ctx.real(h)
    nu = ctx.real(nu)
    if h <= 0:
        raise DomainError("h must be positive")
    if k < 1:
        raise DomainError("k must be a positive integer")
    gam = (abs(nu - 1) - 1 - 2 * n) ** 2 / 4
    if gam == 0:
        raise DomainError(f"D_{{{n},{k}}} is singular at gamma_n = 0 (|nu-1| = {2 * n + 1})")
    half = mp.mpf(1) / 2
    tail = mp.fsum(pochhammer(half, l, ctx) * (-1) ** l / (2 * (h * gam) ** (l + 1)) for l in range(k))
    bracket = erfc_scaled(mp.sqrt(2 * h * gam), ctx) / mp.sqrt(gam) - mp.sqrt(h) / mp.sqrt(mp.pi) * tail
    return (-2 * gam) ** k / pochhammer(half, k, ctx) * bracket / 2


def printed_correction(N: int, nu, h, ctx: PrecisionContext | None = None):
    """The printed double sum sum_{n<n*} sum_k (b_{N,k}(h) C_{n,k} - a_{N,k+1} D_{n,k+1}).

    Kept for comparison only; it disagrees with the first-moment quadrature.
    """
    ctx = ctx or PrecisionContext()
    tri = coefficient_triangle(N, nu, ctx, with_b=True)
    total = ctx.mp.zero
    for n in range(n_star(ctx.real(nu))):
        for k in range(N):
            total += tri.b_function(N, k, h, ctx) * correction_C(n, k, h, nu, ctx)
            total -= tri.a[(N, k + 1)] * correction_D(n, k + 1, h, nu, ctx)
    return total


@dataclass(frozen=True)
class MomentTable:
    """m_1..m_N together with their Theta and correction parts (both scaled by e^{nu^2 h/2})."""

    nu: object
    h: object
    N: int
    m: tuple
    n_star: int
    theta_part: tuple
    correction_part: tuple

    def __getitem__(self, n: int):
        if not 1 <= n <= self.N:
            raise ContractError(f"m_{n} not in table (have 1..{self.N})")
        return self.m[n - 1]


def negative_moments(N: int, nu, h, theta: ThetaIntegralTable | None = None,
                     ctx: PrecisionContext | None = None, B=DEFAULT_B) -> MomentTable:
    """m_1..m_N at (nu, h).  ``theta`` is computed when not supplied."""
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    nu = ctx.real(nu)
    h = ctx.real(h)
    if N < 1:
        raise DomainError("N must be positive")
    if h <= 0:
        raise DomainError("h must be positive")
    if theta is None:
        theta = theta_table(N, nu, h, B, ctx)
    if theta.N < N:
        raise ContractError(f"Theta table has {theta.N} entries, need {N}")
    if ctx.real(theta.h) != h or ctx.real(theta.nu) != nu:
        raise ContractError("Theta table was computed at a different (nu, h)")
    a = coeff_a(N, nu, ctx)
    scale = mp.exp(-nu * nu * h / 2)
    theta_part, corr_part, moments = [], [], []
    for n in range(1, N + 1):
        tp = mp.fsum(a[(n, k)] * theta[k] for k in range(1, n + 1))
        cp = correction_term(n, nu, h, ctx)
        theta_part.append(tp)
        corr_part.append(cp)
        moments.append(scale * (tp + cp))
    return MomentTable(nu, h, N, tuple(moments), n_star(nu), tuple(theta_part), tuple(corr_part))


def first_moment_dufresne(nu, h, ctx: PrecisionContext | None = None, tol=None):
    """E[1/A_h] = 2 e^{-nu^2 h/2} / sqrt(2 pi h^3) int_0^inf y e^{-y^2/2h} cosh((nu-1)y)/sinh(y) dy."""
    ctx = ctx or PrecisionContext(60)
    mp = ctx.mp
    nu = ctx.real(nu)
    h = ctx.real(h)
    if h <= 0:
        raise DomainError("h must be positive")
    tol = mp.mpf(10) ** -40 if tol is None else tol

    def f(y):
        if y == 0:
            return mp.one
        return y * mp.exp(-y * y / (2 * h)) * mp.cosh((nu - 1) * y) / mp.sinh(y)

    # the Gaussian peak sits near the shifted centre |nu-1| h
    s = mp.sqrt(h)
    centre = abs(nu - 1) * h
    pts = sorted({mp.zero, s, centre + s, centre + 4 * s, centre + 12 * s})
    integral = quad_checked(f, pts + [mp.inf], ctx, tol, what="first-moment integral")
    return 2 * mp.exp(-nu * nu * h / 2) / mp.sqrt(2 * mp.pi * h**3) * integral


def positive_first_moment(nu, h, ctx: PrecisionContext | None = None):
    """E[A_h] = (e^{2h(nu+1)} - 1) / (2(nu+1)), equal to h at nu = -1."""
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    nu = ctx.real(nu)
    h = ctx.real(h)
    x = 2 * h * (nu + 1)
    if x == 0:
        return h
    return h * mp.expm1(x) / x
