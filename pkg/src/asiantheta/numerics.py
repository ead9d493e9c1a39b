"""Arbitrary-precision kernel: precision contexts, series summation and the
special functions (Laguerre polynomials, scaled error function, incomplete
gamma functions) used by the higher layers.

Every function takes an explicit :class:`PrecisionContext`.  Each context owns
a private ``mpmath.MPContext`` so that no function reads or mutates the global
``mpmath.mp`` precision, which keeps concurrent evaluation at different
precisions safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple

import mpmath
import numpy as np

from .errors import DomainError, NonConvergenceError

DEFAULT_DIGITS = 160
MIN_DIGITS = 50
# Switchover between the power series and the continued fraction for W(z).
ERFC_SWITCH = 2


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision and series truncation policy.

    ``digits`` is the number of significant decimal digits.  ``term_stop`` is
    the relative size below which a series term counts as negligible; it
    defaults to ``10**-digits``.  ``patience`` consecutive negligible terms end
    a summation.
    """

    digits: int = DEFAULT_DIGITS
    term_stop: object = None
    patience: int = 3
    max_terms: int = 100_000
    mp: mpmath.ctx_mp.MPContext = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.digits, int) or self.digits < MIN_DIGITS:
            raise DomainError(f"digits must be an integer >= {MIN_DIGITS}, got {self.digits!r}")
        ctx = mpmath.MPContext()
        ctx.dps = self.digits
        object.__setattr__(self, "mp", ctx)
        bound = ctx.mpf(10) ** (-self.digits)
        stop = bound if self.term_stop is None else to_mpf(ctx, self.term_stop)
        if not 0 < stop <= bound:
            raise DomainError(f"term_stop must lie in (0, 1e-{self.digits}]")
        object.__setattr__(self, "term_stop", stop)

    def real(self, x) -> mpmath.mpf:
        """Convert ``x`` to a real of this context (floats via their repr)."""
        return to_mpf(self.mp, x)

    def extended(self, extra: int) -> "PrecisionContext":
        """A context with ``extra`` guard digits and a correspondingly tighter stop."""
        if extra <= 0:
            return self
        return PrecisionContext(self.digits + int(extra), patience=self.patience,
                                max_terms=self.max_terms)

    def with_digits(self, digits: int) -> "PrecisionContext":
        return PrecisionContext(int(digits), patience=self.patience, max_terms=self.max_terms)

    def eps(self) -> mpmath.mpf:
        return self.mp.mpf(10) ** (-self.digits)


def to_mpf(mpctx, x):
    """Exact-as-written conversion into ``mpctx``.

    Python floats are converted through ``repr`` so that ``0.0225`` means the
    decimal 0.0225 rather than its binary approximation.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a real number here")
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite value {x!r}")
        return mpctx.mpf(repr(x))
    if isinstance(x, Fraction):
        return mpctx.mpf(x.numerator) / x.denominator
    if isinstance(x, (np.floating, np.integer)):
        return to_mpf(mpctx, x.item())
    return mpctx.mpf(x)


def default_context() -> PrecisionContext:
    return PrecisionContext()


class SeriesSum(NamedTuple):
    value: mpmath.mpf
    terms: int


def sum_series(terms: Iterable, ctx: PrecisionContext, *, min_terms: int = 1) -> SeriesSum:
    """Sum ``terms`` until ``patience`` consecutive terms are negligible.

    A term is negligible when ``|term| < term_stop * |partial sum|``.  Zero
    terms count as negligible, which matters for alternating cosine factors
    that vanish on a sublattice.
    """
    total = ctx.mp.zero
    quiet = 0
    count = 0
    for term in terms:
        count += 1
        total += term
        if count >= min_terms and abs(term) <= ctx.term_stop * abs(total):
            quiet += 1
            if quiet >= ctx.patience:
                return SeriesSum(total, count)
        else:
            quiet = 0
        if count >= ctx.max_terms:
            raise NonConvergenceError(f"series did not converge within {ctx.max_terms} terms")
    # a finite iterator was exhausted
    return SeriesSum(total, count)


# ---------------------------------------------------------------------------
# Elementary combinatorial helpers


def pochhammer(lam, k: int, ctx: PrecisionContext):
    """Rising factorial (lam)_k = lam (lam+1) ... (lam+k-1).

    This is the convention under which the split theta-integral series agrees
    with direct quadrature; see :func:`falling_factorial` for the other one.
    """
    if k < 0:
        raise DomainError("k must be non-negative")
    lam = ctx.real(lam)
    out = ctx.mp.one
    for j in range(k):
        out *= lam + j
    return out


def falling_factorial(lam, k: int, ctx: PrecisionContext):
    """Falling factorial lam (lam-1) ... (lam-k+1), built by (lam)_{k+1} = (lam-k)(lam)_k."""
    if k < 0:
        raise DomainError("k must be non-negative")
    lam = ctx.real(lam)
    out = ctx.mp.one
    for j in range(k):
        out *= lam - j
    return out


# ---------------------------------------------------------------------------
# Laguerre polynomials


def _check_alpha(alpha):
    if alpha <= -1:
        raise DomainError(f"Laguerre order alpha must exceed -1, got {alpha}")


def laguerre_all(N: int, alpha, z, ctx: PrecisionContext) -> list:
    """[L_0^alpha(z), ..., L_N^alpha(z)] by the three-term recurrence."""
    if N < 0:
        raise DomainError("degree must be non-negative")
    mp = ctx.mp
    alpha = ctx.real(alpha)
    z = ctx.real(z)
    _check_alpha(alpha)
    vals = [mp.one]
    if N >= 1:
        vals.append(1 + alpha - z)
    for n in range(1, N):
        nxt = ((2 * n + 1 + alpha - z) * vals[n] - (n + alpha) * vals[n - 1]) / (n + 1)
        vals.append(nxt)
    return vals


def laguerre(n: int, alpha, z, ctx: PrecisionContext):
    """Generalized Laguerre polynomial L_n^alpha(z)."""
    return laguerre_all(n, alpha, z, ctx)[n]


def laguerre_explicit(n: int, alpha, z, ctx: PrecisionContext):
    """L_n^alpha(z) from the alternating explicit sum; used only as a cross-check."""
    mp = ctx.mp
    alpha = ctx.real(alpha)
    z = ctx.real(z)
    _check_alpha(alpha)
    return mp.fsum(
        (-1) ** k * mp.gamma(n + alpha + 1) / (mp.gamma(k + alpha + 1) * mp.factorial(n - k) * mp.factorial(k)) * z**k
        for k in range(n + 1)
    )


def gauss_laguerre(npts: int, alpha, ctx: PrecisionContext):
    """Nodes and weights of the npts-point Gauss rule for the weight x^alpha e^{-x}.

    Float eigenvalues of the Jacobi matrix seed a Newton polish at full
    precision.
    """
    mp = ctx.mp
    alpha = ctx.real(alpha)
    _check_alpha(alpha)
    a = float(alpha)
    diag = [2 * i + 1 + a for i in range(npts)]
    off = [math.sqrt((i + 1) * (i + 1 + a)) for i in range(npts - 1)]
    guesses = np.linalg.eigvalsh(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1))
    nodes, weights = [], []
    for g in guesses:
        x = mp.mpf(float(g))
        for _ in range(200):
            vals = laguerre_all(npts, alpha, x, ctx)
            deriv = (npts * vals[npts] - (npts + alpha) * vals[npts - 1]) / x
            step = vals[npts] / deriv
            x -= step
            if abs(step) <= ctx.eps() * abs(x):
                break
        else:
            raise NonConvergenceError("Newton polish of a Laguerre node stalled")
        following = laguerre(npts + 1, alpha, x, ctx)
        w = mp.gamma(npts + alpha + 1) * x / (mp.factorial(npts) * (npts + 1) ** 2 * following**2)
        nodes.append(x)
        weights.append(w)
    return nodes, weights


# ---------------------------------------------------------------------------
# Error function and incomplete gamma functions


def _erfc_scaled_series(z, ctx: PrecisionContext):
    # W(z) = e^{z^2} - (2/sqrt(pi)) sum_n 2^n z^{2n+1} / (2n+1)!!, all terms positive
    work = ctx.extended(int(2 * float(z) ** 2 / math.log(10)) + 10)
    mp = work.mp
    z = work.real(z)
    z2 = 2 * z * z
    term = z
    total = term
    n = 0
    while True:
        n += 1
        term = term * z2 / (2 * n + 1)
        total += term
        if term < work.eps() * total:
            break
    out = mp.exp(z * z) - 2 / mp.sqrt(mp.pi) * total
    return ctx.real(out)


def _erfc_scaled_fraction(z, ctx: PrecisionContext):
    # sqrt(pi) W(z) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))), modified Lentz
    mp = ctx.mp
    tiny = mp.mpf(10) ** (-(ctx.digits * 4))
    f = z
    C = z
    D = mp.zero
    j = 0
    while True:
        j += 1
        a = mp.mpf(j) / 2
        D = z + a * D
        if D == 0:
            D = tiny
        D = 1 / D
        C = z + a / C
        if C == 0:
            C = tiny
        delta = C * D
        f *= delta
        if abs(delta - 1) <= ctx.eps() / 10:
            break
        if j > ctx.max_terms:
            raise NonConvergenceError("continued fraction for erfc did not converge")
    return 1 / (f * mp.sqrt(mp.pi))


def erfc_scaled(z, ctx: PrecisionContext):
    """W(z) = exp(z^2) erfc(z) for z >= 0, without forming exp(z^2) for large z."""
    z = ctx.real(z)
    if z < 0:
        raise DomainError("erfc_scaled requires z >= 0")
    if z == 0:
        return ctx.mp.one
    if z < ERFC_SWITCH:
        return _erfc_scaled_series(z, ctx)
    # extra digits absorb rounding in the long recurrence near the switchover
    work = ctx.extended(10)
    return ctx.real(_erfc_scaled_fraction(work.real(z), work))


def lower_gamma(s, a, ctx: PrecisionContext):
    """Lower incomplete gamma function integral_0^a e^{-x} x^{s-1} dx."""
    s = ctx.real(s)
    a = ctx.real(a)
    if s <= 0 or a <= 0:
        raise DomainError("lower_gamma requires s > 0 and a > 0")
    return ctx.mp.gammainc(s, 0, a)


def upper_gamma(s, a, ctx: PrecisionContext):
    """Upper incomplete gamma function integral_a^inf e^{-x} x^{s-1} dx."""
    s = ctx.real(s)
    a = ctx.real(a)
    if a < 0:
        raise DomainError("upper_gamma requires a >= 0")
    return ctx.mp.gammainc(s, a)


def upper_gamma_scaled_all(L: int, x, ctx: PrecisionContext) -> list:
    """[W_0(x), ..., W_L(x)] with W_l(x) = exp(x^2) Gamma((l+1)/2, x^2).

    Uses W_0 = sqrt(pi) W(|x|), W_1 = 1 and the upward recurrence
    W_{l+2} = ((l+1)/2) W_l + |x|^{l+1}, in which every term is positive.
    The definition depends on x only through x^2.
    """
    if L < 0:
        raise DomainError("ell must be non-negative")
    mp = ctx.mp
    x = abs(ctx.real(x))
    vals = [mp.sqrt(mp.pi) * erfc_scaled(x, ctx), mp.one]
    for ell in range(0, L - 1):
        vals.append(mp.mpf(ell + 1) / 2 * vals[ell] + x ** (ell + 1))
    return vals[: L + 1]


def upper_gamma_scaled(ell: int, x, ctx: PrecisionContext):
    return upper_gamma_scaled_all(ell, x, ctx)[ell]


def quad_checked(f: Callable, intervals, ctx: PrecisionContext, tol=None, *, what="integral"):
    """Tanh-sinh quadrature that raises instead of returning an inaccurate value.

    ``tol`` is an absolute tolerance relative to the magnitude of the result.
    """
    mp = ctx.mp
    tol = ctx.real(tol) if tol is not None else mp.mpf(10) ** (-(ctx.digits // 2))
    value, err = mp.quad(f, intervals, method="tanh-sinh", error=True, maxdegree=12)
    if not mp.isfinite(value) or err > tol * max(abs(value), mp.one):
        raise NonConvergenceError(f"{what}: quadrature error estimate {mp.nstr(err, 3)} exceeds tolerance")
    return value

