"""Independent reference engines for validating moments and prices.

* Yor's density for 1/A_h, obtained from the oscillatory integral psi_xi(h).
* A direct quadrature for the negative moments, valid for every real nu.
* A seeded Monte Carlo simulation of A_h.

These paths share no code with the series in ``theta``/``moments``/``pricer``
beyond the precision context, so agreement is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np

from .errors import DomainError, NonConvergenceError
from .numerics import PrecisionContext, quad_checked

# ---------------------------------------------------------------------------
# psi and the density


def cancellation_digits(h) -> int:
    """Decimal digits lost to cancellation in psi_xi(h), whose size is about exp(-pi^2/(2h))."""
    return int(math.ceil(math.pi**2 / (2 * float(h) * math.log(10))))


MAX_PSI_DIGITS = 4000


def _w_max(h, work: PrecisionContext):
    mp = work.mp
    # exp(-w^2/2h) sinh(w) < 10^-digits beyond this point
    return mp.sqrt(2 * h * work.digits * mp.log(10)) + mp.mpf(1) / 2


def _trapezoid_divisions(h, digits: int) -> int:
    """j such that the step h/j keeps the trapezoid aliasing error below 10^-digits.

    In the strip |Im w| <= d (d = 3/2 < pi/2) the integrand grows at most like
    exp(d^2/2h + pi d/h) while the aliasing error carries exp(-2 pi d j/h).
    """
    h = float(h)
    d = 1.5
    need = digits * math.log(10) + 10 + d * d / (2 * h)
    return max(3, math.ceil((1 + need / (math.pi * d / h)) / 2))


def _psi_panels(xi, h, work: PrecisionContext, method: str = "gauss-legendre"):
    mp = work.mp
    wmax = _w_max(h, work)
    # e^{-xi cosh w} may cut the range much earlier
    wcut = mp.acosh(work.digits * mp.log(10) / xi + 1)
    wmax = min(wmax, wcut + 1)
    f = lambda w: mp.exp(-w * w / (2 * h) - xi * mp.cosh(w)) * mp.sinh(w) * mp.sin(mp.pi * w / h)
    total, err = mp.zero, mp.zero
    for j in range(int(wmax / h) + 1):
        v, e = mp.quad(f, [j * h, (j + 1) * h], method=method, error=True)
        total += v
        err += e
    return total, err


def _psi_trapezoid(xi, h, work: PrecisionContext):
    mp = work.mp
    j = _trapezoid_divisions(h, work.digits)
    step = h / j
    wmax = _w_max(h, work)
    total = mp.zero
    for k in range(1, int(wmax / step) + 1):
        if k % j == 0:
            continue
        w = k * step
        total += mp.exp(-w * w / (2 * h) - xi * mp.cosh(w)) * mp.sinh(w) * mp.sin(mp.pi * k / j)
    return step * total, mp.zero


def _psi_adaptive(rule, xi, h, ctx: PrecisionContext, accuracy: int):
    """Raise the working precision until the result clears the rounding floor.

    psi_xi(h) is of size exp(-pi^2/(2h)) or smaller (much smaller for small
    xi) while the integrand is of order one, so the needed precision is only
    known after a first attempt.
    """
    if ctx.real(xi) <= 0 or ctx.real(h) <= 0:
        raise DomainError("psi requires xi > 0 and h > 0")
    digits = max(ctx.digits, cancellation_digits(h) + accuracy + 10)
    while digits <= MAX_PSI_DIGITS:
        work = ctx.with_digits(digits)
        mp = work.mp
        value, err = rule(work.real(xi), work.real(h), work)
        floor = mp.mpf(10) ** (-(digits - 10))
        if abs(value) > floor * mp.mpf(10) ** accuracy and err <= abs(value) * mp.mpf(10) ** (-accuracy):
            return ctx.real(value)
        # the magnitude seen so far tells how many more digits are needed
        seen = -int(mp.log10(abs(value))) if value != 0 else digits
        digits = max(3 * digits // 2, seen + accuracy + 20)
    raise NonConvergenceError(f"psi needs more than {MAX_PSI_DIGITS} digits at xi = {xi}")


def psi(xi, h, ctx: PrecisionContext | None = None, accuracy: int = 30, method: str = "gauss-legendre"):
    """psi_xi(h) = int_0^inf exp(-w^2/(2h) - xi cosh w) sinh(w) sin(pi w/h) dw.

    Degree-adaptive quadrature (``method`` is an mpmath rule) on the half
    periods between consecutive zeros of sin(pi w/h), at whatever precision
    gives ``accuracy`` significant digits.
    """
    rule = lambda x, hh, work: _psi_panels(x, hh, work, method)
    return _psi_adaptive(rule, xi, h, ctx or PrecisionContext(60), accuracy)


def psi_trapezoid(xi, h, ctx: PrecisionContext | None = None, accuracy: int = 30, adaptive: bool = True):
    """psi_xi(h) by the trapezoid rule; the integrand is even and entire, so it converges geometrically.

    With ``adaptive=False`` the sum is taken once at the precision of ``ctx``
    and the result carries an absolute error of about 10^(10 - digits).
    """
    ctx = ctx or PrecisionContext(60)
    if not adaptive:
        if ctx.real(xi) <= 0 or ctx.real(h) <= 0:
            raise DomainError("psi requires xi > 0 and h > 0")
        return _psi_trapezoid(ctx.real(xi), ctx.real(h), ctx)[0]
    return _psi_adaptive(_psi_trapezoid, xi, h, ctx, accuracy)


@dataclass(frozen=True)
class DensityContext:
    """Parameters of the density of 1/A_h together with the working precision.

    ``c_h = (2 pi^3 h)^(-1/2) exp(pi^2/(2h))`` makes c_h e^{-nu^2 h/2} alpha(x)
    a probability density.  ``accuracy`` is the number of correct digits
    targeted after the exp(-pi^2/(2h)) cancellation.
    """

    nu: object
    h: object
    accuracy: int = 20
    quad_tol: float = 1e-14
    ctx: PrecisionContext = field(default=None)

    def __post_init__(self):
        h = float(self.h)
        if h <= 0:
            raise DomainError("h must be positive")
        if float(self.nu) <= -1:
            raise DomainError("the density route needs nu > -1 (y^nu must be integrable at 0)")
        if self.ctx is None:
            digits = max(60, cancellation_digits(h) + self.accuracy + 15)
            object.__setattr__(self, "ctx", PrecisionContext(digits))

    @cached_property
    def c_h(self):
        mp = self.ctx.mp
        h = self.ctx.real(self.h)
        return mp.exp(mp.pi**2 / (2 * h)) / mp.sqrt(2 * mp.pi**3 * h)

    @cached_property
    def _nodes(self):
        ctx = self.ctx
        mp = ctx.mp
        h = ctx.real(self.h)
        j = _trapezoid_divisions(h, ctx.digits)
        step = h / j
        wmax = _w_max(h, ctx)
        nodes = []
        for k in range(1, int(wmax / step) + 1):
            if k % j == 0:
                continue
            w = k * step
            weight = step * mp.exp(-w * w / (2 * h)) * mp.sinh(w) * mp.sin(mp.pi * k / j)
            nodes.append((weight, mp.cosh(w)))
        return tuple(nodes)

    def _y_integral(self, z):
        """int_0^inf t^nu exp(-t^2/2 - z t) dt."""
        mp = self.ctx.mp
        nu = self.ctx.real(self.nu)
        if nu == 1:
            return 1 - z * mp.sqrt(mp.pi / 2) * mp.exp(z * z / 2) * mp.erfc(z / mp.sqrt(2))
        if nu == 0:
            return mp.sqrt(mp.pi / 2) * mp.exp(z * z / 2) * mp.erfc(z / mp.sqrt(2))
        return mp.gamma(nu + 1) * mp.exp(z * z / 4) * mp.pcfd(-nu - 1, z)

    @cached_property
    def _scale(self):
        nu, h = self.ctx.real(self.nu), self.ctx.real(self.h)
        return self.c_h * self.ctx.mp.exp(-nu * nu * h / 2)

    @cached_property
    def _memo(self):
        return {}

    def density(self, x):
        """The probability density of 1/A_h at x > 0 (memoized per x)."""
        x = self.ctx.real(x)
        key = mpmath.libmp.to_str(x._mpf_, self.ctx.digits + 5)
        value = self._memo.get(key)
        if value is None:
            value = self._memo[key] = self._scale * asia_density(x, self)
        return value


def asia_density(x, dctx: DensityContext):
    """alpha(x) = e^{-x/2} int_0^inf y^nu e^{-x y^2/2} psi_{xy}(h) dy.

    The y-integral is done in closed form after exchanging it with the
    psi integral, leaving one trapezoid sum over the psi variable.
    """
    ctx = dctx.ctx
    mp = ctx.mp
    x = ctx.real(x)
    if x <= 0:
        raise DomainError("x must be positive")
    nu = ctx.real(dctx.nu)
    sx = mp.sqrt(x)
    s = mp.fsum(a * dctx._y_integral(sx * c) for a, c in dctx._nodes)
    return mp.exp(-x / 2) * x ** (-(nu + 1) / 2) * s


def asia_density_nested(x, dctx: DensityContext):
    """alpha(x) by quadrature over y of psi_{xy}; slow, for cross-checking only.

    psi is evaluated at the context precision, so its error is absolute
    (tiny values of psi for small xy are not resolved, nor do they matter).
    """
    ctx = dctx.ctx
    mp = ctx.mp
    x = ctx.real(x)
    nu = ctx.real(dctx.nu)
    h = ctx.real(dctx.h)

    def f(y):
        if y == 0:
            return mp.zero
        return y**nu * mp.exp(-x * y * y / 2) * psi_trapezoid(x * y, h, ctx, adaptive=False)

    top = mp.sqrt(2 * ctx.digits * mp.log(10) / x)
    val = mp.quad(f, mp.linspace(0, top, 8), method="gauss-legendre")
    return mp.exp(-x / 2) * val


def _gauss_panels(f, edges, ctx: PrecisionContext, npts: int):
    xs, ws = np.polynomial.legendre.leggauss(npts)
    mp = ctx.mp
    total = mp.zero
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = (a + b) / 2, (b - a) / 2
        total += half * mp.fsum(mp.mpf(float(wi)) * f(mid + half * mp.mpf(float(xi))) for xi, wi in zip(xs, ws))
    return total


def density_expectation(f, dctx: DensityContext, upper=None, npts: int = 24, width=None):
    """E[f(1/A_h)] for the law with density c_h e^{-nu^2 h/2} alpha.

    Composite Gauss-Legendre panels; the range stops at ``upper`` (where f
    vanishes beyond) or once a panel contributes below ``quad_tol`` of the total.
    """
    ctx = dctx.ctx
    mp = ctx.mp
    h = ctx.real(dctx.h)
    def g(x):
        return f(x) * dctx.density(x)

    # 1/A_h concentrates around 1/h; panels scale with it
    width = ctx.real(width) if width is not None else 1 / (4 * h)
    total = mp.zero
    a = mp.zero
    quiet = 0
    while True:
        b = a + width
        if upper is not None and b >= upper:
            total += _gauss_panels(g, [a, ctx.real(upper)], ctx, npts)
            return total
        piece = _gauss_panels(g, [a, b], ctx, npts)
        total += piece
        a = b
        if a > 2 / h and abs(piece) <= dctx.quad_tol * abs(total):
            quiet += 1
            if quiet >= 2:
                return total
        else:
            quiet = 0
        if a > 200 / h:
            raise NonConvergenceError("density tail did not decay")


def density_price(q, dctx: DensityContext, npts: int = 24):
    """E[(A_h - q)^+] = int_0^{1/q} (1/x - q) density(x) dx."""
    ctx = dctx.ctx
    q = ctx.real(q)
    if q <= 0:
        raise DomainError("density_price requires q > 0")
    return density_expectation(lambda x: 1 / x - q, dctx, upper=1 / q, npts=npts)


# ---------------------------------------------------------------------------
# Negative moments by quadrature, for any real nu


def _kernel_terms(k: int, nu, ctx: PrecisionContext) -> dict:
    """Coefficients {(i, p2): c} with rho_k proportional to sum c y^(2i+1) h^(-p2/2).

    rho_1 = 2 e^{-nu^2 h/2} (2 pi)^(-1/2) h^(-3/2) y e^{-y^2/2h} is the density
    kernel of 1/A_h against cosh((nu-1)y)/sinh(y), and
    rho_k = 2(k - nu - 1) rho_{k-1} - d/dh rho_{k-1} / (k - 1).
    """
    nu = ctx.real(nu)
    terms = {(0, 3): ctx.mp.one}
    for j in range(2, k + 1):
        nxt = {}

        def add(key, v):
            nxt[key] = nxt.get(key, 0) + v

        for (i, p2), c in terms.items():
            add((i, p2), 2 * (j - nu - 1) * c)
            # derivative of e^{-nu^2 h/2} e^{-y^2/2h} h^{-p2/2}
            add((i, p2), nu * nu / 2 * c / (j - 1))
            add((i + 1, p2 + 4), -c / 2 / (j - 1))
            add((i, p2 + 2), ctx.mp.mpf(p2) / 2 * c / (j - 1))
        terms = nxt
    return terms


def negative_moment_quad(k: int, nu, h, ctx: PrecisionContext | None = None, tol=None):
    """E[A_h^{-k}] by quadrature of an explicit kernel against cosh((nu-1)y)/sinh(y)."""
    ctx = ctx or PrecisionContext(80)
    mp = ctx.mp
    nu, h = ctx.real(nu), ctx.real(h)
    if k < 1 or h <= 0:
        raise DomainError("need k >= 1 and h > 0")
    terms = _kernel_terms(k, nu, ctx)

    def f(y):
        poly = mp.fsum(c * y ** (2 * i) * h ** (-mp.mpf(p2) / 2) for (i, p2), c in terms.items())
        ratio = mp.one if y == 0 else y * mp.cosh((nu - 1) * y) / mp.sinh(y)
        return poly * ratio * mp.exp(-y * y / (2 * h))

    s = mp.sqrt(h)
    centre = abs(nu - 1) * h
    pts = sorted({mp.zero, s, centre + s, centre + 4 * s, centre + 12 * s}) + [mp.inf]
    tol = mp.mpf(10) ** (-(ctx.digits // 2)) if tol is None else tol
    val = quad_checked(f, pts, ctx, tol, what=f"kernel integral for m_{k}")
    return 2 * mp.exp(-nu * nu * h / 2) / mp.sqrt(2 * mp.pi) * val


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class McConfig:
    paths: int = 1_000_000
    steps: int = 512
    seed: int = 20240601
    antithetic: bool = True
    chunk: int = 20_000

    def __post_init__(self):
        if self.steps < 100:
            raise DomainError("Monte Carlo needs at least 100 time steps")
        if self.paths < 10_000:
            raise DomainError("Monte Carlo needs at least 10^4 paths")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


def _brownian_levels(steps: int):
    """Split steps = base * 2^r with base odd."""
    base, r = steps, 0
    while base % 2 == 0:
        base //= 2
        r += 1
    return base, r


def _simulate_chunk(nu: float, h: float, steps: int, n: int, rng: np.random.Generator, sign: float) -> np.ndarray:
    """A_h on n paths, trapezoid rule over a Brownian path built coarse-to-fine.

    The path is drawn on an odd base grid and refined by Brownian-bridge
    midpoints, so runs with doubled ``steps`` share every coarser draw.
    """
    base, r = _brownian_levels(steps)
    dt = h / base
    z = rng.standard_normal((n, base)) * sign
    W = np.zeros((n, base + 1))
    W[:, 1:] = np.cumsum(z * math.sqrt(dt), axis=1)
    for _ in range(r):
        mid_sd = math.sqrt(dt / 4)
        z = rng.standard_normal((n, W.shape[1] - 1)) * sign
        mids = (W[:, :-1] + W[:, 1:]) / 2 + mid_sd * z
        fine = np.empty((n, 2 * W.shape[1] - 1))
        fine[:, 0::2] = W
        fine[:, 1::2] = mids
        W = fine
        dt /= 2
    t = np.linspace(0.0, h, W.shape[1])
    e = np.exp(2 * (W + nu * t))
    return dt * (e.sum(axis=1) - 0.5 * (e[:, 0] + e[:, -1]))


def simulate_accumulation(nu, h, cfg: McConfig):
    """Yield (A, A_antithetic or None) arrays chunk by chunk.

    Chunk i draws from Philox keyed by the seed and jumped i times, so the
    sample does not depend on how chunks are scheduled.
    """
    nu, h = float(nu), float(h)
    pairs = cfg.paths // 2 if cfg.antithetic else cfg.paths
    done = 0
    i = 0
    while done < pairs:
        n = min(cfg.chunk, pairs - done)
        stream = lambda: np.random.Generator(np.random.Philox(key=cfg.seed).jumped(i))
        a = _simulate_chunk(nu, h, cfg.steps, n, stream(), 1.0)
        # the antithetic partner replays the same normals with the opposite sign
        b = _simulate_chunk(nu, h, cfg.steps, n, stream(), -1.0) if cfg.antithetic else None
        yield a, b
        done += n
        i += 1


def mc_estimates(functionals: dict, nu, h, cfg: McConfig) -> dict:
    """Mean and standard error of several functionals of A_h from one simulation.

    ``functionals`` maps names to vectorized callables on arrays of A_h.  With
    antithetics the standard error uses pair averages.
    """
    sums = {k: 0.0 for k in functionals}
    sq = {k: 0.0 for k in functionals}
    count = 0
    for a, b in simulate_accumulation(nu, h, cfg):
        for name, fn in functionals.items():
            v = fn(a) if b is None else 0.5 * (fn(a) + fn(b))
            sums[name] += float(v.sum())
            sq[name] += float((v * v).sum())
        count += len(a)
    out = {}
    for name in functionals:
        mean = sums[name] / count
        var = max(sq[name] / count - mean * mean, 0.0) * count / (count - 1)
        out[name] = (mean, math.sqrt(var / count))
    return out


def target_functional(target: str, q=None, n=None):
    if target == "price":
        if q is None:
            raise DomainError("price target needs q")
        q = float(q)
        return lambda a: np.maximum(a - q, 0.0)
    if target == "moment":
        if n is None or n < 1:
            raise DomainError("moment target needs n >= 1")
        return lambda a: a ** (-float(n))
    if target == "pos_moment":
        return lambda a: a
    raise DomainError(f"unknown Monte Carlo target {target!r}")


def mc_estimate(target: str, nu, h, cfg: McConfig, q=None, n=None):
    """(estimate, standard error) of E[(A_h - q)^+], E[A_h^{-n}] or E[A_h]."""
    return mc_estimates({"v": target_functional(target, q, n)}, nu, h, cfg)["v"]
