"""Command-line front end.

    asiantheta price   --spot 100 --strike 100 --rate 0.09 --drift 0.09 --sigma 0.3 --expiry 1 --c 6
    asiantheta moments --nu 1 --h 0.0225 --terms 19
    asiantheta theta   --nu 1 --h 0.0225 --B 0.3 --terms 19
    asiantheta tables  3
    asiantheta check   --nu 4

Exit codes: 0 success, 1 validation failure (bad input or failed check),
2 domain error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from decimal import ROUND_HALF_EVEN, Context, Decimal

from . import __version__
from .errors import ContractError, DomainError, NonConvergenceError, UnsupportedConfigurationError
from .moments import first_moment_dufresne, negative_moments, positive_first_moment
from .numerics import PrecisionContext
from .oracle import DensityContext, McConfig, density_expectation, density_price, mc_estimates, target_functional
from .pricer import MarketParams, NormalizedParams, normalize, price
from .theta import (
    DEFAULT_B,
    hyperbolic_kernel,
    laplace_theta_quad,
    theta_fn,
    theta_integral,
    theta_integral_quad,
    theta_integral_series,
    theta_jacobi_lhs,
)

EXIT_OK, EXIT_VALIDATION, EXIT_DOMAIN, EXIT_NONCONVERGENCE = 0, 1, 2, 3

# The worked example: at-the-money one-year call, 9% rate and drift, 30% volatility.
EXAMPLE_MARKET = MarketParams(spot=100, strike=100, drift="0.09", rate="0.09", sigma="0.3", T=1)
EXAMPLE_REFERENCE = "0.002173850758"
EXAMPLE_REFERENCE_MONEY = "8.83"
# decimals printed per column of the ladder tables: C_n, Delta_n, C_n_BS, Delta_n_BS
TABLE_DECIMALS = {3: (10, 10, 8, 10), 4: (10, 10, 8, 9)}
TABLE_C = {3: "1.367054258545", 4: "6"}
TABLE_ROWS = tuple(range(1, 20, 2))

MARKET_KEYS = ("spot", "strike", "rate", "drift", "sigma", "issue", "now", "expiry", "running_integral")
NORMALIZED_KEYS = ("nu", "h", "q")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fixed(x, decimals: int, ctx: PrecisionContext) -> str:
    d = Decimal(ctx.mp.nstr(x, ctx.digits, min_fixed=-ctx.digits, max_fixed=ctx.digits))
    dc = Context(prec=ctx.digits + decimals + 10, rounding=ROUND_HALF_EVEN)
    return str(d.quantize(Decimal(1).scaleb(-decimals), context=dc))


def _sig(x, ctx: PrecisionContext, digits: int) -> str:
    if x is None:
        return ""
    return ctx.mp.nstr(x, digits)


# ---------------------------------------------------------------------------
# argument handling


def _add_common(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--digits", type=int, default=160, help="working precision in decimal digits")
    p.add_argument("--B", dest="B", default=DEFAULT_B, help="split point of the Theta integrals")
    p.add_argument("--format", choices=("json", "csv", "text"), default="text")
    p.add_argument("--out", help="write output to this file instead of stdout")
    p.add_argument("--seed", type=int, default=20240601, help="Monte Carlo seed")
    p.add_argument("--show-digits", type=int, default=30, help="significant digits in json/csv/text output")


def _add_params(p):
    g = p.add_argument_group("market parameters")
    for key in MARKET_KEYS:
        g.add_argument("--" + key.replace("_", "-"), dest=key)
    n = p.add_argument_group("normalized parameters")
    for key in NORMALIZED_KEYS:
        n.add_argument("--" + key, dest=key)
    n.add_argument("--scale", help="money per unit of normalized price (normalized input only)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asiantheta", description="High-precision Laguerre-series pricing of arithmetic Asian options.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("price", help="price an option by a Laguerre series or the closed form")
    _add_common(p)
    _add_params(p)
    p.add_argument("--series", choices=("ladder", "direct"), default="ladder")
    p.add_argument("--c", help="convergence parameter (required when q > 0)")
    p.add_argument("--alpha", default="0")
    p.add_argument("--beta", default="0")
    p.add_argument("--terms", type=int, default=19)
    p.add_argument("--reference", help="reference normalized price for the delta columns")
    p.add_argument("--tol", help="fail with exit 3 if the last partial-sum increment exceeds this")

    p = sub.add_parser("moments", help="negative moments m_1..m_N")
    _add_common(p)
    _add_params(p)
    p.add_argument("--terms", type=int, default=19)

    p = sub.add_parser("theta", help="Theta integrals Theta_1..Theta_N")
    _add_common(p)
    _add_params(p)
    p.add_argument("--terms", type=int, default=19)

    p = sub.add_parser("tables", help="reproduce the tables of the worked example")
    _add_common(p)
    p.add_argument("which", type=int, choices=(1, 2, 3, 4))

    p = sub.add_parser("check", help="run the oracle validation suite")
    _add_common(p)
    p.add_argument("--nu", default="1")
    p.add_argument("--h", default="0.0225")
    p.add_argument("--q", default=None, help="strike for the price checks (default h)")
    p.add_argument("--c", default="22", help="convergence parameter for the price checks")
    p.add_argument("--terms", type=int, default=40)
    p.add_argument("--paths", type=int, default=200_000)
    p.add_argument("--skip-density", action="store_true")
    p.add_argument("--skip-mc", action="store_true")
    return parser


def read_config(path: str) -> list:
    """Turn a key=value file into flag tokens."""
    tokens = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if key in ("B",):
                flag = "--B"
            if value.lower() in ("true", "yes") and key.startswith("skip"):
                tokens.append(flag)
            else:
                tokens += [flag, value]
    return tokens


def parse_args(argv: list) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    config = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
    if config and argv:
        # file values go right after the subcommand so later flags override them
        cmd_index = next((i for i, t in enumerate(argv) if not t.startswith("-")), 0)
        argv = argv[: cmd_index + 1] + read_config(config) + argv[cmd_index + 1:]
    return parser.parse_args(argv)


def _params(args, ctx: PrecisionContext, need_q: bool):
    market = {k: getattr(args, k, None) for k in MARKET_KEYS}
    normal = {k: getattr(args, k, None) for k in NORMALIZED_KEYS}
    has_market = any(v is not None for v in market.values())
    has_normal = any(v is not None for v in normal.values())
    if has_market and has_normal:
        raise UsageError("give either market parameters or normalized parameters, not both")
    if has_market:
        missing = [k for k in ("spot", "strike", "rate", "drift", "sigma", "expiry") if market[k] is None]
        if missing:
            raise UsageError("missing market parameters: " + ", ".join(missing))
        mp_ = MarketParams(
            spot=market["spot"], strike=market["strike"], drift=market["drift"], rate=market["rate"],
            sigma=market["sigma"], T=market["expiry"], t0=market["issue"] or 0, t=market["now"] or 0,
            running_integral=market["running_integral"] or 0,
        )
        return normalize(mp_, ctx)
    if has_normal:
        required = ("nu", "h", "q") if need_q else ("nu", "h")
        missing = [k for k in required if normal[k] is None]
        if missing:
            raise UsageError("missing normalized parameters: " + ", ".join(missing))
        scale = ctx.real(args.scale) if getattr(args, "scale", None) else None
        q = ctx.real(normal["q"]) if normal["q"] is not None else None
        return NormalizedParams(nu=ctx.real(normal["nu"]), h=ctx.real(normal["h"]), q=q, scale=scale)
    raise UsageError("no parameters given (market block or --nu/--h/--q)")


# ---------------------------------------------------------------------------
# output


class Output:
    """A table plus metadata, rendered as json, csv or text."""

    def __init__(self, config: dict, columns: list, rows: list, results=None, diagnostics=None, residuals=None):
        self.config = config
        self.columns = columns
        self.rows = rows
        self.results = results or {}
        self.diagnostics = diagnostics or {}
        self.residuals = residuals or {}

    def render(self, fmt: str) -> str:
        if fmt == "json":
            body = {
                "config": self.config,
                "results": dict(self.results, rows=[dict(zip(self.columns, r)) for r in self.rows]),
                "diagnostics": self.diagnostics,
                "residuals": self.residuals,
            }
            return json.dumps(body, indent=2) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(self.rows)
            return buf.getvalue()
        widths = [max(len(str(c)), *(len(str(r[i])) for r in self.rows)) if self.rows else len(c)
                  for i, c in enumerate(self.columns)]
        lines = ["  ".join(str(c).rjust(w) for c, w in zip(self.columns, widths))]
        lines += ["  ".join(str(v).rjust(w) for v, w in zip(r, widths)) for r in self.rows]
        for key, val in self.results.items():
            lines.append(f"{key}: {val}")
        return "\n".join(lines) + "\n"


def _config_echo(args) -> dict:
    return {k: (str(v) if v is not None else None) for k, v in sorted(vars(args).items()) if k not in ("out",)}


# ---------------------------------------------------------------------------
# commands


def cmd_price(args, ctx):
    params = _params(args, ctx, need_q=True)
    report = price(params, c=args.c, series=args.series, alpha=args.alpha, beta=args.beta, N=args.terms,
                   ctx=ctx, reference=args.reference, B=args.B)
    d = args.show_digits
    rows = [[p.n, _sig(p.value, ctx, d), _sig(p.delta, ctx, d), _sig(p.money, ctx, d), _sig(p.money_delta, ctx, d)]
            for p in report.partial]
    results = {
        "series": report.series_kind,
        "nu": _sig(params.nu, ctx, d),
        "h": _sig(params.h, ctx, d),
        "q": _sig(params.q, ctx, d),
        "scale": _sig(params.scale, ctx, d),
        "price_normalized": _sig(report.final_normalized, ctx, d),
        "price_money": _sig(report.final_money, ctx, d),
    }
    diagnostics = {"reference": _sig(report.reference, ctx, d), "reference_source": report.reference_source,
                   "terms": len(report.partial)}
    code = EXIT_OK
    if args.tol is not None and len(report.partial) >= 2:
        step = abs(report.partial[-1].value - report.partial[-2].value)
        diagnostics["last_increment"] = _sig(step, ctx, 6)
        if step > ctx.real(args.tol):
            diagnostics["converged"] = False
            code = EXIT_NONCONVERGENCE
        else:
            diagnostics["converged"] = True
    out = Output(_config_echo(args), ["n", "C_n", "Delta_n", "C_n_BS", "Delta_n_BS"], rows, results, diagnostics)
    return code, out


def cmd_moments(args, ctx):
    params = _params(args, ctx, need_q=False)
    table = negative_moments(args.terms, params.nu, params.h, ctx=ctx, B=args.B)
    d = args.show_digits
    rows = [[n, _sig(table[n], ctx, d), _sig(table.theta_part[n - 1], ctx, d), _sig(table.correction_part[n - 1], ctx, d)]
            for n in range(1, table.N + 1)]
    return EXIT_OK, Output(_config_echo(args), ["n", "m_n", "theta_part", "correction_part"], rows,
                           {"nu": _sig(params.nu, ctx, d), "h": _sig(params.h, ctx, d)}, {"n_star": table.n_star})


def cmd_theta(args, ctx):
    params = _params(args, ctx, need_q=False)
    d = args.show_digits
    rows = []
    for n in range(1, args.terms + 1):
        s = theta_integral_series(n, params.nu, params.h, args.B, ctx)
        rows.append([n, _sig(s.value, ctx, d), s.n_c, s.n_d])
    return EXIT_OK, Output(_config_echo(args), ["n", "Theta_n", "n_c", "n_d"], rows,
                           {"nu": _sig(params.nu, ctx, d), "h": _sig(params.h, ctx, d), "B": str(args.B)})


def first_correct_index(partials, exact, decimals: int, ctx: PrecisionContext) -> int:
    """First index from which every partial sum agrees with ``exact`` to ``decimals`` places."""
    tol = ctx.mp.mpf(10) ** (-decimals) / 2
    idx = len(partials)
    for i in range(len(partials) - 1, -1, -1):
        if abs(partials[i] - exact) < tol:
            idx = i
        else:
            break
    return idx


def table_rows(which: int, ctx: PrecisionContext, B=DEFAULT_B) -> tuple:
    """Columns and rows of the worked-example tables at the printed precision."""
    params = normalize(EXAMPLE_MARKET, ctx)
    if which == 1:
        rows = []
        for n in TABLE_ROWS:
            s = theta_integral_series(n, params.nu, params.h, B, ctx)
            c_idx = first_correct_index(s.c_partial, s.c_partial[-1], 30, ctx)
            d_idx = first_correct_index(s.d_partial, s.d_partial[-1], 30, ctx)
            rows.append([n, c_idx, d_idx, _fixed(s.value, 10, ctx)])
        return ["n", "n_c30", "n_d30", "Theta_n"], rows
    if which == 2:
        table = negative_moments(max(TABLE_ROWS), params.nu, params.h, ctx=ctx, B=B)
        return ["n", "m_n"], [[n, _fixed(table[n], 10, ctx)] for n in TABLE_ROWS]
    report = price(params, c=TABLE_C[which], N=max(TABLE_ROWS), ctx=ctx, reference=EXAMPLE_REFERENCE, B=B)
    money_ref = ctx.real(EXAMPLE_REFERENCE_MONEY)
    dc, dd, dm, dmd = TABLE_DECIMALS[which]
    rows = []
    for n in TABLE_ROWS:
        p = report.row(n)
        rows.append([n, _fixed(p.value, dc, ctx), _fixed(p.delta, dd, ctx), _fixed(p.money, dm, ctx),
                     _fixed(p.money - money_ref, dmd, ctx)])
    return ["n", "C_n", "Delta_n", "C_n_BS", "Delta_n_BS"], rows


def cmd_tables(args, ctx):
    columns, rows = table_rows(args.which, ctx, args.B)
    return EXIT_OK, Output(_config_echo(args), columns, rows)


def _check(name, residual, tol, ctx, results):
    ok = bool(residual <= tol)
    results.append((name, ok, residual, tol))
    return ok


def run_checks(args, ctx: PrecisionContext) -> list:
    """Evaluate the validation suite; returns (name, passed, residual, tolerance) tuples."""
    mp = ctx.mp
    out = []
    nu, h = ctx.real(args.nu), ctx.real(args.h)
    q = ctx.real(args.q) if args.q is not None else h
    full_tol = mp.mpf(10) ** (-(ctx.digits - 10))
    # quadrature oracles only need to resolve the 1e-20 tolerance
    quad_ctx = PrecisionContext(50)
    quad_tol = mp.mpf(10) ** -20
    quad_target = "1e-24"
    rnd = random.Random(args.seed)

    worst = mp.zero
    for _ in range(50):
        x = ctx.real(repr(rnd.uniform(0, 1)))
        t = ctx.real(repr(rnd.uniform(0.05, 5)))
        lhs = theta_jacobi_lhs(x, t, ctx)
        worst = max(worst, abs(lhs - theta_fn(x - mp.mpf(1) / 2, t, ctx)) / lhs)
    _check("jacobi_identity", worst, full_tol, ctx, out)

    worst = mp.zero
    for v in ("0", "0.5", "1", "2"):
        for y in ("0.5", "1", "2"):
            k = hyperbolic_kernel(v, y, quad_ctx)
            worst = max(worst, abs(laplace_theta_quad(v, y, quad_ctx, quad_target) - k) / k)
    _check("laplace_theta_identity", worst, quad_tol, ctx, out)

    shared = min(30, ctx.digits - 20)
    worst = mp.zero
    for n in (1, 2, 3):
        vals = [theta_integral(n, nu, h, B, ctx) for B in ("0.1", "0.3", "1.0")]
        worst = max(worst, max(vals) - min(vals))
    _check("B_invariance", worst, mp.mpf(10) ** (-shared) / 2, ctx, out)

    worst = mp.zero
    for n in (1, 2, 3):
        s = theta_integral(n, nu, h, args.B, ctx)
        worst = max(worst, abs(s - theta_integral_quad(n, nu, h, quad_ctx, quad_target)) / s)
    _check("theta_series_vs_quadrature", worst, quad_tol, ctx, out)

    table = negative_moments(3, nu, h, ctx=ctx, B=args.B)
    m1 = table[1]
    d = first_moment_dufresne(nu, h, quad_ctx, quad_target)
    _check("first_moment_vs_integral", abs(m1 - d) / d, quad_tol, ctx, out)

    ratio = min(table[n] * table[n + 2] / table[n + 1] ** 2 for n in range(1, 2))
    _check("moment_log_convexity", max(mp.zero, 1 - ratio), mp.zero, ctx, out)

    N = args.terms
    params = NormalizedParams(nu=nu, h=h, q=q, scale=mp.one)
    series_value = None
    if q * ctx.real(args.c) < mp.mpf(1) / 2 and q > 0:
        moments = negative_moments(N + 2, nu, h, ctx=ctx, B=args.B)
        from .pricer import price_direct, price_ladder

        lad = price_ladder(params, args.c, N=N, ctx=ctx, moments=moments).final_normalized
        dirc = price_direct(params, args.c, N=N, ctx=ctx, moments=moments).final_normalized
        series_value = lad
        _check("ladder_vs_direct", abs(lad - dirc), mp.mpf("1e-8"), ctx, out)
        ex = positive_first_moment(nu, h, ctx)
        _check("payoff_bounds", max(ex - q - lad, lad - ex, mp.zero), mp.zero, ctx, out)

    if not args.skip_density and nu > -1:
        dctx = DensityContext(nu, h, accuracy=12)
        norm = density_expectation(lambda x: 1, dctx)
        _check("density_normalization", abs(norm - 1), mp.mpf("1e-8"), ctx, out)
        first = density_expectation(lambda x: x, dctx)
        _check("density_first_moment", abs(first - m1) / m1, mp.mpf("1e-8"), ctx, out)
        if series_value is not None:
            dp = density_price(q, dctx)
            _check("density_price_vs_series", abs(dp - series_value), mp.mpf("1e-8"), ctx, out)

    if not args.skip_mc:
        cfg = McConfig(paths=args.paths, seed=args.seed)
        fns = {"m1": target_functional("moment", n=1), "m2": target_functional("moment", n=2),
               "pos": target_functional("pos_moment")}
        if series_value is not None:
            fns["price"] = target_functional("price", q=float(q))
        est = mc_estimates(fns, float(nu), float(h), cfg)
        refs = {"m1": m1, "m2": table[2], "pos": positive_first_moment(nu, h, ctx), "price": series_value}
        for key, (mean, se) in est.items():
            z = abs(ctx.real(repr(mean)) - refs[key]) / ctx.real(repr(se))
            _check(f"monte_carlo_{key}_in_se", z, mp.mpf(3), ctx, out)
    return out


def cmd_check(args, ctx):
    results = run_checks(args, ctx)
    rows = [[name, "pass" if ok else "FAIL", ctx.mp.nstr(res, 3), ctx.mp.nstr(tol, 3)] for name, ok, res, tol in results]
    residuals = {name: {"passed": ok, "residual": ctx.mp.nstr(res, 6), "tolerance": ctx.mp.nstr(tol, 3)}
                 for name, ok, res, tol in results}
    passed = all(ok for _, ok, _, _ in results)
    out = Output(_config_echo(args), ["check", "status", "residual", "tolerance"], rows,
                 {"all_passed": passed}, residuals=residuals)
    return (EXIT_OK if passed else EXIT_VALIDATION), out


COMMANDS = {"price": cmd_price, "moments": cmd_moments, "theta": cmd_theta, "tables": cmd_tables, "check": cmd_check}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        ctx = PrecisionContext(args.digits)
        code, output = COMMANDS[args.command](args, ctx)
    except (UsageError, ContractError, UnsupportedConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    text = output.render(args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
