"""Command-line front end: capacities, figure data and error-pdf studies as CSV.

Exit status: 0 success, 2 bad parameters, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import capacity as cap
from .info import QuadratureError
from .ihara import bounds_sweep
from .qerror import (SeriesNotConvergent, chi_square_test, error_pdf, gaussian_cf,
                     monte_carlo_error_hist, uniformity_deviation)
from .quantizer import GaussianNoise, Mode, QuantizerSpec, UniformNoise, transition_matrix

EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3


class UsageError(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class NoiseArg:
    kind: str
    param: float

    def model(self, resolution: float):
        if self.kind == "gaussian":
            return GaussianNoise(self.param)
        return UniformNoise(self.param, resolution)


def parse_noise(text: str) -> NoiseArg:
    kind, sep, value = text.partition(":")
    kind = kind.strip().lower()
    if not sep or kind not in ("gaussian", "uniform"):
        raise argparse.ArgumentTypeError(f"noise must be gaussian:SIGMA or uniform:ALPHA, got {text!r}")
    try:
        param = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad noise parameter {value!r}") from None
    if not (param > 0 and math.isfinite(param)):
        raise argparse.ArgumentTypeError("noise parameter must be positive")
    return NoiseArg(kind, param)


def positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def seed_arg(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def write_csv(header, rows, out: str | None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def say(msg: str):
    print(msg, file=sys.stderr)


# -- capacity ----------------------------------------------------------------

def cmd_capacity(args) -> int:
    spec = QuantizerSpec(args.levels, args.resolution, Mode(args.mode))
    noise = args.noise.model(spec.resolution)
    results = []
    t0 = time.perf_counter()
    if args.method == "blahut-arimoto":
        hi = spec.period if spec.mode is Mode.WRAPPING else (spec.levels - 1) * spec.resolution
        pts = np.linspace(0.0, hi, args.inputs, endpoint=spec.mode is Mode.SATURATION)
        res = cap.blahut_arimoto(transition_matrix(spec, noise, pts), tol=args.tol,
                                 max_iters=args.max_iters)
        results.append((res, time.perf_counter() - t0))
        if not res.converged:
            say(f"blahut-arimoto did not converge: bracket={res.diagnostics['bracket']:.3g}")
            emit_capacity(args, spec, results)
            return EXIT_NONCONVERGENCE
    elif spec.mode is Mode.WRAPPING:
        if args.noise.kind == "uniform" and args.noise.param <= spec.levels:
            res = cap.uniform_noise_capacity(spec, args.noise.param)
        else:
            res = cap.wrapping_capacity(spec, noise, args.grid)
        results.append((res, time.perf_counter() - t0))
    else:
        res = cap.saturation_capacity_search(spec, noise, args.max_points, args.restarts,
                                             args.seed, args.guard)
        results.append((res, time.perf_counter() - t0))
        if isinstance(noise, GaussianNoise):
            t1 = time.perf_counter()
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lb = cap.saturation_lower_bound(spec, noise)
            results.append((lb, time.perf_counter() - t1))
    emit_capacity(args, spec, results)
    return 0


def emit_capacity(args, spec, results):
    rows = []
    for res, secs in results:
        say(f"{res.method.value}: capacity = {res.capacity_bits:.10f} bits")
        for x, q in zip(res.input.points, res.input.probs):
            if q > 1e-9:
                say(f"  x = {x:.10g}  P = {q:.10g}")
        runtime = "" if args.no_timing else round(secs * 1e3, 3)
        rows.append([res.method.value, spec.levels, spec.resolution, args.noise.kind,
                     args.noise.param, res.capacity_bits, runtime])
    write_csv(["method", "N", "p", "noise_kind", "noise_param", "capacity_bits", "runtime_ms"],
              rows, args.out)


# -- figures -----------------------------------------------------------------

def fig_cond_entropy(args):
    spec = QuantizerSpec(args.levels, args.resolution, Mode.WRAPPING)
    w, g = cap.conditional_entropy_profile(spec, GaussianNoise(args.sigma), args.grid)
    u0, g0 = cap.minimize_conditional_entropy(spec, GaussianNoise(args.sigma), args.grid)
    say(f"minimiser u0 = {u0:.6g}, g(u0) = {g0:.10f} bits")
    return ["w", "w_over_p", "g_bits"], zip(w, w / spec.resolution, g)


def fig_u0_threshold(args):
    ratios = np.linspace(args.ratio_min, args.ratio_max, args.steps)
    rows = []
    for r in ratios:
        spec = QuantizerSpec(args.levels, 1.0, Mode.WRAPPING)
        u0, g0 = cap.minimize_conditional_entropy(spec, GaussianNoise(float(r)), args.grid)
        rows.append([float(r), u0, g0])
    try:
        say(f"tau estimate (N={args.levels}) = {cap.estimate_tau(args.levels, args.grid):.4f}")
    except RuntimeError as exc:
        say(f"tau estimate unavailable: {exc}")
    return ["sigma_over_p", "u0_over_p", "g_min_bits"], rows


def fig_capacity_compare(args):
    noise = GaussianNoise(args.sigma)
    rows = []
    import warnings
    for n in args.levels_list:
        wrap = cap.wrapping_capacity(QuantizerSpec(n, args.resolution, Mode.WRAPPING), noise)
        sat = QuantizerSpec(n, args.resolution, Mode.SATURATION)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lb = cap.saturation_lower_bound(sat, noise)
        search = cap.saturation_capacity_search(sat, noise, restarts=args.restarts,
                                                seed=args.seed, guard=args.guard)
        say(f"N={n}: C_w={wrap.capacity_bits:.6f} I_s={lb.capacity_bits:.6f} "
            f"C_s>={search.capacity_bits:.6f}")
        rows.append([n, wrap.capacity_bits, lb.capacity_bits, search.capacity_bits])
    return ["N", "C_w_bits", "I_s_bits", "C_s_search_bits"], rows


def fig_ihara_bounds(args):
    scnr = np.arange(args.scnr_min, args.scnr_max + 0.5 * args.scnr_step, args.scnr_step)
    rows = []
    for sq in args.sqnr:
        for s, b in zip(scnr, bounds_sweep(scnr, sq)):
            rows.append([sq, float(s), b.lower_bits, b.upper_bits, b.gap_bits, b.unquantized_bits])
    say(f"max gap = {max(r[4] for r in rows):.6f} bits")
    return ["sqnr_db", "scnr_db", "lower_bits", "upper_bits", "gap_bits", "unquantized_bits"], rows


FIGURES = {
    "cond-entropy": fig_cond_entropy,
    "u0-threshold": fig_u0_threshold,
    "capacity-compare": fig_capacity_compare,
    "ihara-bounds": fig_ihara_bounds,
}


def cmd_fig(args) -> int:
    header, rows = FIGURES[args.figure](args)
    write_csv(header, rows, args.out)
    return 0


# -- error pdf ---------------------------------------------------------------

def cmd_error_pdf(args) -> int:
    if args.samples < 10_000:
        raise UsageError("--samples must be at least 10000")
    phi = gaussian_cf(args.sigma)
    pdf = error_pdf(phi, args.resolution, args.terms)
    hist = monte_carlo_error_hist(args.resolution, lambda rng, n: rng.normal(0, args.sigma, n),
                                  args.samples, args.bins, args.seed)
    e = hist.centers
    series = pdf(e)
    mc = hist.density
    stat, crit, ok = chi_square_test(hist, pdf)
    say(f"uniformity deviation = {uniformity_deviation(phi, args.resolution, args.terms):.6g}")
    say(f"chi-square = {stat:.4f} (99.9% critical {crit:.4f}): {'pass' if ok else 'FAIL'}")
    write_csv(["e", "pdf_series", "pdf_montecarlo", "abs_diff"],
              zip(e, series, mc, np.abs(series - mc)), args.out)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantcap", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=seed_arg, default=0, help="RNG seed (default: 0)")

    p = sub.add_parser("capacity", help="capacity of one quantized channel")
    common(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--resolution", type=positive_float, required=True)
    p.add_argument("--noise", type=parse_noise, required=True,
                   help="gaussian:SIGMA or uniform:ALPHA (support [-ALPHA*p/2, ALPHA*p/2])")
    p.add_argument("--method", choices=["auto", "blahut-arimoto"], default="auto")
    p.add_argument("--inputs", type=positive_int, default=500,
                   help="input lattice size for blahut-arimoto (default: 500)")
    p.add_argument("--tol", type=positive_float, default=1e-9)
    p.add_argument("--max-iters", type=positive_int, default=100_000)
    p.add_argument("--grid", type=positive_int, default=4096,
                   help="grid for the conditional-entropy scan (default: 4096)")
    p.add_argument("--restarts", type=positive_int, default=32)
    p.add_argument("--max-points", type=positive_int, default=None,
                   help="saturation search mass points (default: N+1)")
    p.add_argument("--guard", type=float, default=0.0,
                   help="saturation inputs may extend GUARD*p beyond the output range (0..0.5)")
    p.add_argument("--no-timing", action="store_true",
                   help="leave runtime_ms empty so output is byte-reproducible")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser(
        "fig", help="CSV data for the figures",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="""figures:
  cond-entropy      H(yhat|x=w) over w in [0,p], wrapping, standard gaussian noise,
                    N=5, p=3. Columns: w, w_over_p, g_bits
  u0-threshold      minimiser u0/p versus sigma/p in 0.1..1.2, N=5.
                    Columns: sigma_over_p, u0_over_p, g_min_bits
  capacity-compare  wrapping capacity, lattice-input saturation MI and searched
                    saturation capacity versus N=2..16, sigma^2=1, p=2.
                    Columns: N, C_w_bits, I_s_bits, C_s_search_bits
  ihara-bounds      lower/upper capacity bounds versus SCNR for SQNR = 5, 20 dB.
                    Columns: sqnr_db, scnr_db, lower_bits, upper_bits, gap_bits,
                    unquantized_bits""")
    common(p)
    p.add_argument("figure", choices=sorted(FIGURES))
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--resolution", type=positive_float, default=None,
                   help="p (default: 3 for cond-entropy, 2 for capacity-compare)")
    p.add_argument("--sigma", type=positive_float, default=1.0)
    p.add_argument("--grid", type=positive_int, default=4096)
    p.add_argument("--ratio-min", type=positive_float, default=0.1)
    p.add_argument("--ratio-max", type=positive_float, default=1.2)
    p.add_argument("--steps", type=positive_int, default=111)
    p.add_argument("--levels-list", type=int, nargs="+", default=list(range(2, 17)))
    p.add_argument("--restarts", type=positive_int, default=32)
    p.add_argument("--guard", type=float, default=0.0)
    p.add_argument("--sqnr", type=float, nargs="+", default=[5.0, 20.0])
    p.add_argument("--scnr-min", type=float, default=-10.0)
    p.add_argument("--scnr-max", type=float, default=30.0)
    p.add_argument("--scnr-step", type=positive_float, default=1.0)
    p.set_defaults(func=cmd_fig)

    p = sub.add_parser("error-pdf", help="rounding-error density: series vs Monte Carlo")
    common(p)
    p.add_argument("--sigma", type=positive_float, default=1.0)
    p.add_argument("--resolution", type=positive_float, required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--bins", type=positive_int, default=100)
    p.add_argument("--terms", type=int, default=0, help="series terms (0: automatic)")
    p.set_defaults(func=cmd_error_pdf)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "fig" and args.resolution is None:
        args.resolution = 3.0 if args.figure == "cond-entropy" else 2.0
    try:
        return args.func(args)
    except (NonConvergence, SeriesNotConvergent, QuadratureError) as exc:
        say(f"error: {exc}")
        return EXIT_NONCONVERGENCE
    except (UsageError, ValueError, IndexError) as exc:
        say(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
