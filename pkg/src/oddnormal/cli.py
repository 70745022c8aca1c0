"""Command-line driver: every command is a pure function of (config, cache state)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import plotting
from .cache import FourierCache
from .config import ConfigError, RunConfig
from .digits import validate_alpha
from .errors import BudgetExceeded, HypothesisViolation, PrecisionStarvation, ScheduleError
from .measure import cylinder_mass, cylinder_frequencies, decay_envelope, lyons_bound, sample_batch
from .measure.sampling import RNG_NAME, sample
from .normality.del_sums import del_series
from .normality.lemmas import SUMMARY_HEADER, run_all
from .normality.nonnormal import certify_nonnormal, validate_certificate
from .normality.weyl import DyadicApprox, required_precision, weyl_sum
from .schedule import check_admissible, frac_str

log = logging.getLogger("oddnormal")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_JSON_INT_LIMIT = 1 << 53


# -- report emission -----------------------------------------------------------


def fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, Fraction):
        return frac_str(v)
    return str(v)


def json_value(v):
    if isinstance(v, (bool, type(None), str)):
        return v
    if isinstance(v, (int, np.integer)):
        v = int(v)
        return v if abs(v) < _JSON_INT_LIMIT else str(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, Fraction):
        return frac_str(v)
    return str(v)


class Reporter:
    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.dir = Path(cfg.out) / command
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []

    def table(self, name: str, header: list[str], rows: list[dict]):
        if self.cfg.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt_cell(row.get(h)) for h in header])
            path = self.dir / f"{name}.csv"
            path.write_text(buf.getvalue())
        else:
            doc = {"config_hash": self.cfg.hash(), "rng": RNG_NAME, "columns": header,
                   "rows": [{h: json_value(row.get(h)) for h in header} for row in rows]}
            path = self.dir / f"{name}.json"
            path.write_text(json.dumps(doc, indent=1) + "\n")
        self.outputs.append(path.name)

    def document(self, name: str, doc: dict):
        path = self.dir / f"{name}.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        self.outputs.append(path.name)

    def figure(self, name: str, fn, *args):
        path = self.dir / f"{name}.png"
        fn(*args, path)
        self.outputs.append(path.name)

    def finish(self, passed: bool, summary: dict | None = None) -> int:
        manifest = {"command": self.command, "config_hash": self.cfg.hash(), "rng": RNG_NAME,
                    "config": self.cfg.identity(), "outputs": self.outputs, "passed": passed,
                    "summary": summary or {}}
        (self.dir / "run.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        log.info("%s: %s", self.command, "pass" if passed else "FAIL")
        return EXIT_OK if passed else EXIT_FAIL


def _parallel_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- commands -------------------------------------------------------------------


def cmd_sample(cfg: RunConfig) -> int:
    sched = cfg.sched()
    rep = Reporter("sample", cfg)
    depth = cfg.sample_depth
    batch = sample_batch(sched, cfg.seed, depth, cfg.sample_streams)
    rep.table("streams", ["index", "digits"],
              [{"index": i, "digits": "".join(map(str, row.tolist()))} for i, row in enumerate(batch)])

    all_ok = True
    for nbits in cfg.cylinder_bits:
        counts = cylinder_frequencies(sched, cfg.seed, cfg.samples, nbits)
        rows = []
        for idx, c in enumerate(counts.tolist()):
            prefix = format(idx, f"0{nbits}b")
            mass = cylinder_mass(sched, [int(ch) for ch in prefix])
            freq = c / cfg.samples
            sigma = math.sqrt(float(mass * (1 - mass)) / cfg.samples)
            dev = abs(freq - float(mass))
            ok = dev <= 4 * sigma if sigma > 0 else c == mass * cfg.samples
            all_ok &= ok
            rows.append({"prefix": prefix, "count": c, "freq": freq, "mass": mass,
                         "mass_float": float(mass), "sigma": sigma, "within_4sigma": ok})
        rep.table(f"cylinders_{nbits}bit",
                  ["prefix", "count", "freq", "mass", "mass_float", "sigma", "within_4sigma"], rows)
        rep.figure(f"cylinders_{nbits}bit", plotting.plot_cylinders, nbits,
                   [{**r, "mass": r["mass_float"]} for r in rows])
    return rep.finish(all_ok, {"samples": cfg.samples, "depth": depth})


def _random_eta(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform-ish integer in [lo, hi): 64 spare bits make the modulo bias negligible."""
    span = hi - lo
    words = (span.bit_length() + 63) // 64 + 1
    x = 0
    for w in rng.integers(0, 1 << 63, size=words, dtype=np.int64).tolist():
        x = (x << 63) | w
    return lo + x % span


def fourier_etas(cfg: RunConfig) -> list[int]:
    if cfg.etas is not None:
        return [int(e) for e in cfg.etas]
    sched = cfg.sched()
    out = [0]
    for ell in cfg.lyons_ells:
        if not 2 <= ell <= sched.num_blocks:
            raise ConfigError(f"lyons range l = {ell} outside 2..{sched.num_blocks}")
        lo, hi = 1 << (sched.K[ell - 1] - 1), 1 << (sched.K[ell] - 1)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(0xF0, ell))))
        out.extend(_random_eta(rng, lo, hi) for _ in range(cfg.lyons_count))
    return out


FOURIER_HEADER = ["eta", "abs", "err", "lyons_bound", "envelope", "within_bound"]


def cmd_fourier(cfg: RunConfig) -> int:
    sched = cfg.sched()
    etas = fourier_etas(cfg)
    cache = FourierCache(cfg.cache_path())
    ev = cache.evaluator(sched, cfg.tol)
    values = _parallel_map(ev, etas, cfg.threads)
    cache.flush()
    log.info("fourier: %d values, %d evaluations, %d cache hits", len(values), cache.evaluations, cache.hits)

    rows, violations = [], 0
    for eta, fv in zip(etas, values):
        try:
            lb = lyons_bound(sched, eta)
        except (ValueError, ScheduleError):
            lb = None
        env = decay_envelope(eta, cfg.kappa) if abs(eta) >= 16 else None
        ok = lb is None or fv.abs <= lb + cfg.tol
        violations += not ok
        rows.append({"eta": eta, "abs": fv.abs, "err": fv.err, "lyons_bound": lb,
                     "envelope": env, "within_bound": ok})
    rep = Reporter("fourier", cfg)
    rep.table("fourier", FOURIER_HEADER, rows)
    rep.figure("fourier", plotting.plot_fourier, rows)
    return rep.finish(violations == 0, {"rows": len(rows), "lyons_violations": violations})


def weyl_point(cfg: RunConfig) -> DyadicApprox:
    need = required_precision(cfg.weyl_b, cfg.weyl_N)
    if cfg.weyl_x == "sample":
        sched = cfg.sched()
        depth = max(need, 1)
        if sched.terminal:
            depth = min(depth, sched.K[-1])
        s = sample(sched, cfg.seed, depth)
        exact = sched.terminal and depth >= sched.K[-1]
        return DyadicApprox.from_digits(s.digits, exact=exact)
    try:
        q = Fraction(cfg.weyl_x)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"weyl_x must be 'sample' or a rational, got {cfg.weyl_x!r}") from None
    return DyadicApprox.from_fraction(q, need)


def cmd_weyl(cfg: RunConfig) -> int:
    x = weyl_point(cfg)
    rep_w = weyl_sum(x, cfg.weyl_b, cfg.weyl_h, cfg.weyl_N, trace=True)
    rows = [{"n": n, "re": z.real, "im": z.imag} for n, z in enumerate(rep_w.trace, start=1)]
    rep = Reporter("weyl", cfg)
    rep.table("weyl", ["n", "re", "im"], rows)
    rep.figure("weyl", plotting.plot_weyl, [(r["n"], r["re"], r["im"]) for r in rows])
    return rep.finish(True, {"b": cfg.weyl_b, "h": cfg.weyl_h, "N": cfg.weyl_N, "abs": rep_w.abs,
                             "arith_err": rep_w.arith_err, "x_exact": x.exact, "precision_bits": x.P})


def cmd_certify(cfg: RunConfig) -> int:
    sched = cfg.sched()
    depth = sched.K_at(min(cfg.ell + 1, sched.num_blocks))
    s = sample(sched, cfg.seed, depth, cfg.forced_zero_blocks)
    rep = Reporter("certify-nonnormal", cfg)
    try:
        cert = certify_nonnormal(s, cfg.b, sched, cfg.ell)
    except HypothesisViolation as exc:
        rep.document("certificate", {"passed": False, "error": str(exc)})
        return rep.finish(False, {"error": str(exc)})
    cert["config_hash"] = cfg.hash()
    validate_certificate(cert)
    rep.document("certificate", cert)
    return rep.finish(cert["passed"], {"re_S_over_N": cert["re_S_over_N"],
                                       "lower_bound": cert["lower_bound"]})


DEL_HEADER = ["N", "I", "I1", "I21", "I22", "J0", "J1", "J0_bound", "V1_count", "V1_bound",
              "I_cap", "agg_err", "partial_sum", "increment", "crude_cap", "identity_holds"]


def cmd_del(cfg: RunConfig) -> int:
    sched = cfg.sched()
    N = cfg.N_max
    cache = FourierCache(cfg.cache_path())
    ev = cache.evaluator(sched, cfg.tol)
    if cfg.threads > 1:
        # warm the cache in parallel; the grid pass below is then all hits
        etas = {cfg.h * (cfg.r**v - 1) * cfg.r**u for u in range(1, N + 1) for v in range(1, N + 1)}
        _parallel_map(ev, sorted(etas), cfg.threads)
    series = del_series(cfg.h, cfg.r, N, sched, cfg.tol, alpha=Fraction(cfg.alpha),
                        gamma=Fraction(cfg.gamma), evaluator=ev)
    cache.flush()
    log.info("del: %d evaluations, %d cache hits", cache.evaluations, cache.hits)

    rows = []
    for d, ps, inc, cap in zip(series.decompositions, series.partial_sums, series.increments,
                               series.crude_cap):
        rows.append({**d.row(), "partial_sum": ps, "increment": inc, "crude_cap": cap,
                     "identity_holds": d.identity_holds})
    rep = Reporter("del", cfg)
    rep.table("del", DEL_HEADER, rows)
    rep.figure("del", plotting.plot_del, rows)
    ok = all(d.identity_holds for d in series.decompositions) and series.trend_decreasing
    return rep.finish(ok, {"identity_holds": all(d.identity_holds for d in series.decompositions),
                           "trend_decreasing": series.trend_decreasing,
                           "increments": series.increments})


def cmd_verify_lemmas(cfg: RunConfig) -> int:
    alpha = Fraction(cfg.alpha)
    validate_alpha(alpha)  # ValueError here is a usage error
    results = run_all(k_max=cfg.k_max, alpha=alpha, seed=cfg.seed)
    rep = Reporter("verify-lemmas", cfg)
    rows = [dict(zip(SUMMARY_HEADER, r.summary_row())) for r in results]
    rep.table("lemmas", SUMMARY_HEADER, rows)
    for r in results:
        print(" ".join(r.summary_row()[:2]) + ("  (low coverage)" if r.low_coverage else ""))
    return rep.finish(all(r.passed for r in results),
                      {"low_coverage": any(r.low_coverage for r in results)})


ADMISS_HEADER = ["R", "t", "T", "product", "log10_product", "log10_threshold", "passed", "gap_ok", "note"]


def cmd_admissibility(cfg: RunConfig) -> int:
    sched = cfg.sched()
    gamma = Fraction(cfg.gamma)
    report = check_admissible(sched, gamma, [int(R) for R in cfg.R_values])
    rows = []
    for r in report.rows:
        lp = lt = None
        if r.product is not None:
            lp = math.log10(r.product.numerator) - math.log10(r.product.denominator)
            lt = -float(gamma) * math.log10(sched.K[r.T])
        rows.append({"R": r.R, "t": r.t, "T": r.T, "product": r.product, "log10_product": lp,
                     "log10_threshold": lt, "passed": r.passed, "gap_ok": r.gap_ok, "note": r.note})
    rep = Reporter("admissibility", cfg)
    rep.table("admissibility", ADMISS_HEADER, rows)
    rep.figure("admissibility", plotting.plot_admissibility, rows)
    return rep.finish(report.all_passed, {"gamma": frac_str(gamma),
                                          "eps_sums_increasing": report.eps_sums_increasing,
                                          "gap_threshold": json_value(report.gap_threshold)})


COMMANDS = {
    "sample": cmd_sample,
    "fourier": cmd_fourier,
    "weyl": cmd_weyl,
    "certify-nonnormal": cmd_certify,
    "del": cmd_del,
    "verify-lemmas": cmd_verify_lemmas,
    "admissibility": cmd_admissibility,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--tol", type=float, help="absolute tolerance for mu-hat")
    common.add_argument("--threads", type=int, help="worker pool size")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="oddnormal", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return cfg.with_overrides(seed=args.seed, tol=args.tol, threads=args.threads, out=args.out,
                              format=args.format)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(format="%(levelname)s %(message)s", stream=sys.stderr)
    logging.getLogger("oddnormal").setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ScheduleError, PrecisionStarvation, BudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
