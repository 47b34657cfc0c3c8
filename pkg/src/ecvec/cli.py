"""Command-line front end.

Every subcommand reads one JSON config (``--config``) and a few flag
overrides; outputs are deterministic for a given config and offset.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .arith import factorize
from .curve import CurveError, all_curves, hasse_window, ss_cyclic_ratio
from .ecgen import ConfigError, GeneratorConfig, emit_numerators, max_period_predicate, measure_period
from .field_tower import FieldError, build_tower
from .quality import BudgetExceeded, quality_report
from .transform import filter_uniform, gaussian_vectors, to_sphere
from .wiener import WienerPath, path_stats, sigma_d_batch


@dataclass(frozen=True)
class RunConfig:
    generator: GeneratorConfig
    method: str = "inverse"
    D: int = 1
    T: float = 1.0

    def __post_init__(self):
        if self.method not in ("inverse", "box-muller"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.D < 1 or self.generator.d % self.D:
            raise ConfigError(f"vector dimension d = {self.generator.d} is not a multiple of D = {self.D}")
        if not self.T > 0:
            raise ConfigError("T must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        wiener = d.get("wiener", {})
        return cls(GeneratorConfig.from_dict(d), d.get("method", "inverse"),
                   wiener.get("D", 1), float(wiener.get("T", 1.0)))


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required")
    with open(args.config) as fh:
        raw = json.load(fh)
    for key in ("e", "s"):
        if getattr(args, key, None) is not None:
            raw[key] = getattr(args, key)
    if getattr(args, "s", None) is not None and not getattr(args, "d", None):
        raw.pop("d", None)
        raw.pop("pi", None)
    if getattr(args, "d", None) is not None:
        raw["d"] = args.d
        raw.pop("pi", None)
    if getattr(args, "method", None):
        raw["method"] = args.method
    try:
        return RunConfig.from_dict(raw)
    except KeyError as exc:
        raise ConfigError(f"configuration is missing the key {exc}") from None


# -- formatting ----------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _rows_csv(rows) -> str:
    return "".join(",".join(_fmt(float(v)) for v in row) + "\n" for row in rows)


def _numerators_out(nums: np.ndarray, den: int, fmt: str, exact: bool) -> str:
    if fmt == "json":
        if exact:
            data = [[{"num": Fraction(int(n), den).numerator, "den": Fraction(int(n), den).denominator}
                     for n in row] for row in nums]
        else:
            data = (nums / den).tolist()
        return json.dumps(data) + "\n"
    if exact:
        return "".join(",".join(str(Fraction(int(n), den)) for n in row) + "\n" for row in nums)
    return _rows_csv(nums / den)


def _floats_out(arr: np.ndarray, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(arr.tolist()) + "\n"
    return _rows_csv(arr)


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------

def admissible_e(N: int, limit: int = 10) -> list[int]:
    """Smallest positive e satisfying the prime and mod-4 conditions for N."""
    primes = list(factorize(N))
    step = 1
    for ell in primes:
        step *= ell
    if N % 4 == 0 and step % 4:
        step *= 2
    return [1 + k * step for k in range(limit)]


def cmd_params(args) -> str:
    tower = build_tower(args.p, args.a, args.r)
    if args.p < 5:
        raise CurveError("short Weierstrass form needs p >= 5")
    found = []
    for curve in all_curves(tower):
        if len(found) >= args.limit:
            break
        info = curve.group_info
        if not info.cyclic:
            continue
        Q = curve.generator()
        N = info.N
        cfg = GeneratorConfig(curve, 1, Q)
        found.append({"config": cfg.to_dict(), "N": N,
                      "factorization": {str(k): v for k, v in factorize(N).items()},
                      "admissible_e": admissible_e(N), "supersingular": info.supersingular})
    if not found:
        raise CurveError("no cyclic curve found within the search")
    if args.emit_config:
        return json.dumps(found[0]["config"], indent=1) + "\n"
    lo, hi = hasse_window(tower.q)
    return json.dumps({"q": tower.q, "hasse_window": [lo, hi], "curves": found}, indent=1) + "\n"


def _uniform(args, rc: RunConfig) -> np.ndarray:
    return emit_numerators(rc.generator, args.count, args.offset, args.workers)


def cmd_generate(args) -> str:
    rc = _load(args)
    nums = _uniform(args, rc)
    return _numerators_out(nums, rc.generator.denominator, args.format, args.exact)


def _gaussian(args, rc: RunConfig) -> np.ndarray:
    den = rc.generator.denominator
    inner = filter_uniform(_uniform(args, rc), den)
    return gaussian_vectors(inner / den, rc.method)


def cmd_gauss(args) -> str:
    rc = _load(args)
    return _floats_out(_gaussian(args, rc), args.format)


def cmd_sphere(args) -> str:
    rc = _load(args)
    return _floats_out(to_sphere(_gaussian(args, rc)), args.format)


def wiener_ensemble(rc: RunConfig, v: np.ndarray) -> np.ndarray:
    """Breakpoint arrays of shape (n, D, d_time+1) from Gaussian rows of length D*d_time."""
    n, width = v.shape
    blocks = v.reshape(n, rc.D, width // rc.D)
    keep = np.all(np.linalg.norm(blocks, axis=2) > 0, axis=1)
    blocks = blocks[keep]
    w = blocks / np.linalg.norm(blocks, axis=2, keepdims=True)
    vals = sigma_d_batch(w.reshape(-1, w.shape[2])).reshape(w.shape[0], rc.D, w.shape[2] + 1)
    return vals * np.sqrt(rc.T)


def cmd_wiener(args) -> str:
    rc = _load(args)
    vals = wiener_ensemble(rc, _gaussian(args, rc))
    if args.stats:
        stats = [path_stats(vals[:, j, :], rc.T, tuple(rc.T * t for t in (0.25, 0.5, 1.0))).to_dict()
                 for j in range(rc.D)]
        return json.dumps({"paths": int(vals.shape[0]), "components": stats}, indent=1) + "\n"
    if args.format == "json":
        out = [[WienerPath(comp, rc.T).to_dict() for comp in path] for path in vals]
        return json.dumps(out) + "\n"
    lines = []
    for i, path in enumerate(vals):
        for j, comp in enumerate(path):
            times = np.arange(comp.size) * (rc.T / (comp.size - 1))
            lines.extend(f"{i},{j},{_fmt(t)},{_fmt(x)}\n" for t, x in zip(times, comp))
    return "".join(lines)


def cmd_quality(args) -> str:
    rc = _load(args)
    cfg = replace(rc.generator, s=1, d=None, pi=None)
    rep = quality_report(cfg, args.kind, args.window or 1, args.budget)
    return json.dumps(rep.to_dict(), indent=1) + "\n"


def cmd_ratio(args) -> str:
    rep = ss_cyclic_ratio(args.p, args.degree)
    if args.format == "json":
        return json.dumps({"q": rep.q, "ratio": str(rep.ratio), "classes": rep.classes,
                           "cyclic_classes": rep.cyclic_classes,
                           "weighted_ratio": str(rep.weighted_ratio),
                           "closed_form": None if rep.expected is None else str(rep.expected),
                           "matches_closed_form": rep.matches_closed_form}, indent=1) + "\n"
    return f"{rep.ratio}\n"


def cmd_check_period(args) -> str:
    rc = _load(args)
    cfg = rc.generator
    info = measure_period(cfg)
    pred = max_period_predicate(cfg.curve, cfg.e, cfg.Q)
    N = cfg.curve.order_N
    return json.dumps({"N": N, "t": info.t, "pre_period": info.pre_period,
                       "visits_infinity": info.visits_infinity, "t_prime": info.t_prime,
                       "predicate": {"cyclic": pred.cyclic, "Q_has_order_N": pred.q_has_order_n,
                                     "e_one_mod_primes": pred.e_one_mod_primes,
                                     "e_one_mod_four": pred.e_one_mod_four, "holds": pred.holds},
                       "max_period": info.t == N,
                       "consistent": (info.t == N) == pred.holds}, indent=1) + "\n"


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecvec", description="Elliptic-curve pseudorandom vectors.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stream=True):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--e", type=int, help="override the multiplier e")
        p.add_argument("--s", type=int, help="override the window length s")
        p.add_argument("--d", type=int, help="override the output dimension d")
        if stream:
            p.add_argument("--count", type=int, default=10)
            p.add_argument("--offset", type=int, default=0)
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("params", help="search for a cyclic curve and generator")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--limit", type=int, default=5)
    p.add_argument("--emit-config", action="store_true",
                   help="print only the first configuration, ready for --config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("generate", help="uniform vectors u_n")
    common(p)
    p.add_argument("--exact", action="store_true", help="exact rationals instead of floats")
    p.set_defaults(func=cmd_generate)

    for name, func, text in (("gauss", cmd_gauss, "Gaussian vectors"),
                             ("sphere", cmd_sphere, "points on the unit sphere")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--method", choices=("inverse", "box-muller"))
        p.set_defaults(func=func)

    p = sub.add_parser("wiener", help="polygonal Wiener sample paths")
    common(p)
    p.add_argument("--method", choices=("inverse", "box-muller"))
    p.add_argument("--stats", action="store_true", help="emit ensemble statistics instead of paths")
    p.set_defaults(func=cmd_wiener)

    p = sub.add_parser("quality", help="exact discrepancy against its bound")
    common(p, stream=False)
    p.add_argument("--kind", choices=("D", "D_s", "Dt_s"), default="D")
    p.add_argument("--window", type=int, help="window length for D_s / Dt_s")
    p.add_argument("--budget", type=int, default=5 * 10**7)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("ratio", help="cyclic share of supersingular classes")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("check-period", help="measured period versus the maximum-period conditions")
    common(p, stream=False)
    p.set_defaults(func=cmd_check_period)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _write(args, args.func(args))
    except (ConfigError, CurveError, FieldError, BudgetExceeded, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
