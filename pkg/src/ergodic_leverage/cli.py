"""Command-line interface.

Subcommands: report, frontier, universes, error-envelope, simulate, kelly.
Exit codes: 0 success, 2 usage or validation error, 3 I/O error.

A ``--config`` file holds ``key=value`` lines (``#`` comments allowed); keys
are option names with or without leading dashes.  Flags override the file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .analytics import (
    GbmParams,
    MarketModel,
    geometric_mean_growth,
    kelly_fraction,
    two_point_bet,
)
from .experiments import (
    leverage_report,
    run_error_envelope,
    run_frontier_surface,
    run_universes,
)
from .output import render_csv, render_json
from .simulate import TimeGrid, exact_ensemble, growth_estimator, rebalanced_ensemble

EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


@dataclass(frozen=True)
class Opt:
    flag: str
    kind: Callable[[str], Any]
    default: Any = None
    required: bool = False
    help: str = ""
    aliases: tuple[str, ...] = ()

    @property
    def dest(self) -> str:
        return self.flag.replace("-", "_")


_MARKET = [
    Opt("riskless", float, required=True, help="riskless rate per time unit"),
    Opt("excess", float, required=True, help="excess drift of the market portfolio"),
    Opt("sigma-m", float, required=True, help="market volatility", aliases=("sigma",)),
]
_GBM = [
    Opt("mu", float, required=True, help="drift per time unit"),
    Opt("sigma", float, required=True, help="volatility per sqrt(time unit)"),
]

COMMANDS: dict[str, list[Opt]] = {
    "report": _MARKET + [
        Opt("curve", _bool, False, help="include the horizon curve t_c(l)"),
        Opt("l-min", float, help="lower end of the horizon curve"),
        Opt("l-max", float, help="upper end of the horizon curve"),
        Opt("points", int, 401, help="leverage samples on the curve"),
    ],
    "frontier": _MARKET + [
        Opt("sigma-min", float, 0.0),
        Opt("sigma-max", float, 0.5),
        Opt("mu-min", float, 0.0),
        Opt("mu-max", float, 0.2),
        Opt("resolution", int, 201, help="samples per axis"),
    ],
    "universes": _GBM + [
        Opt("T", float, required=True, help="horizon"),
        Opt("steps", int, required=True, help="time steps"),
        Opt("ladder", _int_list, [1, 10, 100, 1000, 10000], help="comma-separated path counts"),
    ],
    "error-envelope": _GBM + [
        Opt("T-list", _float_list, [10.0, 100.0, 1000.0], help="comma-separated horizons"),
        Opt("samples", int, 1000, help="single-path estimates per horizon"),
        Opt("inset-T", float, help="horizon of the long inset path"),
        Opt("inset-steps", int, 1000),
        Opt("absolute", _bool, False, help="report absolute instead of relative errors"),
    ],
    "simulate": [
        Opt("mu", float, help="drift (unlevered GBM)"),
        Opt("sigma", float, help="volatility (unlevered GBM)"),
        Opt("riskless", float, help="riskless rate (levered portfolio)"),
        Opt("excess", float, help="market excess drift (levered portfolio)"),
        Opt("sigma-m", float, help="market volatility (levered portfolio)"),
        Opt("leverage", float, help="constant leverage, rebalanced every step"),
        Opt("T", float, required=True),
        Opt("steps", int, 1),
        Opt("paths", int, 1000),
    ],
    "kelly": [
        Opt("p", float, required=True, help="win probability of an even-money bet"),
        Opt("fraction", float, help="fraction of wealth staked"),
        Opt("optimize", _bool, False, help="search the growth-optimal fraction"),
    ],
}

STOCHASTIC = {"universes", "error-envelope", "simulate"}
_COMMON = [
    Opt("seed", int, 0, help="master seed (64-bit unsigned)"),
    Opt("precision", int, 12, help="significant digits in output"),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ergolev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        for opt in opts + _COMMON:
            flags = [f"--{opt.flag}"] + [f"--{a}" for a in opt.aliases]
            if opt.kind is _bool:
                p.add_argument(*flags, dest=opt.dest, action="store_const", const=True,
                               default=None, help=opt.help)
            else:
                p.add_argument(*flags, dest=opt.dest, type=str, default=None, help=opt.help)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--threads", default=None, help="worker threads (default: all cores)")
        p.add_argument("--config", default=None, help="key=value config file")
    return parser


def read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        values[key.strip().lstrip("-")] = value.strip()
    return values


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge flags over config values over defaults, converting types."""
    command = args.command
    opts = COMMANDS[command] + _COMMON
    by_name = {}
    for opt in opts:
        for name in (opt.flag, *opt.aliases):
            by_name[name] = opt
            by_name[name.replace("-", "_")] = opt
    config = read_config(args.config) if args.config else {}
    extra = {}
    from_file = {}
    for key, value in config.items():
        if key == "command":
            if value != command:
                raise UsageError(f"config is for command {value!r}, not {command!r}")
        elif key == "version" or key.startswith("derived."):
            continue
        elif key in ("format", "threads", "out"):
            extra[key] = value
        elif key in by_name:
            from_file[by_name[key].dest] = value
        else:
            raise UsageError(f"unknown config key {key!r} for {command}")

    cfg: dict[str, Any] = {}
    for opt in opts:
        raw = getattr(args, opt.dest)
        if raw is None:
            raw = from_file.get(opt.dest)
        if raw is None:
            if opt.required:
                raise UsageError(f"missing required parameter --{opt.flag}")
            cfg[opt.dest] = opt.default
            continue
        if raw is True:
            cfg[opt.dest] = True
            continue
        try:
            cfg[opt.dest] = opt.kind(raw)
        except ValueError:
            raise UsageError(f"invalid value for --{opt.flag}: {raw!r}") from None

    fmt = args.format or extra.get("format") or ("json" if command == "report" else "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown format {fmt!r}")
    threads = args.threads if args.threads is not None else extra.get("threads")
    try:
        threads = None if threads is None else int(threads)
    except ValueError:
        raise UsageError(f"invalid thread count {threads!r}") from None
    if threads is not None and threads < 1:
        raise UsageError("--threads must be >= 1")
    if not 0 <= cfg["seed"] < 2**64:
        raise UsageError("--seed must fit in 64 unsigned bits")
    if not 1 <= cfg["precision"] <= 17:
        raise UsageError("--precision must be between 1 and 17")
    cfg["format"] = fmt
    cfg["threads"] = threads
    cfg["out"] = args.out if args.out is not None else extra.get("out")
    return cfg


def _metadata(command: str, cfg: dict[str, Any]) -> dict[str, Any]:
    meta: dict[str, Any] = {"command": command, "version": __version__}
    for opt in COMMANDS[command] + _COMMON:
        value = cfg[opt.dest]
        if value is None or (opt.dest == "seed" and command not in STOCHASTIC):
            continue
        meta[opt.flag] = value
    meta["format"] = cfg["format"]
    return meta


def _market(cfg) -> MarketModel:
    return MarketModel(cfg["riskless"], cfg["excess"], cfg["sigma_m"])


def _emit(cfg, meta, header, rows, body) -> str:
    if cfg["format"] == "json":
        return render_json(meta, body, cfg["precision"])
    return render_csv(meta, header, rows, cfg["precision"])


def cmd_report(cfg, meta) -> str:
    lr = (cfg["l_min"], cfg["l_max"])
    if (lr[0] is None) != (lr[1] is None):
        raise UsageError("give both --l-min and --l-max or neither")
    rep = leverage_report(_market(cfg), None if lr[0] is None else lr, cfg["points"])
    body = dict(rep.summary())
    if rep.l_c is None:
        body["l_c"] = None
    rows = [[k, None, v] for k, v in rep.summary().items()]
    if cfg["curve"]:
        body["leverage"] = rep.leverages
        body["horizon"] = rep.horizons
        rows += [["t_c_curve", l, h] for l, h in zip(rep.leverages, rep.horizons)]
    return _emit(cfg, meta, ["key", "leverage", "value"], rows, body)


def cmd_frontier(cfg, meta) -> str:
    s = run_frontier_surface(
        _market(cfg),
        (cfg["sigma_min"], cfg["sigma_max"]),
        (cfg["mu_min"], cfg["mu_max"]),
        cfg["resolution"],
    )

    def rows():
        for name, (sig, mu) in s.markers.items():
            yield ["marker", name, sig, mu, mu - sig**2 / 2]
        for (sig, mu), g in zip(s.frontier, s.frontier_growth):
            yield ["frontier", "", sig, mu, g]
        for sig, mu in s.zero_growth:
            yield ["zero_growth", "", sig, mu, 0.0]
        for i, mu in enumerate(s.mu):
            for j, sig in enumerate(s.sigma):
                yield ["cell", "", sig, mu, s.growth[i, j]]

    body = {
        "markers": {k: list(v) for k, v in s.markers.items()},
        "sigma": s.sigma,
        "mu": s.mu,
        "growth": s.growth,
        "frontier": s.frontier,
        "zero_growth": s.zero_growth,
    }
    return _emit(cfg, meta, ["record", "label", "sigma", "mu", "growth"], rows(), body)


def cmd_universes(cfg, meta) -> str:
    run = run_universes(GbmParams(cfg["mu"], cfg["sigma"]), cfg["T"], cfg["steps"],
                        cfg["ladder"], cfg["seed"], cfg["threads"])
    meta["derived.t_c"] = run.t_c
    header = ["t", "exemplar"] + [f"mean_N{n}" for n in run.averages]
    cols = [run.times, run.exemplar] + list(run.averages.values())
    body = {
        "t_c": run.t_c,
        "times": run.times,
        "exemplar": run.exemplar,
        "averages": {str(n): a for n, a in run.averages.items()},
    }
    return _emit(cfg, meta, header, zip(*cols), body)


def cmd_error_envelope(cfg, meta) -> str:
    run = run_error_envelope(GbmParams(cfg["mu"], cfg["sigma"]), cfg["T_list"], cfg["samples"],
                             cfg["seed"], cfg["inset_T"], cfg["inset_steps"], cfg["absolute"],
                             cfg["threads"])
    header = ["record", "T", "index", "g_est", "error", "envelope_1sd", "envelope_2sd",
              "coverage_1sd", "coverage_2sd"]

    def rows():
        for T in run.T_list:
            env = run.envelope[T]
            yield ["summary", T, None, None, None, env, 2 * env,
                   run.coverage_1sd[T], run.coverage_2sd[T]]
        for T in run.T_list:
            for i, (g, e) in enumerate(zip(run.estimates[T], run.errors[T])):
                yield ["sample", T, i, g, e, None, None, None, None]
        for t, g in zip(run.inset_times, run.inset_estimates):
            yield ["inset", t, None, g, None, None, None, None, None]

    body = {
        "g_bar": run.g_bar,
        "absolute": run.absolute,
        "horizons": [
            {
                "T": T,
                "envelope_1sd": run.envelope[T],
                "envelope_2sd": 2 * run.envelope[T],
                "coverage_1sd": run.coverage_1sd[T],
                "coverage_2sd": run.coverage_2sd[T],
                "g_est": run.estimates[T],
                "error": run.errors[T],
            }
            for T in run.T_list
        ],
        "inset": {"t": run.inset_times, "g_est": run.inset_estimates},
    }
    return _emit(cfg, meta, header, rows(), body)


def cmd_simulate(cfg, meta) -> str:
    grid = TimeGrid(cfg["T"], cfg["steps"])
    if cfg["paths"] < 1:
        raise ValueError("--paths must be >= 1")
    levered = cfg["leverage"] is not None
    if levered:
        missing = [k for k in ("riskless", "excess", "sigma_m") if cfg[k] is None]
        if missing:
            raise UsageError("--leverage needs --riskless, --excess and --sigma-m")
        ens = rebalanced_ensemble(_market(cfg), cfg["leverage"], grid, cfg["paths"],
                                  cfg["seed"], threads=cfg["threads"])
        sigma = abs(cfg["leverage"]) * cfg["sigma_m"]
    else:
        if cfg["mu"] is None or cfg["sigma"] is None:
            raise UsageError("give --mu and --sigma, or --leverage with market parameters")
        ens = exact_ensemble(GbmParams(cfg["mu"], cfg["sigma"]), grid, cfg["paths"],
                             cfg["seed"], threads=cfg["threads"])
        sigma = cfg["sigma"]
    est = growth_estimator(ens, grid.T, sigma)
    ratios = ens.terminal_ratios
    bankrupt = ens.bankrupt if ens.bankrupt is not None else np.zeros(ratios.shape[0], bool)
    with np.errstate(divide="ignore"):
        log_growth = np.log(ratios) / grid.T

    def rows():
        yield ["g_est", None, est.value, est.stderr, int(bankrupt.sum())]
        for i in range(ratios.shape[0]):
            yield ["path", i, ratios[i], log_growth[i], int(bankrupt[i])]

    body = {
        "g_est": est.value,
        "stderr": est.stderr,
        "bankrupt_count": int(bankrupt.sum()),
        "terminal_ratio": ratios,
        "log_growth": log_growth,
        "bankrupt": bankrupt.astype(int),
    }
    return _emit(cfg, meta, ["record", "path", "terminal_ratio", "log_growth", "bankrupt"],
                 rows(), body)


def cmd_kelly(cfg, meta) -> str:
    p = cfg["p"]
    if not 0 <= p <= 1:
        raise UsageError(f"--p must lie in [0, 1], got {p}")
    if cfg["optimize"]:
        fraction = kelly_fraction(p, 1e-8)
    elif cfg["fraction"] is not None:
        fraction = cfg["fraction"]
    else:
        raise UsageError("give --fraction or --optimize")
    growth = geometric_mean_growth(two_point_bet(p, fraction))
    body = {"p": p, "fraction": fraction, "growth": growth}
    return _emit(cfg, meta, ["p", "fraction", "growth"], [[p, fraction, growth]], body)


HANDLERS = {
    "report": cmd_report,
    "frontier": cmd_frontier,
    "universes": cmd_universes,
    "error-envelope": cmd_error_envelope,
    "simulate": cmd_simulate,
    "kelly": cmd_kelly,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        text = HANDLERS[args.command](cfg, _metadata(args.command, cfg))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if cfg["out"] is None:
            sys.stdout.write(text)
        else:
            with open(cfg["out"], "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
