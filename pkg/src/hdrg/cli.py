"""Benchmark command line: run, threshold, lstar, hashing, percolation,
cantor.

Flags may also be supplied through a flat key=value config file
(``--config``); explicit flags override file entries.  Output is CSV by
default, JSON with ``--format json``, written to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bench

_BOOLISH = {"on": True, "off": False, "true": True, "false": False, "1": True, "0": False}


def _parse_bool(value: str) -> bool:
    try:
        return _BOOLISH[value.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _parse_int_list(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v]


def _parse_float_list(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v]


_DEFAULTS = {
    "model": "zd",
    "decoder": "mwm",
    "d": 3,
    "L": [10],
    "p": [0.10],
    "trials": 1000,
    "rounds": None,
    "measurement": "perfect",
    "shortcuts": True,
    "lambda": 0.3,
    "dm1_factor": True,
    "seed": 0,
    "workers": os.cpu_count() or 1,
    "out": None,
    "format": "csv",
}

_PARSERS = {
    "d": int,
    "L": _parse_int_list,
    "p": _parse_float_list,
    "trials": int,
    "rounds": int,
    "shortcuts": _parse_bool,
    "lambda": float,
    "dm1_factor": _parse_bool,
    "seed": int,
    "workers": int,
}


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _DEFAULTS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            parser = _PARSERS.get(key, str)
            values[key] = parser(value)
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--model", choices=bench.MODELS)
    parser.add_argument("--decoder", choices=bench.DECODERS)
    parser.add_argument("--d", type=int)
    parser.add_argument("--L", type=_parse_int_list, help="comma-separated sizes")
    parser.add_argument("--p", type=_parse_float_list, help="comma-separated rates")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--rounds", type=int, help="measurement rounds (3D; default L)")
    parser.add_argument("--measurement", choices=("perfect", "faulty"))
    parser.add_argument("--shortcuts", type=_parse_bool, metavar="{on,off}")
    parser.add_argument("--lambda", dest="lambda_", type=float, metavar="FLOAT")
    parser.add_argument(
        "--dm1-factor", dest="dm1_factor", type=_parse_bool, metavar="{on,off}"
    )
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"))


def _settings(args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS)
    if args.config:
        merged.update(_read_config_file(args.config))
    for key in _DEFAULTS:
        attr = {"lambda": "lambda_"}.get(key, key)
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    return merged


def _run_config(settings: dict) -> bench.RunConfig:
    return bench.RunConfig(
        model=settings["model"],
        decoder=settings["decoder"],
        d=settings["d"],
        trials=settings["trials"],
        rounds=settings["rounds"],
        measurement=settings["measurement"],
        shortcuts=settings["shortcuts"],
        lam=settings["lambda"],
        dm1_factor=settings["dm1_factor"],
        seed=settings["seed"],
        workers=settings["workers"],
    )


def _emit(text: str, settings: dict) -> None:
    if settings["out"]:
        with open(settings["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    settings = _settings(args)
    rows = bench.run_grid(_run_config(settings), settings["L"], settings["p"])
    if settings["format"] == "json":
        _emit(bench.to_json(rows), settings)
    else:
        _emit(bench.to_csv(rows), settings)
    return 0


def _cmd_threshold(args) -> int:
    settings = _settings(args)
    rows = bench.run_grid(_run_config(settings), settings["L"], settings["p"])
    curves: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        curves.setdefault(row.L, []).append((row.p, row.p_logical))
    estimate = bench.estimate_threshold(curves)
    if settings["format"] == "json":
        _emit(
            bench.to_json(
                rows,
                extra={
                    "threshold": {
                        "p_c": estimate.p_c,
                        "spread": estimate.spread,
                        "crossings": [
                            {"L1": a, "L2": b, "p": c} for a, b, c in estimate.crossings
                        ],
                    }
                },
            ),
            settings,
        )
    else:
        _emit(bench.to_csv(rows), settings)
        print(
            f"threshold estimate p_c = {estimate.p_c:.4f} "
            f"(spread {estimate.spread:.4f} over {len(estimate.crossings)} crossings)",
            file=sys.stderr,
        )
    return 0


def _cmd_lstar(args) -> int:
    settings = _settings(args)
    if len(settings["p"]) != 1:
        raise SystemExit("lstar expects a single --p value")
    result = bench.l_star(
        _run_config(settings),
        settings["p"][0],
        sweep=settings["L"],
        trials=settings["trials"],
    )
    if settings["format"] == "json":
        _emit(bench.to_json(result.stats, extra={"l_star": result.L}), settings)
    else:
        _emit(bench.to_csv(result.stats), settings)
        if result.L is None:
            print("L* not reached on the swept sizes (lower bound: beyond "
                  f"{max(s.L for s in result.stats)})", file=sys.stderr)
        else:
            print(f"L* = {result.L}", file=sys.stderr)
    return 0


def _cmd_hashing(args) -> int:
    settings = _settings(args)
    value = bench.hashing_bound(settings["d"])
    print(f"{value:.9f}")
    return 0


def _cmd_percolation(args) -> int:
    settings = _settings(args)
    results = bench.percolation_experiment(
        settings["d"], settings["p"], settings["L"], settings["trials"], settings["seed"]
    )
    lines = ["L,p,trials,wrap_fraction,seed"]
    for (L, p), frac in sorted(results.items()):
        lines.append(f"{L},{p:.6g},{settings['trials']},{frac:.6g},{settings['seed']}")
    _emit("\n".join(lines) + "\n", settings)
    return 0


def _cmd_cantor(args) -> int:
    settings = _settings(args)
    cells = bench.cantor_suite(settings["d"])
    header = f"{'decoder':8} {'shortcuts':9} {'regime':14} {'level':5} {'L':4} expected observed ok"
    print(header)
    all_ok = True
    for cell in cells:
        all_ok &= cell.ok
        print(
            f"{cell.decoder:8} {'on' if cell.shortcuts else 'off':9} "
            f"{cell.regime:14} {cell.level:5} {cell.L:4} "
            f"{'fail' if cell.expect_failure else 'ok':8} "
            f"{'fail' if cell.observed_failure else 'ok':8} "
            f"{'yes' if cell.ok else 'NO'}"
        )
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdrg-bench", description="HDRG decoder benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (
        ("run", _cmd_run),
        ("threshold", _cmd_threshold),
        ("lstar", _cmd_lstar),
        ("hashing", _cmd_hashing),
        ("percolation", _cmd_percolation),
        ("cantor", _cmd_cantor),
    ):
        sp = sub.add_parser(name)
        _add_common(sp)
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
