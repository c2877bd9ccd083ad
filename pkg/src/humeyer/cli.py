"""Command-line interface.

Every command reads its settings from flags or a JSON config file (flags
win), writes JSON (default) or CSV, and exits with

    0 success, 1 internal error, 2 config or capacity error, 3 convergence failure.

Errors are reported on stderr as {"error": kind, "message": text}.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSpec, Interval
from .combinatorics import PairPartition
from .errors import CapacityError, ConvergenceError
from .hu_meyer import TRACE_SOURCES, convert_expansion, convert_round_trip, hu_meyer_forward
from .kernels import DEFAULT_MAX_ENTRIES, VolterraKernel, WeightSpec, coeff_tensor, kernel_l2_norm_sq
from .mc import coupled_ms_exact, iterated_strat_mc, ms_error, noise_from_path
from .traces import condition_residual
from .wiener import ito_truncated, product_expansion, sample_noise

OUTPUT_DIR_ENV = "HUMEYER_OUTPUT_DIR"

DEFAULTS = {
    "basis": "legendre",
    "interval": "0,1",
    "k": None,
    "weights": None,
    "channels": None,
    "m": None,
    "p": 2,
    "p_list": None,
    "pairs": None,
    "tol": 1e-2,
    "seed": 0,
    "paths": 1000,
    "N": 1024,
    "workers": 1,
    "trace_source": "limiting",
    "direction": "ito_to_strat",
    "max_entries": DEFAULT_MAX_ENTRIES,
    "format": "json",
    "output": None,
}


class ConfigError(ValueError):
    pass


# --- parsing helpers ---------------------------------------------------------


def _int_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(",") if v.strip()]


def _float_list(value) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(",")]


def _pairs(value, k: int) -> PairPartition:
    """'1-2,3-4' or [[1, 2], [3, 4]]."""
    if isinstance(value, str):
        pairs = [tuple(int(g) for g in item.split("-")) for item in value.split(",") if item.strip()]
    else:
        pairs = [tuple(int(g) for g in item) for item in value]
    return PairPartition.from_pairs(k, pairs)


def _settings(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _problem(cfg: dict):
    """Basis, weights and channels from the settings, with consistency checks."""
    t, T = _float_list(cfg["interval"])
    basis = BasisSpec(cfg["basis"], Interval(t, T))
    weights = _int_list(cfg["weights"]) if cfg["weights"] is not None else None
    k = cfg["k"]
    if weights is None:
        if k is None:
            raise ConfigError("give --k or --weights")
        weights = [0] * int(k)
    if k is not None and int(k) != len(weights):
        raise ConfigError(f"--k {k} disagrees with {len(weights)} weights")
    kern = VolterraKernel(WeightSpec(tuple(weights)), basis.interval)
    channels = _int_list(cfg["channels"]) if cfg["channels"] is not None else [1] * kern.k
    if len(channels) != kern.k:
        raise ConfigError(f"{len(channels)} channels for k={kern.k}")
    m = int(cfg["m"]) if cfg["m"] is not None else max(1, max(channels))
    if int(cfg["p"]) < 0:
        raise ConfigError("p must be nonnegative")
    return basis, kern, tuple(channels), m


def _tensor(cfg, basis, kern):
    return coeff_tensor(basis, kern, int(cfg["p"]), max_entries=int(cfg["max_entries"]))


# --- commands -----------------------------------------------------------------------


def cmd_gen_coeffs(cfg: dict):
    basis, kern, _, _ = _problem(cfg)
    tensor = _tensor(cfg, basis, kern)
    if cfg["format"] == "csv":
        return tensor.to_csv()
    return tensor.to_dict()


def cmd_check_condition(cfg: dict):
    basis, kern, _, _ = _problem(cfg)
    if cfg["pairs"] is None:
        partition = PairPartition.from_pairs(kern.k, [(1, 2)])
    else:
        partition = _pairs(cfg["pairs"], kern.k)
    if partition.r == 0:
        raise ConfigError("the partition needs at least one pair")
    p_list = _int_list(cfg["p_list"]) if cfg["p_list"] is not None else list(range(int(cfg["p"]) + 1))
    series = condition_residual(basis, kern, partition, p_list)
    res = series.residuals
    non_increasing = bool(np.all(np.diff(res) <= 0))
    below = bool(res[-1] < float(cfg["tol"]))
    verdict = "yes" if non_increasing and below else "no"
    if cfg["format"] == "csv":
        return series.to_csv() + f"# decreasing below tol: {verdict}\n"
    return {
        "partition": partition.label(),
        "tol": float(cfg["tol"]),
        "values": [{"p": p, "residual": v} for p, v in series.values],
        "strictly_decreasing": series.strictly_decreasing(),
        "verdict": f"decreasing below tol: {verdict}",
    }


def _noise(cfg, basis, m):
    return sample_noise(m, int(cfg["p"]), int(cfg["seed"]), basis)


def cmd_expand(cfg: dict):
    basis, kern, channels, m = _problem(cfg)
    tensor = _tensor(cfg, basis, kern)
    noise = _noise(cfg, basis, m)
    return {
        "seed": int(cfg["seed"]),
        "p": tensor.p,
        "channels": list(channels),
        "stratonovich": product_expansion(tensor, channels, noise),
        "ito": ito_truncated(tensor, channels, noise),
    }


def cmd_decompose(cfg: dict):
    basis, kern, channels, m = _problem(cfg)
    if cfg["trace_source"] not in TRACE_SOURCES:
        raise ConfigError(f"trace source must be one of {TRACE_SOURCES}")
    tensor = _tensor(cfg, basis, kern)
    noise = _noise(cfg, basis, m)
    dec = hu_meyer_forward(tensor, channels, noise, trace_source=cfg["trace_source"])
    out = dec.to_dict()
    out.update(
        seed=int(cfg["seed"]),
        p=tensor.p,
        trace_source=cfg["trace_source"],
        stratonovich=product_expansion(tensor, channels, noise),
    )
    return out


def cmd_convert(cfg: dict):
    basis, kern, channels, m = _problem(cfg)
    if cfg["direction"] not in ("ito_to_strat", "strat_to_ito"):
        raise ConfigError("direction must be ito_to_strat or strat_to_ito")
    tensor = _tensor(cfg, basis, kern)
    noise = _noise(cfg, basis, m)
    ito, recovered = convert_round_trip(tensor, channels, noise)
    return {
        "seed": int(cfg["seed"]),
        "p": tensor.p,
        "direction": cfg["direction"],
        "ito": ito,
        "stratonovich": product_expansion(tensor, channels, noise),
        "converted": convert_expansion(tensor, channels, noise, cfg["direction"]),
        "round_trip_error": abs(recovered - ito),
    }


def cmd_mc_compare(cfg: dict):
    basis, kern, channels, m = _problem(cfg)
    if kern.k > 4:
        raise CapacityError("capacity: nested path integrals are limited to k <= 4")
    tensor = _tensor(cfg, basis, kern)
    N, paths, seed = int(cfg["N"]), int(cfg["paths"]), int(cfg["seed"])
    est = ms_error(
        lambda path: product_expansion(tensor, channels, noise_from_path(path, basis, tensor.p)),
        lambda path: iterated_strat_mc(kern.weights, channels, path),
        paths,
        seed,
        m,
        N,
        basis.interval,
        workers=int(cfg["workers"]),
    )
    out = {
        "estimator": "mean square of stratonovich_spectral - iterated_strat_mc",
        "seed": seed,
        "paths": paths,
        "N": N,
        "p": tensor.p,
        "channels": list(channels),
        "mean": est.mean,
        "ci95": est.ci95,
    }
    if len(set(channels)) == kern.k and 0 not in channels:
        out["parseval_tail"] = kernel_l2_norm_sq(kern) - float(np.sum(tensor.data**2))
        if kern.k == 2 and kern.weights.exponents == (0, 0):
            out["discrete_prediction"] = coupled_ms_exact(tensor, N)
    return out


COMMANDS = {
    "gen-coeffs": cmd_gen_coeffs,
    "check-condition": cmd_check_condition,
    "expand": cmd_expand,
    "decompose": cmd_decompose,
    "convert": cmd_convert,
    "mc-compare": cmd_mc_compare,
}


# --- plumbing -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="humeyer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="JSON file with the same keys as the flags")
        cmd.add_argument("--basis", choices=["legendre", "trigonometric"])
        cmd.add_argument("--interval", help="t,T")
        cmd.add_argument("--k", type=int)
        cmd.add_argument("--weights", help="exponents l_1,...,l_k")
        cmd.add_argument("--channels", help="i_1,...,i_k (0 is the time channel)")
        cmd.add_argument("--m", type=int, help="number of noise channels")
        cmd.add_argument("--p", type=int)
        cmd.add_argument("--max-entries", dest="max_entries", type=int)
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--format", choices=["json", "csv"])
        cmd.add_argument("--output", help=f"output file (default: stdout, or ${OUTPUT_DIR_ENV}/<command>.<format>)")
        if name == "check-condition":
            cmd.add_argument("--pairs", help="pairs such as 1-3,2-4 (default 1-2)")
            cmd.add_argument("--p-list", dest="p_list", help="comma-separated truncations")
            cmd.add_argument("--tol", type=float)
        if name == "decompose":
            cmd.add_argument("--trace-source", dest="trace_source", choices=TRACE_SOURCES)
        if name == "convert":
            cmd.add_argument("--direction", choices=["ito_to_strat", "strat_to_ito"])
        if name == "mc-compare":
            cmd.add_argument("--paths", type=int)
            cmd.add_argument("--N", type=int)
            cmd.add_argument("--workers", type=int)
    return parser


def _render(result, fmt: str) -> str:
    if isinstance(result, str):
        return result
    if fmt == "csv":
        rows = ["key,value"] + [f"{key},{json.dumps(value)}" for key, value in result.items() if not isinstance(value, (list, dict))]
        return "\n".join(rows) + "\n"
    return json.dumps(result, indent=2) + "\n"


def _destination(cfg: dict, command: str) -> Path | None:
    if cfg["output"]:
        return Path(cfg["output"])
    folder = os.environ.get(OUTPUT_DIR_ENV)
    if folder:
        return Path(folder) / f"{command}.{cfg['format']}"
    return None


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
        if cfg["format"] not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        text = _render(COMMANDS[args.command](cfg), cfg["format"])
        dest = _destination(cfg, args.command)
        if dest is None:
            sys.stdout.write(text)
        else:
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text)
    except CapacityError as exc:
        return _fail("capacity", str(exc), 2)
    except ConvergenceError as exc:
        return _fail("convergence", str(exc), 3)
    except (ValueError, TypeError, KeyError) as exc:
        return _fail("config", str(exc), 2)
    except Exception as exc:  # noqa: BLE001 - last-resort report
        return _fail("internal", f"{type(exc).__name__}: {exc}", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
