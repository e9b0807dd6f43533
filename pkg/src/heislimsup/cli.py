"""Command-line experiment runner.

Every subcommand writes one CSV table.  The first line is a comment carrying the
tool version, a hash of the resolved configuration and the seed, so a table can
be regenerated byte for byte.  Parameters come from flags or from an INI file
(``--config``): keys in ``[common]`` and in the section named after the
subcommand; flags win on conflict.

Exit codes: 0 success, 1 usage or domain error, 2 acceptance failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from typing import Callable, Iterable

from . import __version__
from .group import DomainError, Radii

SCHEMA_VERSION = 1
ENV_OUTPUT_DIR = "HEISLIMSUP_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_ACCEPT = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(float(v)) if "e" in v.lower() else int(v) for v in str(text).replace(" ", "").split(",") if v]


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


# name -> (parser, default, help)
COMMON = {
    "seed": (int, 0, "RNG seed"),
}
PARAMS: dict[str, dict[str, tuple]] = {
    "phi": {
        "t": (_floats, [2.0], "exponents in [0, 4]"),
        "r1": (_floats, [0.1], "horizontal radii"),
        "r2": (_floats, [0.5], "vertical radii (half height r2^2)"),
    },
    "threshold": {
        "alpha": (_floats, [0.5], "r1 = n^-alpha"),
        "beta": (_floats, [0.5], "r2 = n^-beta"),
    },
    "cover": {
        "r1": (_floats, [1.0], "horizontal radii"),
        "r2": (_floats, [0.1], "vertical radii"),
        "t": (_floats, [3.5], "exponents in [0, 4]"),
        "samples": (int, 10_000, "density-check samples per cover"),
    },
    "energy": {
        "r1": (_floats, [1.0], "horizontal radii"),
        "r2": (_floats, [1.0], "vertical radii"),
        "t": (_floats, [0.5], "exponents in (0, 4)"),
        "pairs": (int, 100_000, "Monte Carlo pairs per point"),
        "method": (_choice("mixture", "uniform"), "mixture", "pair sampler"),
    },
    "simulate": {
        "window": (_floats, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0], "a1,a2,a3,b1,b2,b3"),
        "alpha": (float, 0.5, "r1 = n^-alpha"),
        "beta": (float, 0.5, "r2 = n^-beta"),
        "n": (_ints, [1000, 10_000, 100_000], "generation sizes N"),
        "delta_factor": (float, 1.0, "grid step = factor * max(r_N)"),
    },
    "gadgets": {
        "b": (_choice("one", "log"), "one", "weights: b_k = 1 or 1 + log k"),
        "rows": (int, 8, "number of blocks"),
        "horizon": (int, 1 << 20, "largest index k available"),
    },
    "accept": {
        "only": (_ints, [], "criterion ids to run (default all)"),
    },
}
PARAMS["capacity"] = PARAMS["energy"]

ENERGY_COLUMNS = [
    "r1", "r2", "t", "n_pairs", "seed", "energy", "stderr", "bound",
    "energy_over_bound", "cap_lower", "phi", "cap_over_phi",
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heislimsup", description="Heisenberg rectangle experiments")
    p.add_argument("--version", action="version", version=f"heislimsup {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [common] and per-subcommand sections")
    common.add_argument("--out", help=f"output CSV path (default: ${ENV_OUTPUT_DIR}/<cmd>.csv, else stdout)")
    for name, (_, default, hlp) in COMMON.items():
        common.add_argument(f"--{name}", default=None, help=f"{hlp} (default {default})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, params in PARAMS.items():
        if cmd == "gadgets":
            g = sub.add_parser(cmd, help="block-coefficient tables")
            gsub = g.add_subparsers(dest="gadget", required=True, parser_class=_Parser)
            sp = gsub.add_parser("coeffs", parents=[common], help="emit the a[n][k] table")
        else:
            sp = sub.add_parser(cmd, parents=[common])
        for name, (_, default, hlp) in params.items():
            flag = "--" + name.replace("_", "-")
            sp.add_argument(flag, dest=name, default=None, help=f"{hlp} (default {default})")
    return p


def _read_config(path: str, command: str) -> dict[str, str]:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for section in cp.sections():
        if section not in ("common", command) and section not in PARAMS:
            raise UsageError(f"config: unknown section [{section}]")
    if cp.has_section("common"):
        for key, val in cp.items("common"):
            if key == "schema_version":
                if val.strip() != str(SCHEMA_VERSION):
                    raise UsageError(f"config key common.schema_version: unsupported version {val!r}")
            elif key in COMMON or key == "out":
                out[key] = val
            else:
                raise UsageError(f"config: unknown key common.{key}")
    if cp.has_section(command):
        for key, val in cp.items(command):
            if key not in PARAMS[command]:
                raise UsageError(f"config: unknown key {command}.{key}")
            out[key] = val
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (in rising priority) and parse values."""
    command = args.command
    table = {**COMMON, **PARAMS[command]}
    raw = _read_config(args.config, command) if args.config else {}
    out_path = args.out or raw.pop("out", None)
    for name in table:
        flag = getattr(args, name, None)
        if flag is not None:
            raw[name] = flag
    cfg = {}
    for name, (parse, default, _) in table.items():
        if name not in raw:
            cfg[name] = default
            continue
        try:
            cfg[name] = parse(raw[name])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {name}: {raw[name]!r} ({exc})") from None
    cfg["_out"] = out_path
    return cfg


def config_hash(command: str, cfg: dict) -> str:
    body = {"command": command, "schema": SCHEMA_VERSION, **{k: v for k, v in cfg.items() if not k.startswith("_")}}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(stream, command: str, cfg: dict, columns: list[str], rows: Iterable[Iterable]) -> None:
    stream.write(f"# heislimsup {__version__} config={config_hash(command, cfg)} seed={cfg['seed']}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


# subcommands ---------------------------------------------------------------

def _radii_grid(cfg):
    for r1 in cfg["r1"]:
        for r2 in cfg["r2"]:
            yield Radii(r1, r2)


def cmd_phi(cfg):
    from .svf import phi

    rows = []
    for t in cfg["t"]:
        for r in _radii_grid(cfg):
            v = phi(t, r)
            rows.append((t, r.r1, r.r2, v.branch.value, v.value))
    return ["t", "r1", "r2", "branch", "value"], rows


def cmd_threshold(cfg):
    from .svf import PowerLawSeq, dimension_threshold

    rows = []
    for a in cfg["alpha"]:
        for b in cfg["beta"]:
            th = dimension_threshold(PowerLawSeq(a, b))
            rows.append((a, b, th.value, "" if th.exact is None else str(th.exact)))
    return ["alpha", "beta", "threshold", "exact"], rows


def cmd_cover(cfg):
    from .covers import build_cover, content, verify_density
    from .rng import make_rng
    from .svf import phi

    rows = []
    idx = 0
    for t in cfg["t"]:
        for r in _radii_grid(cfg):
            c = build_cover(r, t)
            rep = verify_density(c, cfg["samples"], make_rng(cfg["seed"], idx))
            cont = content(c, t)
            p = phi(t, r).value
            rows.append((r.r1, r.r2, t, c.construction.value, c.element_count, c.density_claim,
                         rep.max_gap, rep.violations, cont, p, cont / p))
            idx += 1
    cols = ["r1", "r2", "t", "construction", "element_count", "density_claim", "max_gap",
            "violations", "content", "phi", "content_over_phi"]
    return cols, rows


def cmd_energy(cfg):
    from .energy import capacity_lower_bound, energy_bound_rect, riesz_energy_rect
    from .svf import phi

    rows = []
    idx = 0
    for t in cfg["t"]:
        for r in _radii_grid(cfg):
            e = riesz_energy_rect(r, t, cfg["pairs"], cfg["seed"], (idx,), cfg["method"])
            try:
                bound = energy_bound_rect(t, r).bound
            except DomainError:
                bound = math.nan  # logarithmic breakpoints have no power-law bound
            cap = capacity_lower_bound(r, t, e)
            p = phi(t, r).value
            rows.append((r.r1, r.r2, t, e.n_pairs, e.seed, e.value, e.stderr, bound,
                         e.value / bound, cap, p, cap / p))
            idx += 1
    return ENERGY_COLUMNS, rows


def cmd_simulate(cfg):
    from .limsup import Window, dimension_estimate, simulate_generations
    from .svf import PowerLawSeq

    w = cfg["window"]
    if len(w) != 6:
        raise UsageError("window needs six numbers a1,a2,a3,b1,b2,b3")
    window = Window(tuple(w[:3]), tuple(w[3:]))
    gens = simulate_generations(PowerLawSeq(cfg["alpha"], cfg["beta"]), cfg["n"], window, cfg["seed"],
                                cfg["delta_factor"])
    rows = [(g.n, g.delta, g.occupied, g.log_inv_delta, g.log_occupied) for g in gens]
    try:
        fit = dimension_estimate([(g.delta, g.occupied) for g in gens])
    except DomainError:
        fit = None
    if fit is not None:
        # summary row: the fitted line log_occupied = slope * log_inv_delta + intercept
        rows.append(("fit", "", "", fit.slope, fit.intercept))
    return ["N", "delta", "occupied", "log_inv_delta", "log_occupied"], rows


def cmd_gadgets(cfg):
    import numpy as np

    from .acceptance import log_weights
    from .limsup import block_coefficients

    h = cfg["horizon"]
    b = np.ones(h) if cfg["b"] == "one" else log_weights(h)
    table = block_coefficients(b, h, cfg["rows"])

    def rows():
        for n in range(1, table.n_blocks + 1):
            ks, vals = table.row(n)
            for k, v in zip(ks.tolist(), vals.tolist()):
                yield n, k, v

    return ["n", "k", "a"], rows()


def cmd_accept(cfg):
    from .acceptance import run_all

    results = run_all(cfg["seed"], set(cfg["only"]) or None, report=lambda line: print(line, file=sys.stderr))
    rows = [(r.id, r.title, r.passed) for r in results]
    failed = [r.id for r in results if not r.passed]
    return ["id", "title", "passed"], rows, failed


COMMANDS = {
    "phi": cmd_phi,
    "threshold": cmd_threshold,
    "cover": cmd_cover,
    "energy": cmd_energy,
    "capacity": cmd_energy,
    "simulate": cmd_simulate,
    "gadgets": cmd_gadgets,
    "accept": cmd_accept,
}


def _open_output(command: str, cfg: dict):
    path = cfg["_out"]
    if path is None and os.environ.get(ENV_OUTPUT_DIR):
        path = os.path.join(os.environ[ENV_OUTPUT_DIR], f"{command}.csv")
    if path is None or path == "-":
        return sys.stdout, False
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, "w", newline=""), True


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        cfg = resolve(args)
        out = COMMANDS[command](cfg)
        failed = out[2] if len(out) == 3 else []
        columns, rows = out[0], out[1]
        stream, close = _open_output(command, cfg)
        try:
            write_csv(stream, command, cfg, columns, rows)
        finally:
            if close:
                stream.close()
    except (UsageError, DomainError) as exc:
        print(f"heislimsup {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if failed:
        print(f"heislimsup accept: failing criteria: {', '.join(str(i) for i in failed)}", file=sys.stderr)
        return EXIT_ACCEPT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
