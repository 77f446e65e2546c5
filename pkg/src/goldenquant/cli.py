"""Command-line front end: gen, eval, sweep, profile, rd.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical failure.
Settings resolve as flags > ``--config`` JSON file > built-in defaults, and
the effective settings are recorded with every output.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._nearest import worker_count
from .baselines import Mode, build_polar, build_rect, train_lbg
from .codebook import Codebook, SourceModel, load_codebook, save_codebook
from .errors import GQError, InvalidN, InvalidScheme, NumericalError
from .evaluation import cell_statistics, mc_distortion, rd_reference, voronoi_polygons
from .highrate import (RadiusConvention, analytic_distortion_hr, analytic_rate_echr,
                       analytic_rate_hr, build_highrate)
from .lloydmax import Init, lm_objective, optimize_lloydmax
from .quadrature import DEFAULT_EXTENT_SIGMAS, DEFAULT_RESOLUTION, QuadratureGrid

SCHEMES = ("highrate", "lloydmax", "lbg", "rect", "rect-uniform", "polar", "polar-uniform")
GOLDEN = ("highrate", "lloydmax")

DEFAULTS = {
    "sigma2": 1.0,
    "seed": 0,
    "samples": 1_000_000,
    "grid_m": DEFAULT_RESOLUTION,
    "grid_extent": DEFAULT_EXTENT_SIGMAS,
    "monotone": False,
    "tol": 1e-7,
    "max_iter": 500,
    "init": Init.HIGHRATE.value,
    "convention": RadiusConvention.MIDPOINT.value,
    "train_samples": None,
    "schemes": list(SCHEMES[:5]),
    "ns": [16, 64, 256],
    "rates": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- building blocks ---------------------------------------------------------

def make_grid(cfg: dict) -> QuadratureGrid:
    return QuadratureGrid.for_source(cfg["sigma2"], cfg["grid_m"], cfg["grid_extent"])


def _lbg_samples(cfg: dict, N: int) -> int:
    return cfg["train_samples"] or max(1000 * N, 100_000)


def build(scheme: str, N: int, cfg: dict) -> Codebook:
    """Construct a codebook for a CLI scheme name."""
    sigma2 = cfg["sigma2"]
    if N < 1:
        raise InvalidN(f"N must be >= 1, got {N}")
    if scheme == "highrate":
        return build_highrate(N, sigma2, cfg["convention"])
    if scheme == "lloydmax":
        cb, _ = optimize_lloydmax(N, sigma2, cfg["init"], cfg["monotone"], cfg["tol"],
                                  cfg["max_iter"], make_grid(cfg))
        return cb
    if scheme == "lbg":
        return train_lbg(N, sigma2, _lbg_samples(cfg, N), seed=cfg["seed"] + 1)
    if scheme in ("rect", "rect-uniform"):
        side = math.isqrt(N)
        if side * side != N:
            raise InvalidN(f"rectangular quantizers need a square N, got {N}; golden "
                           "quantizers (highrate, lloydmax) accept any N")
        return build_rect(side, sigma2, Mode.UNIFORM if scheme == "rect-uniform" else Mode.OPTIMAL)
    if scheme in ("polar", "polar-uniform"):
        cb, _ = build_polar(N, sigma2, Mode.UNIFORM if scheme == "polar-uniform" else Mode.OPTIMAL,
                            make_grid(dict(cfg, grid_m=min(cfg["grid_m"], 1024))))
        return cb
    raise InvalidScheme(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")


def analytic_columns(N: int, mse: float | None, sigma2: float) -> dict:
    row = {
        "D_hr": analytic_distortion_hr(N, sigma2),
        "D_rd": rd_reference(sigma2, [math.log2(N)])[0][1],
        "R_hr": "",
        "R_echr": "",
    }
    if mse and mse > 0:
        row["R_hr"] = analytic_rate_hr(mse, sigma2)
        row["R_echr"] = analytic_rate_echr(mse, sigma2)
    return row


def _write_meta(path: Path, cfg: dict, command: str) -> None:
    meta = {"command": command, "version": __version__, "config": cfg}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _out(path) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


# -- commands ----------------------------------------------------------------

def cmd_gen(cfg: dict) -> int:
    N = cfg["n"]
    cb = build(cfg["scheme"], N, cfg)
    cb = Codebook(cb.centroids, cb.scheme, cb.sigma2, dict(cb.metadata, config=cfg))
    out = _out(cfg["out"] or f"{cfg['scheme']}_{N}.json")
    save_codebook(cb, out)
    line = f"{cb.scheme.value} N={N} rate={math.log2(N):.4f} bits"
    if cfg["scheme"] in GOLDEN:
        line += f" D_hr={analytic_distortion_hr(N, cfg['sigma2']):.6g}"
    print(f"{line} -> {out}")
    return 0


def cmd_eval(cfg: dict) -> int:
    cb = load_codebook(cfg["codebook"])
    source = SourceModel(cb.sigma2)
    grid = QuadratureGrid.for_source(source, cfg["grid_m"], cfg["grid_extent"])
    report = mc_distortion(cb, source, cfg["samples"], cfg["seed"])
    report.metadata.update(config=cfg, grid_mse=lm_objective(cb, source, grid),
                           D_rd=rd_reference(cb.sigma2, [report.rate_bits])[0][1])
    out = _out(cfg["out"] or Path(cfg["codebook"]).with_suffix(".report.json"))
    out.write_text(report.to_json(), encoding="utf-8")
    if cfg.get("cells"):
        cells = cell_statistics(cb, source, grid)
        with open(_out(cfg["cells"]), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "probability", "conditional_mse", "volume", "nmi", "clipped"])
            for c in cells:
                w.writerow([c.index, repr(c.probability), repr(c.conditional_mse),
                            repr(c.volume), repr(c.nmi), int(c.clipped)])
    if cfg.get("voronoi"):
        with open(_out(cfg["voronoi"]), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["cell", "vertex", "x", "y"])
            for k, poly in enumerate(voronoi_polygons(cb, grid.extent), start=1):
                # closed polyline: repeat the first vertex
                for v, (x, y) in enumerate(list(poly) + list(poly[:1])):
                    w.writerow([k, v, repr(float(x)), repr(float(y))])
    print(f"{report.scheme} N={report.N} mse={report.mse:.6g} ({report.mse_db:.3f} dB) "
          f"+/- {report.ci_halfwidth:.2g} -> {out}")
    return 0


SWEEP_COLUMNS = ["scheme", "N", "rate_bits", "mse", "mse_db", "ci_halfwidth", "seed",
                 "entropy_bits", "D_hr", "R_hr", "R_echr", "D_rd", "error"]


def sweep_row(scheme: str, N: int, cfg: dict) -> dict:
    row = {k: "" for k in SWEEP_COLUMNS}
    row.update(scheme=scheme, N=N, rate_bits=math.log2(N), seed=cfg["seed"])
    try:
        cb = build(scheme, N, cfg)
        rep = mc_distortion(cb, SourceModel(cfg["sigma2"]), cfg["samples"], cfg["seed"])
    except GQError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        row.update(analytic_columns(N, None, cfg["sigma2"]))
        return row
    row.update(mse=rep.mse, mse_db=rep.mse_db, ci_halfwidth=rep.ci_halfwidth,
               entropy_bits=rep.entropy_bits)
    row.update(analytic_columns(N, rep.mse, cfg["sigma2"]))
    return row


def cmd_sweep(cfg: dict) -> int:
    schemes = cfg["schemes"]
    for s in schemes:
        if s not in SCHEMES:
            raise InvalidScheme(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    ns = cfg["ns"]
    if not ns or any(n < 1 for n in ns):
        raise InvalidN("sweep needs a nonempty list of N >= 1")
    jobs = sorted({(SCHEMES.index(s), n) for s in schemes for n in ns})
    with ThreadPoolExecutor(worker_count()) as pool:
        rows = list(pool.map(lambda j: sweep_row(SCHEMES[j[0]], j[1], cfg), jobs))
    out = _out(cfg["out"] or "sweep.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})
    _write_meta(out, cfg, "sweep")
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows ({failed} failed) -> {out}")
    return 0


def cmd_profile(cfg: dict) -> int:
    schemes = cfg["schemes"] if cfg["schemes"] != DEFAULTS["schemes"] else list(GOLDEN)
    for s in schemes:
        if s not in GOLDEN:
            raise InvalidScheme(f"profiles are defined for golden quantizers only, got {s!r}")
    out = _out(cfg["out"] or "profile.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "N", "n_over_N", "magnitude"])
        for s in schemes:
            for N in cfg["ns"]:
                cb = build(s, N, cfg)
                for n, r in enumerate(cb.radii, start=1):
                    w.writerow([s, N, repr(n / N), repr(float(r))])
    _write_meta(out, cfg, "profile")
    print(f"profile -> {out}")
    return 0


def cmd_rd(cfg: dict) -> int:
    out = _out(cfg["out"] or "rd.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rate_bits", "D", "D_db"])
        for r, d in rd_reference(cfg["sigma2"], cfg["rates"]):
            w.writerow([repr(r), repr(d), repr(10 * math.log10(d / cfg["sigma2"]))])
    _write_meta(out, cfg, "rd")
    print(f"rd -> {out}")
    return 0


COMMANDS = {"gen": cmd_gen, "eval": cmd_eval, "sweep": cmd_sweep, "profile": cmd_profile, "rd": cmd_rd}


# -- argument handling -------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with default settings")
    p.add_argument("--sigma2", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--samples", type=int, default=S, help="Monte Carlo samples")
    p.add_argument("--grid-m", type=int, default=S, help="quadrature points per axis")
    p.add_argument("--grid-extent", type=float, default=S, help="grid half-width in sigmas")
    p.add_argument("--monotone", action="store_true", default=S, help="growing-spiral constraint")
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--max-iter", type=int, default=S)
    p.add_argument("--init", choices=[i.value for i in Init], default=S)
    p.add_argument("--convention", choices=[c.value for c in RadiusConvention], default=S)
    p.add_argument("--train-samples", type=int, default=S, help="LBG training set size")
    p.add_argument("--out", default=S)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="goldenquant", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    g = sub.add_parser("gen", help="build a codebook and write it as JSON")
    g.add_argument("--scheme", required=True, choices=SCHEMES)
    g.add_argument("--n", type=int, required=True)
    _common(g)

    e = sub.add_parser("eval", help="Monte Carlo evaluation of a codebook file")
    e.add_argument("codebook")
    e.add_argument("--cells", default=S, help="write per-cell statistics CSV")
    e.add_argument("--voronoi", default=S, help="write Voronoi cell polylines CSV")
    _common(e)

    s = sub.add_parser("sweep", help="distortion-vs-rate table over schemes and N")
    s.add_argument("--schemes", nargs="+", default=S)
    s.add_argument("--ns", nargs="+", type=int, default=S)
    _common(s)

    p = sub.add_parser("profile", help="centroid magnitude vs normalized index")
    p.add_argument("--schemes", nargs="+", default=S)
    p.add_argument("--ns", nargs="+", type=int, default=S)
    _common(p)

    r = sub.add_parser("rd", help="rate-distortion bound table")
    r.add_argument("--rates", nargs="+", type=float, default=S)
    _common(r)
    return ap


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg["out"] = None
    given = vars(args)
    if "config" in given:
        try:
            extra = json.loads(Path(given["config"]).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {given['config']}: {exc}") from exc
        if not isinstance(extra, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(extra) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(extra)
    cfg.update({k: v for k, v in given.items() if k != "config"})
    if cfg["samples"] < 2:
        raise UsageError("--samples must be >= 2")
    if not cfg["sigma2"] > 0:
        raise UsageError("--sigma2 must be > 0")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (GQError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
