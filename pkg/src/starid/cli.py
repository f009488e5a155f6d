"""Command-line interface.

Subcommands: ``resolution`` (angular-resolution table), ``build-db``
(star + pair database files), ``simulate`` (Monte Carlo sweep with
trial CSV, statistics JSON and report figures) and ``match`` (identify
a JSON list of measured unit vectors against prebuilt databases).

Angles are degrees on the command line and radians everywhere inside.
Exit codes: 0 success, 1 domain error, 2 I/O error.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import figures, montecarlo
from .catalog import detect_catalog_format, parse_catalog
from .geometry import resolution_table
from .matcher import MeasuredStar, match_stars
from .montecarlo import (
    DEFAULT_TRIALS,
    STUDY_BETAS,
    STUDY_FOVS_DEG,
    STUDY_MLIMS,
    STUDY_TRIALS,
    build_databases,
    catalog_records_hash,
    derive_tolerances,
    make_grid,
)
from .pairdb import export_pairs_csv, load_pair_db, load_star_db, save_pair_db, save_star_db

CATALOG_ENV = "STARID_CATALOG"

DEFAULT_RES_FOVS = (5.0, 10.0, 20.0, 40.0, 80.0)
DEFAULT_RES_PIXELS = (512, 1024, 2048, 4096)


def _catalog_path(args) -> Path:
    path = args.catalog or os.environ.get(CATALOG_ENV)
    if not path:
        raise ValueError(
            f"no catalog given: pass --catalog or set ${CATALOG_ENV}"
        )
    return Path(path)


def _load_records(args):
    path = _catalog_path(args)
    with open(path) as f:
        first = f.readline()
        f.seek(0)
        fmt = args.catalog_format or detect_catalog_format(first)
        records, skipped = parse_catalog(f, format=fmt, strict=args.strict)
    if skipped:
        print(f"skipped {skipped} unparseable catalog entries", file=sys.stderr)
    return records


def _write_resolution_csv(stream, rows) -> None:
    stream.write("fov_deg,pixels,theta_res_rad,theta_res_deg,nautical_miles\n")
    for r in rows:
        stream.write(
            f"{r['fov_deg']:g},{r['pixels']},{r['theta_res_rad']:.17g},"
            f"{r['theta_res_deg']:.17g},{r['nautical_miles']:.17g}\n"
        )


def cmd_resolution(args) -> int:
    if not args.fov_deg or not args.pixels:
        raise ValueError("at least one FOV and one pixel count are required")
    for fov in args.fov_deg:
        if not 0.0 < fov < 180.0:
            raise ValueError(f"FOV {fov} deg outside (0, 180)")
    rows = resolution_table(args.fov_deg, args.pixels)
    if args.out:
        out = Path(args.out)
        with open(out, "w") as f:
            _write_resolution_csv(f, rows)
        if not args.no_figures:
            figures.render_resolution_figure(rows, out.with_suffix(".png"))
        print(f"wrote {out}")
    else:
        _write_resolution_csv(sys.stdout, rows)
    return 0


def cmd_build_db(args) -> int:
    if not 0.0 < args.fov_deg < 180.0:
        raise ValueError(f"FOV {args.fov_deg} deg outside (0, 180)")
    records = _load_records(args)
    cfg = montecarlo.SimConfig(
        theta_fov=math.radians(args.fov_deg),
        m_lim_hat=args.mlim,
        beta=0.0,
        trials=1,
        seed=0,
        pixels=args.pixels,
    )
    sdb, pdb = build_databases(records, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_star_db(sdb, out / "star_db.bin")
    save_pair_db(pdb, out / "pair_db.bin")
    if args.export_csv:
        export_pairs_csv(pdb, out / "pairs.csv")
    print(f"stars: {len(sdb)}")
    print(f"pairs: {len(pdb)}")
    print(f"wrote {out / 'star_db.bin'} and {out / 'pair_db.bin'}")
    return 0


def _simulate_grid(args):
    if args.paper_grid:
        fovs = list(STUDY_FOVS_DEG)
        mlims = list(STUDY_MLIMS)
        betas = list(STUDY_BETAS)
        trials = args.trials if args.trials is not None else STUDY_TRIALS
    else:
        fovs = args.fov_deg or [20.0]
        mlims = args.mlim or [5.5]
        betas = args.beta or [0.0]
        trials = args.trials if args.trials is not None else DEFAULT_TRIALS
    for fov in fovs:
        if not 0.0 < fov < 180.0:
            raise ValueError(f"FOV {fov} deg outside (0, 180)")
    for b in betas:
        if not 0.0 <= b <= 1.0:
            raise ValueError(f"beta {b} outside [0, 1]")
    return make_grid(fovs, mlims, betas, trials=trials, seed=args.seed,
                     pixels=args.pixels)


def _preloaded_databases(args, grid):
    """Optional prebuilt database reuse; only for a single-cell (fov, mlim)
    grid and only when the file cutoffs match the derived ones exactly."""
    if not args.star_db and not args.pair_db:
        return None
    if not (args.star_db and args.pair_db):
        raise ValueError("--star-db and --pair-db must be given together")
    combos = {(cfg.theta_fov, cfg.m_lim_hat, cfg.pixels) for cfg in grid}
    if len(combos) != 1:
        raise ValueError(
            "prebuilt databases can only serve a single (fov, mlim) cell; "
            "drop --star-db/--pair-db for multi-cell sweeps"
        )
    cfg = grid[0]
    tol = derive_tolerances(cfg.theta_fov, cfg.pixels)
    sdb = load_star_db(args.star_db)
    pdb = load_pair_db(args.pair_db, sdb)
    problems = []
    if sdb.m_lim != cfg.m_lim_hat:
        problems.append(f"database m_lim {sdb.m_lim} != requested {cfg.m_lim_hat}")
    if sdb.theta_min != tol.theta_min:
        problems.append(
            f"database theta_min {sdb.theta_min} != derived {tol.theta_min}"
        )
    if pdb.theta_max != tol.theta_max:
        problems.append(
            f"database theta_max {pdb.theta_max} != derived {tol.theta_max}"
        )
    if problems:
        raise ValueError(
            "refusing to simulate with mismatched databases: " + "; ".join(problems)
        )
    return {(cfg.m_lim_hat, cfg.theta_fov, cfg.pixels): (sdb, pdb)}


def cmd_simulate(args) -> int:
    grid = _simulate_grid(args)
    db_cache = _preloaded_databases(args, grid)
    if db_cache is not None:
        catalog_hash = grid and db_cache[next(iter(db_cache))][0].content_hash
        records = None
    else:
        records = _load_records(args)
        catalog_hash = catalog_records_hash(records)
        db_cache = {}

    per_config = montecarlo.run_sweep(
        grid, records, workers=args.workers, db_cache=db_cache
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trials.csv", "w") as f:
        montecarlo.write_trials_csv(f, grid, per_config)
    doc = montecarlo.build_statistics_doc(grid, per_config, catalog_hash)
    with open(out / "statistics.json", "w") as f:
        montecarlo.write_statistics_json(f, doc)
    if not args.no_figures:
        figures.render_observation_figure(doc, out / "observed_stars.png")
        figures.render_match_probability_figure(doc, out / "match_probability.png")
        figures.render_pmatch_figure(doc, out / "pmatch_pmf.png")
    print(f"ran {len(grid)} configs x {grid[0].trials if grid else 0} trials")
    print(f"wrote {out / 'trials.csv'} and {out / 'statistics.json'}")
    return 0


def _load_vectors(path):
    if path == "-":
        data = json.load(sys.stdin)
    else:
        with open(path) as f:
            data = json.load(f)
    vectors = []
    for k, item in enumerate(data):
        v = np.asarray(item, dtype=np.float64)
        if v.shape != (3,):
            raise ValueError(f"vector {k} is not a 3-vector")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"vector {k} is not unit length (|v| = {norm:.9f})")
        vectors.append(v / norm)
    return vectors


def cmd_match(args) -> int:
    sdb = load_star_db(args.star_db)
    pdb = load_pair_db(args.pair_db, sdb)
    vectors = _load_vectors(args.vectors)
    epsilon = (
        math.radians(args.epsilon_deg) if args.epsilon_deg is not None
        else sdb.theta_min
    )
    if epsilon < 0.0:
        raise ValueError("epsilon must be non-negative")
    measured = [MeasuredStar(direction=v) for v in vectors]
    outcome = match_stars(measured, pdb, epsilon)
    candidates = sorted(outcome.candidates.tuples)
    if args.format == "json":
        json.dump(
            {
                "n_measured": len(vectors),
                "p_used": outcome.p_used,
                "unique": outcome.unique,
                "n_candidates": len(candidates),
                "candidates": [list(t) for t in candidates],
            },
            sys.stdout,
            indent=2,
        )
        sys.stdout.write("\n")
    else:
        print(f"measured={len(vectors)} p_used={outcome.p_used} "
              f"unique={'yes' if outcome.unique else 'no'} "
              f"candidates={len(candidates)}")
        for t in candidates:
            print("candidate," + ",".join(str(i) for i in t))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starid",
        description="Star identification and field-of-view trade study tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolution", help="angular-resolution table (CSV + figure)")
    p.add_argument("--fov-deg", type=float, nargs="+", default=list(DEFAULT_RES_FOVS))
    p.add_argument("--pixels", type=int, nargs="+", default=list(DEFAULT_RES_PIXELS))
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_resolution)

    p = sub.add_parser("build-db", help="build star and pair database files")
    p.add_argument("--catalog", help=f"catalog path (default ${CATALOG_ENV})")
    p.add_argument("--catalog-format", choices=["bsc5-ascii", "csv"])
    p.add_argument("--fov-deg", type=float, required=True)
    p.add_argument("--mlim", type=float, required=True)
    p.add_argument("--pixels", type=int, default=1024)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--export-csv", action="store_true",
                   help="also write a pairs.csv debug dump")
    p.add_argument("--strict", action="store_true",
                   help="fail on malformed catalog lines")
    p.set_defaults(func=cmd_build_db)

    p = sub.add_parser("simulate", help="Monte Carlo identification sweep")
    p.add_argument("--catalog", help=f"catalog path (default ${CATALOG_ENV})")
    p.add_argument("--catalog-format", choices=["bsc5-ascii", "csv"])
    p.add_argument("--fov-deg", type=float, nargs="+")
    p.add_argument("--mlim", type=float, nargs="+")
    p.add_argument("--beta", type=float, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pixels", type=int, default=1024)
    p.add_argument("--paper-grid", action="store_true",
                   help="run the full 75-cell study grid (20000 trials/cell)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--star-db", help="reuse a prebuilt star database")
    p.add_argument("--pair-db", help="reuse a prebuilt pair database")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("match", help="identify measured unit vectors")
    p.add_argument("--vectors", required=True,
                   help="JSON list of unit 3-vectors ('-' for stdin)")
    p.add_argument("--star-db", required=True)
    p.add_argument("--pair-db", required=True)
    p.add_argument("--epsilon-deg", type=float,
                   help="matching tolerance override (default: database theta_min)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_match)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
