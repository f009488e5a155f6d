"""Monte Carlo star-identification trials over a (FOV, magnitude, dropout) grid.

One trial: draw a uniform attitude, rotate the star database into the
camera frame, keep the stars inside the square FOV that are bright
enough, perturb each kept direction by up to half the matching
tolerance, drop each independently with the dropout probability,
shuffle, and run the arity-raising matcher. Recorded per trial: the
boresight galactic latitude, star counts before/after dropout, whether
the match was correct, and the arity the match needed.

Every trial gets its own counter-based RNG stream keyed on
(seed, config index, trial index), so results are identical no matter
how trials are scheduled across processes.
"""

import json
import math
import multiprocessing
from dataclasses import dataclass
from hashlib import sha256
from typing import NamedTuple

import numpy as np

from .catalog import StarDatabase, build_star_database, equatorial_to_galactic
from .geometry import fov_diagonal, max_angular_resolution
from .matcher import MeasuredStar, is_correct_match, match_stars
from .pairdb import PairDatabase, build_pair_db

STUDY_FOVS_DEG = (5.0, 10.0, 20.0, 40.0, 80.0)
STUDY_MLIMS = (3.5, 4.5, 5.5)
STUDY_BETAS = (0.0, 0.2, 0.4, 0.6, 0.8)
STUDY_TRIALS = 20000
REDUCED_FOVS_DEG = (5.0, 20.0, 80.0)
REDUCED_MLIMS = (3.5, 5.5)
REDUCED_BETAS = (0.0, 0.4, 0.8)
DEFAULT_TRIALS = 2000

MILKY_WAY_LAT = math.radians(30.0)
NOISE_MODEL = "uniform-angle-uniform-tangent-axis"
N_MIN_RANGE = range(1, 11)


class Tolerances(NamedTuple):
    theta_res: float
    theta_min: float
    theta_max: float
    epsilon: float


@dataclass(frozen=True)
class SimConfig:
    """One grid cell of the trade study."""

    theta_fov: float  # radians
    m_lim_hat: float  # observation magnitude cutoff
    beta: float  # per-star dropout probability
    trials: int
    seed: int
    pixels: int = 1024

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if not 0.0 < self.theta_fov < math.pi:
            raise ValueError("theta_fov must be in (0, pi)")

    @property
    def fov_deg(self) -> float:
        return round(math.degrees(self.theta_fov), 6)


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of a single simulated observation."""

    b_c_rad: float  # boresight galactic latitude
    n_selected: int  # stars in FOV and bright enough, before dropout
    n_observed: int  # stars surviving dropout (what the matcher saw)
    correct: bool
    p_match: int  # arity used for a correct match, 0 otherwise
    near_milky_way: bool

    def __post_init__(self):
        if self.correct and self.p_match < 2:
            raise ValueError("a correct match needs at least two stars")
        if self.near_milky_way != (abs(self.b_c_rad) <= MILKY_WAY_LAT):
            raise ValueError("near_milky_way inconsistent with b_c")


@dataclass(frozen=True)
class CellStatistics:
    """Aggregates for one (config, milky-way-flag) cell."""

    n_trials: int
    observe_at_least: dict  # N_min in 1..10 -> P(N >= N_min)
    p_correct: float
    p_match_pmf: dict  # arity -> fraction of correct trials


@dataclass(frozen=True)
class SweepStatistics:
    """Per-flag cell aggregates; flags with no trials are absent."""

    cells: dict  # near_milky_way flag -> CellStatistics


def derive_tolerances(theta_fov: float, pixels: int) -> Tolerances:
    """Resolution-driven cutoffs for a FOV: the close-pair cutoff and the
    matching tolerance are both 2*sqrt(2) times the angular resolution,
    the pair cutoff is the FOV diagonal."""
    theta_res = max_angular_resolution(theta_fov, pixels)
    bound = 2.0 * math.sqrt(2.0) * theta_res
    return Tolerances(
        theta_res=theta_res,
        theta_min=bound,
        theta_max=fov_diagonal(theta_fov),
        epsilon=bound,
    )


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation matrix from a uniform unit quaternion."""
    while True:
        q = rng.normal(size=4)
        norm = np.linalg.norm(q)
        if norm > 1e-12:
            break
    w, x, y, z = q / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def perturb_directions(dirs: np.ndarray, max_angle: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Tilt each unit row vector by an independent uniform angle in
    [0, max_angle] about a uniformly random axis perpendicular to it."""
    n = dirs.shape[0]
    if n == 0 or max_angle == 0.0:
        return dirs.copy()
    angles = rng.uniform(0.0, max_angle, size=n)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n)

    # tangent-plane basis: cross against the least-aligned coordinate axis
    helper = np.zeros_like(dirs)
    helper[np.arange(n), np.argmin(np.abs(dirs), axis=1)] = 1.0
    e1 = np.cross(helper, dirs)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(dirs, e1)
    axis = np.cos(phases)[:, None] * e1 + np.sin(phases)[:, None] * e2

    out = np.cos(angles)[:, None] * dirs + np.sin(angles)[:, None] * np.cross(axis, dirs)
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def perturb_direction(s: np.ndarray, max_angle: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Single-vector form of perturb_directions."""
    if max_angle < 0.0:
        raise ValueError("max_angle must be non-negative")
    return perturb_directions(np.asarray(s, dtype=np.float64)[None, :], max_angle, rng)[0]


def boresight_galactic_latitude(rotation: np.ndarray) -> float:
    """Galactic latitude of the camera z axis expressed in the inertial frame."""
    b = rotation[2]  # R^T e3
    alpha = math.atan2(b[1], b[0]) % (2.0 * math.pi)
    delta = math.asin(max(-1.0, min(1.0, float(b[2]))))
    return equatorial_to_galactic(alpha, delta).lat


def simulate_trial(cfg: SimConfig, sdb: StarDatabase, pdb: PairDatabase,
                   rng: np.random.Generator) -> TrialRecord:
    """Run one observation/identification trial."""
    tol = derive_tolerances(cfg.theta_fov, cfg.pixels)
    rotation = random_rotation(rng)
    cam = sdb.directions @ rotation.T

    # FOV and magnitude selection (|x|/z < tan(fov/2), z > 0, V strictly
    # below the observation cutoff)
    t = math.tan(cfg.theta_fov / 2.0)
    z = cam[:, 2]
    sel = (
        (z > 0.0)
        & (np.abs(cam[:, 0]) < t * z)
        & (np.abs(cam[:, 1]) < t * z)
        & (sdb.vmags < cfg.m_lim_hat)
    )
    idx = np.nonzero(sel)[0]
    n_selected = int(idx.size)

    perturbed = perturb_directions(cam[idx], tol.epsilon / 2.0, rng)
    keep = rng.random(n_selected) >= cfg.beta
    survivors = perturbed[keep]
    true_ids = sdb.ids[idx][keep]
    n_observed = int(survivors.shape[0])

    order = rng.permutation(n_observed)
    measured = [
        MeasuredStar(direction=survivors[k], true_id=int(true_ids[k])) for k in order
    ]

    outcome = match_stars(measured, pdb, tol.epsilon)
    correct = is_correct_match(outcome, measured)

    b_c = boresight_galactic_latitude(rotation)
    return TrialRecord(
        b_c_rad=b_c,
        n_selected=n_selected,
        n_observed=n_observed,
        correct=correct,
        p_match=outcome.p_used if correct else 0,
        near_milky_way=abs(b_c) <= MILKY_WAY_LAT,
    )


def trial_rng(seed: int, config_index: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream; independent of execution order."""
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, (config_index << 32) | trial_index],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def make_grid(fovs_deg, mlims, betas, trials: int, seed: int,
              pixels: int = 1024) -> list[SimConfig]:
    """Cartesian product grid in (fov, m_lim, beta) order."""
    return [
        SimConfig(
            theta_fov=math.radians(fov),
            m_lim_hat=m,
            beta=b,
            trials=trials,
            seed=seed,
            pixels=pixels,
        )
        for fov in fovs_deg
        for m in mlims
        for b in betas
    ]


def build_databases(catalog_records, cfg: SimConfig) -> tuple[StarDatabase, PairDatabase]:
    """Star and pair databases matching one config's derived tolerances."""
    tol = derive_tolerances(cfg.theta_fov, cfg.pixels)
    sdb = build_star_database(catalog_records, m_lim=cfg.m_lim_hat, theta_min=tol.theta_min)
    pdb = build_pair_db(sdb, tol.theta_max)
    return sdb, pdb


# -- parallel trial execution ------------------------------------------------

_WORKER_ARGS = None


def _init_worker(cfg, sdb, pdb, config_index):
    global _WORKER_ARGS
    _WORKER_ARGS = (cfg, sdb, pdb, config_index)


def _run_chunk(bounds):
    lo, hi = bounds
    cfg, sdb, pdb, config_index = _WORKER_ARGS
    return [
        simulate_trial(cfg, sdb, pdb, trial_rng(cfg.seed, config_index, t))
        for t in range(lo, hi)
    ]


def run_config(cfg: SimConfig, sdb: StarDatabase, pdb: PairDatabase,
               config_index: int, workers: int = 1) -> list[TrialRecord]:
    """All trials for one config, in trial order regardless of scheduling."""
    if workers <= 1:
        return _run_chunk_serial(cfg, sdb, pdb, config_index)
    chunk = max(1, math.ceil(cfg.trials / (workers * 4)))
    bounds = [(lo, min(lo + chunk, cfg.trials)) for lo in range(0, cfg.trials, chunk)]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(
        processes=workers,
        initializer=_init_worker,
        initargs=(cfg, sdb, pdb, config_index),
    ) as pool:
        chunks = pool.map(_run_chunk, bounds)
    return [rec for part in chunks for rec in part]


def _run_chunk_serial(cfg, sdb, pdb, config_index):
    return [
        simulate_trial(cfg, sdb, pdb, trial_rng(cfg.seed, config_index, t))
        for t in range(cfg.trials)
    ]


def run_sweep(grid, catalog_records, workers: int = 1,
              db_cache: dict | None = None) -> list[list[TrialRecord]]:
    """Run every config in the grid against databases built from the catalog.

    Databases are cached per (m_lim, fov, pixels) since dropout does not
    affect them. Results are reproducible for a given (seed, grid,
    catalog) regardless of worker count.
    """
    if db_cache is None:
        db_cache = {}
    results = []
    for config_index, cfg in enumerate(grid):
        key = (cfg.m_lim_hat, cfg.theta_fov, cfg.pixels)
        if key not in db_cache:
            db_cache[key] = build_databases(catalog_records, cfg)
        sdb, pdb = db_cache[key]
        results.append(run_config(cfg, sdb, pdb, config_index, workers=workers))
    return results


# -- aggregation and report documents ----------------------------------------

def aggregate(records) -> SweepStatistics:
    """Split one config's records on the milky-way flag and aggregate.

    The observation table is the complement CDF of the post-dropout star
    count; the arity PMF is taken over correct trials only.
    """
    cells = {}
    for flag in (True, False):
        sub = [r for r in records if r.near_milky_way == flag]
        if not sub:
            continue
        n = len(sub)
        observe = {
            n_min: sum(1 for r in sub if r.n_observed >= n_min) / n
            for n_min in N_MIN_RANGE
        }
        n_correct = sum(1 for r in sub if r.correct)
        pmf = {}
        if n_correct:
            for r in sub:
                if r.correct:
                    pmf[r.p_match] = pmf.get(r.p_match, 0) + 1
            pmf = {k: v / n_correct for k, v in sorted(pmf.items())}
        cells[flag] = CellStatistics(
            n_trials=n,
            observe_at_least=observe,
            p_correct=n_correct / n,
            p_match_pmf=pmf,
        )
    return SweepStatistics(cells=cells)


def config_label(cfg: SimConfig) -> str:
    return f"fov{cfg.fov_deg:g}_mlim{cfg.m_lim_hat:g}_beta{cfg.beta:g}"


def catalog_records_hash(catalog_records) -> str:
    h = sha256()
    for i, ra, dec, v in catalog_records:
        h.update(f"{i},{ra:.17g},{dec:.17g},{v:.17g}\n".encode())
    return h.hexdigest()


def write_trials_csv(stream, grid, per_config_records) -> None:
    stream.write("config_id,trial,b_c_deg,near_milky_way,n_observed,correct,p_match\n")
    for cfg, records in zip(grid, per_config_records):
        label = config_label(cfg)
        for t, rec in enumerate(records):
            stream.write(
                f"{label},{t},{math.degrees(rec.b_c_rad):.6f},"
                f"{int(rec.near_milky_way)},{rec.n_observed},"
                f"{int(rec.correct)},{rec.p_match}\n"
            )


def build_statistics_doc(grid, per_config_records, catalog_hash: str) -> dict:
    """Statistics JSON document mirroring the observation, match-probability
    and arity-PMF data series, plus reproducibility metadata."""
    tolerances = {}
    for cfg in grid:
        key = f"{cfg.fov_deg:g}"
        if key not in tolerances:
            tol = derive_tolerances(cfg.theta_fov, cfg.pixels)
            tolerances[key] = {
                "theta_res_rad": tol.theta_res,
                "theta_min_rad": tol.theta_min,
                "theta_max_rad": tol.theta_max,
                "epsilon_rad": tol.epsilon,
            }
    doc = {
        "metadata": {
            "seed": grid[0].seed if grid else None,
            "trials_per_config": grid[0].trials if grid else None,
            "pixels": grid[0].pixels if grid else None,
            "noise_model": NOISE_MODEL,
            "catalog_hash": catalog_hash,
            "tolerances": tolerances,
        },
        "cells": [],
    }
    for cfg, records in zip(grid, per_config_records):
        stats = aggregate(records)
        for flag in (True, False):
            if flag not in stats.cells:
                continue
            cell = stats.cells[flag]
            doc["cells"].append(
                {
                    "fov_deg": cfg.fov_deg,
                    "m_lim": cfg.m_lim_hat,
                    "beta": cfg.beta,
                    "milky_way": flag,
                    "n_trials": cell.n_trials,
                    "observe_at_least": {str(k): v for k, v in cell.observe_at_least.items()},
                    "p_correct": cell.p_correct,
                    "p_match_pmf": {str(k): v for k, v in cell.p_match_pmf.items()},
                }
            )
    return doc


def write_statistics_json(stream, doc) -> None:
    json.dump(doc, stream, indent=2)
    stream.write("\n")
