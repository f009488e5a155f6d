"""Star identification over the Yale Bright Star Catalog and a Monte Carlo
field-of-view trade study for shipboard celestial navigation."""

from .catalog import (
    GalacticCoord,
    StarDatabase,
    StarRecord,
    build_star_database,
    equatorial_to_galactic,
    exclude_close_pairs,
    filter_by_magnitude,
    parse_catalog,
    radec_to_unit,
)
from .geometry import (
    CameraIntrinsics,
    angular_distance,
    fov_diagonal,
    in_fov,
    max_angular_resolution,
    pixel_to_unit,
    project_to_pixel,
    resolution_to_nautical_miles,
)
from .matcher import (
    CandidateSet,
    MatchOutcome,
    MeasuredStar,
    is_correct_match,
    match_2_stars,
    match_3_stars,
    match_p_stars,
    match_stars,
)
from .montecarlo import (
    SimConfig,
    TrialRecord,
    aggregate,
    derive_tolerances,
    perturb_direction,
    random_rotation,
    run_sweep,
    simulate_trial,
)
from .pairdb import PairDatabase, PairEntry, build_pair_db, query_pairs

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "CandidateSet",
    "GalacticCoord",
    "MatchOutcome",
    "MeasuredStar",
    "PairDatabase",
    "PairEntry",
    "SimConfig",
    "StarDatabase",
    "StarRecord",
    "TrialRecord",
    "aggregate",
    "angular_distance",
    "build_pair_db",
    "build_star_database",
    "derive_tolerances",
    "equatorial_to_galactic",
    "exclude_close_pairs",
    "filter_by_magnitude",
    "fov_diagonal",
    "in_fov",
    "is_correct_match",
    "match_2_stars",
    "match_3_stars",
    "match_p_stars",
    "match_stars",
    "max_angular_resolution",
    "parse_catalog",
    "perturb_direction",
    "pixel_to_unit",
    "project_to_pixel",
    "query_pairs",
    "radec_to_unit",
    "random_rotation",
    "resolution_to_nautical_miles",
    "run_sweep",
    "simulate_trial",
]
