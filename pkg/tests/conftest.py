import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthsky import small_records, synthetic_records  # noqa: E402

from starid import montecarlo as mc  # noqa: E402
from starid.catalog import build_star_database  # noqa: E402
from starid.pairdb import build_pair_db  # noqa: E402


@pytest.fixture(scope="session")
def sky_records():
    """Full-size fake sky with real-sky magnitude counts."""
    return synthetic_records()


@pytest.fixture(scope="session")
def small_db():
    """30-star database with a wide pair cutoff, for matcher unit tests."""
    records = small_records(30, seed=11)
    sdb = build_star_database(records, m_lim=7.0, theta_min=1e-4)
    pdb = build_pair_db(sdb, theta_max=1.8)
    return sdb, pdb


@pytest.fixture(scope="session")
def fov20_dbs(sky_records):
    """Databases for the 20-degree FOV at m_lim 5.5 (the study's center cell)."""
    cfg = mc.SimConfig(
        theta_fov=math.radians(20.0), m_lim_hat=5.5, beta=0.0, trials=1, seed=0
    )
    return mc.build_databases(sky_records, cfg)
