"""Deterministic synthetic star catalogs for tests.

The full Yale catalog is not redistributable inside this repo, so tests
draw a fake sky with the same bright-star counts: N(V <= m) follows
10**(0.5*m + c) with c chosen so that about 2.8k stars are brighter
than 5.5 and about 9k brighter than 6.5, positions uniform on the
sphere. Star ids are 1-based row numbers.
"""

import math

import numpy as np


def synthetic_records(n: int = 9000, seed: int = 2024) -> list[tuple[int, float, float, float]]:
    """(id, ra_rad, dec_rad, vmag) tuples for a fake sky with real-sky
    magnitude counts."""
    rng = np.random.default_rng(seed)
    ra = rng.uniform(0.0, 2.0 * math.pi, n)
    dec = np.arcsin(rng.uniform(-1.0, 1.0, n))
    # inverse-CDF draw from N(V<=m) ~ 10**(0.5 m): m = 6.5 + 2 log10(u)
    vmag = 6.5 + 2.0 * np.log10(rng.uniform(0.0, 1.0, n))
    return [(i + 1, float(ra[i]), float(dec[i]), float(vmag[i])) for i in range(n)]


def random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform unit vectors."""
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def small_records(n: int, seed: int, vmag_range=(1.0, 6.0)) -> list[tuple[int, float, float, float]]:
    """A small random catalog for matcher/pairdb unit tests."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        ra = float(rng.uniform(0.0, 2.0 * math.pi))
        dec = float(np.arcsin(rng.uniform(-1.0, 1.0)))
        out.append((i + 1, ra, dec, float(rng.uniform(*vmag_range))))
    return out


def write_csv_catalog(path, records) -> None:
    with open(path, "w") as f:
        for i, ra, dec, v in records:
            f.write(f"{i},{ra * 12.0 / math.pi:.12f}h,{math.degrees(dec):.12f}d,{v:.4f}\n")
