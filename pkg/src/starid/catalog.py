"""Yale Bright Star Catalog parsing and star-database construction.

Two input formats are supported:

* the BSC5 fixed-width ASCII dump (J2000 fields: HR number in bytes 1-4,
  RA h/m/s in 76-83, Dec sign/d/m/s in 84-90, Vmag in 103-107), and
* a CSV fallback ``id,ra_hours,dec_degrees,vmag`` where the unit suffixes
  ``h`` and ``d`` are optional, so small test catalogs do not need the
  full 9110-line file.

Database construction applies the magnitude cutoff first and the
close-pair exclusion second; swapping the two can change the result.
"""

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np

from .geometry import DomainError

# North galactic pole (RA, Dec) and galactic longitude of the celestial
# north pole, J2000 (Hipparcos values), in radians.
ALPHA_G = math.radians(192.85948)
DELTA_G = math.radians(27.12825)
ELL_N = math.radians(122.93192)

TWO_PI = 2.0 * math.pi


class ParseError(ValueError):
    """A catalog line could not be parsed (strict mode only)."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class StarRecord:
    """One catalog star: identifier, unit direction (equatorial frame), Vmag."""

    id: int
    direction: np.ndarray
    vmag: float


@dataclass(frozen=True)
class GalacticCoord:
    """Galactic longitude in [0, 2*pi) and latitude in [-pi/2, pi/2], radians."""

    lon: float
    lat: float


class StarDatabase:
    """Filtered star set plus the parameters that produced it.

    Stars are immutable after construction; the instance may be shared
    freely across threads/processes.
    """

    def __init__(self, stars: list[StarRecord], m_lim: float, theta_min: float):
        self.stars = list(stars)
        self.m_lim = float(m_lim)
        self.theta_min = float(theta_min)
        seen = set()
        for s in self.stars:
            if s.id in seen:
                raise ValueError(f"duplicate star id {s.id}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.stars)

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.stars], dtype=np.int32)

    @cached_property
    def directions(self) -> np.ndarray:
        if not self.stars:
            return np.zeros((0, 3))
        return np.array([s.direction for s in self.stars], dtype=np.float64)

    @cached_property
    def vmags(self) -> np.ndarray:
        return np.array([s.vmag for s in self.stars], dtype=np.float64)

    @cached_property
    def content_hash(self) -> str:
        """SHA-256 over the packed (id, x, y, z, vmag) records."""
        h = hashlib.sha256()
        h.update(self.ids.astype("<i4").tobytes())
        h.update(self.directions.astype("<f8").tobytes())
        h.update(self.vmags.astype("<f8").tobytes())
        return h.hexdigest()


def radec_to_unit(alpha: float, delta: float) -> np.ndarray:
    """Unit vector in the equatorial O-XYZ frame for (RA, Dec) in radians."""
    if not -math.pi / 2 <= delta <= math.pi / 2:
        raise DomainError("declination outside [-pi/2, pi/2]")
    cd = math.cos(delta)
    return np.array([math.cos(alpha) * cd, math.sin(alpha) * cd, math.sin(delta)])


def equatorial_to_galactic(alpha: float, delta: float) -> GalacticCoord:
    """Convert equatorial (RA, Dec) to galactic (lon, lat), radians.

    The longitude quadrant is resolved with the two-argument arctangent.
    At the galactic poles, where longitude is undefined, 0 is returned.
    """
    if not -math.pi / 2 <= delta <= math.pi / 2:
        raise DomainError("declination outside [-pi/2, pi/2]")
    da = alpha - ALPHA_G
    sin_b = (
        math.cos(delta) * math.cos(DELTA_G) * math.cos(da)
        + math.sin(delta) * math.sin(DELTA_G)
    )
    lat = math.asin(max(-1.0, min(1.0, sin_b)))
    y = math.cos(delta) * math.sin(da)  # sin(ell_N - lon) * cos(lat)
    x = math.sin(delta) * math.cos(DELTA_G) - math.cos(delta) * math.sin(DELTA_G) * math.cos(da)
    if x == 0.0 and y == 0.0:
        return GalacticCoord(lon=0.0, lat=lat)
    lon = (ELL_N - math.atan2(y, x)) % TWO_PI
    if lon >= TWO_PI:  # guard against rounding in the modulo
        lon = 0.0
    return GalacticCoord(lon=lon, lat=lat)


def _parse_bsc5_line(line: str) -> tuple[int, float, float, float] | None:
    """One BSC5 fixed-width line -> (id, ra_rad, dec_rad, vmag), or None if the
    J2000 position or Vmag fields are blank (deleted stars, novae)."""
    hr = line[0:4].strip()
    rah = line[75:77].strip()
    ram = line[77:79].strip()
    ras = line[79:83].strip()
    de_sign = line[83:84]
    ded = line[84:86].strip()
    dem = line[86:88].strip()
    des = line[88:90].strip()
    vmag = line[102:107].strip()
    if not (hr and rah and ram and ras and ded and dem and des and vmag):
        return None
    ra_hours = int(rah) + int(ram) / 60.0 + float(ras) / 3600.0
    dec_deg = int(ded) + int(dem) / 60.0 + float(des) / 3600.0
    if de_sign == "-":
        dec_deg = -dec_deg
    return int(hr), ra_hours * math.pi / 12.0, math.radians(dec_deg), float(vmag)


def _parse_csv_line(line: str) -> tuple[int, float, float, float] | None:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != 4:
        raise ValueError(f"expected 4 comma-separated fields, got {len(fields)}")
    ident, ra, dec, vmag = fields
    if not (ident and ra and dec and vmag):
        return None
    if ra.endswith(("h", "H")):
        ra = ra[:-1]
    if dec.endswith(("d", "D")):
        dec = dec[:-1]
    return int(ident), float(ra) * math.pi / 12.0, math.radians(float(dec)), float(vmag)


def detect_catalog_format(first_line: str) -> str:
    """Guess 'csv' or 'bsc5-ascii' from the first non-blank line."""
    return "csv" if "," in first_line else "bsc5-ascii"


def parse_catalog(
    stream: TextIO | Iterable[str],
    format: str = "bsc5-ascii",
    strict: bool = False,
) -> tuple[list[tuple[int, float, float, float]], int]:
    """Parse a star catalog into (id, ra_rad, dec_rad, vmag) tuples.

    Entries whose position or magnitude fields are blank are skipped and
    counted in both modes. A line that fails to parse raises ParseError
    in strict mode and is skipped (and counted) in lenient mode. Blank
    lines and ``#`` comments are ignored entirely.

    Returns:
        (records, skipped) where skipped is the number of dropped lines.
    """
    if format == "bsc5-ascii":
        parse_line = _parse_bsc5_line
    elif format == "csv":
        parse_line = _parse_csv_line
    else:
        raise ValueError(f"unknown catalog format {format!r}")

    records = []
    skipped = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rec = parse_line(line)
        except (ValueError, IndexError) as exc:
            if strict:
                raise ParseError(lineno, str(exc)) from exc
            skipped += 1
            continue
        if rec is None:
            skipped += 1
            continue
        records.append(rec)
    return records, skipped


def filter_by_magnitude(
    records: list[tuple[int, float, float, float]], m_lim: float
) -> list[tuple[int, float, float, float]]:
    """Keep the records with vmag <= m_lim, preserving order."""
    return [r for r in records if r[3] <= m_lim]


def exclude_close_pairs(records: Iterable[StarRecord], theta_min: float, m_lim: float) -> StarDatabase:
    """Drop every star that sits closer than theta_min to any other star.

    Both members of a close pair are removed: a star survives only when
    its angular distance to every other input star is >= theta_min. The
    resulting database records the m_lim and theta_min cutoffs.
    """
    stars = list(records)
    n = len(stars)
    if n <= 1 or theta_min <= 0.0:
        return StarDatabase(stars, m_lim=m_lim, theta_min=theta_min)

    dirs = np.array([s.direction for s in stars], dtype=np.float64)
    # A pair violates iff its angle < theta_min. Compare in angle space
    # (acos of the clamped dot) so boundaries match angular_distance().
    keep = np.ones(n, dtype=bool)
    block = 512
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        dots = np.clip(dirs[lo:hi] @ dirs.T, -1.0, 1.0)
        ang = np.arccos(dots)
        ang[np.arange(lo, hi) - lo, np.arange(lo, hi)] = np.inf  # ignore self
        keep[lo:hi] &= ~(ang < theta_min).any(axis=1)
    survivors = [s for s, k in zip(stars, keep) if k]
    return StarDatabase(survivors, m_lim=m_lim, theta_min=theta_min)


def build_star_database(
    records: list[tuple[int, float, float, float]], m_lim: float, theta_min: float
) -> StarDatabase:
    """Magnitude cutoff, then close-pair exclusion, in that order."""
    bright = filter_by_magnitude(records, m_lim)
    stars = [
        StarRecord(id=i, direction=radec_to_unit(ra, dec), vmag=v)
        for i, ra, dec, v in bright
    ]
    return exclude_close_pairs(stars, theta_min=theta_min, m_lim=m_lim)
