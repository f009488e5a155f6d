"""Inter-star-angle database: build, range-query, serialize.

The database stores one canonical entry (id_a < id_b) per unordered star
pair whose angle is at most theta_max, sorted ascending by angle so that
an epsilon window around a measured angle is two binary searches plus a
slice. The matcher expands entries to both orderings itself.

On disk both containers are little-endian with a versioned header; ids
are 32-bit integers and angles 64-bit floats. A pair file records a
fingerprint (cutoffs, star count, content hash) of the star database it
was built from, and loading verifies it.
"""

import io
import struct
from dataclasses import dataclass

import numpy as np

from .catalog import StarDatabase, StarRecord
from .geometry import DomainError

_STAR_MAGIC = b"BSDB"
_PAIR_MAGIC = b"BPDB"
_VERSION = 1


@dataclass(frozen=True)
class PairEntry:
    """Canonical star pair (id_a < id_b) with its angular distance in radians."""

    id_a: int
    id_b: int
    theta: float


class FingerprintMismatch(ValueError):
    """A pair file does not belong to the star database it was loaded against."""


class PairDatabase:
    """Sorted, immutable angle index over a StarDatabase.

    Attributes:
        thetas: angles sorted ascending (float64).
        id_a, id_b: canonical pair ids aligned with thetas (int32).
        theta_max: largest stored angle cutoff, radians.
        stars: the source StarDatabase (needed to resolve directions).
    """

    def __init__(self, stars: StarDatabase, theta_max: float,
                 thetas: np.ndarray, id_a: np.ndarray, id_b: np.ndarray):
        self.stars = stars
        self.theta_max = float(theta_max)
        self.thetas = thetas
        self.id_a = id_a
        self.id_b = id_b
        self._index_of_id = {int(i): k for k, i in enumerate(stars.ids)}
        # vectorized id -> position lookup for the matcher
        self._id_order = np.argsort(stars.ids)
        self._ids_sorted = stars.ids[self._id_order]
        self._dense = None  # lazy (index_a, index_b) mirror of (id_a, id_b)

    def __len__(self) -> int:
        return len(self.thetas)

    @property
    def m_lim(self) -> float:
        return self.stars.m_lim

    @property
    def theta_min(self) -> float:
        return self.stars.theta_min

    def index_of(self, star_id: int) -> int:
        return self._index_of_id[star_id]

    def indices_of(self, star_ids: np.ndarray) -> np.ndarray:
        """Positions in the star database for an array of catalog ids."""
        pos = np.searchsorted(self._ids_sorted, star_ids)
        return self._id_order[pos]

    def dense_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Entry pair members as star-database positions, aligned with thetas."""
        if self._dense is None:
            self._dense = (self.indices_of(self.id_a), self.indices_of(self.id_b))
        return self._dense

    def record_of(self, star_id: int) -> StarRecord:
        return self.stars.stars[self._index_of_id[star_id]]

    def query_slice(self, theta_hat: float, epsilon: float) -> tuple[int, int]:
        """Index bounds [lo, hi) of entries with |theta - theta_hat| <= epsilon."""
        if epsilon < 0.0:
            raise DomainError("epsilon must be non-negative")
        lo = int(np.searchsorted(self.thetas, theta_hat - epsilon, side="left"))
        hi = int(np.searchsorted(self.thetas, theta_hat + epsilon, side="right"))
        return lo, hi

    def entries(self) -> list[PairEntry]:
        return [
            PairEntry(int(a), int(b), float(t))
            for a, b, t in zip(self.id_a, self.id_b, self.thetas)
        ]


def build_pair_db(db: StarDatabase, theta_max: float) -> PairDatabase:
    """All unordered star pairs with angular distance <= theta_max.

    Output order is deterministic: ascending angle, ties broken by the
    canonical (id_a, id_b).
    """
    if theta_max <= 0.0:
        raise DomainError("theta_max must be positive")
    n = len(db)
    dirs = db.directions
    ids = db.ids.astype(np.int64)

    ia_parts, ib_parts, th_parts = [], [], []
    block = 256
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        ang = np.arccos(np.clip(dirs[lo:hi] @ dirs.T, -1.0, 1.0))
        # upper triangle only: j > global row index
        rows, cols = np.nonzero(ang <= theta_max)
        mask = cols > rows + lo
        rows, cols = rows[mask], cols[mask]
        a = ids[rows + lo]
        b = ids[cols]
        swap = a > b
        a2 = np.where(swap, b, a)
        b2 = np.where(swap, a, b)
        ia_parts.append(a2)
        ib_parts.append(b2)
        th_parts.append(ang[rows, cols])

    if ia_parts:
        ia = np.concatenate(ia_parts)
        ib = np.concatenate(ib_parts)
        th = np.concatenate(th_parts)
    else:
        ia = np.zeros(0, dtype=np.int64)
        ib = np.zeros(0, dtype=np.int64)
        th = np.zeros(0, dtype=np.float64)

    order = np.lexsort((ib, ia, th))
    return PairDatabase(
        stars=db,
        theta_max=theta_max,
        thetas=np.ascontiguousarray(th[order]),
        id_a=np.ascontiguousarray(ia[order].astype(np.int32)),
        id_b=np.ascontiguousarray(ib[order].astype(np.int32)),
    )


def query_pairs(pdb: PairDatabase, theta_hat: float, epsilon: float) -> set[PairEntry]:
    """Entries with |theta - theta_hat| <= epsilon (inclusive bounds)."""
    lo, hi = pdb.query_slice(theta_hat, epsilon)
    return {
        PairEntry(int(a), int(b), float(t))
        for a, b, t in zip(pdb.id_a[lo:hi], pdb.id_b[lo:hi], pdb.thetas[lo:hi])
    }


# ---------------------------------------------------------------------------
# binary containers

def serialize_star_db(db: StarDatabase) -> bytes:
    payload = (
        db.ids.astype("<i4").tobytes()
        + db.directions.astype("<f8").tobytes()
        + db.vmags.astype("<f8").tobytes()
    )
    header = _STAR_MAGIC + struct.pack(
        "<IddI", _VERSION, db.m_lim, db.theta_min, len(db)
    ) + bytes.fromhex(db.content_hash)
    return header + payload


def deserialize_star_db(data: bytes) -> StarDatabase:
    buf = io.BytesIO(data)
    magic = buf.read(4)
    if magic != _STAR_MAGIC:
        raise ValueError("not a star database file")
    version, m_lim, theta_min, n = struct.unpack("<IddI", buf.read(24))
    if version != _VERSION:
        raise ValueError(f"unsupported star database version {version}")
    stored_hash = buf.read(32).hex()
    ids = np.frombuffer(buf.read(4 * n), dtype="<i4")
    dirs = np.frombuffer(buf.read(24 * n), dtype="<f8").reshape(n, 3)
    vmags = np.frombuffer(buf.read(8 * n), dtype="<f8")
    stars = [
        StarRecord(id=int(i), direction=d.copy(), vmag=float(v))
        for i, d, v in zip(ids, dirs, vmags)
    ]
    db = StarDatabase(stars, m_lim=m_lim, theta_min=theta_min)
    if db.content_hash != stored_hash:
        raise ValueError("star database content hash mismatch (corrupt file)")
    return db


def serialize_pair_db(pdb: PairDatabase) -> bytes:
    header = _PAIR_MAGIC + struct.pack(
        "<IdddII",
        _VERSION,
        pdb.m_lim,
        pdb.theta_min,
        pdb.theta_max,
        len(pdb.stars),
        len(pdb),
    ) + bytes.fromhex(pdb.stars.content_hash)
    payload = (
        pdb.id_a.astype("<i4").tobytes()
        + pdb.id_b.astype("<i4").tobytes()
        + pdb.thetas.astype("<f8").tobytes()
    )
    return header + payload


def deserialize_pair_db(data: bytes, stars: StarDatabase) -> PairDatabase:
    """Rebuild a PairDatabase against its source star database.

    Raises FingerprintMismatch when the file was built from a different
    star set or with different cutoffs.
    """
    buf = io.BytesIO(data)
    magic = buf.read(4)
    if magic != _PAIR_MAGIC:
        raise ValueError("not a pair database file")
    version, m_lim, theta_min, theta_max, n_stars, n_entries = struct.unpack(
        "<IdddII", buf.read(36)
    )
    if version != _VERSION:
        raise ValueError(f"unsupported pair database version {version}")
    stored_hash = buf.read(32).hex()
    problems = []
    if n_stars != len(stars):
        problems.append(f"star count {n_stars} != {len(stars)}")
    if m_lim != stars.m_lim:
        problems.append(f"m_lim {m_lim} != {stars.m_lim}")
    if theta_min != stars.theta_min:
        problems.append(f"theta_min {theta_min} != {stars.theta_min}")
    if stored_hash != stars.content_hash:
        problems.append("content hash differs")
    if problems:
        raise FingerprintMismatch(
            "pair database does not match the star database: " + "; ".join(problems)
        )
    id_a = np.frombuffer(buf.read(4 * n_entries), dtype="<i4")
    id_b = np.frombuffer(buf.read(4 * n_entries), dtype="<i4")
    thetas = np.frombuffer(buf.read(8 * n_entries), dtype="<f8")
    return PairDatabase(
        stars=stars,
        theta_max=theta_max,
        thetas=thetas.copy(),
        id_a=id_a.copy(),
        id_b=id_b.copy(),
    )


def save_star_db(db: StarDatabase, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_star_db(db))


def load_star_db(path) -> StarDatabase:
    with open(path, "rb") as f:
        return deserialize_star_db(f.read())


def save_pair_db(pdb: PairDatabase, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_pair_db(pdb))


def load_pair_db(path, stars: StarDatabase) -> PairDatabase:
    with open(path, "rb") as f:
        return deserialize_pair_db(f.read(), stars)


def export_pairs_csv(pdb: PairDatabase, path) -> None:
    """Debug dump: one ``id_a,id_b,theta_rad`` line per entry, sorted order."""
    with open(path, "w") as f:
        f.write("id_a,id_b,theta_rad\n")
        for a, b, t in zip(pdb.id_a, pdb.id_b, pdb.thetas):
            f.write(f"{int(a)},{int(b)},{float(t):.17g}\n")
