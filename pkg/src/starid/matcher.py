"""Star identification by inter-star-angle subgraph matching.

Matching proceeds by arity: candidate pairs from an epsilon window on
the angle index, triangles by intersecting the three pairwise windows
and discarding mirror images (opposite triple-product sign), and higher
arities by extending each (p-1)-tuple with catalog stars consistent
with all p-1 new pair angles. The driver raises the arity until the
candidate set is a singleton or the measured stars run out.

Candidate tuples hold catalog ids; slot i of a tuple corresponds to
measured star i. Pair candidates contain both orderings of every
matching catalog pair, which the triangle stage consumes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DomainError
from .pairdb import PairDatabase


@dataclass(frozen=True)
class MeasuredStar:
    """A measured direction in the camera frame, with the ground-truth
    catalog id when known (simulation only)."""

    direction: np.ndarray
    true_id: int | None = None


@dataclass(frozen=True)
class CandidateSet:
    """Ordered k-tuples of catalog ids; slot i matches measured star i."""

    k: int
    tuples: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for t in self.tuples:
            if len(t) != self.k:
                raise ValueError(f"tuple {t} does not have arity {self.k}")
            if len(set(t)) != len(t):
                raise ValueError(f"tuple {t} repeats a star id")

    def __len__(self) -> int:
        return len(self.tuples)


@dataclass(frozen=True)
class MatchOutcome:
    """Result of the arity-raising driver."""

    candidates: CandidateSet
    p_used: int
    unique: bool

    def __post_init__(self):
        if self.unique != (len(self.candidates) == 1):
            raise ValueError("unique flag inconsistent with candidate count")


def _measured_angle(v1, v2) -> float:
    return math.acos(max(-1.0, min(1.0, float(np.dot(v1, v2)))))


def _window(pdb: PairDatabase, v1, v2, epsilon: float):
    """Dense-index arrays (a, b) of catalog pairs within epsilon of the
    measured angle between v1 and v2."""
    lo, hi = pdb.query_slice(_measured_angle(v1, v2), epsilon)
    da, db = pdb.dense_pairs()
    return da[lo:hi], db[lo:hi]


class _Adjacency:
    """Symmetric partner lookup over dense indices for one angle window.

    Grouped flat arrays: keys holds each star index that appears in the
    window, and partners[start[i]:end[i]] are its (sorted) partners.
    """

    __slots__ = ("keys", "starts", "ends", "partners", "_pos")

    def __init__(self, a: np.ndarray, b: np.ndarray):
        first = np.concatenate([a, b])
        second = np.concatenate([b, a])
        order = np.lexsort((second, first))  # groups by first, sorted within
        fs = first[order]
        self.partners = second[order]
        self.keys, self.starts = np.unique(fs, return_index=True)
        self.ends = np.append(self.starts[1:], len(fs))
        self._pos = None

    def get(self, star: int) -> np.ndarray | None:
        if self._pos is None:
            self._pos = {int(k): i for i, k in enumerate(self.keys)}
        i = self._pos.get(star)
        if i is None:
            return None
        return self.partners[self.starts[i]:self.ends[i]]


def _cross_join(adj_a: _Adjacency, adj_b: _Adjacency):
    """All (key, pa, pb) with pa a partner of key in adj_a and pb in adj_b.

    Returns (keys_rep, pa, pb) flat arrays covering every combination for
    every key the two windows share.
    """
    common, ia, ib = np.intersect1d(
        adj_a.keys, adj_b.keys, assume_unique=True, return_indices=True
    )
    if common.size == 0:
        return None
    ca = adj_a.ends[ia] - adj_a.starts[ia]
    cb = adj_b.ends[ib] - adj_b.starts[ib]
    sizes = ca * cb
    total = int(sizes.sum())
    if total == 0:
        return None
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pos = np.arange(total) - np.repeat(offsets, sizes)  # 0..size-1 in group
    cb_rep = np.repeat(cb, sizes)
    idx_a = pos // cb_rep
    idx_b = pos % cb_rep
    pa = adj_a.partners[np.repeat(adj_a.starts[ia], sizes) + idx_a]
    pb = adj_b.partners[np.repeat(adj_b.starts[ib], sizes) + idx_b]
    return np.repeat(common, sizes), pa, pb


def _match2_idx(pdb, v1, v2, epsilon) -> list[tuple[int, int]]:
    a, b = _window(pdb, v1, v2, epsilon)
    out = [(int(x), int(y)) for x, y in zip(a, b)]
    out += [(y, x) for x, y in out]
    return out


def _match3_idx(pdb, v1, v2, v3, epsilon) -> list[tuple[int, int, int]]:
    a12, b12 = _window(pdb, v1, v2, epsilon)
    if a12.size == 0:
        return []
    a23, b23 = _window(pdb, v2, v3, epsilon)
    if a23.size == 0:
        return []
    a13, b13 = _window(pdb, v1, v3, epsilon)
    if a13.size == 0:
        return []

    # candidate (d1, d2, d3): d2 a partner of d1 in the 1-2 window, d3 a
    # partner of d1 in the 1-3 window, and (d2, d3) present in the 2-3 window
    joined = _cross_join(_Adjacency(a12, b12), _Adjacency(a13, b13))
    if joined is None:
        return []
    c1, c2, c3 = joined
    n = len(pdb.stars)
    enc23 = np.sort(
        np.minimum(a23, b23).astype(np.int64) * n + np.maximum(a23, b23)
    )
    enc = np.minimum(c2, c3).astype(np.int64) * n + np.maximum(c2, c3)
    pos = np.searchsorted(enc23, enc)
    ok = (pos < enc23.size) & (enc23[np.minimum(pos, enc23.size - 1)] == enc)
    if not ok.any():
        return []
    c1, c2, c3 = c1[ok], c2[ok], c3[ok]

    # Mirror-image exclusion: keep tuples whose triple-product sign equals
    # the measured one (zero matches only zero).
    dirs = pdb.stars.directions
    measured_sign = np.sign(float(np.dot(v1, np.cross(v2, v3))))
    trip = np.einsum("ij,ij->i", dirs[c1], np.cross(dirs[c2], dirs[c3]))
    keep = np.sign(trip) == measured_sign
    return [(int(x), int(y), int(z)) for x, y, z in zip(c1[keep], c2[keep], c3[keep])]


def _extend_idx(pdb, prev: list[tuple], vectors, epsilon) -> list[tuple]:
    """Extend (p-1)-tuples with every catalog star matching all p-1 pair
    angles against the new measured star vectors[-1]."""
    if not prev:
        return []
    vp = vectors[-1]
    adjs = [
        _Adjacency(*_window(pdb, vectors[i], vp, epsilon))
        for i in range(len(vectors) - 1)
    ]
    out = []
    for tup in prev:
        cands = adjs[0].get(tup[0])
        if cands is None:
            continue
        for i in range(1, len(tup)):
            nxt = adjs[i].get(tup[i])
            if nxt is None:
                cands = None
                break
            cands = np.intersect1d(cands, nxt, assume_unique=True)
            if cands.size == 0:
                break
        if cands is None or cands.size == 0:
            continue
        out.extend(tup + (int(dp),) for dp in cands)
    return out


def _match_arity_idx(pdb, vectors, epsilon, k) -> list[tuple]:
    if k == 2:
        return _match2_idx(pdb, vectors[0], vectors[1], epsilon)
    cand = _match3_idx(pdb, vectors[0], vectors[1], vectors[2], epsilon)
    for arity in range(4, k + 1):
        cand = _extend_idx(pdb, cand, vectors[:arity], epsilon)
    return cand


def _to_candidate_set(pdb, idx_tuples, k) -> CandidateSet:
    ids = pdb.stars.ids
    return CandidateSet(
        k=k, tuples=frozenset(tuple(int(ids[i]) for i in t) for t in idx_tuples)
    )


def match_2_stars(s1: MeasuredStar, s2: MeasuredStar,
                  pdb: PairDatabase, epsilon: float) -> CandidateSet:
    """Catalog pairs whose angle is within epsilon of the measured one,
    in both orderings."""
    if epsilon < 0.0:
        raise DomainError("epsilon must be non-negative")
    return _to_candidate_set(
        pdb, _match2_idx(pdb, s1.direction, s2.direction, epsilon), k=2
    )


def match_3_stars(s1: MeasuredStar, s2: MeasuredStar, s3: MeasuredStar,
                  pdb: PairDatabase, epsilon: float) -> CandidateSet:
    """Catalog triangles consistent with all three measured pair angles
    and the measured orientation (mirror images excluded)."""
    if epsilon < 0.0:
        raise DomainError("epsilon must be non-negative")
    return _to_candidate_set(
        pdb, _match3_idx(pdb, s1.direction, s2.direction, s3.direction, epsilon), k=3
    )


def match_p_stars(measured, pdb: PairDatabase, epsilon: float) -> CandidateSet:
    """Arity-p matching for p > 3: match the first p-1 stars, then keep
    every extension consistent with the p-1 new pair angles."""
    p = len(measured)
    if p <= 3:
        raise DomainError("match_p_stars requires more than 3 measured stars")
    if epsilon < 0.0:
        raise DomainError("epsilon must be non-negative")
    vectors = [m.direction for m in measured]
    return _to_candidate_set(pdb, _match_arity_idx(pdb, vectors, epsilon, p), k=p)


def match_stars(measured, pdb: PairDatabase, epsilon: float) -> MatchOutcome:
    """Raise the matching arity until exactly one candidate remains.

    Returns the first singleton candidate set, or the full arity-p set
    (non-unique) when no prefix of the measured stars pins the match.
    Fewer than two measured stars cannot be matched at all.
    """
    p = len(measured)
    if p <= 1:
        return MatchOutcome(
            candidates=CandidateSet(k=p, tuples=frozenset()), p_used=p, unique=False
        )
    vectors = [m.direction for m in measured]
    cand = _match2_idx(pdb, vectors[0], vectors[1], epsilon)
    if len(cand) == 1:
        return MatchOutcome(_to_candidate_set(pdb, cand, 2), p_used=2, unique=True)
    for arity in range(3, p + 1):
        if arity == 3:
            cand = _match3_idx(pdb, vectors[0], vectors[1], vectors[2], epsilon)
        else:
            cand = _extend_idx(pdb, cand, vectors[:arity], epsilon)
        if len(cand) == 1:
            return MatchOutcome(
                _to_candidate_set(pdb, cand, arity), p_used=arity, unique=True
            )
    return MatchOutcome(_to_candidate_set(pdb, cand, p), p_used=p, unique=False)


def is_correct_match(outcome: MatchOutcome, measured) -> bool:
    """True iff the outcome is unique and its tuple is the ground truth.

    Every measured star must carry a true_id; absence is a contract
    violation (the predicate only makes sense in simulation).
    """
    for m in measured:
        if m.true_id is None:
            raise ValueError("is_correct_match requires true_id on every measured star")
    if not outcome.unique:
        return False
    (tup,) = outcome.candidates.tuples
    return all(tup[i] == measured[i].true_id for i in range(outcome.p_used))
