"""Independent reference implementations used as test oracles.

Each oracle is written against the problem statement, not against the
production code path it checks: pair windows by linear scan, matching
by exhaustive tuple enumeration over a precomputed angle matrix, and
close-pair filtering by a double loop.
"""

import math

import numpy as np


def angle_matrix(directions: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(directions @ directions.T, -1.0, 1.0))


def measured_angle(v1, v2) -> float:
    return math.acos(max(-1.0, min(1.0, float(np.dot(v1, v2)))))


def linear_scan_window(thetas: np.ndarray, theta_hat: float, epsilon: float) -> np.ndarray:
    """Indices of entries with |theta - theta_hat| <= epsilon, by full scan."""
    return np.nonzero(np.abs(thetas - theta_hat) <= epsilon)[0]


def brute_force_pairs(directions: np.ndarray, ids: np.ndarray, theta_max: float):
    """All canonical (id_a, id_b, theta) with theta <= theta_max, double loop."""
    out = []
    n = len(ids)
    for i in range(n):
        for j in range(i + 1, n):
            theta = measured_angle(directions[i], directions[j])
            if theta <= theta_max:
                a, b = int(ids[i]), int(ids[j])
                if a > b:
                    a, b = b, a
                out.append((a, b, theta))
    return out


def brute_force_match2(directions, ids, theta_max, v1, v2, epsilon):
    """Ordered catalog pairs matching one measured angle."""
    theta_hat = measured_angle(v1, v2)
    out = set()
    n = len(ids)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            theta = measured_angle(directions[i], directions[j])
            if theta <= theta_max and abs(theta - theta_hat) <= epsilon:
                out.add((int(ids[i]), int(ids[j])))
    return out


def _edge_ok(angles, theta_max, theta_hat, epsilon):
    return (np.abs(angles - theta_hat) <= epsilon) & (angles <= theta_max)


def brute_force_match3(directions, ids, theta_max, v1, v2, v3, epsilon):
    """All ordered catalog triangles matching the three measured angles and
    the measured orientation, by exhaustive tensor enumeration."""
    ang = angle_matrix(directions)
    np.fill_diagonal(ang, np.inf)  # a slot cannot pair with itself
    m12 = _edge_ok(ang, theta_max, measured_angle(v1, v2), epsilon)
    m23 = _edge_ok(ang, theta_max, measured_angle(v2, v3), epsilon)
    m13 = _edge_ok(ang, theta_max, measured_angle(v1, v3), epsilon)

    ok = m12[:, :, None] & m23[None, :, :] & m13[:, None, :]
    # triple[i,j,k] = d_i . (d_j x d_k)
    triple = np.einsum("id,jkd->ijk", directions, np.cross(directions[:, None, :], directions[None, :, :]))
    want = np.sign(float(np.dot(v1, np.cross(v2, v3))))
    ok &= np.sign(triple) == want
    ii, jj, kk = np.nonzero(ok)
    return {(int(ids[i]), int(ids[j]), int(ids[k])) for i, j, k in zip(ii, jj, kk)}


def brute_force_match4(directions, ids, theta_max, vs, epsilon):
    """All ordered catalog 4-tuples consistent with every measured pair angle
    (triangle conditions plus the three apex edges)."""
    assert len(vs) == 4
    ang = angle_matrix(directions)
    np.fill_diagonal(ang, np.inf)
    edge = {}
    for a in range(4):
        for b in range(a + 1, 4):
            edge[(a, b)] = _edge_ok(ang, theta_max, measured_angle(vs[a], vs[b]), epsilon)

    ok3 = edge[(0, 1)][:, :, None] & edge[(1, 2)][None, :, :] & edge[(0, 2)][:, None, :]
    triple = np.einsum("id,jkd->ijk", directions, np.cross(directions[:, None, :], directions[None, :, :]))
    want = np.sign(float(np.dot(vs[0], np.cross(vs[1], vs[2]))))
    ok3 &= np.sign(triple) == want

    ok4 = (
        ok3[:, :, :, None]
        & edge[(0, 3)][:, None, None, :]
        & edge[(1, 3)][None, :, None, :]
        & edge[(2, 3)][None, None, :, :]
    )
    ii, jj, kk, ll = np.nonzero(ok4)
    return {
        (int(ids[i]), int(ids[j]), int(ids[k]), int(ids[l]))
        for i, j, k, l in zip(ii, jj, kk, ll)
    }


def exclude_close_pairs_bruteforce(stars, theta_min):
    """Survivor list by a double loop: keep a star only when no other star
    sits closer than theta_min."""
    survivors = []
    for i, a in enumerate(stars):
        ok = True
        for j, b in enumerate(stars):
            if i != j and measured_angle(a.direction, b.direction) < theta_min:
                ok = False
                break
        if ok:
            survivors.append(a)
    return survivors
