"""Independent reference computations the tests check the library against.

Everything here is deliberately brute-force and shares no code paths with
the implementation under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def trilinear_by_hand(data: np.ndarray, spacing, point) -> float:
    """Straight 8-corner interpolation with explicit loops, clamped."""
    u = [point[a] / spacing[a] for a in range(3)]
    u = [min(max(ua, 0.0), data.shape[a] - 1) for a, ua in enumerate(u)]
    i0 = [min(int(math.floor(ua)), data.shape[a] - 2) if data.shape[a] > 1 else 0
          for a, ua in enumerate(u)]
    f = [ua - ia for ua, ia in zip(u, i0)]
    total = 0.0
    for dx, dy, dz in itertools.product((0, 1), repeat=3):
        wx = f[0] if dx else 1 - f[0]
        wy = f[1] if dy else 1 - f[1]
        wz = f[2] if dz else 1 - f[2]
        ix = min(i0[0] + dx, data.shape[0] - 1)
        iy = min(i0[1] + dy, data.shape[1] - 1)
        iz = min(i0[2] + dz, data.shape[2] - 1)
        total += wx * wy * wz * float(data[ix, iy, iz])
    return total


def dice_by_counting(a: np.ndarray, b: np.ndarray) -> float:
    """Voxel-by-voxel loop; returns percent, 100 for two empty masks."""
    na = nb = ni = 0
    for x in range(a.shape[0]):
        for y in range(a.shape[1]):
            for z in range(a.shape[2]):
                va, vb = bool(a[x, y, z]), bool(b[x, y, z])
                na += va
                nb += vb
                ni += va and vb
    if na == 0 and nb == 0:
        return 100.0
    return 100.0 * 2.0 * ni / (na + nb)


def enumerate_min_cut(w_scaled: np.ndarray, adjacency, delta: int):
    """Exhaustive search over all delta-feasible boundary assignments.

    ``w_scaled`` is the (R, K) integer terminal-weight table (z=0 entries are
    ignored: base nodes are forced inside by construction).  The cut value of
    an assignment ``b`` is the capacity of the arcs it severs: sink arcs of
    included nodes plus source arcs of excluded nodes, z >= 1 only.

    Returns (min_value, all_optimal_assignments, minimal_optimal_assignment).
    The minimal optimal assignment (elementwise) exists because optimal
    closed sets are a lattice; we verify that here rather than assume it.
    """
    R, K = w_scaled.shape
    best_value = None
    optima = []
    for b in itertools.product(range(K), repeat=R):
        if any(abs(b[r] - b[q]) > delta for r, q in adjacency):
            continue
        value = 0
        for r in range(R):
            for z in range(1, K):
                w = int(w_scaled[r, z])
                if z <= b[r] and w > 0:
                    value += w
                elif z > b[r] and w < 0:
                    value += -w
        if best_value is None or value < best_value:
            best_value = value
            optima = [b]
        elif value == best_value:
            optima.append(b)
    minimal = tuple(min(vals) for vals in zip(*optima))
    assert minimal in optima, "optimal closed sets failed the lattice property"
    return best_value, optima, minimal


def sphere_volume(radius: float) -> float:
    return 4.0 / 3.0 * math.pi * radius**3


def points_in_cone(points: np.ndarray, apex: np.ndarray, axis: np.ndarray, solid_angle: float):
    """Membership test for the spherical cap cone of the given solid angle."""
    cos_cap = 1.0 - solid_angle / (2.0 * math.pi)
    d = points - apex
    norm = np.linalg.norm(d, axis=-1)
    with np.errstate(invalid="ignore"):
        cosang = np.where(norm > 0, d @ axis / np.maximum(norm, 1e-30), 1.0)
    return cosang >= cos_cap
