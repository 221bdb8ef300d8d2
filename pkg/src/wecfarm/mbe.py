"""Farm-level coefficient matrices from single and pair queries.

The N-body interaction is truncated at second order: diagonals are the
isolated values plus the sum of pairwise diagonal shifts, off-diagonals
come straight from the pair query, and excitation accumulates pairwise
corrections on top of the phased isolated force. The truncation is
exact for N <= 2 by construction.
"""

from dataclasses import dataclass

import numpy as np

from . import hydro


@dataclass
class Layout:
    """Planar device centres, wave travelling along +x.

    Optimization pins the first device at the origin; the type itself
    only requires distinct positions so that rigidly moved copies of a
    layout remain representable.
    """

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ValueError("positions must be an (N, 2) array")
        self.positions = pos
        n = pos.shape[0]
        for p in range(n):
            for q in range(p + 1, n):
                if np.hypot(*(pos[q] - pos[p])) == 0.0:
                    raise ValueError(f"devices {p} and {q} coincide")

    @property
    def n(self):
        return self.positions.shape[0]

    def translated(self, dx, dy):
        return Layout(self.positions + np.array([dx, dy]))

    def mirrored(self):
        return Layout(self.positions * np.array([1.0, -1.0]))


@dataclass
class FarmCoefficients:
    grid: hydro.FrequencyGrid
    added_mass: np.ndarray
    damping: np.ndarray
    excitation: np.ndarray

    @property
    def n_devices(self):
        return self.excitation.shape[1]


def pair_geometry(layout, p, q):
    """Separation and heading of the pair axis from device p to q."""
    if p == q:
        raise IndexError("pair geometry needs two distinct devices")
    dx, dy = layout.positions[q] - layout.positions[p]
    return float(np.hypot(dx, dy)), float(np.arctan2(dy, dx))


def compose_farm(provider, geom, layout, grid, env):
    """Assemble N-body matrices from one single and N(N-1)/2 pair queries.

    Each pair is queried once in the frame of its lower-index body;
    identical (l, theta) pairs are served from a per-call cache keyed at
    1e-9 resolution. Diagonals are seeded with (2 - N) times the
    isolated values so that each pair's full diagonal adds up to the
    single-plus-shift composition; for N = 2 this reproduces the pair
    query bit for bit.
    """
    pos = layout.positions
    n_wec = layout.n
    single = provider.single(geom, grid, env)
    k = hydro.solve_dispersion(grid.values, env)
    phases = np.exp(-1j * np.outer(k, pos[:, 0]))

    nw = grid.n
    added = np.zeros((nw, n_wec, n_wec))
    damping = np.zeros((nw, n_wec, n_wec))
    excitation = np.zeros((nw, n_wec), dtype=np.complex128)
    base = float(2 - n_wec)
    for p in range(n_wec):
        added[:, p, p] = base * single.added_mass
        damping[:, p, p] = base * single.damping
        excitation[:, p] = base * single.excitation * phases[:, p]

    cache = {}
    for p in range(n_wec):
        for q in range(p + 1, n_wec):
            sep, theta = pair_geometry(layout, p, q)
            key = (round(sep, 9), round(theta, 9))
            pc = cache.get(key)
            if pc is None:
                pc = provider.pair(geom, sep, theta, grid, env)
                cache[key] = pc
            added[:, p, p] += pc.added_mass[:, 0, 0]
            added[:, q, q] += pc.added_mass[:, 1, 1]
            damping[:, p, p] += pc.damping[:, 0, 0]
            damping[:, q, q] += pc.damping[:, 1, 1]
            added[:, p, q] = added[:, q, p] = pc.added_mass[:, 0, 1]
            damping[:, p, q] = damping[:, q, p] = pc.damping[:, 0, 1]
            # the pair frame is anchored at body p, so both contributions
            # carry body p's travelling-wave phase
            excitation[:, p] += pc.excitation[:, 0] * phases[:, p]
            excitation[:, q] += pc.excitation[:, 1] * phases[:, p]

    return FarmCoefficients(grid=grid, added_mass=added, damping=damping, excitation=excitation)
