"""Counter-based per-atom random streams.

Each (seed, stream, step, atom) tuple maps to one Philox4x64 block, i.e. four
64-bit words, which are turned into four standard normals by Box-Muller.  A
contiguous slice of atoms can therefore be generated by any worker without
reference to the others, and the result does not depend on how the ensemble is
partitioned.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

STREAM_DYNAMICS = 0
STREAM_INIT_POSITION = 1
STREAM_INIT_VELOCITY = 2
STREAM_IMAGE = 3

_MASK64 = (1 << 64) - 1


def derive_seed(*words: int) -> int:
    """Mix integers into one 64-bit seed."""
    ss = np.random.SeedSequence([int(w) & _MASK64 for w in words])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@lru_cache(maxsize=256)
def _key(seed: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(int(seed) & _MASK64)
    k = ss.generate_state(2, dtype=np.uint64)
    return int(k[0]), int(k[1])


def atom_normals(seed: int, stream: int, step: int, start: int, stop: int) -> np.ndarray:
    """Standard normals of shape (stop - start, 3) for atoms start..stop-1."""
    n = stop - start
    if n <= 0:
        return np.zeros((0, 3))
    bg = np.random.Philox(key=np.array(_key(int(seed)), dtype=np.uint64), counter=[start, step, stream, 0])
    raw = bg.random_raw(4 * n).reshape(n, 4)
    # 53-bit uniforms in (0, 1]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)
    r1 = np.sqrt(-2.0 * np.log(u[:, 0]))
    r2 = np.sqrt(-2.0 * np.log(u[:, 2]))
    t1 = 2.0 * np.pi * u[:, 1]
    t2 = 2.0 * np.pi * u[:, 3]
    return np.stack([r1 * np.cos(t1), r1 * np.sin(t1), r2 * np.cos(t2)], axis=1)


def ensemble_normals(seed: int, stream: int, step: int, n_atoms: int, workers: int = 1) -> np.ndarray:
    """Normals for the whole ensemble, optionally assembled from `workers` slices."""
    if workers <= 1:
        return atom_normals(seed, stream, step, 0, n_atoms)
    bounds = np.linspace(0, n_atoms, workers + 1).astype(int)
    return np.concatenate([
        atom_normals(seed, stream, step, a, b) for a, b in zip(bounds[:-1], bounds[1:])
    ])
