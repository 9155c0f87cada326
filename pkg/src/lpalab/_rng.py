"""64-bit mixing and a small counter-free random stream usable inside numba kernels.

``mix64`` is the splitmix64 finalizer (Stafford variant 13). Every seed
derivation in the package goes through it, so results only depend on the
integers passed around, never on global RNG state.
"""

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def trial_seed(base_seed: int, t: int) -> int:
    """Seed of trial ``t``: mix64(base_seed xor t*golden)."""
    return mix64((base_seed & MASK64) ^ ((t * GOLDEN) & MASK64))


def derive(seed: int, stream: int) -> int:
    """Independent sub-seed for a named stream of one trial."""
    return mix64((seed & MASK64) ^ mix64(stream + 1))


# numba side -----------------------------------------------------------------

_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U_GOLDEN = np.uint64(GOLDEN)


@nb.njit(inline="always")
def nb_mix64(x):
    x = np.uint64(x)
    x = (x ^ (x >> np.uint64(30))) * _U_M1
    x = (x ^ (x >> np.uint64(27))) * _U_M2
    return x ^ (x >> np.uint64(31))


@nb.njit(inline="always")
def nb_next(state):
    """Advance a splitmix64 stream held in ``state[0]``; returns 64 random bits."""
    state[0] = state[0] + _U_GOLDEN
    return nb_mix64(state[0])


@nb.njit(inline="always")
def nb_uniform(state):
    """Uniform double in [0, 1)."""
    return np.float64(nb_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(inline="always")
def nb_below(state, m):
    """Uniform integer in [0, m) for m >= 1 (53-bit resolution)."""
    r = np.int64(nb_uniform(state) * m)
    if r >= m:
        r = m - 1
    return r


@nb.njit(inline="always")
def nb_tie_hash(seed, vertex, label):
    return nb_mix64(nb_mix64(nb_mix64(np.uint64(seed)) ^ np.uint64(vertex)) ^ np.uint64(label))


def new_state(seed: int) -> np.ndarray:
    return np.array([seed & MASK64], dtype=np.uint64)
