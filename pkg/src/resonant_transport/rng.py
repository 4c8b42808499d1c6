"""Counter-based normal variates.

Every Gaussian draw is a pure function of ``(seed, trajectory, step, node,
slot)``.  The bit source is Philox4x64-10 (the same bijection behind
:class:`numpy.random.Philox`), keyed by ``(seed, trajectory)`` with the
counter ``(step, node, slot, 0)``.  One counter block yields four 64-bit
words, turned into four standard normals by Box-Muller, so each
``(step, node, slot)`` triple supplies up to four independent normals.

Because nothing is sequential, any subset of trajectories can be re-run and
reproduces its draws bit for bit, independently of how replicas are batched.
"""

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)

_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0

SEED_MASK = (1 << 64) - 1


@nb.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _MASK32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    lo = (cross << _S32) | (lo_lo & _MASK32)
    return hi, lo


@nb.njit(cache=True)
def _philox4x64(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True)
def _uniform(word):
    # 53 high bits, shifted into (0, 1] so log() is finite
    return (np.float64(word >> _S11) + 1.0) * _INV_2_53


@nb.njit(cache=True)
def _fill_normals(out, seed, trajectories, step, slot):
    # out has shape (n_traj, n_nodes, 4)
    k0 = np.uint64(seed)
    n_traj, n_nodes = out.shape[0], out.shape[1]
    for r in range(n_traj):
        k1 = np.uint64(trajectories[r])
        for j in range(n_nodes):
            w0, w1, w2, w3 = _philox4x64(
                np.uint64(step), np.uint64(j), np.uint64(slot), np.uint64(0), k0, k1
            )
            u0 = _uniform(w0)
            u1 = _uniform(w1)
            u2 = _uniform(w2)
            u3 = _uniform(w3)
            r0 = np.sqrt(-2.0 * np.log(u0))
            r1 = np.sqrt(-2.0 * np.log(u2))
            out[r, j, 0] = r0 * np.cos(_TWO_PI * u1)
            out[r, j, 1] = r0 * np.sin(_TWO_PI * u1)
            out[r, j, 2] = r1 * np.cos(_TWO_PI * u3)
            out[r, j, 3] = r1 * np.sin(_TWO_PI * u3)


@nb.njit(cache=True)
def _raw_block(c0, c1, c2, c3, k0, k1):
    out = np.empty(4, dtype=np.uint64)
    out[0], out[1], out[2], out[3] = _philox4x64(c0, c1, c2, c3, k0, k1)
    return out


def philox_block(counter, key):
    """Raw Philox4x64-10 output for one 4-word ``counter`` and 2-word ``key``."""
    c = [np.uint64(int(x) & SEED_MASK) for x in counter]
    k = [np.uint64(int(x) & SEED_MASK) for x in key]
    return _raw_block(c[0], c[1], c[2], c[3], k[0], k[1])


class NormalStream:
    """Deterministic source of standard normals for a batch of trajectories.

    Parameters
    ----------
    seed : int
        64-bit experiment seed.
    trajectories : array_like of int
        Global trajectory indices carried by the rows of every draw.
    n_nodes : int
        Number of lattice nodes (columns of every draw).
    """

    def __init__(self, seed, trajectories, n_nodes):
        self.seed = int(seed) & SEED_MASK
        self.trajectories = np.ascontiguousarray(
            np.asarray(trajectories, dtype=np.uint64).reshape(-1)
        )
        self.n_nodes = int(n_nodes)
        self._buf = np.empty((self.trajectories.size, self.n_nodes, 4))

    @property
    def n_trajectories(self):
        return self.trajectories.size

    def normals(self, step, slot=0):
        """Return an ``(n_traj, n_nodes, 4)`` array of iid N(0, 1) draws.

        The values depend only on ``(seed, trajectory, step, node, slot)``.
        """
        if step < 0 or slot < 0:
            raise ValueError("step and slot must be non-negative")
        out = np.empty_like(self._buf)
        _fill_normals(out, np.uint64(self.seed), self.trajectories, np.uint64(step), np.uint64(slot))
        return out

    def subset(self, rows):
        """Stream restricted to the given rows; draws are unchanged."""
        return NormalStream(self.seed, self.trajectories[rows], self.n_nodes)


def make_stream(seed, n_trajectories, n_nodes, first=0):
    """Stream for trajectories ``first, ..., first + n_trajectories - 1``."""
    return NormalStream(seed, np.arange(first, first + n_trajectories), n_nodes)
