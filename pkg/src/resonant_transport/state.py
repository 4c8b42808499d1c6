"""Complex phase-space state ``u_j = p_j + i q_j``."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseState:
    """Complex amplitudes of all oscillators, optionally for a batch of replicas.

    ``u`` has shape ``(..., n_nodes)``; leading axes index replicas.  Node
    order follows the lattice's node list.
    """

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.complex128)
        if u.ndim == 0:
            raise ValueError("PhaseState needs at least one node")
        object.__setattr__(self, "u", u)

    @classmethod
    def from_pq(cls, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.shape != q.shape:
            raise ValueError(f"p and q shapes differ: {p.shape} vs {q.shape}")
        return cls(p + 1j * q)

    @classmethod
    def zeros(cls, n_nodes, batch=()):
        return cls(np.zeros(tuple(batch) + (n_nodes,), dtype=np.complex128))

    @property
    def n_nodes(self):
        return self.u.shape[-1]

    @property
    def batch_shape(self):
        return self.u.shape[:-1]

    @property
    def p(self):
        return self.u.real

    @property
    def q(self):
        return self.u.imag

    @property
    def actions(self):
        """``I_j = |u_j|^2 / 2``."""
        return 0.5 * (self.u.real**2 + self.u.imag**2)

    @property
    def angles(self):
        """``arg u_j`` in ``(-pi, pi]``, with ``arg 0 = 0``."""
        return np.angle(self.u)

    def rotate(self, xi):
        """Common rotation ``u -> e^{i xi} u`` of all phases."""
        phase = np.exp(1j * np.asarray(xi, dtype=float))
        return PhaseState(phase[..., None] * self.u)

    def replace_node(self, j, value):
        u = self.u.copy()
        u[..., j] = value
        return PhaseState(u)

    def __len__(self):
        return self.n_nodes


def as_array(state):
    """Complex array view of a PhaseState or array-like."""
    if isinstance(state, PhaseState):
        return state.u
    return np.asarray(state, dtype=np.complex128)
