"""Resonant averaging over the common phase rotation.

The resonant average of ``f`` is ``<f>_R(u) = (1/2pi) int f(e^{i theta} u)
dtheta``.  It is evaluated by the equispaced rule on ``n_points`` nodes,
which is exact for trigonometric polynomials in ``theta`` of degree below
``n_points``.

Gradients follow the convention ``grad_j = 2 d/d(conj u_j) = d/dp_j + i
d/dq_j``, and ``a . b = Re(a conj b)``.
"""

from dataclasses import dataclass

import numpy as np

from .state import as_array

DEFAULT_POINTS = 64

__all__ = [
    "DEFAULT_POINTS",
    "ResonantPotential",
    "rotation_nodes",
    "resonant_average",
    "resonant_potential",
    "resonant_gradient",
    "resonant_hamiltonian",
    "effective_drift",
    "effective_drift_quadrature",
    "lab_drift",
    "resonant_pair",
    "angle_derivative",
    "dot",
]


def dot(a, b):
    """Euclidean product on C = R^2."""
    return (a * np.conj(b)).real


def rotation_nodes(n_points):
    if n_points < 1:
        raise ValueError("n_points must be positive")
    return 2 * np.pi * np.arange(n_points) / n_points


def resonant_average(f, u, n_points=DEFAULT_POINTS):
    """Average of ``f(e^{i theta} u)`` over ``theta`` in ``[0, 2pi)``.

    ``f`` receives a complex array with a leading quadrature axis and must
    return one real value per rotated state (it is vectorised over leading
    axes).  Batched states are averaged independently.
    """
    u = as_array(u)
    phases = np.exp(1j * rotation_nodes(n_points)).reshape((n_points,) + (1,) * u.ndim)
    return np.asarray(f(phases * u)).mean(axis=0)


@dataclass(frozen=True)
class ResonantPotential:
    """Resonant potential of one bond and its gradients.

    ``value(uj, uk)``, ``grad_j(uj, uk)`` and ``grad_k(uj, uk)`` operate on
    broadcastable complex arrays.
    """

    model_kind: str
    mode: str
    n_points: int
    value: object
    grad_j: object
    grad_k: object


def _closed_form(model):
    if model.kind == "quadratic":
        return (lambda uj, uk: 0.5 * np.abs(uj - uk) ** 2,
                lambda uj, uk: uj - uk)
    if model.kind == "quartic":
        return (lambda uj, uk: 0.375 * np.abs(uj - uk) ** 4,
                lambda uj, uk: 1.5 * np.abs(uj - uk) ** 2 * (uj - uk))
    return None


def _quadrature_pair(model, n_points):
    th = rotation_nodes(n_points)
    ph = np.exp(1j * th)

    def value(uj, uk):
        uj, uk = np.broadcast_arrays(np.asarray(uj, complex), np.asarray(uk, complex))
        e = ph.reshape((-1,) + (1,) * uj.ndim)
        return model.value((e * uj).imag, (e * uk).imag).mean(axis=0)

    def grad(uj, uk):
        # grad_j V(Im u_j, Im u_k) = i dV/dx; rotate back by e^{-i theta}
        uj, uk = np.broadcast_arrays(np.asarray(uj, complex), np.asarray(uk, complex))
        e = ph.reshape((-1,) + (1,) * uj.ndim)
        return (np.conj(e) * 1j * model.dx((e * uj).imag, (e * uk).imag)).mean(axis=0)

    return value, grad


def resonant_pair(model, mode=None, n_points=DEFAULT_POINTS):
    """Build the :class:`ResonantPotential` for a pair model.

    ``mode`` is ``"closed_form"`` (built-ins only) or ``"quadrature"``; by
    default closed forms are used where registered.
    """
    closed = _closed_form(model) if model.has_closed_resonant else None
    if mode is None:
        mode = "closed_form" if closed else "quadrature"
    if mode == "closed_form":
        if closed is None:
            raise ValueError(f"no closed-form resonant potential for {model.name!r}")
        value, gj = closed
    elif mode == "quadrature":
        if n_points < 4:
            raise ValueError("quadrature needs at least 4 points")
        value, gj = _quadrature_pair(model, n_points)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    def gk(uj, uk):
        return gj(uk, uj)

    return ResonantPotential(model.kind, mode, n_points, value, gj, gk)


def resonant_potential(model, u_j, u_k, n_points=None):
    """``V^res(u_j, u_k)``: closed form for built-ins, quadrature otherwise.

    Passing ``n_points`` forces quadrature.
    """
    if n_points is None:
        pair = resonant_pair(model)
    else:
        pair = resonant_pair(model, "quadrature", n_points)
    return pair.value(np.asarray(u_j, complex), np.asarray(u_k, complex))


def _scatter(edges, ga, gb, like):
    # per-node sum over incident edges; fixed edge order keeps results
    # independent of the replica batch size
    out = np.zeros(like.shape, dtype=np.result_type(ga, gb))
    for i, (a, b) in enumerate(edges):
        out[..., a] += ga[..., i]
        out[..., b] += gb[..., i]
    return out


def resonant_gradient(state, lattice, model, mode=None, n_points=DEFAULT_POINTS):
    """``grad_j H^res`` for every node; shape matches the state."""
    u = as_array(state)
    pair = resonant_pair(model, mode, n_points)
    e = lattice.edge_array
    if len(e) == 0:
        return np.zeros_like(u)
    ua, ub = u[..., e[:, 0]], u[..., e[:, 1]]
    return _scatter(lattice.edges, pair.grad_j(ua, ub), pair.grad_j(ub, ua), u)


def resonant_hamiltonian(state, lattice, model, mode=None, n_points=DEFAULT_POINTS):
    """``H^res = (1/2) sum over ordered neighbour pairs of V^res``."""
    u = as_array(state)
    pair = resonant_pair(model, mode, n_points)
    e = lattice.edge_array
    if len(e) == 0:
        return np.zeros(u.shape[:-1])
    return np.sum(pair.value(u[..., e[:, 0]], u[..., e[:, 1]]), axis=-1)


def effective_drift(state, lam, lattice, model, mode=None, n_points=DEFAULT_POINTS):
    """Drift of the effective equation, ``lam * i grad_j H^res - u_j / 2``."""
    u = as_array(state)
    drift = -0.5 * u
    if lam:
        drift = drift + lam * 1j * resonant_gradient(u, lattice, model, mode, n_points)
    return drift


def lab_drift(u, lam, lattice, model):
    """Real drift ``P_j(u) = -lam sum_k dV/dq_j (q_j, q_k) - Re u_j``."""
    u = as_array(u)
    out = -u.real
    if lam and lattice.n_edges:
        e = lattice.edge_array
        q = u.imag
        qa, qb = q[..., e[:, 0]], q[..., e[:, 1]]
        out = out - lam * _scatter(lattice.edges, model.dx(qa, qb), model.dx(qb, qa), q)
    return out


def effective_drift_quadrature(state, lam, lattice, model, n_points=DEFAULT_POINTS):
    """Drift obtained by averaging ``e^{-i theta} P(e^{i theta} u)`` directly.

    Independent of the resonant-potential closed forms; used as their oracle.
    """
    u = as_array(state)
    ph = np.exp(1j * rotation_nodes(n_points)).reshape((-1,) + (1,) * u.ndim)
    return (np.conj(ph) * lab_drift(ph * u, lam, lattice, model)).mean(axis=0)


def angle_derivative(f, u, j, partials=None, step=1e-5):
    """Derivative of ``theta -> f(u with u_j replaced by e^{i theta} u_j)`` at 0.

    ``partials``, if given, returns the Wirtinger pair ``(df/du_j,
    df/d(conj u_j))`` and the identity ``i u_j df/du_j - i conj(u_j)
    df/d(conj u_j)`` is used; otherwise central differences along the
    rotation orbit with angular step ``step``.
    """
    u = as_array(u)
    if partials is not None:
        d, dbar = partials(u, j)
        return (1j * u[..., j] * d - 1j * np.conj(u[..., j]) * dbar).real
    up = u.copy()
    um = u.copy()
    up[..., j] = np.exp(1j * step) * u[..., j]
    um[..., j] = np.exp(-1j * step) * u[..., j]
    return (np.asarray(f(up)) - np.asarray(f(um))) / (2 * step)
