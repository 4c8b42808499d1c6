"""Energy flows and batch-means estimators."""

import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_BURN_IN, Series, sample_mu0, simulate
from .resavg import DEFAULT_POINTS, rotation_nodes
from .rng import make_stream
from .state import as_array

MIN_BATCHES = 20
DEFAULT_BATCH_LENGTH = 10.0  # slow-time units

__all__ = [
    "EstimatorResult",
    "energy_flow",
    "edge_flows",
    "resonant_flow",
    "resonant_flow_quadrature",
    "time_average",
    "batch_estimate",
    "stationary_flow",
    "stationary_run",
    "MIN_BATCHES",
]


@dataclass(frozen=True)
class EstimatorResult:
    """Mean with a batch-means standard error.

    The per-batch sums and counts are kept so that merging is a plain
    concatenation: the pooled mean is the exactly rounded total divided by
    the total count, independent of merge order.
    """

    mean: float
    standard_error: float
    n_samples: int
    batch_size: int
    batch_sums: tuple = ()
    batch_counts: tuple = ()
    name: str = ""

    @classmethod
    def from_batches(cls, sums, counts, name=""):
        sums = tuple(float(s) for s in sums)
        counts = tuple(int(c) for c in counts)
        if len(sums) != len(counts) or not sums:
            raise ValueError("need matching, non-empty batch sums and counts")
        n = sum(counts)
        mean = math.fsum(sums) / n
        nb = len(sums)
        if nb > 1:
            b = np.array(sums) / np.array(counts)
            w = np.array(counts, dtype=float)
            var = math.fsum(w**2 * (b - mean) ** 2) / n**2 * nb / (nb - 1)
            se = math.sqrt(max(var, 0.0))
        else:
            se = math.inf
        batch = counts[0] if len(set(counts)) == 1 else int(round(n / nb))
        return cls(mean, se, n, batch, sums, counts, name)

    @classmethod
    def exact(cls, value, name=""):
        """A deterministic value carried in estimator form (SE 0)."""
        return cls(float(value), 0.0, 1, 1, (float(value),), (1,), name)

    @property
    def n_batches(self):
        return len(self.batch_sums)

    def merge(self, other):
        if not self.batch_sums or not other.batch_sums:
            raise ValueError("cannot merge results without batch data")
        return EstimatorResult.from_batches(
            self.batch_sums + other.batch_sums,
            self.batch_counts + other.batch_counts,
            self.name or other.name,
        )

    def scaled(self, factor, name=None):
        return EstimatorResult.from_batches(
            [factor * s for s in self.batch_sums], self.batch_counts,
            self.name if name is None else name,
        )

    def record(self):
        """JSON-ready record ``{name, mean, se, n, batch}``."""
        return {"name": self.name, "mean": self.mean, "se": self.standard_error,
                "n": self.n_samples, "batch": self.batch_size}

    def to_json(self):
        return json.dumps(self.record(), sort_keys=True)

    def __repr__(self):
        return (f"EstimatorResult({self.name + ': ' if self.name else ''}"
                f"{self.mean:.6g} +/- {self.standard_error:.3g}, n={self.n_samples})")


def _check_neighbours(k, j, lattice):
    if lattice is not None:
        if not lattice.are_neighbours(k, j):
            raise ValueError(f"nodes {k} and {j} are not neighbours")
        return lattice.index(k), lattice.index(j)
    if abs(int(k) - int(j)) != 1:
        raise ValueError(f"nodes {k} and {j} are not neighbours")
    return int(k), int(j)


def energy_flow(state, model, k, j, lattice=None):
    """Hamiltonian energy flow from oscillator ``k`` to oscillator ``j``.

    ``p_k dV/dq_k (q_k, q_j) - p_j dV/dq_j (q_k, q_j)``.  Without a lattice,
    indices are taken as positions on a chain.
    """
    k, j = _check_neighbours(k, j, lattice)
    u = as_array(state)
    p, q = u.real, u.imag
    qk, qj = q[..., k], q[..., j]
    return p[..., k] * model.dx(qk, qj) - p[..., j] * model.dy(qk, qj)


def edge_flows(state, lattice, model):
    """Flows ``J_ab`` for every lattice edge ``(a, b)``, stacked on the last axis."""
    u = as_array(state)
    e = lattice.edge_array
    p, q = u.real, u.imag
    qa, qb = q[..., e[:, 0]], q[..., e[:, 1]]
    return p[..., e[:, 0]] * model.dx(qa, qb) - p[..., e[:, 1]] * model.dy(qa, qb)


def _cross(u_k, u_j):
    # (i u_k) . u_j = p_k q_j - q_k p_j, written so that swapping k, j negates exactly
    return u_k.real * u_j.imag - u_k.imag * u_j.real


def resonant_flow(model, u_k, u_j, n_points=None):
    """Resonant average of the flow from ``k`` to ``j``.

    Closed forms exist for the built-ins; ``n_points`` (or a custom model)
    selects quadrature.
    """
    u_k = np.asarray(u_k, dtype=complex)
    u_j = np.asarray(u_j, dtype=complex)
    if n_points is None and model.has_closed_resonant:
        s = _cross(u_k, u_j)
        if model.kind == "quartic":
            return -3.0 * s * np.abs(u_j - u_k) ** 2
        if model.kind == "quadratic":
            return -2.0 * s
    return resonant_flow_quadrature(model, u_k, u_j, n_points or DEFAULT_POINTS)


def resonant_flow_quadrature(model, u_k, u_j, n_points=DEFAULT_POINTS):
    u_k, u_j = np.broadcast_arrays(np.asarray(u_k, complex), np.asarray(u_j, complex))
    e = np.exp(1j * rotation_nodes(n_points)).reshape((-1,) + (1,) * u_k.ndim)
    pair = np.stack([e * u_k, e * u_j], axis=-1)
    return energy_flow(pair, model, 0, 1).mean(axis=0)


def batch_estimate(values, batch_records, name="", min_batches=MIN_BATCHES):
    """Batch-means estimate from ``values`` with records first, replicas second.

    Each replica's series is cut into consecutive batches of
    ``batch_records`` records (a trailing partial batch is dropped); batches
    from all replicas are pooled.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    v = v.reshape(v.shape[0], -1)
    if v.shape[0] == 0:
        raise ValueError("empty series")
    L = int(batch_records)
    if L < 1:
        raise ValueError("batch length must be at least one record")
    nb = v.shape[0] // L
    if nb * v.shape[1] < min_batches:
        raise ValueError(f"only {nb * v.shape[1]} batches available, need {min_batches}")
    blocks = v[: nb * L].reshape(nb, L, v.shape[1])
    sums = [math.fsum(blocks[b, :, r]) for r in range(v.shape[1]) for b in range(nb)]
    return EstimatorResult.from_batches(sums, [L] * len(sums), name)


def time_average(series, observable=None, batch_length=DEFAULT_BATCH_LENGTH, index=None,
                 min_batches=MIN_BATCHES):
    """Batch-means mean and standard error of one recorded observable.

    ``series`` is a :class:`Series` (``observable`` names the entry) or a raw
    array with records first.  ``batch_length`` is in slow-time units for a
    Series and in records for raw arrays.  ``index`` picks a component of a
    vector-valued observable.
    """
    if isinstance(series, Series):
        if observable is None:
            if len(series.values) != 1:
                raise ValueError("name the observable")
            observable = next(iter(series.values))
        v = series.values[observable]
        if len(series.tau) > 1:
            dt = series.tau[1] - series.tau[0]
        else:
            dt = series.params.h * series.params.stride
        L = max(1, int(round(batch_length / dt)))
        name = str(observable)
    else:
        v = np.asarray(series, dtype=float)
        L = int(batch_length)
        name = "" if observable is None else str(observable)
    if index is not None:
        v = np.asarray(v)[..., index]
        name = f"{name}[{index}]"
    return batch_estimate(v, L, name, min_batches)


def stationary_run(params, lattice, model, profile, observers, initial=None):
    """Simulate ``params.replicas`` trajectories from ``initial`` (default: mu0)."""
    if initial is None:
        stream = make_stream(params.seed, params.replicas, lattice.n_nodes, params.first_trajectory)
        initial = sample_mu0(profile, stream)
    return simulate(initial, params, lattice, model, profile, observers)


def _flow_params(params):
    changes = {}
    if params.record_every is None:
        changes["record_every"] = 0.1 if abs(round(0.1 / params.h) * params.h - 0.1) < 1e-12 else params.h
    if not params.window_average:
        changes["window_average"] = True
    if params.frame == "rotating":
        # same dynamics; flows need lab-frame (p, q)
        changes["frame"] = "laboratory"
    if params.burn_in == 0 and params.tau_end > DEFAULT_BURN_IN:
        changes["burn_in"] = DEFAULT_BURN_IN
    return params.replace(**changes) if changes else params


def stationary_flow(params, lattice, model, profile, edge, replicas=None, initial=None,
                    batch_length=DEFAULT_BATCH_LENGTH):
    """Time-and-replica average of ``J_kj`` along stationary full-system paths.

    ``edge = (k, j)`` gives the orientation (flow from ``k`` to ``j``).  The
    flow is window-averaged over each recording interval, which removes the
    fast oscillating part without changing the mean.
    """
    k, j = _check_neighbours(*edge, lattice)
    if replicas is not None:
        params = params.replace(replicas=int(replicas))
    params = _flow_params(params)

    def flow(tau, u):
        return energy_flow(u, model, k, j, lattice)

    s = stationary_run(params, lattice, model, profile, {"flow": flow}, initial)
    return time_average(s, "flow", batch_length)
