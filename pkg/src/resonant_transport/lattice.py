"""Lattice geometry, temperature profiles and pair potentials."""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .state import as_array

__all__ = [
    "LatticeSpec",
    "TemperatureProfile",
    "PotentialModel",
    "build_chain",
    "build_lattice",
    "linear_temperature_profile",
    "uniform_temperature_profile",
    "quadratic",
    "quartic",
    "custom_potential",
    "get_model",
    "hamiltonian",
    "local_energy",
    "lattice_to_config",
    "lattice_from_config",
    "profile_to_config",
    "profile_from_config",
]


@dataclass(frozen=True)
class LatticeSpec:
    """Finite subset of Z^d with nearest-neighbour (l1 distance one) edges.

    Nodes keep their insertion order; that order is the state-vector index.
    """

    dimension: int
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        nodes = tuple(tuple(int(c) for c in n) for n in self.nodes)
        if any(len(n) != self.dimension for n in nodes):
            raise ValueError("node coordinates must have length `dimension`")
        if len(set(nodes)) != len(nodes):
            raise ValueError("nodes must be pairwise distinct")
        edges = tuple(tuple(sorted((int(a), int(b)))) for a, b in self.edges)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edge")
        for a, b in edges:
            if _l1(nodes[a], nodes[b]) != 1:
                raise ValueError(f"edge ({a}, {b}) does not join neighbours")
        if set(edges) != set(_neighbour_pairs(nodes)):
            raise ValueError("edge list is not exhaustive for the node set")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.edges)

    def index(self, node):
        """Index of a node given by coordinates or by index."""
        if isinstance(node, (int, np.integer)):
            if not 0 <= node < self.n_nodes:
                raise IndexError(f"node index {node} not in lattice")
            return int(node)
        try:
            return self.nodes.index(tuple(node))
        except ValueError:
            raise IndexError(f"node {node} not in lattice") from None

    def neighbours(self, j):
        j = self.index(j)
        return [b if a == j else a for a, b in self.edges if j in (a, b)]

    def are_neighbours(self, j, k):
        return tuple(sorted((self.index(j), self.index(k)))) in set(self.edges)

    @property
    def edge_array(self):
        """``(n_edges, 2)`` integer array of edges."""
        return np.array(self.edges, dtype=int).reshape(-1, 2)

    @property
    def is_chain(self):
        return self.dimension == 1 and all(
            self.nodes[i][0] == self.nodes[0][0] + i for i in range(self.n_nodes)
        )


def _l1(a, b):
    return sum(abs(x - y) for x, y in zip(a, b))


def _neighbour_pairs(nodes):
    return [(a, b) for a, b in combinations(range(len(nodes)), 2) if _l1(nodes[a], nodes[b]) == 1]


def build_lattice(nodes):
    """Lattice on an arbitrary node set of Z^d with all neighbour edges."""
    nodes = [tuple(int(c) for c in n) for n in nodes]
    if not nodes:
        raise ValueError("empty node set")
    return LatticeSpec(len(nodes[0]), tuple(nodes), tuple(_neighbour_pairs(nodes)))


def build_chain(N):
    """The chain ``{0, 1, ..., N}`` with ``N`` edges."""
    if int(N) != N or N < 1:
        raise ValueError(f"chain length must be a positive integer, got {N!r}")
    N = int(N)
    return LatticeSpec(1, tuple((j,) for j in range(N + 1)), tuple((j, j + 1) for j in range(N)))


@dataclass(frozen=True)
class TemperatureProfile:
    """Positive per-node thermostat temperatures, bounded by ``t_max``."""

    temperatures: tuple
    t_max: float = np.inf

    def __post_init__(self):
        t = tuple(float(x) for x in np.ravel(self.temperatures))
        if not t:
            raise ValueError("empty temperature profile")
        if any(not (x > 0) for x in t):
            raise ValueError("temperatures must be positive")
        t_max = float(self.t_max)
        if np.isinf(t_max):
            t_max = max(t)
        if any(x > t_max for x in t):
            raise ValueError(f"temperature above declared maximum {t_max}")
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "t_max", t_max)

    def __len__(self):
        return len(self.temperatures)

    def __getitem__(self, j):
        return self.temperatures[j]

    @property
    def array(self):
        return np.array(self.temperatures)

    @property
    def is_uniform(self):
        return len(set(self.temperatures)) == 1


def linear_temperature_profile(T0, T1, N):
    """``T_j = T1 * j/N + T0 * (1 - j/N)`` for ``j = 0..N``."""
    if not (T0 > 0 and T1 > 0):
        raise ValueError("endpoint temperatures must be positive")
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    x = np.arange(N + 1) / N
    return TemperatureProfile(tuple(T1 * x + T0 * (1 - x)))


def uniform_temperature_profile(T, n_nodes):
    return TemperatureProfile((float(T),) * int(n_nodes))


@dataclass(frozen=True)
class PotentialModel:
    """Symmetric pair potential ``V(x, y)`` with analytic partial derivatives.

    Callbacks take broadcastable arrays.  ``dx`` is the partial in the first
    argument; by symmetry ``dV/dy (x, y) = dx(y, x)``.  ``dxx`` and ``dxy``
    give the second partials (``dyy(x, y) = dxx(y, x)``).
    """

    kind: str
    value: object
    dx: object
    dxx: object = None
    dxy: object = None
    degree: int = None
    has_closed_resonant: bool = False
    name: str = field(default=None)

    def __post_init__(self):
        if self.kind not in ("quadratic", "quartic", "custom"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.name is None:
            object.__setattr__(self, "name", self.kind)

    def __call__(self, x, y):
        return self.value(x, y)

    def dy(self, x, y):
        return self.dx(y, x)

    def dyy(self, x, y):
        return self.dxx(y, x)

    def check(self, n_samples=10_000, rng=None, scale=2.0, rtol=1e-6):
        """Validate symmetry and first derivative against finite differences.

        Returns a dict of the largest observed violations.
        """
        rng = np.random.default_rng(rng)
        x, y = rng.normal(scale=scale, size=(2, n_samples))
        v = self.value(x, y)
        sym = np.max(np.abs(v - self.value(y, x)) / (1 + np.abs(v)))
        h = 1e-5 * (1 + np.abs(x))
        fd = (self.value(x + h, y) - self.value(x - h, y)) / (2 * h)
        an = self.dx(x, y)
        deriv = np.max(np.abs(fd - an) / (np.abs(an) + 1e-2 * (1 + np.abs(v))))
        return {"symmetry": float(sym), "derivative": float(deriv),
                "ok": bool(sym <= 1e-12 and deriv <= rtol)}


def _power_model(kind, m):
    def value(x, y):
        return (np.asarray(x) - y) ** m

    def dx(x, y):
        return m * (np.asarray(x) - y) ** (m - 1)

    def dxx(x, y):
        return m * (m - 1) * (np.asarray(x) - y) ** (m - 2)

    def dxy(x, y):
        return -m * (m - 1) * (np.asarray(x) - y) ** (m - 2)

    return PotentialModel(kind, value, dx, dxx, dxy, degree=m, has_closed_resonant=True)


quadratic = _power_model("quadratic", 2)
quartic = _power_model("quartic", 4)


def custom_potential(value, dx=None, dxx=None, dxy=None, degree=None, name="custom",
                     finite_difference=False, step=1e-5):
    """Wrap user callbacks as a :class:`PotentialModel`.

    Analytic ``dx`` is required unless ``finite_difference`` is set, which
    is meant for validation runs only.
    """
    if dx is None:
        if not finite_difference:
            raise ValueError("custom potentials must supply dx (or enable finite_difference)")

        def dx(x, y):
            h = step * (1 + np.abs(x))
            return (value(x + h, y) - value(x - h, y)) / (2 * h)

    return PotentialModel("custom", value, dx, dxx, dxy, degree=degree, name=name)


_BUILTIN = {"quadratic": quadratic, "quartic": quartic}


def get_model(name):
    try:
        return _BUILTIN[name]
    except KeyError:
        raise ValueError(f"no built-in potential named {name!r}") from None


def _check_dims(u, lattice):
    if u.shape[-1] != lattice.n_nodes:
        raise ValueError(f"state has {u.shape[-1]} nodes, lattice has {lattice.n_nodes}")


def hamiltonian(state, lattice, model, nu):
    """Total energy with unit-frequency harmonic pinning.

    The interaction sum runs over ordered neighbour pairs with prefactor
    ``nu / 2``, so every edge contributes ``nu * V``.
    """
    u = as_array(state)
    _check_dims(u, lattice)
    q = u.imag
    h = 0.5 * np.sum(u.real**2 + q**2, axis=-1)
    if nu and lattice.n_edges:
        a, b = lattice.edge_array.T
        h = h + 0.5 * nu * np.sum(model(q[..., a], q[..., b]) + model(q[..., b], q[..., a]), axis=-1)
    return h


def local_energy(state, lattice, model, nu, j):
    """Energy of oscillator ``j`` plus half of each bond it takes part in."""
    u = as_array(state)
    _check_dims(u, lattice)
    j = lattice.index(j)
    q = u.imag
    e = 0.5 * (u.real[..., j] ** 2 + q[..., j] ** 2)
    for k in lattice.neighbours(j):
        e = e + 0.5 * nu * model(q[..., j], q[..., k])
    return e


def lattice_to_config(lattice):
    if lattice.is_chain and lattice.nodes[0] == (0,):
        return {"dimension": 1, "chain_length": lattice.n_nodes - 1}
    return {"dimension": lattice.dimension, "nodes": [list(n) for n in lattice.nodes]}


def lattice_from_config(cfg):
    if "chain_length" in cfg:
        if int(cfg.get("dimension", 1)) != 1:
            raise ValueError("chain_length only valid for dimension 1")
        return build_chain(int(cfg["chain_length"]))
    if "nodes" in cfg:
        lat = build_lattice(cfg["nodes"])
        if "dimension" in cfg and int(cfg["dimension"]) != lat.dimension:
            raise ValueError("dimension does not match node coordinates")
        return lat
    raise ValueError("lattice config needs 'chain_length' or 'nodes'")


def profile_to_config(profile):
    return {"temperatures": list(profile.temperatures)}


def profile_from_config(cfg, lattice):
    if "temperatures" in cfg:
        prof = TemperatureProfile(tuple(cfg["temperatures"]), cfg.get("t_max", np.inf))
    elif "profile" in cfg:
        ends = cfg["profile"]
        if not lattice.is_chain:
            raise ValueError("linear profiles need a chain lattice")
        prof = linear_temperature_profile(float(ends[0]), float(ends[1]), lattice.n_nodes - 1)
    elif "temperature" in cfg:
        prof = uniform_temperature_profile(cfg["temperature"], lattice.n_nodes)
    else:
        raise ValueError("profile config needs 'temperatures', 'profile' or 'temperature'")
    if len(prof) != lattice.n_nodes:
        raise ValueError("temperature count does not match lattice size")
    return prof
