"""Integrators for the thermostatted oscillator lattice.

Four frames are available:

``laboratory`` / ``rotating``
    The full system in slow time.  Both integrate the rotating-frame
    variables ``a_j = e^{-i tau/eps} u_j`` by Euler-Maruyama with the exact
    Gaussian law of the rotated noise increment; they differ only in the
    variables handed to observers (``u`` for laboratory, ``a`` for rotating).
``effective``
    The resonantly averaged equation, split as exact OU half step, Euler step
    on the Hamiltonian drift, exact OU half step.
``ou``
    The uncoupled Ornstein-Uhlenbeck process, sampled exactly.

Random numbers come from :mod:`resonant_transport.rng`; draws are addressed
by ``(seed, trajectory, step, node, slot)``.  Slot 0 drives the dynamics,
slot 1 the initial conditions.
"""

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from .resavg import DEFAULT_POINTS, lab_drift, resonant_gradient
from .rng import make_stream
from .state import PhaseState, as_array

FRAMES = ("laboratory", "rotating", "effective", "ou")
STEP_FRACTION = 8  # h <= eps / STEP_FRACTION for the full system
DEFAULT_BURN_IN = 20.0
DYNAMICS_SLOT = 0
INITIAL_SLOT = 1

__all__ = [
    "FRAMES",
    "SimParams",
    "Series",
    "rotating_noise_covariance",
    "rotating_noise_increment",
    "to_lab_frame",
    "to_rotating_frame",
    "step_full_rotating",
    "step_ou_exact",
    "step_effective",
    "sample_mu0",
    "simulate",
    "write_trajectory_csv",
    "write_trajectory_npz",
]


@dataclass(frozen=True)
class SimParams:
    """Run parameters; ``nu = lam * eps`` is derived.

    ``record_every`` is the recording stride in slow time (defaults to one
    step).  With ``window_average`` the observers are evaluated every step and
    averaged over each recording window instead of sampled at its end.
    """

    eps: float = 0.05
    lam: float = 0.1
    h: float = 0.005
    tau_end: float = 1.0
    frame: str = "laboratory"
    seed: int = 0
    burn_in: float = 0.0
    replicas: int = 1
    first_trajectory: int = 0
    record_every: float = None
    window_average: bool = False
    quadrature_points: int = DEFAULT_POINTS
    resonant_mode: str = None

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if not 0 <= self.lam <= 1:
            raise ValueError("lam must lie in [0, 1]")
        if not self.h > 0 or not self.tau_end > 0:
            raise ValueError("h and tau_end must be positive")
        if self.frame in ("laboratory", "rotating") and self.h > self.eps / STEP_FRACTION * (1 + 1e-12):
            raise ValueError(f"h={self.h} exceeds eps/{STEP_FRACTION}={self.eps / STEP_FRACTION}")
        if not 0 <= self.burn_in < self.tau_end:
            raise ValueError("burn_in must lie in [0, tau_end)")
        if self.replicas < 1:
            raise ValueError("replicas must be positive")
        _n_steps(self.tau_end, self.h)
        _n_steps(self.burn_in, self.h)
        if self.record_every is not None:
            _n_steps(self.record_every, self.h)

    @property
    def nu(self):
        return self.lam * self.eps

    @property
    def n_steps(self):
        return _n_steps(self.tau_end, self.h)

    @property
    def burn_in_steps(self):
        return _n_steps(self.burn_in, self.h)

    @property
    def stride(self):
        return 1 if self.record_every is None else max(1, _n_steps(self.record_every, self.h))

    def replace(self, **changes):
        d = asdict(self)
        d.update(changes)
        return SimParams(**d)


def _n_steps(span, h):
    n = int(round(span / h))
    if abs(n * h - span) > 1e-9 * max(1.0, span):
        raise ValueError(f"{span} is not an integer multiple of the step {h}")
    return n


def _temps(profile):
    t = np.asarray(getattr(profile, "temperatures", profile), dtype=float)
    if np.any(t <= 0):
        raise ValueError("temperatures must be positive")
    return t


def rotating_noise_covariance(eps, tau, h, T):
    """Covariance of ``sqrt(2T) int_tau^{tau+h} e^{-i s/eps} d beta_s``.

    Returns ``(D11, D22, D12)`` for the (real, imaginary) parts, written in
    product form so that small ``h / eps`` does not cancel.  ``eps=np.inf``
    freezes the phase at zero.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("T must be positive")
    if np.isinf(eps):
        return 2 * T * h, 0.0 * T, 0.0 * T
    a = tau / eps
    b = (tau + h) / eps
    s = eps * np.sin(h / eps)
    d11 = T * (h + np.cos(a + b) * s)
    d22 = T * (h - np.cos(a + b) * s)
    d12 = -T * np.sin(a + b) * s
    return d11, d22, d12


def _sqrt_2x2(d11, d22, d12):
    # principal square root of a symmetric PSD 2x2 matrix
    det = np.maximum(d11 * d22 - d12 * d12, 0.0)
    s = np.sqrt(det)
    t = np.sqrt(d11 + d22 + 2 * s)
    return (d11 + s) / t, (d22 + s) / t, d12 / t


def rotating_noise_increment(eps, tau, h, T, z):
    """Sample the rotated noise increment from standard normals ``z``.

    ``z`` has a trailing axis of length 2; the result is complex with the
    shape of ``z[..., 0]``.
    """
    r11, r22, r12 = _sqrt_2x2(*rotating_noise_covariance(eps, tau, h, T))
    z0, z1 = z[..., 0], z[..., 1]
    return (r11 * z0 + r12 * z1) + 1j * (r12 * z0 + r22 * z1)


def to_lab_frame(a, tau, eps):
    """``u = e^{i tau/eps} a``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return PhaseState(np.exp(1j * tau / eps) * as_array(a))


def to_rotating_frame(u, tau, eps):
    """``a = e^{-i tau/eps} u``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return PhaseState(np.exp(-1j * tau / eps) * as_array(u))


def _check_nodes(u, lattice):
    if u.shape[-1] != lattice.n_nodes:
        raise ValueError(f"state has {u.shape[-1]} nodes, lattice has {lattice.n_nodes}")


def step_full_rotating(a, tau, h, eps, lam, lattice, model, T, z):
    """One Euler-Maruyama step of the rotating-frame system.

    ``z`` holds two standard normals per node (trailing axis).  Returns the
    new rotating-frame array.
    """
    a = as_array(a)
    _check_nodes(a, lattice)
    if h > eps / STEP_FRACTION * (1 + 1e-12):
        raise ValueError(f"h={h} exceeds eps/{STEP_FRACTION}")
    ph = np.exp(1j * tau / eps)
    drift = np.conj(ph) * lab_drift(ph * a, lam, lattice, model)
    return a + h * drift + rotating_noise_increment(eps, tau, h, T, z)


def step_ou_exact(u, h, T, z):
    """Exact transition of ``du = -u/2 dtau + sqrt(T) dbeta`` (complex beta)."""
    if not h > 0:
        raise ValueError("h must be positive")
    T = np.asarray(T, dtype=float)
    sd = np.sqrt(T * -np.expm1(-h))
    return np.exp(-0.5 * h) * as_array(u) + sd * (z[..., 0] + 1j * z[..., 1])


def step_effective(u, h, lam, lattice, model, T, z, mode=None, n_points=DEFAULT_POINTS):
    """OU half step, Euler step on ``lam * i grad H^res``, OU half step.

    ``z`` needs four normals per node.  With ``lam == 0`` this is exactly
    :func:`step_ou_exact` on the first pair of normals.
    """
    u = as_array(u)
    _check_nodes(u, lattice)
    if not lam:
        return step_ou_exact(u, h, T, z)
    u = step_ou_exact(u, 0.5 * h, T, z[..., 0:2])
    u = u + h * lam * 1j * resonant_gradient(u, lattice, model, mode, n_points)
    return step_ou_exact(u, 0.5 * h, T, z[..., 2:4])


def sample_mu0(profile, stream, slot=INITIAL_SLOT, step=0):
    """Draw from the product Gaussian ``mu0``: Re, Im ~ N(0, T_j) independently."""
    T = _temps(profile)
    z = stream.normals(step, slot)
    return PhaseState(np.sqrt(T) * (z[..., 0] + 1j * z[..., 1]))


@dataclass
class Series:
    """Recorded observables.

    ``tau`` has one entry per record; ``values[name]`` has the record axis
    first, then the replica axis, then any observable axes.
    """

    tau: np.ndarray
    values: dict = field(default_factory=dict)
    final: PhaseState = None
    params: SimParams = None

    def __len__(self):
        return len(self.tau)

    def __getitem__(self, name):
        return self.values[name]


def _named(observers):
    if not observers:
        return {}
    if isinstance(observers, dict):
        return dict(observers)
    return {f"obs{i}": f for i, f in enumerate(observers)}


def _record(x):
    x = np.asarray(x)
    return x if np.iscomplexobj(x) else x.astype(float)


def simulate(initial, params, lattice, model, profile, observers=None):
    """Advance ``initial`` from ``tau = 0`` to ``params.tau_end``.

    ``observers`` is a list or dict of callbacks ``f(tau, state) -> array``
    evaluated on the state in the frame's variables (lab-frame ``u`` for the
    ``laboratory``, ``effective`` and ``ou`` frames, ``a`` for ``rotating``).
    They are invoked every ``params.stride`` steps once ``burn_in`` has
    elapsed.  The initial state is in lab-frame variables for every frame.
    """
    T = _temps(profile)
    u = np.array(np.broadcast_to(as_array(initial), (params.replicas, lattice.n_nodes)))
    _check_nodes(u, lattice)
    if T.size != lattice.n_nodes:
        raise ValueError("profile size does not match lattice")
    stream = make_stream(params.seed, params.replicas, lattice.n_nodes, params.first_trajectory)
    obs = _named(observers)
    full = params.frame in ("laboratory", "rotating")
    eps, h, lam = params.eps, params.h, params.lam
    stride = params.stride
    taus = []
    records = {name: [] for name in obs}
    acc = {name: None for name in obs}
    state = u  # rotating-frame a for full runs; equals u at tau = 0

    def view(x, tau):
        if params.frame == "laboratory":
            return np.exp(1j * tau / eps) * x
        return x

    n_burn = params.burn_in_steps
    for n in range(params.n_steps):
        tau = n * h
        z = stream.normals(n, DYNAMICS_SLOT)
        if full:
            state = step_full_rotating(state, tau, h, eps, lam, lattice, model, T, z)
        elif params.frame == "effective":
            state = step_effective(state, h, lam, lattice, model, T, z,
                                   params.resonant_mode, params.quadrature_points)
        else:
            state = step_ou_exact(state, h, T, z)
        k = n + 1
        if not obs or k <= n_burn:
            continue
        t_now = k * h
        if params.window_average:
            v = view(state, t_now)
            for name, f in obs.items():
                val = _record(f(t_now, v))
                acc[name] = val if acc[name] is None else acc[name] + val
        if (k - n_burn) % stride == 0:
            taus.append(t_now)
            v = None if params.window_average else view(state, t_now)
            for name, f in obs.items():
                if params.window_average:
                    records[name].append(acc[name] / stride)
                    acc[name] = None
                else:
                    records[name].append(_record(f(t_now, v)))
    t_end = params.n_steps * h
    final = view(state, t_end) if params.frame == "laboratory" else state
    return Series(
        tau=np.array(taus),
        values={name: np.array(r) for name, r in records.items()},
        final=PhaseState(final),
        params=params,
    )


def write_trajectory_csv(path, taus, states, replica=0):
    """Write one replica as rows ``tau,node,re_u,im_u``.

    ``states`` is a sequence (or array with time first) of state arrays of
    shape ``(replicas, n_nodes)`` or ``(n_nodes,)``.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "node", "re_u", "im_u"])
        for tau, s in zip(taus, states):
            u = as_array(s)
            if u.ndim > 1:
                u = u[replica]
            for j, z in enumerate(u):
                w.writerow([repr(float(tau)), j, repr(float(z.real)), repr(float(z.imag))])


def write_trajectory_npz(path, taus, states):
    """Columnar binary dump: ``tau`` and complex ``u`` with time first."""
    np.savez(path, tau=np.asarray(taus, dtype=float),
             u=np.asarray([as_array(s) for s in states]))


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: returns ``(taus, u)``."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    taus = np.unique(rows[:, 0])
    n_nodes = int(rows[:, 1].max()) + 1
    u = (rows[:, 2] + 1j * rows[:, 3]).reshape(len(taus), n_nodes)
    return taus, u
