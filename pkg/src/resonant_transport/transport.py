"""Conductivity, Poisson solutions of the OU generator, Green-Kubo integrals.

Conventions: for a bond ``(k, j)`` the two-node state is an array whose last
axis holds ``(u_k, u_j)``.  The OU generator on that bond is

    A f = sum_l  T_l/2 (f_pp + f_qq)  -  (p f_p + q f_q)/2,

``eta_kj`` solves ``A eta_kj = J^res_kj`` with zero mean under ``mu0``, and the
conductivity is ``kappa = -<mu0, J^res eta> / (T_k T_j)``.  Equivalently
``kappa = (T_k T_j)^{-1} int_0^inf <mu0, J^res P_t J^res> dt``.

For the quartic bond ``kappa = 360 (T_k + T_j)^2``.  The leading-order
stationary flow of the weakly coupled system is ``lam * kappa/2 * (T_k - T_j)``;
:func:`first_order_flow_coefficient` returns that slope.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .dynamics import DEFAULT_BURN_IN, SimParams, step_ou_exact
from .lattice import build_chain, linear_temperature_profile, uniform_temperature_profile
from .observables import EstimatorResult, edge_flows, resonant_flow
from .observables import stationary_run
from .rng import make_stream
from .state import PhaseState, as_array

GAUSS_HERMITE_ORDER = 24
MIN_TAU_MAX = 10.0
METHODS = ("closed_form_quartic", "closed_form_quadratic", "ou_correlation")

__all__ = [
    "ConductivityQuery",
    "conductivity",
    "conductivity_constant",
    "first_order_flow_coefficient",
    "eta_closed_form",
    "generator_apply",
    "solve_eta",
    "ou_flow_correlation",
    "window_correlation_integral",
    "green_kubo_correlation",
    "green_kubo_correlations",
    "green_kubo_total",
    "fourier_sweep",
    "low_temperature_rescale",
]


def eta_closed_form(u, T_k, T_j, model_kind="quartic"):
    """Poisson solution ``eta_kj`` of ``A eta = J^res_kj`` for the built-ins.

    Quartic: ``(3/2) (i u_k . u_j) (|u_j - u_k|^2 + 4 (T_j + T_k))``.
    Quadratic: ``2 (i u_k . u_j)``.
    """
    u = as_array(u)
    uk, uj = u[..., 0], u[..., 1]
    s = uk.real * uj.imag - uk.imag * uj.real  # (i u_k) . u_j
    if model_kind == "quartic":
        return 1.5 * s * (np.abs(uj - uk) ** 2 + 4.0 * (T_j + T_k))
    if model_kind == "quadratic":
        return 2.0 * s
    raise ValueError(f"no closed-form eta for {model_kind!r}")


def generator_apply(f, u, T_k, T_j, step=1e-4):
    """``(A f)(u)`` for a two-node function by central differences.

    ``f`` maps arrays with last axis ``(u_k, u_j)`` to reals.  The step in
    each real coordinate is ``step * (|u| + 1)``.
    """
    u = as_array(u)
    if u.shape[-1] != 2:
        raise ValueError("generator_apply acts on two-node states")
    f0 = np.asarray(f(u), dtype=float)
    hs = step * (np.sqrt(np.sum(np.abs(u) ** 2, axis=-1)) + 1.0)
    out = np.zeros(np.shape(f0))
    for l, T in ((0, T_k), (1, T_j)):
        for unit, coord in ((1.0, u[..., l].real), (1j, u[..., l].imag)):
            e = np.zeros(u.shape, dtype=complex)
            e[..., l] = unit
            plus = np.asarray(f(u + hs[..., None] * e), dtype=float)
            minus = np.asarray(f(u - hs[..., None] * e), dtype=float)
            second = (plus - 2 * f0 + minus) / hs**2
            first = (plus - minus) / (2 * hs)
            out = out + 0.5 * T * second - 0.5 * coord * first
    return out


def _gauss_hermite_mean(func, T_k, T_j, order=GAUSS_HERMITE_ORDER):
    # E over mu0 on two nodes: Re and Im of u_l are independent N(0, T_l)
    x, w = hermegauss(order)
    w = w / math.sqrt(2 * math.pi)
    pk, qk, pj, qj = np.meshgrid(x, x, x, x, indexing="ij")
    weight = (w[:, None, None, None] * w[None, :, None, None]
              * w[None, None, :, None] * w[None, None, None, :])
    u = np.stack([math.sqrt(T_k) * (pk + 1j * qk), math.sqrt(T_j) * (pj + 1j * qj)], axis=-1)
    return float(np.sum(weight * func(u)))


def _closed_form_kappa(T_k, T_j, kind, order=GAUSS_HERMITE_ORDER):
    from .lattice import get_model

    model = get_model(kind)

    def integrand(u):
        return resonant_flow(model, u[..., 0], u[..., 1]) * eta_closed_form(u, T_k, T_j, kind)

    return -_gauss_hermite_mean(integrand, T_k, T_j, order) / (T_k * T_j)


def conductivity_constant(order=GAUSS_HERMITE_ORDER):
    """``C`` in ``kappa = C (T_k + T_j)^2`` for the quartic bond, by quadrature."""
    return _closed_form_kappa(1.0, 1.0, "quartic", order) / 4.0


def first_order_flow_coefficient(T_k, T_j, kind="quartic"):
    """Slope of ``<J_kj>`` in ``lam * (T_k - T_j)`` as ``lam -> 0``: ``kappa / 2``."""
    return 0.5 * _closed_form_kappa(T_k, T_j, kind)


@dataclass(frozen=True)
class ConductivityQuery:
    """Arguments of :func:`conductivity`.

    ``dt`` is the sampling step of the OU paths and ``horizon`` the length of
    each stationary path used for the correlation estimate.
    """

    T_k: float
    T_j: float
    model: str = "quartic"
    method: str = "closed_form_quartic"
    tau_max: float = 20.0
    replicas: int = 200
    horizon: float = 500.0
    dt: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not (self.T_k > 0 and self.T_j > 0):
            raise ValueError("temperatures must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.tau_max < MIN_TAU_MAX:
            raise ValueError(f"tau_max must be at least {MIN_TAU_MAX}")
        if self.method == "closed_form_quartic" and self.model != "quartic":
            raise ValueError("closed_form_quartic needs the quartic model")
        if self.method == "closed_form_quadratic" and self.model != "quadratic":
            raise ValueError("closed_form_quadratic needs the quadratic model")
        if self.method == "ou_correlation" and self.horizon <= self.tau_max:
            raise ValueError("horizon must exceed tau_max")


def conductivity(query):
    """Conductivity ``kappa(T_k, T_j)`` as an :class:`EstimatorResult`.

    Closed-form methods give SE 0; ``ou_correlation`` integrates the
    stationary OU autocorrelation of ``J^res`` up to ``tau_max``.
    """
    if query.method.startswith("closed_form"):
        kind = query.method.split("_", 2)[2]
        return EstimatorResult.exact(_closed_form_kappa(query.T_k, query.T_j, kind),
                                     f"kappa[{kind}]")
    from .lattice import get_model

    model = get_model(query.model)
    y = ou_flow_correlation(model, query.T_k, query.T_j, query.tau_max, query.replicas,
                            query.horizon, query.dt, query.seed)
    return y.scaled(1.0 / (query.T_k * query.T_j), "kappa[ou_correlation]")


def ou_flow_correlation(model, T_k, T_j, tau_max=20.0, replicas=200, horizon=500.0, dt=0.05,
                        seed=0):
    """``int_0^tau_max <mu0, J^res P_t J^res> dt`` from stationary OU paths.

    Each replica is one exact OU path started in ``mu0``; the lag
    correlation is taken over all time origins of the path (trapezoid rule in
    the lag).  Replicas are the batches of the returned estimate.
    """
    n = int(round(horizon / dt))
    m = int(round(tau_max / dt))
    T = np.array([T_k, T_j])
    stream = make_stream(seed, replicas, 2, 0)
    z = stream.normals(0, 1)
    u = np.sqrt(T) * (z[..., 0] + 1j * z[..., 1])
    path = np.empty((n, replicas))
    for t in range(n):
        path[t] = resonant_flow(model, u[:, 0], u[:, 1])
        u = step_ou_exact(u, dt, T, stream.normals(t, 0))
    c = _lag_covariance(path, path, m, centre=0.0)
    w = np.full(m + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    per_replica = c @ w
    return EstimatorResult.from_batches(per_replica, [1] * replicas, "ou_flow_correlation")


def _lag_covariance(x, y, max_lag, centre):
    """Per-replica ``mean_t (x_t - c)(y_{t+n} - c)`` for ``n = 0..max_lag``.

    ``x`` and ``y`` have time first; returns ``(replicas, max_lag + 1)``.
    """
    n = x.shape[0]
    xc = x - centre
    yc = y - centre
    size = 1 << int(np.ceil(np.log2(2 * n)))
    fx = np.fft.rfft(xc, size, axis=0)
    fy = np.fft.rfft(yc, size, axis=0)
    corr = np.fft.irfft(np.conj(fx) * fy, size, axis=0)[: max_lag + 1]
    counts = (n - np.arange(max_lag + 1))[:, None]
    return (corr / counts).T


def solve_eta(u, model, T_k, T_j, tau_max=20.0, replicas=20_000, dt=0.05, seed=0, first=0,
              control=True):
    """Monte-Carlo ``eta(u) = -int_0^tau_max E_u J^res(u(t)) dt`` along OU paths.

    ``u`` is a single two-node state ``(u_k, u_j)``.  The path is
    ``u(t) = e^{-t/2} u + X(t)`` with ``X`` the OU path started at 0.  With
    ``control`` each replica averages the antithetic pair ``X, -X`` and
    subtracts the flow along ``X`` itself; ``X`` is Gaussian and rotation
    invariant at every time, so that flow has mean zero and the estimator
    stays unbiased while the stationary fluctuations cancel.  Returns an
    :class:`EstimatorResult` whose batches are the replicas.
    """
    u0 = as_array(u).reshape(2)
    T = np.array([T_k, T_j])
    m = int(round(tau_max / dt))
    stream = make_stream(seed, replicas, 2, first)
    x = np.broadcast_to(u0, (replicas, 2)).copy()

    def flow(x, t):
        out = resonant_flow(model, x[:, 0], x[:, 1])
        if control:
            mean = np.exp(-0.5 * t * dt) * u0  # OU is affine in the start point
            anti = 2 * mean - x
            out = 0.5 * (out + resonant_flow(model, anti[:, 0], anti[:, 1]))
            out = out - resonant_flow(model, x[:, 0] - mean[0], x[:, 1] - mean[1])
        return out

    acc = 0.5 * dt * flow(x, 0)
    for t in range(m):
        x = step_ou_exact(x, dt, T, stream.normals(t, 0))
        w = 0.5 * dt if t == m - 1 else dt
        acc = acc + w * flow(x, t + 1)
    return EstimatorResult.from_batches(-acc, [1] * replicas, "eta")


def window_correlation_integral(x, y, dt, tau_max, centre=None):
    """One-sided correlation integral from window-averaged series.

    ``x`` and ``y`` are window averages over consecutive intervals of length
    ``dt`` (time first, replicas second).  Uses
    ``int_0^inf C_xy ~ dt (C_0/2 + sum_{n>=1} C_n)``, which is exact for a
    symmetric correlation because the triangular window kernels sum to one.
    Returns one value per replica.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x, y = x[:, None], y[:, None]
    m = int(round(tau_max / dt))
    if m >= x.shape[0]:
        raise ValueError("series shorter than the correlation cutoff")
    if centre is None:
        centre = 0.5 * (x.mean() + y.mean())
    c = _lag_covariance(x - x.mean() + centre, y - y.mean() + centre, m, centre)
    w = np.full(m + 1, dt)
    w[0] = 0.5 * dt
    return c @ w


def _flow_series(params, lattice, model, profile, combos, initial=None):
    """Window-averaged edge-flow combinations along stationary paths.

    ``combos`` maps a name to a vector of per-edge weights.
    """
    weights = {name: np.asarray(w, dtype=float) for name, w in combos.items()}

    def make(wvec):
        return lambda tau, u: edge_flows(u, lattice, model) @ wvec

    obs = {name: make(w) for name, w in weights.items()}
    return stationary_run(params, lattice, model, profile, obs, initial)


def _edge_weights(lattice, k, j):
    w = np.zeros(lattice.n_edges)
    k, j = lattice.index(k), lattice.index(j)
    a, b = sorted((k, j))
    i = lattice.edges.index((a, b))
    w[i] = 1.0 if (k, j) == (a, b) else -1.0
    return w


def _gk_params(params, record_every):
    changes = {"window_average": True, "record_every": record_every}
    if params.frame == "rotating":
        changes["frame"] = "laboratory"
    return params.replace(**changes)


def green_kubo_correlations(pairs, params, lattice, model, profile, tau_max=20.0,
                            record_every=0.1):
    """Several correlation integrals ``Y[kj, ml]`` from one set of stationary paths.

    ``pairs`` is a sequence of ``((k, j), (m, l))``.  Returns a list of
    :class:`EstimatorResult` in the same order (replicas are the batches).
    """
    pairs = [(tuple(a), tuple(b)) for a, b in pairs]
    combos = {}
    for a, b in pairs:
        for k, j in (a, b):
            if not lattice.are_neighbours(k, j):
                raise ValueError(f"({k}, {j}) is not an edge")
            combos[f"{k},{j}"] = _edge_weights(lattice, k, j)
    p = _gk_params(params, record_every)
    s = _flow_series(p, lattice, model, profile, combos)
    dt = p.h * p.stride
    out = []
    for (k, j), (m, l) in pairs:
        y = window_correlation_integral(s[f"{k},{j}"], s[f"{m},{l}"], dt, tau_max)
        out.append(EstimatorResult.from_batches(y, [1] * len(y), f"Y[{k}{j},{m}{l}]"))
    return out


def green_kubo_correlation(k, j, m, l, params, lattice, model, profile, tau_max=20.0,
                           record_every=0.1):
    """Centered correlation integral of ``J_kj`` against later ``J_ml``.

    Estimated from stationary full-system paths (one path per replica; the
    replicas are the batches of the result).
    """
    return green_kubo_correlations([((k, j), (m, l))], params, lattice, model, profile,
                                   tau_max, record_every)[0]


def green_kubo_total(N, T_hat, params, model, tau_max=20.0, record_every=0.1):
    """``(T_hat^2 N)^{-1} int_0^inf <sum J, P_t sum J>`` on the chain ``0..N``."""
    lattice = build_chain(N)
    profile = uniform_temperature_profile(T_hat, lattice.n_nodes)
    p = _gk_params(params, record_every)
    total = np.ones(lattice.n_edges)
    s = _flow_series(p, lattice, model, profile, {"x": total})
    y = window_correlation_integral(s["x"], s["x"], p.h * p.stride, tau_max)
    return EstimatorResult.from_batches(y / (T_hat**2 * N), [1] * len(y), f"kappa_hat[N={N}]")


def fourier_sweep(N_list, lam, eps, T0, T1, model, x_grid=(0.25, 0.5, 0.75), params=None,
                  batch_length=10.0):
    """Scaled stationary flow through the points ``x`` of a linear profile.

    For each ``N`` one stationary simulation measures every edge.  The flow
    through ``x`` is ``J_{j_x + 1, j_x}`` with ``j_x = floor(x N)``.  Rows hold
    the measured ``(N / lam) <J>``, its SE, the conductivity prediction
    ``kappa_hat(T(x)) T'(x)`` and the first-order prediction (half of it).
    """
    from .observables import time_average

    if params is None:
        params = SimParams(eps=eps, lam=lam, h=eps / 8, tau_end=DEFAULT_BURN_IN + 200.0,
                           burn_in=DEFAULT_BURN_IN, replicas=50)
    else:
        params = params.replace(eps=eps, lam=lam)
    p = _gk_params(params, params.record_every or 0.1)
    grad = T1 - T0
    rows = []
    for N in N_list:
        lattice = build_chain(N)
        profile = linear_temperature_profile(T0, T1, N)
        combos = {}
        for x in x_grid:
            if not 0 <= x < 1:
                raise ValueError("x must lie in [0, 1)")
            jx = int(math.floor(x * N))
            combos[f"x={x}"] = _edge_weights(lattice, jx + 1, jx)
        s = _flow_series(p, lattice, model, profile, combos)
        for x in x_grid:
            jx = int(math.floor(x * N))
            est = time_average(s, f"x={x}", batch_length)
            Tx = T1 * x + T0 * (1 - x)
            kap = _closed_form_kappa(Tx, Tx, model.kind) if model.has_closed_resonant else float("nan")
            rows.append({
                "N": N, "x": x, "j_x": jx, "T_x": Tx,
                "scaled_flow": N / lam * est.mean,
                "scaled_flow_se": N / lam * est.standard_error,
                "predicted": kap * grad,
                "predicted_first_order": 0.5 * kap * grad,
            })
    return rows


def low_temperature_rescale(state, delta, m):
    """Map a low-temperature state to the weakly coupled scaling.

    ``p = sqrt(delta) p~``, ``q = sqrt(delta) q~`` and ``lam = delta^((m-2)/2)``
    for a homogeneous interaction of degree ``m >= 3``.
    """
    if m < 3:
        raise ValueError("the interaction degree must be at least 3")
    if not delta > 0:
        raise ValueError("delta must be positive")
    return PhaseState(math.sqrt(delta) * as_array(state)), delta ** ((m - 2) / 2)
