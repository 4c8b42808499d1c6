"""Fast invariant checks of every module, used by ``validate``.

Each check returns a row ``{name, value, tolerance, passed, detail}``.
Failures are reported in the rows, never raised.
"""

import math

import numpy as np

from .dynamics import (
    rotating_noise_covariance,
    sample_mu0,
    step_effective,
    step_ou_exact,
)
from .lattice import build_chain, get_model, hamiltonian, local_energy
from .observables import energy_flow, resonant_flow, resonant_flow_quadrature
from .resavg import (
    angle_derivative,
    effective_drift,
    effective_drift_quadrature,
    resonant_average,
    rotation_nodes,
    resonant_potential,
)
from .rng import make_stream
from .transport import (
    ConductivityQuery,
    conductivity,
    conductivity_constant,
    eta_closed_form,
    generator_apply,
)

__all__ = ["run_all", "random_states", "random_polynomial", "orbit_scale",
           "generator_identity_error"]


def random_states(rng, n, n_nodes, scale=1.0):
    return scale * (rng.normal(size=(n, n_nodes)) + 1j * rng.normal(size=(n, n_nodes)))


def random_polynomial(rng, n_nodes, n_terms=6, max_degree=4):
    """Real part of a random polynomial in ``(u, conj u)``.

    Returns ``f`` acting on arrays with nodes on the last axis; the total
    degree of each monomial is at most ``2 * max_degree``.
    """
    terms = []
    for _ in range(n_terms):
        a = rng.integers(0, max_degree + 1, size=n_nodes)
        b = rng.integers(0, max_degree + 1, size=n_nodes)
        while a.sum() + b.sum() > 2 * max_degree:
            k = rng.integers(n_nodes)
            a[k] = max(0, a[k] - 1)
            b[k] = max(0, b[k] - 1)
        c = complex(rng.normal(), rng.normal())
        terms.append((c, a, b))

    def f(u):
        out = 0.0
        for c, a, b in terms:
            out = out + c * np.prod(u**a * np.conj(u) ** b, axis=-1)
        return np.real(out)

    return f


def orbit_scale(f, u, n_points=16):
    """``1 + max |f|`` over the rotation orbits of the states ``u``.

    Finite-difference and quadrature errors scale with the size of ``f``,
    not with the size of its (often heavily cancelled) averages, so
    property checks are normalised by this.
    """
    ph = np.exp(1j * rotation_nodes(n_points)).reshape((-1,) + (1,) * np.ndim(u))
    return 1.0 + float(np.max(np.abs(f(ph * u))))


def _row(name, value, tol, passed, detail=""):
    return {"name": name, "value": float(value), "tolerance": tol, "passed": bool(passed),
            "detail": detail}


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def generator_identity_error(rng, n=100, T=(1.0, 2.0), scale=1.0, perturb=0.0):
    """Largest relative error of ``A eta = J^res`` (quartic) at ``n`` random states."""
    Tk, Tj = T
    u = random_states(rng, n, 2, scale)

    def eta(x):
        return (1.0 + perturb) * eta_closed_form(x, Tk, Tj, "quartic")

    lhs = generator_apply(eta, u, Tk, Tj)
    rhs = resonant_flow(get_model("quartic"), u[:, 0], u[:, 1])
    return _rel(lhs, rhs)


def run_all(seed=0, n_states=1000, n_samples=1_000_000):
    """Run the suite; returns a list of rows."""
    rng = np.random.default_rng(seed)
    rows = []
    quartic, quadratic = get_model("quartic"), get_model("quadratic")

    # lattice
    for m in (quadratic, quartic):
        c = m.check(rng=rng)
        rows.append(_row(f"potential_symmetry[{m.kind}]", c["symmetry"], 1e-12,
                         c["symmetry"] <= 1e-12))
        rows.append(_row(f"potential_derivative[{m.kind}]", c["derivative"], 1e-6,
                         c["derivative"] <= 1e-6))
    lat = build_chain(4)
    u = random_states(rng, 50, lat.n_nodes)
    for m in (quadratic, quartic):
        h = hamiltonian(u, lat, m, 0.3)
        s = sum(local_energy(u, lat, m, 0.3, j) for j in range(lat.n_nodes))
        rows.append(_row(f"local_energy_sum[{m.kind}]", _rel(s, h), 1e-12, _rel(s, h) <= 1e-12))
    ok = all(build_chain(N).n_edges == N for N in (1, 3, 10))
    rows.append(_row("chain_edge_count", 0.0 if ok else 1.0, 0, ok))

    # resonant averaging
    uj, uk = random_states(rng, n_states, 2).T
    for m in (quadratic, quartic):
        quad = resonant_average(
            lambda v: m(v[..., 0].imag, v[..., 1].imag), np.stack([uj, uk], -1), 16)
        err = _rel(quad, resonant_potential(m, uj, uk))
        rows.append(_row(f"resonant_closed_form[{m.kind}]", err, 1e-10, err <= 1e-10))

    f = random_polynomial(rng, 3)
    u = random_states(rng, 20, 3)
    xi = rng.uniform(0, 2 * np.pi, size=20)
    a = resonant_average(f, np.exp(1j * xi)[:, None] * u, 16)
    b = resonant_average(f, u, 16)
    err = float(np.max(np.abs(a - b))) / orbit_scale(f, u)
    rows.append(_row("resavg_rotation_invariance", err, 1e-8, err <= 1e-8))
    lhs = resonant_average(lambda v: angle_derivative(f, v, 1), u, 16)
    rhs = angle_derivative(lambda v: resonant_average(f, v, 16), u, 1)
    err = float(np.max(np.abs(lhs - rhs))) / orbit_scale(f, u)
    rows.append(_row("resavg_derivative_commutation", err, 1e-8, err <= 1e-8))
    g = random_polynomial(rng, 2)
    u2 = random_states(rng, 20, 2)
    dj = angle_derivative(lambda v: resonant_average(g, v, 16), u2, 0)
    dk = angle_derivative(lambda v: resonant_average(g, v, 16), u2, 1)
    err = float(np.max(np.abs(dj + dk))) / orbit_scale(g, u2)
    rows.append(_row("resavg_two_node_antisymmetry", err, 1e-8, err <= 1e-8))
    err = float(np.max(np.abs(resonant_average(f, u, 16) - resonant_average(f, u, 256))))
    rows.append(_row("resavg_quadrature_exactness", err, 1e-12, err <= 1e-12))

    lat3 = build_chain(3)
    u = random_states(rng, n_states, lat3.n_nodes)
    d1 = effective_drift(u, 0.7, lat3, quartic)
    d2 = effective_drift_quadrature(u, 0.7, lat3, quartic, 64)
    err = float(np.max(np.abs(d1 - d2)) / np.max(np.abs(d1)))
    rows.append(_row("effective_drift_quadrature", err, 1e-9, err <= 1e-9))
    xi = rng.uniform(0, 2 * np.pi, size=(n_states, 1))
    r1 = effective_drift(np.exp(1j * xi) * u, 0.7, lat3, quartic)
    err = float(np.max(np.abs(r1 - np.exp(1j * xi) * d1)) / np.max(np.abs(d1)))
    rows.append(_row("effective_drift_equivariance", err, 1e-12, err <= 1e-12))

    # observables
    u = random_states(rng, n_states, lat.n_nodes)
    err = float(np.max(np.abs(energy_flow(u, quartic, 1, 2) + energy_flow(u, quartic, 2, 1))))
    rows.append(_row("flow_antisymmetry", err, 0, err == 0))
    uk, uj = random_states(rng, n_states, 2).T
    err = float(np.max(np.abs(resonant_flow(quartic, uk, uj) + resonant_flow(quartic, uj, uk))))
    rows.append(_row("resonant_flow_antisymmetry", err, 0, err == 0))
    err = _rel(resonant_flow_quadrature(quartic, uk, uj), resonant_flow(quartic, uk, uj))
    rows.append(_row("resonant_flow_quadrature", err, 1e-8, err <= 1e-8))
    pair = np.stack([uk, uj], -1)
    ident = 2 * angle_derivative(lambda v: resonant_potential(quartic, v[..., 1], v[..., 0]),
                                 pair, 0)
    err = float(np.max(np.abs(ident - resonant_flow(quartic, uk, uj)))
                / np.max(np.abs(ident)))
    rows.append(_row("resonant_flow_angle_identity", err, 1e-9, err <= 1e-9,
                     "J_res_kj = 2 d/dphi_k V_res"))

    # dynamics
    tr = []
    for eps, tau, h in ((0.1, 0.0, 0.0125), (0.03, 1.7, 0.002), (1.0, 0.3, 0.5)):
        d11, d22, _ = rotating_noise_covariance(eps, tau, h, 1.3)
        tr.append(abs(d11 + d22 - 2 * 1.3 * h) / (2 * 1.3 * h))
    rows.append(_row("rotating_noise_trace", max(tr), 1e-12, max(tr) <= 1e-12))
    T = np.array([1.0, 2.0])
    R = max(1, n_samples // 2)
    u = sample_mu0(T, make_stream(seed, R, 2)).u
    I = 0.5 * np.abs(u) ** 2
    z = []
    for j in range(2):
        for val, target in ((I[:, j], T[j]), (I[:, j] ** 2, 2 * T[j] ** 2)):
            z.append(abs(val.mean() - target) / (val.std() / math.sqrt(len(val))))
    rows.append(_row("mu0_action_moments_se", max(z), 4.0, max(z) <= 4.0))
    lat1 = build_chain(1)
    s = make_stream(seed + 1, 64, 2)
    u0 = sample_mu0(T, s).u
    zz = s.normals(0, 0)
    same = np.array_equal(step_effective(u0, 0.01, 0.0, lat1, quartic, T, zz),
                          step_ou_exact(u0, 0.01, T, zz))
    rows.append(_row("effective_lambda0_is_ou", 0.0 if same else 1.0, 0, same))

    # transport
    err = generator_identity_error(rng)
    rows.append(_row("generator_identity", err, 1e-5, err <= 1e-5))
    canary = generator_identity_error(rng, perturb=1e-3)
    rows.append(_row("generator_identity_canary", canary, 1e-5, canary > 1e-5,
                     "eta scaled by 1+1e-3 must break the identity"))
    k = lambda a, b: conductivity(ConductivityQuery(a, b)).mean
    sym = abs(k(1.0, 2.0) - k(2.0, 1.0)) / k(1.0, 2.0)
    rows.append(_row("kappa_symmetry", sym, 1e-12, sym <= 1e-12))
    law = max(abs(k(a, a) / k(1.0, 1.0) - a * a) / (a * a) for a in (2.0, 3.0))
    rows.append(_row("kappa_quadratic_law", law, 1e-12, law <= 1e-12))
    ratio = k(1.0, 1.0) / k(2.0, 2.0)
    rows.append(_row("kappa_ratio_11_22", abs(ratio - 0.25), 1e-12, abs(ratio - 0.25) <= 1e-12))
    pos = min(k(a, b) for a, b in ((0.5, 1.0), (1.0, 1.0), (2.0, 3.0)))
    rows.append(_row("kappa_positive", pos, 0, pos > 0))
    from .harness import FROZEN_C

    c = conductivity_constant()
    rows.append(_row("conductivity_constant_C", c, 1e-9, abs(c - FROZEN_C) <= 1e-9 * FROZEN_C,
                     f"frozen {FROZEN_C}"))
    q1 = conductivity(ConductivityQuery(1.0, 1.0, "quadratic", "closed_form_quadratic")).mean
    q2 = conductivity(ConductivityQuery(0.5, 3.0, "quadratic", "closed_form_quadratic")).mean
    rows.append(_row("quadratic_kappa_temperature_independent", abs(q1 - q2) / q1, 1e-12,
                     abs(q1 - q2) <= 1e-12 * q1, f"kappa = {q1!r}"))
    return rows
