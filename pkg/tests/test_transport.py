import math

import numpy as np
import pytest
import sympy as sp

from resonant_transport.dynamics import SimParams
from resonant_transport.lattice import build_chain, get_model
from resonant_transport.observables import resonant_flow
from resonant_transport.state import PhaseState
from resonant_transport.transport import (
    ConductivityQuery,
    conductivity,
    conductivity_constant,
    eta_closed_form,
    first_order_flow_coefficient,
    fourier_sweep,
    generator_apply,
    green_kubo_correlations,
    low_temperature_rescale,
    ou_flow_correlation,
    solve_eta,
    window_correlation_integral,
)
from resonant_transport.validation import generator_identity_error, random_polynomial, random_states

quartic = get_model("quartic")
quadratic = get_model("quadratic")

pk, qk, pj, qj = sp.symbols("p_k q_k p_j q_j", real=True)
Tk, Tj = sp.symbols("T_k T_j", positive=True)


def _gauss_mean(expr):
    """E of a polynomial in (p_k, q_k, p_j, q_j), independent N(0, T_l) coordinates."""
    var = {pk: Tk, qk: Tk, pj: Tj, qj: Tj}
    out = 0
    poly = sp.Poly(sp.expand(expr), pk, qk, pj, qj)
    for powers, coeff in poly.terms():
        term = coeff
        for x, n in zip((pk, qk, pj, qj), powers):
            term *= 0 if n % 2 else sp.factorial2(n - 1) * var[x] ** sp.Rational(n, 2)
        out += term
    return sp.simplify(out)


def _sym_forms(kind):
    s = pk * qj - qk * pj  # (i u_k) . u_j
    d2 = (pj - pk) ** 2 + (qj - qk) ** 2
    if kind == "quartic":
        return -3 * s * d2, sp.Rational(3, 2) * s * (d2 + 4 * (Tj + Tk))
    return -2 * s, 2 * s


def _sym_generator(f):
    out = 0
    for p, q, T in ((pk, qk, Tk), (pj, qj, Tj)):
        out += T / 2 * (sp.diff(f, p, 2) + sp.diff(f, q, 2)) - (p * sp.diff(f, p) + q * sp.diff(f, q)) / 2
    return sp.expand(out)


# ---------------------------------------------------------------- oracles


@pytest.mark.parametrize("kind", ["quartic", "quadratic"])
def test_symbolic_generator_identity(kind):
    J, eta = _sym_forms(kind)
    assert sp.expand(_sym_generator(eta) - J) == 0


def test_symbolic_kappa_quartic():
    J, eta = _sym_forms("quartic")
    kappa = sp.factor(-_gauss_mean(J * eta) / (Tk * Tj))
    assert sp.simplify(kappa - 360 * (Tk + Tj) ** 2) == 0
    assert conductivity_constant() == pytest.approx(360.0, rel=1e-12)
    assert conductivity(ConductivityQuery(1.0, 1.0)).mean == pytest.approx(1440.0, rel=1e-12)


def test_symbolic_kappa_quadratic():
    J, eta = _sym_forms("quadratic")
    assert sp.simplify(-_gauss_mean(J * eta) / (Tk * Tj)) == 8
    q = conductivity(ConductivityQuery(0.5, 3.0, "quadratic", "closed_form_quadratic"))
    assert q.mean == pytest.approx(8.0, rel=1e-12)


def test_resonant_flow_has_zero_mu0_mean_symbolically():
    for kind in ("quartic", "quadratic"):
        assert _gauss_mean(_sym_forms(kind)[0]) == 0


def test_closed_forms_match_symbolic_expressions(rng):
    u = random_states(rng, 20, 2)
    for kind in ("quartic", "quadratic"):
        J, eta = _sym_forms(kind)
        fJ = sp.lambdify((pk, qk, pj, qj), J)
        fe = sp.lambdify((pk, qk, pj, qj, Tk, Tj), eta)
        args = (u[:, 0].real, u[:, 0].imag, u[:, 1].real, u[:, 1].imag)
        np.testing.assert_allclose(resonant_flow(get_model(kind), u[:, 0], u[:, 1]), fJ(*args),
                                   rtol=1e-12)
        np.testing.assert_allclose(eta_closed_form(u, 1.3, 0.4, kind), fe(*args, 1.3, 0.4),
                                   rtol=1e-12)


# ---------------------------------------------------------------- kappa


def test_kappa_symmetry_ratio_and_law():
    k = lambda a, b: conductivity(ConductivityQuery(a, b)).mean
    assert k(1.0, 2.0) == pytest.approx(k(2.0, 1.0), rel=1e-12)
    assert k(1.0, 1.0) / k(2.0, 2.0) == pytest.approx(0.25, rel=1e-12)
    for a in (2.0, 3.0):
        assert k(a * 0.7, a * 0.7) / k(0.7, 0.7) == pytest.approx(a * a, rel=1e-12)
    assert min(k(0.1, 0.2), k(3.0, 5.0)) > 0


def test_first_order_coefficient():
    assert first_order_flow_coefficient(2.0, 1.0) == pytest.approx(0.5 * 360 * 9)


def test_query_validation():
    with pytest.raises(ValueError):
        ConductivityQuery(0.0, 1.0)
    with pytest.raises(ValueError):
        ConductivityQuery(1.0, 1.0, tau_max=5.0)
    with pytest.raises(ValueError):
        ConductivityQuery(1.0, 1.0, method="guess")
    with pytest.raises(ValueError):
        ConductivityQuery(1.0, 1.0, model="quadratic", method="closed_form_quartic")


@pytest.mark.slow
@pytest.mark.parametrize("Tk_,Tj_", [(1.0, 1.0), (1.0, 2.0), (2.0, 3.0)])
def test_ou_correlation_matches_closed_form(Tk_, Tj_):
    q = ConductivityQuery(Tk_, Tj_, method="ou_correlation", replicas=1000, horizon=1000.0)
    est = conductivity(q)
    exact = conductivity(ConductivityQuery(Tk_, Tj_)).mean
    assert abs(est.mean / exact - 1) <= 0.05


def test_ou_correlation_quadratic_small():
    est = ou_flow_correlation(quadratic, 1.0, 1.0, tau_max=20.0, replicas=200, horizon=400.0)
    assert est.mean == pytest.approx(8.0, rel=0.1)


def test_tail_beyond_cutoff_is_small():
    a = ou_flow_correlation(quadratic, 1.0, 1.0, tau_max=10.0, replicas=100, horizon=300.0, seed=4)
    b = ou_flow_correlation(quadratic, 1.0, 1.0, tau_max=20.0, replicas=100, horizon=300.0, seed=4)
    assert abs(a.mean - b.mean) < b.standard_error


# ---------------------------------------------------------------- generator


def test_generator_examples(rng):
    u = random_states(rng, 50, 2)
    assert np.max(np.abs(generator_apply(lambda v: np.full(v.shape[:-1], 3.0), u, 1.0, 2.0))) < 1e-6
    I = generator_apply(lambda v: 0.5 * np.abs(v[..., 0]) ** 2, u, 1.5, 2.0)
    np.testing.assert_allclose(I, 1.5 - 0.5 * np.abs(u[:, 0]) ** 2, rtol=1e-6, atol=1e-6)
    with pytest.raises(ValueError):
        generator_apply(lambda v: v[..., 0].real, np.zeros((2, 3)), 1.0, 1.0)


def test_generator_matches_symbolic_on_polynomials(rng):
    for _ in range(3):
        coeffs = rng.normal(size=6)
        mons = [pk**2 * qj, qk**3, pk * pj * qj**2, qk * qj, pj**4, pk * qk * pj * qj]
        f = sum(c * m for c, m in zip(coeffs, mons))
        Af = sp.lambdify((pk, qk, pj, qj), _sym_generator(f).subs({Tk: 0.7, Tj: 1.9}))
        fn = sp.lambdify((pk, qk, pj, qj), f)
        u = random_states(rng, 20, 2)
        got = generator_apply(lambda v: fn(v[..., 0].real, v[..., 0].imag, v[..., 1].real,
                                           v[..., 1].imag), u, 0.7, 1.9)
        want = Af(u[:, 0].real, u[:, 0].imag, u[:, 1].real, u[:, 1].imag)
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-5 * np.max(np.abs(want)))


def test_generator_identity_and_canary(rng):
    assert generator_identity_error(rng) <= 1e-5
    assert generator_identity_error(rng, perturb=1e-3) > 1e-5


# ---------------------------------------------------------------- eta


def test_eta_at_origin():
    assert solve_eta(np.zeros(2), quartic, 1.0, 2.0, replicas=10).mean == 0.0
    est = solve_eta(np.zeros(2), quartic, 1.0, 2.0, replicas=4000, control=False)
    assert abs(est.mean) <= 4 * est.standard_error


@pytest.mark.slow
def test_eta_matches_closed_form():
    rng = np.random.default_rng(1)
    for i in range(10):
        u = rng.normal(size=2) + 1j * rng.normal(size=2)
        est = solve_eta(u, quartic, 1.0, 2.0, replicas=10_000, seed=i)
        exact = eta_closed_form(u, 1.0, 2.0)
        assert abs(est.mean / exact - 1) <= 0.05, (i, est, exact)


def test_eta_antisymmetry():
    u = np.array([0.9 - 0.4j, -0.3 + 1.2j])
    a = solve_eta(u, quartic, 1.0, 2.0, replicas=4000, seed=3)
    b = solve_eta(u[::-1], quartic, 2.0, 1.0, replicas=4000, seed=4)
    assert abs(a.mean + b.mean) <= 4 * math.hypot(a.standard_error, b.standard_error)
    assert abs(a.mean) > 10 * a.standard_error


def test_eta_control_is_unbiased():
    u = np.array([0.5 + 0.5j, -1.0])
    a = solve_eta(u, quartic, 1.0, 1.0, replicas=20_000, seed=1, control=False)
    b = solve_eta(u, quartic, 1.0, 1.0, replicas=2000, seed=2)
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.standard_error, b.standard_error)
    assert b.standard_error < a.standard_error


# ---------------------------------------------------------------- correlation integrals


def test_window_correlation_of_ou_process(rng):
    # scalar OU with rate 1/2 and unit variance: integral of correlation = 2
    n, R, dt = 20_000, 20, 0.1
    a = math.exp(-0.5 * dt)
    x = np.empty((n, R))
    x[0] = rng.normal(size=R)
    for t in range(1, n):
        x[t] = a * x[t - 1] + math.sqrt(1 - a * a) * rng.normal(size=R)
    y = window_correlation_integral(x, x, dt, 20.0, centre=0.0)
    # point samples, not window averages: the trapezoid error is O(dt^2)
    assert y.mean() == pytest.approx(2.0, abs=4 * y.std() / math.sqrt(R))
    with pytest.raises(ValueError):
        window_correlation_integral(x[:10], x[:10], dt, 20.0)


def test_green_kubo_pairs_share_one_run():
    lat = build_chain(2)
    p = SimParams(eps=0.05, lam=0.01, h=0.05 / 8, tau_end=60.0, burn_in=20.0, seed=3, replicas=4)
    from resonant_transport.lattice import uniform_temperature_profile

    prof = uniform_temperature_profile(1.0, 3)
    a, b = green_kubo_correlations([((0, 1), (0, 1)), ((0, 1), (1, 0))], p, lat, quartic, prof)
    assert b.mean == pytest.approx(-a.mean, rel=1e-12)


# ---------------------------------------------------------------- fourier and rescaling


def test_fourier_zero_gradient():
    p = SimParams(eps=0.05, lam=0.05, h=0.05 / 8, tau_end=120.0, burn_in=20.0, seed=8, replicas=10)
    rows = fourier_sweep([2], 0.05, 0.05, 1.0, 1.0, quartic, (0.25, 0.75), params=p)
    for r in rows:
        assert r["predicted"] == 0.0
        assert abs(r["scaled_flow"]) <= 3 * r["scaled_flow_se"]
    with pytest.raises(ValueError):
        fourier_sweep([2], 0.05, 0.05, 1.0, 1.0, quartic, (1.0,), params=p)


def test_low_temperature_rescale():
    u = PhaseState(np.array([1.0 + 2j, -0.5j]))
    s, lam = low_temperature_rescale(u, 1.0, 4)
    assert lam == 1.0 and np.array_equal(s.u, u.u)
    s, lam = low_temperature_rescale(u, 0.01, 4)
    assert lam == pytest.approx(0.01)
    np.testing.assert_allclose(s.u, 0.1 * u.u)
    assert low_temperature_rescale(u, 0.04, 3)[1] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        low_temperature_rescale(u, 0.5, 2)
    with pytest.raises(ValueError):
        low_temperature_rescale(u, -1.0, 4)


def test_random_polynomial_is_real(rng):
    f = random_polynomial(rng, 2)
    assert np.isrealobj(f(random_states(rng, 5, 2)))
