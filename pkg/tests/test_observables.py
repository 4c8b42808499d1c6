import json

import numpy as np
import pytest

from resonant_transport.dynamics import SimParams, sample_mu0
from resonant_transport.lattice import build_chain, get_model, linear_temperature_profile, \
    uniform_temperature_profile
from resonant_transport.observables import (
    EstimatorResult,
    batch_estimate,
    edge_flows,
    energy_flow,
    resonant_flow,
    resonant_flow_quadrature,
    stationary_flow,
    time_average,
)
from resonant_transport.resavg import angle_derivative, resonant_potential
from resonant_transport.rng import make_stream
from resonant_transport.state import PhaseState
from resonant_transport.validation import random_states

quartic = get_model("quartic")
quadratic = get_model("quadratic")


# ---------------------------------------------------------------- flows


def test_flow_zero_momenta():
    u = PhaseState.from_pq(np.zeros(3), np.array([0.3, -1.0, 2.0]))
    assert energy_flow(u, quartic, 0, 1) == 0.0


def test_flow_hand_example():
    u = PhaseState.from_pq(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert energy_flow(u, quadratic, 0, 1) == 2.0


def test_flow_rejects_non_neighbours():
    u = np.zeros(4, complex)
    with pytest.raises(ValueError):
        energy_flow(u, quartic, 0, 2)
    with pytest.raises(ValueError):
        energy_flow(u, quartic, 1, 3, build_chain(3))


def test_flow_antisymmetry(rng):
    u = random_states(rng, 10_000, 3)
    for m in (quadratic, quartic):
        assert np.array_equal(energy_flow(u, m, 1, 2), -energy_flow(u, m, 2, 1))


def test_edge_flows_match_single_edges(rng):
    lat = build_chain(3)
    u = random_states(rng, 50, lat.n_nodes)
    all_ = edge_flows(u, lat, quartic)
    for i, (a, b) in enumerate(lat.edges):
        np.testing.assert_array_equal(all_[:, i], energy_flow(u, quartic, a, b, lat))


def test_resonant_flow_examples(rng):
    z = 0.4 - 1.1j
    assert resonant_flow(quartic, z, z) == 0.0
    uk, uj = random_states(rng, 1000, 2).T
    assert np.array_equal(resonant_flow(quartic, uk, uj), -resonant_flow(quartic, uj, uk))
    rel = np.abs(resonant_flow_quadrature(quartic, uk, uj) - resonant_flow(quartic, uk, uj))
    assert np.max(rel / np.maximum(np.abs(resonant_flow(quartic, uk, uj)), 1e-300)) <= 1e-8
    np.testing.assert_allclose(resonant_flow(quadratic, uk, uj),
                               resonant_flow_quadrature(quadratic, uk, uj), rtol=1e-8, atol=1e-12)


def test_resonant_flow_sign_oracle():
    # u_j = 1, u_k = i: J^res_kj = 2 d/dphi_k V^res
    pair = np.array([1j, 1.0 + 0j])  # (u_k, u_j)
    ident = 2 * angle_derivative(lambda v: resonant_potential(quartic, v[..., 1], v[..., 0]),
                                 pair, 0)
    got = resonant_flow(quartic, pair[0], pair[1])
    assert got == pytest.approx(ident, abs=1e-9)
    assert got == pytest.approx(6.0)


def test_resonant_flow_mu0_mean_zero():
    T = np.array([1.0, 2.0])
    n = 1_000_000
    u = sample_mu0(T, make_stream(12, n, 2)).u
    J = resonant_flow(quartic, u[:, 0], u[:, 1])
    assert abs(J.mean()) <= 4 * J.std() / np.sqrt(n)


# ---------------------------------------------------------------- estimators


def test_constant_series():
    est = time_average(np.full((400, 3), 2.5), batch_length=10)
    assert est.mean == 2.5 and est.standard_error == 0.0
    assert est.n_samples == 1200 and est.batch_size == 10


def test_iid_series_standard_error(rng):
    x = rng.normal(size=10_000)
    est = time_average(x, batch_length=100)
    assert est.standard_error == pytest.approx(1 / np.sqrt(10_000), rel=0.3)
    assert abs(est.mean) <= 4 / np.sqrt(10_000)


def test_too_few_batches():
    with pytest.raises(ValueError):
        time_average(np.ones(100), batch_length=10)
    with pytest.raises(ValueError):
        batch_estimate(np.ones((0, 2)), 1)


def test_merge_is_exact_and_associative(rng):
    x = rng.normal(size=(6000, 1)) * 1e3 + 1e-3
    whole = batch_estimate(x, 100)
    a, b, c = (batch_estimate(x[i:i + 2000], 100) for i in (0, 2000, 4000))
    m1 = a.merge(b).merge(c)
    m2 = a.merge(b.merge(c))
    assert m1.mean == whole.mean == m2.mean
    assert m1.standard_error == pytest.approx(whole.standard_error, rel=1e-12)
    assert m1.n_samples == whole.n_samples


def test_estimator_record_and_json():
    est = EstimatorResult.from_batches([1.0, 3.0] * 10, [1] * 20, "x")
    rec = json.loads(est.to_json())
    assert set(rec) == {"name", "mean", "se", "n", "batch"}
    assert rec["mean"] == 2.0 and rec["n"] == 20
    assert est.scaled(2.0).mean == 4.0
    assert EstimatorResult.exact(1.5).standard_error == 0.0


# ---------------------------------------------------------------- stationary flows


def _flow_params(**kw):
    base = dict(eps=0.05, lam=0.1, h=0.05 / 8, tau_end=80.0, burn_in=20.0, seed=5, replicas=20)
    base.update(kw)
    return SimParams(**base)


def test_uniform_temperature_zero_flow():
    lat = build_chain(1)
    est = stationary_flow(_flow_params(), lat, quartic, uniform_temperature_profile(1.0, 2),
                          (0, 1))
    assert abs(est.mean) <= 3 * est.standard_error


def test_gradient_drives_positive_flow():
    lat = build_chain(1)
    prof = linear_temperature_profile(2.0, 1.0, 1)
    est = stationary_flow(_flow_params(seed=6), lat, quartic, prof, (0, 1))
    assert est.mean > 3 * est.standard_error
    rev = stationary_flow(_flow_params(seed=6), lat, quartic, prof, (1, 0))
    assert rev.mean == pytest.approx(-est.mean, rel=1e-12)
