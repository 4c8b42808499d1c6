import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonant_transport.lattice import build_chain, custom_potential, get_model
from resonant_transport.resavg import (
    angle_derivative,
    effective_drift,
    effective_drift_quadrature,
    resonant_average,
    resonant_gradient,
    resonant_hamiltonian,
    resonant_pair,
    resonant_potential,
    rotation_nodes,
)
from resonant_transport.validation import orbit_scale, random_polynomial, random_states

quartic = get_model("quartic")
quadratic = get_model("quadratic")


def test_rotation_nodes():
    assert rotation_nodes(4) == pytest.approx([0, np.pi / 2, np.pi, 3 * np.pi / 2])
    with pytest.raises(ValueError):
        rotation_nodes(0)


def test_average_of_action_is_exact():
    u = np.array([1.3 - 0.2j, 0.4j])
    got = resonant_average(lambda v: 0.5 * np.abs(v[..., 0]) ** 2, u, 16)
    assert got == pytest.approx(0.5 * abs(u[0]) ** 2, rel=1e-15)


@pytest.mark.parametrize("n", [2, 4, 64])
def test_average_of_first_harmonic_vanishes(n):
    u = np.array([1.3 - 0.2j, 0.4j])
    assert abs(resonant_average(lambda v: v[..., 1].imag, u, n)) < 1e-15


def test_quartic_average_example():
    u = np.array([1.0 + 0j, 0.0])
    got = resonant_average(lambda v: quartic(v[..., 0].imag, v[..., 1].imag), u, 16)
    assert got == pytest.approx(0.375, rel=1e-14)


def test_resonant_potential_examples():
    assert resonant_potential(quartic, 1.0, 0.0) == pytest.approx(0.375)
    assert resonant_potential(quadratic, 1.0, 0.0) == pytest.approx(0.5)
    assert resonant_potential(quartic, 0.3 + 1j, 0.3 + 1j) == 0.0
    assert resonant_potential(quadratic, 1.0, 0.0, n_points=16) == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("kind", ["quadratic", "quartic"])
def test_closed_form_matches_quadrature(kind, rng):
    m = get_model(kind)
    uj, uk = random_states(rng, 1000, 2).T
    a = resonant_potential(m, uj, uk)
    b = resonant_potential(m, uj, uk, n_points=64)
    np.testing.assert_allclose(a, b, rtol=1e-10)
    pc, pq = resonant_pair(m, "closed_form"), resonant_pair(m, "quadrature", 64)
    np.testing.assert_allclose(pc.grad_j(uj, uk), pq.grad_j(uj, uk), rtol=1e-9, atol=1e-12)


def test_custom_model_needs_quadrature():
    m = custom_potential(lambda x, y: (x - y) ** 6, lambda x, y: 6 * (x - y) ** 5, name="sixth")
    with pytest.raises(ValueError):
        resonant_pair(m, "closed_form")
    # average of sin^6 is 5/16
    assert resonant_potential(m, 1.0, 0.0) == pytest.approx(5 / 16, rel=1e-12)
    with pytest.raises(ValueError):
        resonant_pair(quartic, "sideways")


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 6.3))
def test_potential_rotation_invariance(a, b, c, d, xi):
    uj, uk = complex(a, b), complex(c, d)
    e = np.exp(1j * xi)
    for m in (quadratic, quartic):
        v = resonant_potential(m, uj, uk)
        assert resonant_potential(m, e * uj, e * uk) == pytest.approx(v, rel=1e-12, abs=1e-12)


def test_lambda_zero_drift():
    lat = build_chain(3)
    u = np.array([1 + 1j, 2, -1j, 0.5])
    assert np.array_equal(effective_drift(u, 0.0, lat, quartic), -u / 2)


@pytest.mark.parametrize("kind", ["quadratic", "quartic"])
def test_drift_quadrature_oracle(kind, rng):
    lat = build_chain(3)
    m = get_model(kind)
    u = random_states(rng, 1000, lat.n_nodes)
    a = effective_drift(u, 0.7, lat, m)
    b = effective_drift_quadrature(u, 0.7, lat, m, 64)
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) <= 1e-9


def test_drift_equivariance(rng):
    lat = build_chain(4)
    u = random_states(rng, 200, lat.n_nodes)
    xi = rng.uniform(0, 2 * np.pi, size=(200, 1))
    a = effective_drift(np.exp(1j * xi) * u, 0.4, lat, quartic)
    b = np.exp(1j * xi) * effective_drift(u, 0.4, lat, quartic)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_gradient_matches_hamiltonian_differences(rng):
    lat = build_chain(2)
    u = random_states(rng, 5, lat.n_nodes)
    g = resonant_gradient(u, lat, quartic)
    h = 1e-6
    for j in range(lat.n_nodes):
        for unit, part in ((1.0, np.real), (1j, np.imag)):
            e = np.zeros(lat.n_nodes, complex)
            e[j] = unit
            fd = (resonant_hamiltonian(u + h * e, lat, quartic)
                  - resonant_hamiltonian(u - h * e, lat, quartic)) / (2 * h)
            np.testing.assert_allclose(fd, part(g[:, j]), rtol=1e-6, atol=1e-6)


def test_angle_derivative_examples():
    u = np.array([1.0 + 0j, 0.7 - 0.3j])
    assert abs(angle_derivative(lambda v: 0.5 * np.abs(v[..., 0]) ** 2, u, 0)) < 1e-10
    assert angle_derivative(lambda v: v[..., 0].imag, u, 0) == pytest.approx(1.0, abs=1e-9)


def test_angle_derivative_wirtinger_path():
    # f = |u_0|^2 Re(u_0) : df/du = conj(u)*Re u + |u|^2/2, df/dconj(u) = u*Re u + |u|^2/2
    u = np.array([0.8 + 0.6j, 0.2])

    def f(v):
        return np.abs(v[..., 0]) ** 2 * v[..., 0].real

    def partials(v, j):
        z = v[..., j]
        return np.conj(z) * z.real + 0.5 * abs(z) ** 2, z * z.real + 0.5 * abs(z) ** 2

    assert angle_derivative(f, u, 0, partials) == pytest.approx(angle_derivative(f, u, 0),
                                                                rel=1e-8)


def test_average_commutes_with_angle_derivative(rng):
    f = random_polynomial(rng, 3)
    u = random_states(rng, 20, 3)
    for j in range(3):
        lhs = resonant_average(lambda v: angle_derivative(f, v, j), u, 16)
        rhs = angle_derivative(lambda v: resonant_average(f, v, 16), u, j)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8 * orbit_scale(f, u)


def test_two_node_antisymmetry(rng):
    g = random_polynomial(rng, 2)
    u = random_states(rng, 20, 2)
    dj = angle_derivative(lambda v: resonant_average(g, v, 16), u, 0)
    dk = angle_derivative(lambda v: resonant_average(g, v, 16), u, 1)
    assert np.max(np.abs(dj + dk)) <= 1e-8 * orbit_scale(g, u)


def test_rotation_invariance_of_average(rng):
    f = random_polynomial(rng, 3)
    u = random_states(rng, 20, 3)
    xi = rng.uniform(0, 2 * np.pi, size=(20, 1))
    a = resonant_average(f, np.exp(1j * xi) * u, 16)
    b = resonant_average(f, u, 16)
    assert np.max(np.abs(a - b)) <= 1e-10 * orbit_scale(f, u)


def test_quadrature_exactness(rng):
    for _ in range(5):
        f = random_polynomial(rng, 3, max_degree=4)
        u = random_states(rng, 10, 3)
        assert np.max(np.abs(resonant_average(f, u, 16) - resonant_average(f, u, 256))) <= 1e-12 * (
            1 + np.max(np.abs(resonant_average(f, u, 256))))
