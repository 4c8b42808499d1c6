"""Resonant averaging, the Poisson solution and the conductivity constant.

Averaging a bond potential over the common phase rotation gives the
resonant potential; for the quartic bond it is ``3/8 |u_j - u_k|^4``.  Its
angle derivative is the resonant flow, and the Poisson equation
``A eta = J^res`` for the Ornstein-Uhlenbeck generator has a polynomial
solution, which gives the conductivity ``kappa = C (T_k + T_j)^2``.

Run: ``python demos/01_resonant_forms.py`` (a few seconds).
"""

import numpy as np

from resonant_transport import get_model
from resonant_transport.observables import resonant_flow
from resonant_transport.resavg import angle_derivative, resonant_average, resonant_potential
from resonant_transport.transport import (
    ConductivityQuery,
    conductivity,
    conductivity_constant,
    eta_closed_form,
    solve_eta,
)
from resonant_transport.validation import generator_identity_error

rng = np.random.default_rng(0)
quartic = get_model("quartic")

# %% the resonant potential: 16 quadrature nodes are exact for a quartic
uj, uk = 1.0 + 0.5j, -0.3j
quad = resonant_average(lambda v: quartic(v[..., 0].imag, v[..., 1].imag),
                        np.array([uj, uk]), 16)
print("V_res by quadrature :", quad)
print("3/8 |u_j - u_k|^4   :", resonant_potential(quartic, uj, uk))

# %% the resonant flow is twice the angle derivative of V_res
pair = np.array([uk, uj])  # (u_k, u_j)
dphi = angle_derivative(lambda v: resonant_potential(quartic, v[..., 1], v[..., 0]), pair, 0)
print("\nJ_res closed form   :", resonant_flow(quartic, uk, uj))
print("2 d/dphi_k V_res     :", 2 * dphi)

# %% eta solves A eta = J_res; the Monte-Carlo semigroup integral agrees
print("\ngenerator identity, worst relative error over 100 states:",
      generator_identity_error(rng))
u = np.array([0.8 - 0.2j, 0.1 + 1.1j])
mc = solve_eta(u, quartic, 1.0, 2.0, replicas=5000, seed=1)
print(f"eta closed form {eta_closed_form(u, 1.0, 2.0):.3f}   "
      f"Monte-Carlo {mc.mean:.3f} +/- {mc.standard_error:.3f}")

# %% conductivity: exact Gaussian quadrature against an OU correlation integral
print("\nC =", conductivity_constant())
for Tk, Tj in ((1.0, 1.0), (1.0, 2.0)):
    exact = conductivity(ConductivityQuery(Tk, Tj)).mean
    ou = conductivity(ConductivityQuery(Tk, Tj, method="ou_correlation", replicas=200,
                                        horizon=500.0))
    print(f"kappa({Tk:g},{Tj:g}) closed form {exact:8.1f}   OU correlation "
          f"{ou.mean:8.1f} +/- {ou.standard_error:.1f}")
