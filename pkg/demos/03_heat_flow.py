"""Heat flow through one quartic bond.

Two oscillators held at temperatures 2 and 1 exchange energy through the
bond; the stationary flow ``<J_kj>`` is measured along laboratory-frame
paths.  For small coupling the flow is linear in ``lam`` with a slope set by
the conductivity.  The coupling enters the resonant dynamics together with
the temperature, so at desk-scale ``lam`` the flow is far from that
linear regime: the measured ``<J>/lam`` falls as ``lam`` grows and lies well
below the linear-response prediction.

Run: ``python demos/03_heat_flow.py`` (under a minute).
"""

from resonant_transport import build_chain, get_model
from resonant_transport.dynamics import SimParams
from resonant_transport.lattice import linear_temperature_profile, uniform_temperature_profile
from resonant_transport.observables import stationary_flow
from resonant_transport.transport import (
    ConductivityQuery,
    conductivity,
    first_order_flow_coefficient,
)

lattice = build_chain(1)
model = get_model("quartic")
hot_cold = linear_temperature_profile(2.0, 1.0, 1)
kappa = conductivity(ConductivityQuery(2.0, 1.0)).mean
first = first_order_flow_coefficient(2.0, 1.0)
print(f"kappa(2, 1) = {kappa:.0f}; expanding the stationary density to first order in lam")
print(f"gives <J>/lam -> {first:.0f} as lam -> 0\n")

print("lam     <J>/lam (gradient)     <J> (uniform T = 1.5)")
for i, lam in enumerate((0.02, 0.05, 0.1, 0.2)):
    p = SimParams(eps=0.025, lam=lam, h=0.025 / 8, tau_end=80.0, burn_in=20.0, seed=i,
                  replicas=20)
    J = stationary_flow(p, lattice, model, hot_cold, (0, 1))
    J0 = stationary_flow(p.replace(seed=100 + i), lattice, model,
                         uniform_temperature_profile(1.5, 2), (0, 1))
    print(f"{lam:<6}  {J.mean / lam:8.1f} +/- {J.standard_error / lam:6.1f}     "
          f"{J0.mean:+.3f} +/- {J0.standard_error:.3f}")
