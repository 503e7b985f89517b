"""
One visible record, two demons
==============================

Follow the system qubit through a single visible record and ask how much
entropy the unseen demon produced along the way.
"""

import numpy as np

from hiddenqj import build_demon_model, hidden_entropy, hidden_entropy_reconstructed, parse_trajectory_spec
from hiddenqj.unravel import conditioned_state_series

spec = "g0; 4@0.9; 1@1.5; 4@2.4; e1; T=3"

# A perfect demon: it flips only through the bath that the system state selects.
m = build_demon_model()
v = parse_trajectory_spec(spec, m)
ds_env = sum(m.delta_s(k) for k in v.jump_ids)
print(f"visible environment entropy   {ds_env:+.4f}")
print(f"hidden entropy, kernel ratio  {hidden_entropy(m, v):+.4f}")
print(f"hidden entropy, per interval  {hidden_entropy_reconstructed(m, v):+.4f}")

# The cold visible jumps were paid for by demon flips into the hot demon bath.
# A leaky demon sometimes flips through the wrong bath, so the record is less informative.
leaky = build_demon_model(gamma_y=0.5)
v = parse_trajectory_spec(spec, leaky)
print(f"leaky demon hidden entropy    {hidden_entropy(leaky, v):+.4f}")

# %%
# What the observer believes about the demon between the jumps
s = conditioned_state_series(build_demon_model(gamma_x=0.5, gamma_y=0.5), v, 0.25)
print("\n   t    P(demon excited)")
for t, p in zip(s.t, s.rho_y[:, 1, 1].real):
    print(f"{t:5.2f}   {p:.3f}  " + "#" * int(round(40 * p)))
