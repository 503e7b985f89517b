"""
Closed forms without coupling
=============================

Without coherent coupling the demon's jump operators are eigenoperators of
the dissipative commutator, and each interval between visible jumps
contributes a fixed amount of hidden entropy.
"""

from hiddenqj import DemonParams, build_demon_model, hidden_entropy, parse_trajectory_spec
from hiddenqj.oracle import alpha_table, eigenrelation_residual, interval_hidden_entropy

p = DemonParams(gamma_y=0.5)
table = alpha_table(p)
for k in (5, 6, 7, 8):
    print(f"alpha_{k}:  e {table[k]['e']:+.4f}  g {table[k]['g']:+.4f}  "
          f"residual {max(eigenrelation_residual(p, k, x) for x in 'eg'):.1e}")

# The interval entropy does not depend on how long the interval lasted
for t in (0.1, 1.0, 10.0):
    print(f"e0 -> e1 over t = {t:4}:  {interval_hidden_entropy(p, 'e0', 'e1', t):+.6f}")

# Summing intervals reproduces the kernel ratio for a full record
m = build_demon_model(p)
v = parse_trajectory_spec("g0; 4@0.9; 1@1.5; 4@2.4; e1; T=3", m)
parts = [("g0", "g0"), ("e0", "e1"), ("g1", "g0"), ("e0", "e1")]
total = sum(interval_hidden_entropy(p, a, b, 1.0) for a, b in parts)
print(f"\nsum over intervals {total:+.6f}   kernel ratio {hidden_entropy(m, v):+.6f}")
