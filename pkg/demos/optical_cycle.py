"""Optical pumping, triplet shelving and ODMR contrast in the rate model.

    python demos/optical_cycle.py
"""

import numpy as np

from dpk import kinetics
from dpk.casestudy import packaged

net = kinetics.build_network(kinetics.read_rates(packaged("ci_rates.txt")))
print(net.header())

print("\npower    PL (1/s)   p_T+     p_I")
for power in (0.01, 0.1, 1.0, 10.0, 100.0):
    p = kinetics.steady_state(net, power)
    print(f"{power:7.2f}  {kinetics.pl_rate(net, power):9.3f}  {p[net.index('T+')]:.4f}  {p[net.index('I')]:.4f}")

print("\nODMR contrast at unit power:")
for pair in (("T0", "T+"), ("T0", "T-")):
    print(f"  {pair[0]}<->{pair[1]}: {kinetics.odmr_contrast(net, pair, 1.0):+.3f}")

# 20 us pump pulse, then darkness: T0 empties quickly, T+ and T- linger
start = np.zeros(len(net.states))
start[net.index("G")] = 1.0
times = [0.0, 20e-6, 40e-6, 100e-6, 1e-3, 3e-3]
traj = kinetics.integrate(net, start, 3e-3, power=[(0.0, 5.0), (20e-6, 0.0)], times=times)
print("\n  t (us)     T0        T+")
for t, t0, tp in zip(traj.times, traj.of("T0"), traj.of("T+")):
    print(f"{t * 1e6:8.0f}  {t0:.2e}  {tp:.2e}")
