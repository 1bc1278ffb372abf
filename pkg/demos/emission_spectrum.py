"""From two relaxed geometries to a low-temperature emission spectrum.

Builds the synthetic carbon-interstitial cell, projects the excited-state
relaxation onto the phonon modes and prints where the sideband sits.

    python demos/emission_spectrum.py
"""

import tempfile

import numpy as np

from dpk import ingest, lineshape, photophysics
from dpk.casestudy import write_casestudy

E_ZPL = 0.856  # eV

with tempfile.TemporaryDirectory() as tmp:
    files = write_casestudy(tmp)
    ground = ingest.read_structure(files["ground"])
    excited = ingest.read_structure(files["excited"])
    basis = ingest.read_phonons(files["phonons"])

dq = lineshape.mass_weighted_displacement(ground, excited)
hr = lineshape.partial_hr_factors(dq, basis)
print(f"{ground.natoms} atoms, {basis.nmodes} modes, |dQ| = {np.linalg.norm(dq):.3f} amu^1/2 A")
print(f"total Huang-Rhys factor S = {hr.total:.3f}, Debye-Waller factor = {lineshape.debye_waller(hr):.4f}")

strongest = np.argsort(hr.s)[::-1][:5]
print("strongest modes (meV, s):", ", ".join(f"{hr.frequencies[k]:.1f}:{hr.s[k]:.3f}" for k in strongest))

spec = lineshape.generating_function_spectrum(hr, E_ZPL, gamma_zpl=1.0)
peak = spec.peak_energy(hi=E_ZPL - 0.005)
print(f"sideband maximum at {peak:.4f} eV, {1e3 * (E_ZPL - peak):.1f} meV below the ZPL")
print(f"weight within 10 meV of the ZPL: {spec.weight_between(E_ZPL - 0.01, E_ZPL + 0.01):.4f}")

warm = lineshape.generating_function_spectrum(hr, E_ZPL, temperature=300.0)
print(f"at 300 K the ZPL keeps {warm.debye_waller:.4f} of the emission")

gamma, tau = photophysics.radiative_rate(E_ZPL, 0.96, 3.485)
print(f"radiative lifetime for a 0.96 D dipole in silicon: {tau * 1e6:.2f} us")
for tau_pl in (3e-9, 8e-9):
    print(f"  PL lifetime {tau_pl * 1e9:.0f} ns -> radiative yield {photophysics.quantum_yield(tau, tau_pl):.2e}")
