"""Spin fingerprints and charge-state energetics of the case-study defect.

    python demos/spin_and_charge.py
"""

import numpy as np

from dpk import ingest, levels, spinham
from dpk.casestudy import doublet_density, packaged, triplet_density

# triplet: two orthogonal p lobes give an orthorhombic ZFS
rho = triplet_density()
tensor, err = spinham.zfs_error_estimate(rho)
zfs = spinham.ZfsTensor(tensor)
print(f"ZFS from the model triplet density: D = {zfs.D:.1f} MHz, E = {zfs.E:.1f} MHz (grid error {100 * err:.1f}%)")

# the measured D and E fix the zero-field ODMR lines
measured = spinham.ZfsTensor.from_DE(439.3, 37.9)
for line in spinham.odmr_frequencies(spinham.triplet_levels(measured)):
    print(f"  {line.frequency:7.1f} MHz  {'allowed' if line.allowed else 'forbidden'}")
field = spinham.triplet_levels(measured, (0.0, 0.0, 10.0))
print("levels at 10 mT along z:", np.round(field.energies, 1), "MHz")

# doublet: hyperfine of the central carbon
hf = spinham.hyperfine_from_spin_density(doublet_density(), spinham.Nucleus.of("13C", (0, 0, 0)))
print("13C hyperfine principal values (MHz):", np.round(hf.principal_values(), 2))

for shells, abundance in (([4], 0.045), ([2], 0.005)):
    print(f"P(spin-carrying isotope on {sum(shells)} sites at {abundance:.1%}) = {spinham.isotope_risk(shells, abundance):.4f}")

# charge transition levels
manifest = ingest.read_manifest(packaged("ci_levels.txt"))
diagram = levels.ctl_diagram(manifest)
for lv in diagram.levels:
    print(f"{lv.label}: E_v + {lv.position:.2f} eV (E_c - {lv.below_cbm(manifest.gap):.2f} eV)")
donor = levels.transition_level(manifest, 1, 0)
print(f"bound-exciton binding for a 0.826 eV ZPL: {1e3 * levels.exciton_binding(donor, 0.826, manifest.gap):.1f} meV")
