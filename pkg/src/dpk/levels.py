"""Formation energies, charge transition levels and ZPL bookkeeping.

Formation energy of an entry with charge q as a function of the Fermi
level measured from the valence-band maximum:

    E_f(q, E_F) = E_tot(q) - E_bulk - sum_i n_i mu_i + q (E_v + E_F) + E_corr

where ``n_i`` is the number of atoms of species i added to the bulk cell
(negative when removed) and ``E_corr`` the precomputed electrostatic
finite-size correction of the entry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptySelectionWarning,
    LevelOutsideGapWarning,
    MissingChemicalPotential,
    MissingEntry,
    NegativeBindingWarning,
    NonPhysicalInput,
    SameCharge,
    UnknownEntry,
)
from .ingest import DefectEntry, EnergyManifest, Level


def charge_label(q: int) -> str:
    if q == 0:
        return "0"
    sign = "+" if q > 0 else "-"
    return sign if abs(q) == 1 else f"{abs(q)}{sign}"


@dataclass(frozen=True)
class FormationEnergyLine:
    label: str
    charge: int
    intercept: float
    correction: float = 0.0

    @property
    def slope(self) -> int:
        return self.charge

    def at(self, e_fermi):
        return self.intercept + self.charge * np.asarray(e_fermi, dtype=float)

    def crossing(self, other: FormationEnergyLine) -> float:
        if self.charge == other.charge:
            raise SameCharge(f"lines {self.label} and {other.label} are parallel")
        return (other.intercept - self.intercept) / (self.charge - other.charge)


@dataclass(frozen=True)
class TransitionLevel:
    charge: int
    charge_prime: int
    position: float

    @property
    def label(self) -> str:
        return f"({charge_label(self.charge)}/{charge_label(self.charge_prime)})"

    def below_cbm(self, gap: float) -> float:
        return gap - self.position


def formation_line(manifest: EnergyManifest, label: str) -> FormationEnergyLine:
    entry = manifest.entry(label)
    chem = 0.0
    for species, n in entry.delta:
        if species not in manifest.chemical_potentials:
            raise MissingChemicalPotential(species)
        chem += n * manifest.chemical_potentials[species]
    intercept = (
        entry.energy - manifest.bulk_energy - chem + entry.charge * manifest.e_v + entry.correction
    )
    return FormationEnergyLine(label, entry.charge, intercept, entry.correction)


def formation_energy(manifest: EnergyManifest, label: str, e_fermi: float = 0.0) -> float:
    """Formation energy (eV) of ``label`` at ``e_fermi`` above E_v."""
    return float(formation_line(manifest, label).at(e_fermi))


def _line_for_charge(manifest: EnergyManifest, q: int) -> FormationEnergyLine:
    lines = [formation_line(manifest, e.label) for e in manifest.entries if e.charge == q]
    if not lines:
        raise UnknownEntry(f"no entry with charge {q:+d}")
    return min(lines, key=lambda ln: ln.intercept)


def transition_level(manifest: EnergyManifest, q: int, q_prime: int) -> TransitionLevel:
    """Fermi level (above E_v) where charge states ``q`` and ``q_prime`` cross.

    When several entries share a charge, the lowest-energy one is used.
    The label always puts the higher charge first.
    """
    if q == q_prime:
        raise SameCharge(f"both charge states are {q:+d}")
    hi, lo = max(q, q_prime), min(q, q_prime)
    a, b = _line_for_charge(manifest, hi), _line_for_charge(manifest, lo)
    position = (a.intercept - b.intercept) / (lo - hi)
    if not 0.0 <= position <= manifest.gap:
        warnings.warn(
            f"level ({charge_label(hi)}/{charge_label(lo)}) at E_v + {position:.3f} eV lies outside the gap",
            LevelOutsideGapWarning,
            stacklevel=2,
        )
    return TransitionLevel(hi, lo, position)


@dataclass(frozen=True)
class CtlDiagram:
    fermi: np.ndarray
    charge: np.ndarray
    energy: np.ndarray
    levels: tuple[TransitionLevel, ...]
    gap: float

    def stable_charge(self, e_fermi: float) -> int:
        for lv in self.levels:
            if e_fermi < lv.position:
                return lv.charge
        return int(self.charge[-1])

    def to_text(self) -> str:
        head = ", ".join(f"{lv.label} {lv.position:.6g}" for lv in self.levels) or "none"
        out = [f"# levels: {head}", f"# gap_eV = {self.gap:.6g}", "# E_F_eV charge E_f_min_eV"]
        out += [f"{x:.6g} {q:d} {e:.6g}" for x, q, e in zip(self.fermi, self.charge, self.energy)]
        return "\n".join(out) + "\n"


def _envelope(lines: Sequence[FormationEnergyLine], gap: float) -> list[TransitionLevel]:
    """Exact breakpoints of the lower envelope of the lines over [0, gap]."""
    current = min(lines, key=lambda ln: (ln.intercept, -ln.charge))
    x = 0.0
    out = []
    while True:
        best = None
        for ln in lines:
            if ln.charge >= current.charge:
                continue
            xc = current.crossing(ln)
            if xc <= x or xc >= gap:
                continue
            if best is None or xc < best[0] or (xc == best[0] and ln.charge < best[1].charge):
                best = (xc, ln)
        if best is None:
            return out
        x, nxt = best
        out.append(TransitionLevel(current.charge, nxt.charge, x))
        current = nxt


def ctl_diagram(
    manifest: EnergyManifest, gap: float | None = None, resolution: float = 0.01
) -> CtlDiagram:
    """Stable charge state and minimum formation energy over ``E_F in [0, gap]``."""
    gap = manifest.gap if gap is None else gap
    if not resolution > 0:
        raise NonPhysicalInput("resolution must be positive")
    charges = manifest.charges()
    lines = [_line_for_charge(manifest, q) for q in charges]
    n = int(math.ceil(gap / resolution - 1e-9)) + 1
    fermi = np.linspace(0.0, gap, n)
    table = np.array([ln.at(fermi) for ln in lines])
    best = np.argmin(table, axis=0)
    return CtlDiagram(
        fermi=fermi,
        charge=np.array([lines[i].charge for i in best]),
        energy=table[best, np.arange(n)],
        levels=tuple(_envelope(lines, gap)),
        gap=gap,
    )


# ---------------------------------------------------------------------------
# excited states


def spin_purified_singlet(e_mixed: float, e_triplet: float) -> float:
    """Open-shell singlet energy from the broken-symmetry and triplet energies."""
    return 2.0 * e_mixed - e_triplet


def band_filling_correction(levels: Sequence[Level], edge: float, kind: str = "donor") -> float:
    """Energy (eV) to add to a total energy with carriers in dispersive band states.

    donor: electrons above the conduction-band edge,
        ``-sum_k w_k sum_n occ_nk (e_nk - edge)`` over ``e_nk > edge``.
    acceptor: holes below the valence-band edge,
        ``-sum_k w_k sum_n (2 - occ_nk) (edge - e_nk)`` over ``e_nk < edge``.

    Both forms are non-positive.  With no state beyond the edge the
    correction is zero and an ``EmptySelectionWarning`` is issued.
    """
    kind = kind.replace("-like", "")
    if kind not in ("donor", "acceptor"):
        raise ValueError(f"kind must be donor or acceptor, got {kind!r}")
    total = 0.0
    selected = 0
    for lv in levels:
        if kind == "donor" and lv.energy > edge:
            total -= lv.kweight * lv.occupation * (lv.energy - edge)
            selected += 1
        elif kind == "acceptor" and lv.energy < edge:
            total -= lv.kweight * (2.0 - lv.occupation) * (edge - lv.energy)
            selected += 1
    if not selected:
        warnings.warn(f"no states beyond the {kind} edge; correction is 0", EmptySelectionWarning, stacklevel=2)
        return 0.0
    return total


@dataclass(frozen=True)
class ZplResult:
    raw: float
    spin_purification: float = 0.0
    band_filling: float = 0.0

    def __post_init__(self):
        if not self.zpl > 0:
            raise NonPhysicalInput(f"ZPL {self.zpl:.4g} eV is not positive")

    @property
    def zpl(self) -> float:
        return self.raw + self.spin_purification + self.band_filling


def delta_scf_zpl(
    e_excited: float,
    e_ground: float,
    e_triplet: float | None = None,
    band_filling: float = 0.0,
) -> ZplResult:
    """ZPL from relaxed excited and ground total energies.

    ``e_excited`` is the mixed (broken-symmetry) excited-state energy; when
    ``e_triplet`` is given, the spin-purification shift
    ``E_S - E_mixed = E_mixed - E_T`` is added.
    """
    raw = e_excited - e_ground
    purification = 0.0
    if e_triplet is not None:
        purification = spin_purified_singlet(e_excited, e_triplet) - e_excited
    return ZplResult(raw, purification, band_filling)


def non_koopmans_energy(eps_homo: float, e_n: float, e_n_minus_1: float) -> float:
    """``eps_HOMO - [E(N) - E(N-1)]``; zero when the generalized Koopmans condition holds."""
    return eps_homo - (e_n - e_n_minus_1)


def _entry(manifest: EnergyManifest, label: str) -> DefectEntry:
    try:
        return manifest.entry(label)
    except UnknownEntry:
        raise MissingEntry(f"no entry labelled {label!r}") from None


def koopmans_check(
    manifest: EnergyManifest, label_n: str, label_n_minus_1: str, eps_homo: float | None = None
) -> float:
    """Non-Koopmans energy of a pair of manifest entries.

    Total energies include each entry's correction.  Without ``eps_homo``
    the highest occupied level of the N-electron entry is used.
    """
    n, m = _entry(manifest, label_n), _entry(manifest, label_n_minus_1)
    if eps_homo is None:
        occupied = [lv.energy for lv in n.levels if lv.occupation > 0]
        if not occupied:
            raise MissingEntry(f"entry {label_n!r} has no occupied levels to take the HOMO from")
        eps_homo = max(occupied)
    return non_koopmans_energy(eps_homo, n.energy + n.correction, m.energy + m.correction)


def exciton_binding(level, e_zpl: float, gap: float) -> float:
    """Binding energy of a bound exciton: ``(E_c - level) - E_zpl``.

    ``level`` is the donor (+/0) level, as a ``TransitionLevel`` or its
    position above E_v in eV.
    """
    position = level.position if isinstance(level, TransitionLevel) else float(level)
    if not 0.0 <= position <= gap:
        raise NonPhysicalInput(f"level at E_v + {position:.3f} eV is outside the {gap} eV gap")
    binding = (gap - position) - e_zpl
    if binding < 0:
        warnings.warn(
            f"ZPL exceeds the ionization energy by {-binding * 1e3:.1f} meV (unbound exciton)",
            NegativeBindingWarning,
            stacklevel=2,
        )
    return binding
