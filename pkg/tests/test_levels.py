import warnings

import numpy as np
import pytest

from dpk import levels as lv
from dpk.casestudy import packaged
from dpk.errors import (
    EmptySelectionWarning,
    LevelOutsideGapWarning,
    MissingChemicalPotential,
    MissingEntry,
    NegativeBindingWarning,
    NonPhysicalInput,
    SameCharge,
    UnknownEntry,
)
from dpk.ingest import DefectEntry, EnergyManifest, Level, read_manifest


@pytest.fixture(scope="module")
def fixture_manifest():
    return read_manifest(packaged("ci_levels.txt"))


def random_manifest(rng, charges=(-2, -1, 0, 1, 2)):
    species = ["C", "Si", "O"]
    mus = {sp: float(rng.uniform(-10, -3)) for sp in species}
    entries = []
    for q in charges:
        delta = tuple((sp, int(rng.integers(-2, 3))) for sp in species if rng.random() < 0.6)
        entries.append(
            DefectEntry(
                label=f"X_{q}",
                charge=q,
                energy=float(rng.uniform(-3000, -2000)),
                correction=float(rng.uniform(-0.3, 0.3)),
                delta=delta,
            )
        )
    e_v = float(rng.uniform(-2, 6))
    return EnergyManifest(
        bulk_energy=float(rng.uniform(-3000, -2000)),
        e_v=e_v,
        e_c=e_v + float(rng.uniform(0.5, 6)),
        chemical_potentials=mus,
        entries=tuple(entries),
    )


def brute_formation(m, entry, e_f):
    chem = sum(n * m.chemical_potentials[sp] for sp, n in entry.delta)
    return entry.energy - m.bulk_energy - chem + entry.charge * (m.e_v + e_f) + entry.correction


# formation energies ----------------------------------------------------------------


def test_neutral_formation_energy(fixture_manifest):
    assert lv.formation_energy(fixture_manifest, "Ci_0") == pytest.approx(3.72, abs=1e-12)


def test_slope_equals_charge(fixture_manifest):
    a = lv.formation_energy(fixture_manifest, "Ci_plus", 0.2)
    b = lv.formation_energy(fixture_manifest, "Ci_plus", 1.2)
    assert b - a == pytest.approx(1.0, abs=1e-12)
    assert lv.formation_line(fixture_manifest, "Ci_minus").slope == -1


def test_formation_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = random_manifest(rng)
        e_f = float(rng.uniform(0, m.gap))
        for entry in m.entries:
            assert lv.formation_energy(m, entry.label, e_f) == pytest.approx(
                brute_formation(m, entry, e_f), abs=1e-10
            )


def test_formation_errors(fixture_manifest):
    with pytest.raises(UnknownEntry):
        lv.formation_energy(fixture_manifest, "nope")
    m = EnergyManifest(0.0, 0.0, 1.0, {}, (DefectEntry("A", 0, 1.0, delta=(("B", 1),)),))
    with pytest.raises(MissingChemicalPotential):
        lv.formation_energy(m, "A")


# transition levels -------------------------------------------------------------------


def test_fixture_levels(fixture_manifest):
    plus = lv.transition_level(fixture_manifest, 1, 0)
    minus = lv.transition_level(fixture_manifest, 0, -1)
    assert plus.label == "(+/0)" and minus.label == "(0/-)"
    assert plus.position == pytest.approx(0.32, abs=1e-12)
    assert minus.position == pytest.approx(0.97, abs=1e-12)


def test_label_order_independent(fixture_manifest):
    a = lv.transition_level(fixture_manifest, 0, 1)
    b = lv.transition_level(fixture_manifest, 1, 0)
    assert a == b


def test_symmetric_toy():
    m = EnergyManifest(
        0.0, 0.0, 1.0, {}, (DefectEntry("a", 1, 1.0), DefectEntry("b", 0, 1.5))
    )
    assert lv.transition_level(m, 1, 0).position == pytest.approx(0.5, abs=1e-15)


def test_crossings_on_random_manifests():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        m = random_manifest(rng)
        q, qp = rng.choice([-2, -1, 0, 1, 2], size=2, replace=False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LevelOutsideGapWarning)
            level = lv.transition_level(m, int(q), int(qp))
        a = lv.formation_line(m, f"X_{q}")
        b = lv.formation_line(m, f"X_{qp}")
        # independent intersection of y = i_a + q_a x and y = i_b + q_b x
        x = (b.intercept - a.intercept) / (a.charge - b.charge)
        assert level.position == pytest.approx(x, abs=1e-12)
        assert a.crossing(b) == pytest.approx(x, abs=1e-12)


def test_outside_gap_warns():
    m = EnergyManifest(0.0, 0.0, 1.0, {}, (DefectEntry("a", 1, 1.0), DefectEntry("b", 0, 3.0)))
    with pytest.warns(LevelOutsideGapWarning):
        lv.transition_level(m, 1, 0)


def test_same_charge(fixture_manifest):
    with pytest.raises(SameCharge):
        lv.transition_level(fixture_manifest, 0, 0)
    line = lv.formation_line(fixture_manifest, "Ci_0")
    with pytest.raises(SameCharge):
        line.crossing(line)


def test_below_cbm(fixture_manifest):
    level = lv.transition_level(fixture_manifest, 1, 0)
    assert level.below_cbm(1.16) == pytest.approx(0.84, abs=1e-12)


# diagrams --------------------------------------------------------------------------


def test_fixture_diagram(fixture_manifest):
    diag = lv.ctl_diagram(fixture_manifest, resolution=0.005)
    assert [(x.label, round(x.position, 12)) for x in diag.levels] == [("(+/0)", 0.32), ("(0/-)", 0.97)]
    for e_f, q in zip(diag.fermi, diag.charge):
        expected = 1 if e_f < 0.32 - 1e-9 else (0 if e_f < 0.97 - 1e-9 else -1)
        if min(abs(e_f - 0.32), abs(e_f - 0.97)) > 1e-9:
            assert q == expected
    assert diag.stable_charge(0.1) == 1
    assert diag.stable_charge(0.5) == 0
    assert diag.stable_charge(1.1) == -1


def test_single_entry_diagram():
    m = EnergyManifest(0.0, 0.0, 1.0, {}, (DefectEntry("a", 0, 2.0),))
    diag = lv.ctl_diagram(m)
    assert set(diag.charge) == {0} and diag.levels == ()
    assert "# levels: none" in diag.to_text()


def test_diagram_against_brute_force_scan():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = random_manifest(rng)
        diag = lv.ctl_diagram(m, resolution=0.02)
        assert np.all(np.diff(diag.charge) <= 0)
        for e_f, q, e in zip(diag.fermi, diag.charge, diag.energy):
            values = {entry.charge: brute_formation(m, entry, e_f) for entry in m.entries}
            assert e == pytest.approx(min(values.values()), abs=1e-9)
            assert values[int(q)] == pytest.approx(e, abs=1e-9)
        # breakpoints sit where the scan changes charge, within one step
        changes = diag.fermi[1:][np.diff(diag.charge) != 0]
        assert len(changes) == len(diag.levels)
        for x, level in zip(changes, diag.levels):
            assert abs(x - level.position) <= 0.02 + 1e-12


def test_diagram_text(fixture_manifest):
    text = lv.ctl_diagram(fixture_manifest).to_text()
    assert text.splitlines()[0] == "# levels: (+/0) 0.32, (0/-) 0.97"
    assert text == lv.ctl_diagram(fixture_manifest).to_text()


# ZPL assembly ----------------------------------------------------------------------


@pytest.mark.parametrize("mixed,triplet,expected", [(0.7, 0.7, 0.7), (0.85, 0.86, 0.84)])
def test_spin_purification(mixed, triplet, expected):
    assert lv.spin_purified_singlet(mixed, triplet) == pytest.approx(expected, abs=1e-12)


def test_spin_purification_shift():
    c = 12.5
    assert lv.spin_purified_singlet(0.85 + c, 0.86 + c) == pytest.approx(0.84 + c, abs=1e-12)


def test_band_filling_single_state():
    states = [Level(0.5, 2.0, 1.0), Level(1.21, 1.0, 1.0)]
    assert lv.band_filling_correction(states, 1.16) == pytest.approx(-0.05, abs=1e-12)


def test_band_filling_empty():
    with pytest.warns(EmptySelectionWarning):
        assert lv.band_filling_correction([Level(0.5, 2.0, 1.0)], 1.16) == 0.0


def test_band_filling_multi_k_brute_force():
    rng = np.random.default_rng(9)
    weights = rng.dirichlet(np.ones(4))
    table = [
        (k, float(rng.uniform(0.8, 1.6)), float(rng.uniform(0, 2)))
        for k in range(4)
        for _ in range(5)
    ]
    states = [Level(e, occ, float(weights[k]), k) for k, e, occ in table]
    donor = 0.0
    for k in range(4):
        for kk, e, occ in table:
            if kk == k and e > 1.16:
                donor += weights[k] * occ * (e - 1.16)
    assert lv.band_filling_correction(states, 1.16, "donor") == pytest.approx(-donor, abs=1e-10)
    acceptor = sum(weights[k] * (2 - occ) * (1.0 - e) for k, e, occ in table if e < 1.0)
    assert lv.band_filling_correction(states, 1.0, "acceptor-like") == pytest.approx(-acceptor, abs=1e-10)
    assert lv.band_filling_correction(states, 1.16, "donor-like") <= 0


def test_zpl_breakdown():
    res = lv.delta_scf_zpl(0.85, 0.0, e_triplet=0.86, band_filling=-0.01)
    assert res.raw == pytest.approx(0.85)
    assert res.spin_purification == pytest.approx(-0.01)
    assert res.zpl == pytest.approx(res.raw + res.spin_purification + res.band_filling, abs=1e-12)
    assert res.zpl == pytest.approx(0.83, abs=1e-12)


def test_zpl_must_be_positive():
    with pytest.raises(NonPhysicalInput):
        lv.delta_scf_zpl(1.0, 1.2)


# Koopmans ------------------------------------------------------------------------------


@pytest.mark.parametrize("eps,en,en1,expected", [(-5.0, -105.0, -100.0, 0.0), (-5.0, -105.2, -100.0, 0.2)])
def test_non_koopmans_energy(eps, en, en1, expected):
    assert lv.non_koopmans_energy(eps, en, en1) == pytest.approx(expected, abs=1e-12)
    assert lv.non_koopmans_energy(-eps, -en, -en1) == pytest.approx(-expected, abs=1e-12)


def test_koopmans_check_on_fixture(fixture_manifest):
    # E(N) - E(N-1) with corrections: (-2500.0) - (-2500.47 + 0.15) = 0.32
    assert lv.koopmans_check(fixture_manifest, "Ci_0", "Ci_plus", eps_homo=0.32) == pytest.approx(0.0, abs=1e-9)
    assert lv.koopmans_check(fixture_manifest, "Ci_0", "Ci_plus") == pytest.approx(0.3 - 0.32, abs=1e-9)
    with pytest.raises(MissingEntry):
        lv.koopmans_check(fixture_manifest, "Ci_0", "Ci_2plus")


# exciton binding ---------------------------------------------------------------------


def test_exciton_binding():
    gap = 1.16
    assert lv.exciton_binding(gap - 0.87, 0.856, gap) == pytest.approx(0.014, abs=1e-3)
    assert lv.exciton_binding(0.3, gap - 0.3, gap) == pytest.approx(0.0, abs=1e-12)


def test_exciton_binding_from_fixture(fixture_manifest):
    level = lv.transition_level(fixture_manifest, 1, 0)
    assert lv.exciton_binding(level, 0.826, fixture_manifest.gap) == pytest.approx(0.014, abs=1e-9)


def test_unbound_exciton_warns():
    with pytest.warns(NegativeBindingWarning):
        assert lv.exciton_binding(0.3, 0.9, 1.16) < 0


def test_level_outside_gap_rejected():
    with pytest.raises(NonPhysicalInput):
        lv.exciton_binding(1.3, 0.8, 1.16)
