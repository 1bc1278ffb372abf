import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpk import ingest
from dpk.casestudy import packaged
from dpk.constants import ANGSTROM, ATOMIC_MASS, EV, HBAR, MEV
from dpk.errors import (
    CountMismatch,
    DimensionMismatch,
    GapInverted,
    ImaginaryMode,
    InvalidOccupation,
    MalformedLine,
    MissingKey,
    NonFiniteValue,
    NonOrthonormal,
    NormalizationError,
    NormalizationWarning,
    SingularLattice,
    UnknownEntry,
    UnknownSpecies,
)

STRUCTURE = """\
lattice
5.0 0.0 0.0
0.0 5.0 0.0
0.0 0.0 5.0
charge 0
atoms 2
Si 28.0855 0.0 0.0 0.0
C 12.011 0.9 0.0 0.0
"""

MANIFEST = """\
bulk_energy = -2494.0
E_v = 0.0
E_c = 1.16
mu.C = -9.72
entry Ci_0 charge=0 energy=-2500.0 corr=0.0 delta=C:+1
"""


def grid_text(values, kind="orbital", norm=1.0, counts=(2, 2, 2)):
    head = f"grid {counts[0]} {counts[1]} {counts[2]} {kind} {norm}\n"
    head += "origin 0 0 0\naxis1 1 0 0\naxis2 0 1 0\naxis3 0 0 1\n"
    return head + " ".join(str(v) for v in values) + "\n"


# structures -------------------------------------------------------------------


def test_minimal_structure():
    cfg = ingest.parse_structure(STRUCTURE)
    assert cfg.natoms == 2
    assert cfg.species == ("Si", "C")
    assert cfg.charge == 0
    np.testing.assert_allclose(cfg.positions[1], [0.9, 0, 0])


def test_structure_arrays_are_read_only():
    cfg = ingest.parse_structure(STRUCTURE)
    with pytest.raises(ValueError):
        cfg.positions[0, 0] = 1.0


def test_structure_comments_and_blank_lines():
    text = "# header\n" + STRUCTURE.replace("charge 0", "charge 0   # neutral\n")
    assert ingest.parse_structure(text).natoms == 2


@pytest.mark.parametrize(
    "old,new,error",
    [
        ("0.0 5.0 0.0", "5.0 0.0 0.0", SingularLattice),
        ("Si 28.0855", "Xx 28.0855", UnknownSpecies),
        ("C 12.011 0.9", "C 12.011 nan", NonFiniteValue),
        ("C 12.011 0.9", "C 12.011 inf", NonFiniteValue),
        ("C 12.011 0.9 0.0 0.0", "C 12.011 0.9 0.0", MalformedLine),
        ("charge 0", "charge zero", MalformedLine),
        ("atoms 2", "atoms 3", MalformedLine),
        ("lattice", "latice", MalformedLine),
    ],
)
def test_structure_errors(old, new, error):
    with pytest.raises(error):
        ingest.parse_structure(STRUCTURE.replace(old, new))


def test_structure_error_names_line():
    with pytest.raises(UnknownSpecies) as info:
        ingest.parse_structure(STRUCTURE.replace("C 12.011", "Q 12.011"))
    assert info.value.line == 8
    assert "'Q'" in str(info.value)


def test_structure_rejects_trailing_content():
    with pytest.raises(MalformedLine):
        ingest.parse_structure(STRUCTURE + "Si 28.0 1 1 1\n")


def test_structure_roundtrip_bytes():
    assert ingest.write_structure(ingest.parse_structure(STRUCTURE)) == STRUCTURE


def test_casestudy_cell(casestudy):
    cfg = ingest.read_structure(casestudy["ground"])
    assert cfg.natoms == 513
    assert cfg.count("Si") == 512 and cfg.count("C") == 1
    assert cfg.charge == 0
    # bond-length audit: the dumbbell is 1.75 A long and no atom pair is closer
    length = cfg.lattice[0, 0]
    d = cfg.positions[:, None] - cfg.positions[None]
    d -= length * np.round(d / length)
    r = np.linalg.norm(d, axis=-1)
    np.fill_diagonal(r, np.inf)
    assert r.min() == pytest.approx(1.75, abs=1e-9)
    lattice_only = r[2:, 2:]
    assert lattice_only.min() == pytest.approx(math.sqrt(3) / 4 * 5.4307, rel=1e-9)


def test_casestudy_files_roundtrip(casestudy):
    for key in ("ground", "excited", "phonons", "triplet", "orbital_initial"):
        text = casestudy[key].read_text()
        reader = {
            "ground": ingest.parse_structure,
            "excited": ingest.parse_structure,
            "phonons": ingest.parse_phonons,
        }.get(key, ingest.parse_grid)
        writer = {
            "ground": ingest.write_structure,
            "excited": ingest.write_structure,
            "phonons": ingest.write_phonons,
        }.get(key, ingest.write_grid)
        assert writer(reader(text)) == text


# phonons ----------------------------------------------------------------------


def test_single_mode_basis():
    basis = ingest.parse_phonons("phonons 1 1\nmode 1 40.0\n1.0 0.0 0.0\n")
    assert basis.nmodes == 1
    assert basis.frequencies[0] == 40.0


def test_identical_eigenvectors_rejected():
    text = "phonons 1 2\nmode 1 40.0\n1.0 0.0 0.0\nmode 2 41.0\n1.0 0.0 0.0\n"
    with pytest.raises(NonOrthonormal) as info:
        ingest.parse_phonons(text)
    assert info.value.pair == (1, 2)
    assert info.value.deviation == pytest.approx(1.0)


def test_imaginary_mode_rejected():
    with pytest.raises(ImaginaryMode) as info:
        ingest.parse_phonons("phonons 1 1\nmode 1 -5.0\n1.0 0.0 0.0\n")
    assert info.value.index == 1


@pytest.mark.parametrize(
    "text",
    [
        "phonons 1 4\nmode 1 1.0\n1 0 0\n",
        "phonons 1 1\nmode 1 1.0\n1 0\n",
        "phonons 2 1\nmode 1 1.0\n1 0 0\n",
    ],
)
def test_phonon_dimension_errors(text):
    with pytest.raises(DimensionMismatch):
        ingest.parse_phonons(text)


def test_phonon_rejects_nan():
    with pytest.raises(NonFiniteValue):
        ingest.parse_phonons("phonons 1 1\nmode 1 nan\n1 0 0\n")


def _diatomic(m1=28.0855, m2=12.011, k=10.0, r=1.9):
    """Spring along x between two atoms; returns (freqs meV, eigenvector rows)."""
    kmat = np.zeros((6, 6))
    block = k * np.outer([1, 0, 0], [1, 0, 0])
    kmat[:3, :3] = kmat[3:, 3:] = block
    kmat[:3, 3:] = kmat[3:, :3] = -block
    inv = 1 / np.sqrt(np.repeat([m1, m2], 3))
    lam, vec = np.linalg.eigh(kmat * inv[:, None] * inv[None, :])
    unit = HBAR * math.sqrt(EV / (ANGSTROM**2 * ATOMIC_MASS)) / MEV
    freqs = np.where(lam > 1e-10, np.sqrt(np.abs(lam)) * unit, 0.0)
    return freqs, vec.T, unit * math.sqrt(k * (m1 + m2) / (m1 * m2))


def test_diatomic_spring_model():
    freqs, vecs, analytic = _diatomic()
    text = ingest.write_phonons(ingest.PhononBasis(2, freqs, vecs))
    full = ingest.parse_phonons(text)
    assert full.nmodes == 6
    reduced = ingest.parse_phonons(text, drop_zero_modes=True)
    assert reduced.nmodes == 1
    assert reduced.frequencies[0] == pytest.approx(analytic, rel=1e-12)


def test_phonon_roundtrip_bytes():
    freqs, vecs, _ = _diatomic()
    text = ingest.write_phonons(ingest.PhononBasis(2, freqs, vecs))
    assert ingest.write_phonons(ingest.parse_phonons(text)) == text


# grids ------------------------------------------------------------------------


def test_zero_spin_grid_rejected():
    with pytest.raises(NormalizationError) as info:
        ingest.parse_grid(grid_text([0.0] * 8, kind="spin_density", norm=2.0))
    assert info.value.measured == 0.0
    assert info.value.expected == 2.0


def test_value_count_mismatch():
    with pytest.raises(CountMismatch):
        ingest.parse_grid(grid_text([0.1] * 7), check=False)
    with pytest.raises(CountMismatch):
        ingest.parse_grid(grid_text([0.1] * 9), check=False)


def test_grid_counts_at_least_two():
    with pytest.raises(CountMismatch):
        ingest.parse_grid(grid_text([1.0] * 4, counts=(1, 2, 2)), check=False)


def test_grid_nonfinite_names_token_and_line():
    text = grid_text([0.1] * 7 + ["inf"])
    with pytest.raises(NonFiniteValue) as info:
        ingest.parse_grid(text, check=False)
    assert info.value.line == 6
    assert "'inf'" in str(info.value)


def test_grid_bad_header():
    with pytest.raises(MalformedLine):
        ingest.parse_grid(grid_text([0.1] * 8, kind="density"), check=False)


def _gaussian_orbital(n, sigma=1.0, half_width=6.0):
    ns = (math.pi * sigma**2) ** -0.75
    f = lambda x, y, z: ns * np.exp(-(x**2 + y**2 + z**2) / (2 * sigma**2))  # noqa: E731
    return ingest.ScalarField.box(f, (0, 0, 0), half_width, n, kind="orbital")


def test_gaussian_orbital_64():
    text = ingest.write_grid(_gaussian_orbital(64))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        field = ingest.parse_grid(text)
    assert field.counts == (64, 64, 64)
    assert abs(field.l2_norm() - 1.0) < 0.02


def test_normalization_ladder():
    base = _gaussian_orbital(16)
    scaled = lambda s: ingest.ScalarField(  # noqa: E731
        base.origin, base.axes, base.values * s, "orbital", 1.0
    )
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scaled(1.01).check_normalization()
    with pytest.warns(NormalizationWarning):
        scaled(1.03).check_normalization()
    with pytest.raises(NormalizationError):
        scaled(1.08).check_normalization()


@settings(max_examples=25, deadline=None)
@given(
    st.integers(2, 6),
    st.integers(2, 6),
    st.integers(2, 6),
)
def test_grid_index_order(nx, ny, nz):
    ix, iy, iz = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    values = ix * 10**4 + iy * 10**2 + iz
    field = ingest.ScalarField(np.zeros(3), np.eye(3), values.astype(float), "orbital", 1.0)
    text = ingest.write_grid(field)
    back = ingest.parse_grid(text, check=False)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                assert back.values[i, j, k] == i * 10**4 + j * 10**2 + k
    # the body lists iz fastest
    body = " ".join(text.splitlines()[5:]).split()
    assert [float(v) for v in body[:2]] == [0.0, 1.0]
    assert ingest.write_grid(back) == text


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 7), st.sampled_from(["nan", "NaN", "inf", "-inf", "Infinity"]))
def test_grid_rejects_any_nonfinite(position, token):
    values = [0.1] * 8
    values[position] = token
    with pytest.raises(NonFiniteValue):
        ingest.parse_grid(grid_text(values), check=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 16), st.sampled_from(["nan", "inf", "-inf"]))
def test_structure_rejects_any_nonfinite(slot, token):
    lines = STRUCTURE.splitlines()
    floats = [(r, c) for r, line in enumerate(lines) for c, tok in enumerate(line.split()) if "." in tok]
    r, c = floats[slot % len(floats)]
    parts = lines[r].split()
    parts[c] = token
    lines[r] = " ".join(parts)
    with pytest.raises(NonFiniteValue):
        ingest.parse_structure("\n".join(lines) + "\n")


# manifests --------------------------------------------------------------------


def test_minimal_manifest():
    m = ingest.parse_manifest(MANIFEST)
    assert len(m.entries) == 1
    assert m.gap == pytest.approx(1.16)
    assert m.chemical_potentials == {"C": -9.72}
    assert m.entries[0].delta == (("C", 1),)


def test_packaged_levels_fixture():
    m = ingest.read_manifest(packaged("ci_levels.txt"))
    assert m.gap == pytest.approx(1.16)
    assert sorted(m.charges()) == [-1, 0, 1]
    assert m.metadata["gap_room_temperature"] == "1.12"


def test_gap_inverted():
    with pytest.raises(GapInverted):
        ingest.parse_manifest(MANIFEST.replace("E_c = 1.16", "E_c = -0.5"))


@pytest.mark.parametrize("key", ["bulk_energy", "E_v", "E_c"])
def test_missing_scalar(key):
    text = "\n".join(line for line in MANIFEST.splitlines() if not line.startswith(key))
    with pytest.raises(MissingKey) as info:
        ingest.parse_manifest(text)
    assert info.value.name == key


def test_missing_entry():
    text = "\n".join(line for line in MANIFEST.splitlines() if not line.startswith("entry"))
    with pytest.raises(MissingKey):
        ingest.parse_manifest(text)


def test_invalid_occupation():
    with pytest.raises(InvalidOccupation):
        ingest.parse_manifest(MANIFEST + "  level 0.5 occ=2.5 kweight=1.0\n")


def test_kweights_must_sum_to_one():
    text = MANIFEST + "  level 0.5 occ=2 kweight=0.5 k=0\n  level 0.7 occ=0 kweight=0.4 k=1\n"
    with pytest.raises(InvalidOccupation):
        ingest.parse_manifest(text)


def test_manifest_nonfinite():
    with pytest.raises(NonFiniteValue):
        ingest.parse_manifest(MANIFEST.replace("-2494.0", "nan"))


def test_manifest_unknown_entry():
    with pytest.raises(UnknownEntry):
        ingest.parse_manifest(MANIFEST).entry("Ci_plus")


def test_manifest_roundtrip_bytes():
    text = MANIFEST.replace(
        "delta=C:+1\n", "delta=C:+1\n  level 0.3 occ=2.0 kweight=0.5 k=0\n  level 0.3 occ=2.0 kweight=0.5 k=1\n"
    )
    once = ingest.write_manifest(ingest.parse_manifest(text))
    assert ingest.write_manifest(ingest.parse_manifest(once)) == once
    assert once == text
