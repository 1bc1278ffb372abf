"""Synthetic inputs for a [001] carbon-silicon split interstitial in silicon.

Everything here is built from simple models so the whole pipeline can run
without electronic-structure output:

* a 4x4x4 conventional silicon supercell with one site replaced by a
  C-Si dumbbell along z (513 atoms);
* harmonic phonons from nearest- and second-neighbour central springs;
* an excited-state geometry obtained as the linear response to a force
  pattern on the dumbbell, scaled to a chosen total Huang-Rhys factor;
* model spin densities and orbitals on cubic grids.

``python -m dpk.casestudy DIR`` writes the files consumed by ``dpk --fixtures DIR``.
"""

from __future__ import annotations

import math
import shutil
import sys
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import ANGSTROM, ATOMIC_MASS, EV, HBAR, MEV
from .ingest import (
    DefectConfiguration,
    PhononBasis,
    ScalarField,
    write_grid,
    write_phonons,
    write_structure,
)
from .lineshape import mass_weighted_displacement, partial_hr_factors
from .spinham import Nucleus, hyperfine_from_spin_density

SI_LATTICE = 5.4307
SI_MASS = 28.0855
C_MASS = 12.011
CELLS = 4
HR_TARGET = 2.88
# dumbbell atom offsets from the vacated site along z (Angstrom)
C_OFFSET = -0.75
SI_OFFSET = 1.0
NN_CUT = 2.7
SNN_CUT = 4.1
K_NN = 7.0  # eV/A^2
K_SNN = 0.9
C_STIFFENING = 1.5
MODE_FRACTION = 0.995
MAX_MODES = 240

FILES = {
    "ground": "ci_ground.txt",
    "excited": "ci_positive.txt",
    "phonons": "ci_phonons.txt",
    "triplet": "ci_triplet_density.txt",
    "doublet": "ci_plus_density.txt",
    "orbital_initial": "ci_orbital_a1.txt",
    "orbital_final": "ci_orbital_b1.txt",
    "manifest": "ci_levels.txt",
    "rates": "ci_rates.txt",
}


def packaged(name: str) -> Path:
    """Path of a text fixture shipped inside the package."""
    return Path(str(resources.files("dpk") / "fixtures" / name))


def silicon_supercell(cells: int = CELLS, a: float = SI_LATTICE) -> np.ndarray:
    fcc = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
    basis = np.vstack([fcc, fcc + 0.25])
    grid = np.stack(np.meshgrid(*[np.arange(cells)] * 3, indexing="ij"), -1).reshape(-1, 1, 3)
    return ((grid + basis).reshape(-1, 3) * a) % (cells * a)


def _defect_site(positions: np.ndarray, lattice: float) -> int:
    centre = np.full(3, lattice / 2)
    return int(np.argmin(np.linalg.norm(positions - centre, axis=1)))


def ground_configuration() -> DefectConfiguration:
    """Neutral 513-atom cell: 511 lattice Si plus the C-Si dumbbell."""
    length = CELLS * SI_LATTICE
    pos = silicon_supercell()
    site = _defect_site(pos, length)
    centre = pos[site]
    rest = np.delete(pos, site, axis=0)
    dumbbell = np.array([centre + [0, 0, C_OFFSET], centre + [0, 0, SI_OFFSET]])
    positions = np.vstack([dumbbell, rest])
    species = ["C"] + ["Si"] * (len(positions) - 1)
    masses = [C_MASS] + [SI_MASS] * (len(positions) - 1)
    return DefectConfiguration(np.eye(3) * length, tuple(species), masses, positions, 0, "ci_ground")


def _pairs(cfg: DefectConfiguration):
    length = cfg.lattice[0, 0]
    d = cfg.positions[:, None, :] - cfg.positions[None, :, :]
    d -= length * np.round(d / length)
    r = np.linalg.norm(d, axis=-1)
    i, j = np.nonzero(np.triu(r < SNN_CUT, 1))
    return i, j, d[i, j], r[i, j]


def force_constants(cfg: DefectConfiguration) -> np.ndarray:
    """Central-spring force-constant matrix (eV/A^2), 3N x 3N."""
    n = cfg.natoms
    k = np.zeros((n, 3, n, 3))
    carbon = np.array([s == "C" for s in cfg.species])
    for i, j, d, r in zip(*_pairs(cfg)):
        spring = K_NN if r < NN_CUT else K_SNN
        if carbon[i] or carbon[j]:
            spring *= C_STIFFENING
        u = d / r
        block = spring * np.outer(u, u)
        k[i, :, i, :] += block
        k[j, :, j, :] += block
        k[i, :, j, :] -= block
        k[j, :, i, :] -= block
    return k.reshape(3 * n, 3 * n)


@lru_cache(maxsize=1)
def _normal_modes():
    cfg = ground_configuration()
    inv = 1.0 / np.sqrt(np.repeat(cfg.masses, 3))
    dyn = force_constants(cfg) * inv[:, None] * inv[None, :]
    lam, vec = np.linalg.eigh(dyn)
    # sqrt(eV / (A^2 amu)) -> meV
    unit = HBAR * math.sqrt(EV / (ANGSTROM**2 * ATOMIC_MASS)) / MEV
    freq = np.sqrt(np.clip(lam, 0.0, None)) * unit
    freq[lam < 1e-8 * lam.max()] = 0.0
    return cfg, freq, vec.T.copy()


def excited_configuration() -> DefectConfiguration:
    """Relaxed geometry of the emitting state.

    The dumbbell is stretched along z and its four lattice neighbours pushed
    outwards; the response is taken from the harmonic model and scaled so
    that the total Huang-Rhys factor equals ``HR_TARGET``.
    """
    cfg, freq, vec = _normal_modes()
    force = np.zeros((cfg.natoms, 3))
    force[0] = [0, 0, -1.0]
    force[1] = [0, 0, 1.0]
    centre = cfg.positions[:2].mean(axis=0)
    d = cfg.positions - centre
    r = np.linalg.norm(d, axis=1)
    shell = np.nonzero((r > 1.2) & (r < 2.9))[0]
    shell = shell[shell > 1]
    force[shell] = 0.3 * d[shell] / r[shell, None]
    force -= force.sum(axis=0) / cfg.natoms
    sqm = np.sqrt(np.repeat(cfg.masses, 3))
    f_mw = force.reshape(-1) / sqm
    lam = (freq / freq.max()) ** 2
    proj = vec @ f_mw
    q = np.where(freq > 0, proj / np.where(lam > 0, lam, 1.0), 0.0)
    u = vec.T @ q
    disp = (u / sqm).reshape(-1, 3)
    trial = partial_hr_factors(sqm * disp.reshape(-1), PhononBasis(cfg.natoms, freq, vec)).total
    disp *= math.sqrt(HR_TARGET / trial)
    return DefectConfiguration(
        cfg.lattice, cfg.species, cfg.masses, cfg.positions + disp, 1, "ci_positive"
    )


def phonon_basis(max_modes: int = MAX_MODES) -> PhononBasis:
    """The modes that carry almost all of the Huang-Rhys weight.

    Keeps the largest partial factors until ``MODE_FRACTION`` of the total
    is covered, in ascending frequency order.
    """
    cfg, freq, vec = _normal_modes()
    full = PhononBasis(cfg.natoms, freq, vec)
    s = partial_hr_factors(mass_weighted_displacement(cfg, excited_configuration()), full).s
    order = np.argsort(s)[::-1]
    cumulative = np.cumsum(s[order]) / s.sum()
    count = min(max_modes, int(np.searchsorted(cumulative, MODE_FRACTION)) + 1)
    keep = np.sort(order[:count])
    return PhononBasis(cfg.natoms, freq[keep], vec[keep])


# ---------------------------------------------------------------------------
# model grids


def _gaussian(r2, sigma):
    return np.exp(-r2 / (2.0 * sigma**2))


def triplet_density(n: int = 48, half_width: float = 6.0) -> ScalarField:
    """Two unpaired electrons in orthogonal p-like orbitals on the dumbbell.

    A compact p_x lobe sits on the carbon and a more diffuse p_y lobe on
    the silicon; the integral is 2.
    """

    def rho(x, y, z):
        a = x**2 * _gaussian(x**2 + y**2 + (z + 0.9) ** 2, 0.7)
        b = y**2 * _gaussian(x**2 + y**2 + (z - 0.9) ** 2, 1.0)
        norm = (2.0 * math.pi) ** 1.5
        return a / (norm * 0.7**5) + b / (norm * 1.0**5)

    return ScalarField.box(rho, (0, 0, 0), half_width, n, kind="spin_density", expected_norm=2.0)


def _hybrid(ratio: float, sigma: float = 0.5):
    """Normalized s + ratio * p_z hybrid density (per unit integral)."""
    ns = (math.pi * sigma**2) ** -0.75
    np_ = math.sqrt(2.0) / sigma * ns
    norm = 1.0 + ratio**2

    def rho(x, y, z):
        g = np.exp(-(x**2 + y**2 + z**2) / (2.0 * sigma**2))
        return (ns * g + ratio * np_ * z * g) ** 2 / norm

    return rho


def doublet_density(n: int = 48, half_width: float = 4.0, ratio: float | None = None) -> ScalarField:
    """Spin density of the positive defect: an sp hybrid on the carbon.

    The s/p ratio is chosen so that the carbon hyperfine tensor has
    ``A_zz / A_xx`` close to 13.8, an axial pattern with a large parallel
    component.
    """
    if ratio is None:
        ratio = doublet_ratio(n, half_width)
    return ScalarField.box(_hybrid(ratio), (0, 0, 0), half_width, n, expected_norm=1.0)


@lru_cache(maxsize=None)
def doublet_ratio(n: int = 48, half_width: float = 4.0, target: float = 169.44 / 12.2) -> float:
    """s/p mixing that gives ``A_par / A_perp = target`` for an axial tensor.

    With ``A_par = a + 2b`` and ``A_perp = a - b`` this fixes
    ``a / b = (target + 2) / (target - 1)``, and ``a / b`` falls
    monotonically as the p share grows.
    """
    nucleus = Nucleus.of("13C", (0.0, 0.0, 0.0))
    goal = (target + 2.0) / (target - 1.0)

    def contact_over_dipolar(ratio):
        rho = ScalarField.box(_hybrid(ratio), (0, 0, 0), half_width, n, expected_norm=1.0)
        hf = hyperfine_from_spin_density(rho, nucleus)
        return hf.a_iso / (0.5 * hf.dipolar[2, 2])

    lo, hi = 0.05, 20.0
    for _ in range(40):
        mid = math.sqrt(lo * hi)
        if contact_over_dipolar(mid) > goal:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def orbitals(n: int = 48, half_width: float = 6.0, sigma: float = 1.0):
    """Normalized s-like (A1) and p_x-like (B1) Gaussian orbitals."""
    ns = (math.pi * sigma**2) ** -0.75

    def s(x, y, z):
        return ns * _gaussian(x**2 + y**2 + z**2, sigma)

    def px(x, y, z):
        return math.sqrt(2.0) / sigma * ns * x * _gaussian(x**2 + y**2 + z**2, sigma)

    make = lambda f: ScalarField.box(f, (0, 0, 0), half_width, n, kind="orbital", expected_norm=1.0)  # noqa: E731
    return make(s), make(px)


def write_casestudy(directory) -> dict[str, Path]:
    """Write every case-study input into ``directory``; returns the paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {key: out / name for key, name in FILES.items()}
    paths["ground"].write_text(write_structure(ground_configuration()))
    paths["excited"].write_text(write_structure(excited_configuration()))
    paths["phonons"].write_text(write_phonons(phonon_basis()))
    paths["triplet"].write_text(write_grid(triplet_density()))
    paths["doublet"].write_text(write_grid(doublet_density()))
    initial, final = orbitals()
    paths["orbital_initial"].write_text(write_grid(initial))
    paths["orbital_final"].write_text(write_grid(final))
    for key in ("manifest", "rates"):
        shutil.copyfile(packaged(FILES[key]), paths[key])
    return paths


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m dpk.casestudy DIR", file=sys.stderr)
        return 2
    for path in write_casestudy(argv[0]).values():
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
