"""Transition dipoles, radiative rates and C2v selection rules."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .constants import (
    DEBYE,
    EANGSTROM_IN_DEBYE,
    EV,
    HBAR,
    SPEED_OF_LIGHT,
    VACUUM_PERMITTIVITY,
)
from .errors import GridMismatch, KindMismatch, NonPhysicalInput, OrderViolation
from .ingest import ScalarField


class Lifetime(enum.Enum):
    """Sentinel for a lifetime that does not exist (zero rate)."""

    INFINITE = "infinite"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TransitionDipole:
    vector: np.ndarray
    source: str = "user-supplied"

    def __post_init__(self):
        v = np.array(self.vector, dtype=float).reshape(3)
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @classmethod
    def from_magnitude(cls, debye: float) -> TransitionDipole:
        if debye < 0:
            raise NonPhysicalInput(f"dipole magnitude must be non-negative, got {debye}")
        return cls(np.array([0.0, 0.0, debye]))

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class EmitterOptics:
    e_zpl: float
    refractive_index: float
    dipole: TransitionDipole
    gamma_rad: float
    tau_rad: float | Lifetime


def transition_dipole_grid(psi_i: ScalarField, psi_f: ScalarField) -> TransitionDipole:
    """Dipole ``<psi_f| r |psi_i>`` of two real orbitals on the same grid, in Debye.

    Positions are measured from the centroid of ``(psi_i^2 + psi_f^2)/2`` so
    that slightly non-orthogonal numerical orbitals do not pick up a spurious
    origin-dependent term.
    """
    if psi_i.kind != "orbital" or psi_f.kind != "orbital":
        raise KindMismatch(f"need two orbital grids, got {psi_i.kind} and {psi_f.kind}")
    if not psi_i.same_grid(psi_f):
        raise GridMismatch("orbitals are sampled on different grids")
    r = psi_i.coordinates().reshape(-1, 3)
    a = psi_i.values.reshape(-1)
    b = psi_f.values.reshape(-1)
    dens = 0.5 * (a * a + b * b)
    centroid = dens @ r / dens.sum()
    mu = (a * b) @ (r - centroid) * psi_i.voxel_volume
    return TransitionDipole(mu * EANGSTROM_IN_DEBYE, source="grid-computed")


def radiative_rate(e_zpl: float, mu: float, n_d: float) -> tuple[float, float | Lifetime]:
    """Spontaneous emission rate ``n E^3 mu^2 / (3 pi eps0 c^3 hbar^4)``.

    Args:
        e_zpl: photon energy in eV.
        mu: transition dipole in Debye.
        n_d: refractive index of the host.

    Returns:
        ``(gamma_rad, tau_rad)`` in 1/s and s; ``tau_rad`` is
        ``Lifetime.INFINITE`` for a vanishing dipole.
    """
    if not e_zpl > 0:
        raise NonPhysicalInput(f"E_zpl must be positive, got {e_zpl}")
    if not n_d >= 1:
        raise NonPhysicalInput(f"refractive index must be >= 1, got {n_d}")
    if mu < 0:
        raise NonPhysicalInput(f"dipole magnitude must be non-negative, got {mu}")
    energy = e_zpl * EV
    dipole = mu * DEBYE
    gamma = (
        n_d * energy**3 * dipole**2
        / (3.0 * math.pi * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT**3 * HBAR**4)
    )
    if gamma == 0:
        return 0.0, Lifetime.INFINITE
    return gamma, 1.0 / gamma


def emitter_optics(e_zpl: float, dipole: TransitionDipole | float, n_d: float) -> EmitterOptics:
    if not isinstance(dipole, TransitionDipole):
        dipole = TransitionDipole.from_magnitude(dipole)
    gamma, tau = radiative_rate(e_zpl, dipole.magnitude, n_d)
    return EmitterOptics(e_zpl, n_d, dipole, gamma, tau)


def quantum_yield(tau_rad: float, tau_pl: float) -> float:
    """Radiative yield ``tau_pl / tau_rad`` of an emitter with measured PL lifetime."""
    if not (tau_rad > 0 and tau_pl > 0):
        raise NonPhysicalInput("lifetimes must be positive")
    if tau_pl > tau_rad:
        raise OrderViolation(f"PL lifetime {tau_pl:g} s exceeds radiative lifetime {tau_rad:g} s")
    return tau_pl / tau_rad


class Irrep(str, enum.Enum):
    """Irreducible representations of C2v."""

    A1 = "A1"
    A2 = "A2"
    B1 = "B1"
    B2 = "B2"

    def __str__(self):
        return self.value


# characters under (E, C2, sigma_v(xz), sigma_v'(yz))
C2V_CHARACTERS = {
    Irrep.A1: (1, 1, 1, 1),
    Irrep.A2: (1, 1, -1, -1),
    Irrep.B1: (1, -1, 1, -1),
    Irrep.B2: (1, -1, -1, 1),
}

DIPOLE_COMPONENTS = {"x": Irrep.B1, "y": Irrep.B2, "z": Irrep.A1}


def _irrep(label) -> Irrep:
    return label if isinstance(label, Irrep) else Irrep(str(label).replace("_", "").upper())


def irrep_product(a, b) -> Irrep:
    """Direct product in C2v (every irrep is one-dimensional)."""
    chars = tuple(x * y for x, y in zip(C2V_CHARACTERS[_irrep(a)], C2V_CHARACTERS[_irrep(b)]))
    for irrep, ref in C2V_CHARACTERS.items():
        if ref == chars:
            return irrep
    raise AssertionError("C2v character table is not closed")


@dataclass(frozen=True)
class DipoleVerdict:
    initial: Irrep
    final: Irrep
    polarizations: tuple[str, ...]

    @property
    def allowed(self) -> bool:
        return bool(self.polarizations)


def dipole_allowed(initial, final) -> DipoleVerdict:
    """Electric-dipole selection rule between two C2v states.

    The transition is allowed for component ``c`` when
    ``final x c x initial`` contains A1.
    """
    i, f = _irrep(initial), _irrep(final)
    pols = tuple(
        c for c, rep in DIPOLE_COMPONENTS.items()
        if irrep_product(irrep_product(f, rep), i) is Irrep.A1
    )
    return DipoleVerdict(i, f, pols)


def selection_table() -> dict[tuple[Irrep, Irrep], tuple[str, ...]]:
    """Allowed polarizations for every ordered pair of C2v irreps."""
    return {(a, b): dipole_allowed(a, b).polarizations for a, b in product(Irrep, Irrep)}
