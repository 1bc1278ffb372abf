"""Spin-Hamiltonian parameters of an S = 1 defect.

Dipolar tensors come from a spin density (grid or point spins), the triplet
levels from exact diagonalisation of

    H/h = S.D.S + (g_e muB / h) B.S + sum_n m_I,n (A_n . z).S

and ODMR lines from the magnetic-dipole matrix elements between levels.
All couplings are in MHz, fields in mT, lengths in Angstrom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage, signal

from .constants import (
    DIPOLAR_EE_MHZ_A3,
    DIPOLAR_EN_MHZ_A3,
    ELECTRON_ZEEMAN_MHZ_PER_MT,
    NUCLEAR_G,
)
from .errors import (
    ExclusionRadiusTooLarge,
    FieldTooLarge,
    GridTooCoarse,
    KindMismatch,
    NonPhysicalInput,
    NucleusOutsideGrid,
    WrongTotalSpin,
)
from .ingest import ScalarField

MAX_FIELD_MT = 1000.0
SPIN_TOL = 0.05
CONVERGENCE_TOL = 0.05


def _sym(t) -> np.ndarray:
    t = np.array(t, dtype=float).reshape(3, 3)
    return 0.5 * (t + t.T)


@dataclass(frozen=True)
class ZfsTensor:
    """Traceless zero-field-splitting tensor (MHz) with derived D and E.

    ``D_zz`` is the principal value of largest magnitude and ``D = 3/2 D_zz``
    keeps its sign; the remaining two are labelled so that
    ``E = (D_xx - D_yy)/2 >= 0``.
    """

    tensor: np.ndarray

    def __post_init__(self):
        t = _sym(self.tensor)
        t -= np.trace(t) / 3.0 * np.eye(3)
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)

    @classmethod
    def from_DE(cls, D: float, E: float, axes=None) -> ZfsTensor:
        """Tensor with principal values ``(-D/3 + E, -D/3 - E, 2D/3)`` along ``axes`` columns."""
        diag = np.diag([-D / 3.0 + E, -D / 3.0 - E, 2.0 * D / 3.0])
        axes = np.eye(3) if axes is None else np.asarray(axes, dtype=float)
        return cls(axes @ diag @ axes.T)

    def principal(self) -> tuple[np.ndarray, np.ndarray]:
        """Principal values ``(D_xx, D_yy, D_zz)`` and axes (columns) in the D/E convention."""
        w, v = np.linalg.eigh(self.tensor)
        order = np.argsort(np.abs(w), kind="stable")
        w, v = w[order], v[:, order]
        if w[0] - w[1] < 0:
            w = w[[1, 0, 2]]
            v = v[:, [1, 0, 2]]
        if np.linalg.det(v) < 0:
            v[:, 0] *= -1
        return w, v

    @property
    def D(self) -> float:
        return 1.5 * float(self.principal()[0][2])

    @property
    def E(self) -> float:
        w = self.principal()[0]
        return 0.5 * float(w[0] - w[1])

    @property
    def axes(self) -> np.ndarray:
        return self.principal()[1]

    def rotated(self, rot) -> ZfsTensor:
        rot = np.asarray(rot, dtype=float)
        return ZfsTensor(rot @ self.tensor @ rot.T)


@dataclass(frozen=True)
class Nucleus:
    species: str
    position: np.ndarray
    g_n: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.array(self.position, dtype=float).reshape(3))

    @classmethod
    def of(cls, isotope: str, position) -> Nucleus:
        """Nucleus with the tabulated g-factor of ``isotope`` (e.g. ``"13C"``)."""
        return cls(isotope, position, NUCLEAR_G[isotope])


@dataclass(frozen=True)
class HyperfineTensor:
    nucleus: Nucleus
    tensor: np.ndarray

    def __post_init__(self):
        t = _sym(self.tensor)
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)

    @property
    def a_iso(self) -> float:
        return float(np.trace(self.tensor)) / 3.0

    @property
    def dipolar(self) -> np.ndarray:
        return self.tensor - self.a_iso * np.eye(3)

    def principal_values(self) -> np.ndarray:
        """Eigenvalues ordered by magnitude, reported as (A_xx, A_yy, A_zz)."""
        w = np.linalg.eigvalsh(self.tensor)
        return w[np.argsort(np.abs(w), kind="stable")]


# ---------------------------------------------------------------------------
# ZFS


def _dipolar_kernel(r: np.ndarray) -> np.ndarray:
    """``(r^2 delta_ab - 3 r_a r_b) / r^5`` for an array of vectors ``(..., 3)``."""
    r2 = np.einsum("...i,...i->...", r, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv5 = np.where(r2 > 0, r2**-2.5, 0.0)
    k = -3.0 * np.einsum("...i,...j->...ij", r, r)
    k += r2[..., None, None] * np.eye(3)
    return k * inv5[..., None, None]


def zfs_from_points(positions, weights) -> ZfsTensor:
    """ZFS of a set of point spins (weights sum to 2 for S = 1).

    Self pairs are excluded.  The double sum runs over ordered pairs, hence
    the prefactor ``C/4`` (``C/2`` per unordered pair for S = 1).
    """
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if abs(w.sum() - 2.0) > SPIN_TOL * 2.0:
        raise WrongTotalSpin(f"point spins sum to {w.sum():.4g}, need 2 for S = 1")
    total = np.zeros((3, 3))
    for i in range(len(pos)):
        r = pos[i] - np.delete(pos, i, axis=0)
        total += np.einsum("j,jab->ab", w[i] * np.delete(w, i), _dipolar_kernel(r))
    return ZfsTensor(0.25 * DIPOLAR_EE_MHZ_A3 * total)


def _grid_kernel(rho: ScalarField, cutoff: float):
    nx, ny, nz = rho.counts
    offs = np.indices((2 * nx - 1, 2 * ny - 1, 2 * nz - 1), dtype=float)
    offs -= np.array([nx - 1, ny - 1, nz - 1], dtype=float)[:, None, None, None]
    r = np.einsum("ixyz,ij->xyzj", offs, rho.axes)
    dist = np.linalg.norm(r, axis=-1)
    k = _dipolar_kernel(r)
    k[dist <= cutoff * (1 + 1e-9)] = 0.0
    # lattice sum of the kernel over a small sphere; zero on cubic grids,
    # an O(1) artefact on anisotropic ones that is removed below
    near = (dist > 0) & (dist <= 2.0 * np.max(np.linalg.norm(rho.axes, axis=1)) * (1 + 1e-9))
    near &= dist > cutoff * (1 + 1e-9)
    return k, k[near].sum(axis=0)


def _zfs_grid_tensor(rho: ScalarField, cutoff: float) -> np.ndarray:
    q = rho.values * rho.voxel_volume
    k, lattice_sum = _grid_kernel(rho, cutoff)
    core = tuple(slice(m - 1, 2 * m - 1) for m in rho.counts)
    out = np.zeros((3, 3))
    for a in range(3):
        for b in range(a, 3):
            conv = signal.fftconvolve(q, k[..., a, b], mode="full")[core]
            out[a, b] = out[b, a] = float(np.sum(q * conv))
    out -= float(np.sum(q * q)) * lattice_sum
    return 0.25 * DIPOLAR_EE_MHZ_A3 * out


def zfs_pairwise(rho: ScalarField, cutoff: float = 0.0) -> ZfsTensor:
    """Direct O(N^2) voxel double sum; reference path for small grids.

    Unlike the FFT path no near-field lattice correction is applied, so the
    two agree exactly only on cubic grids.
    """
    r = rho.coordinates().reshape(-1, 3)
    q = (rho.values * rho.voxel_volume).reshape(-1)
    total = np.zeros((3, 3))
    for i in range(len(r)):
        d = r[i] - r
        dist = np.linalg.norm(d, axis=1)
        keep = dist > cutoff * (1 + 1e-9)
        keep[i] = False
        total += q[i] * np.einsum("j,jab->ab", q[keep], _dipolar_kernel(d[keep]))
    return ZfsTensor(0.25 * DIPOLAR_EE_MHZ_A3 * total)


def _coarsen(rho: ScalarField) -> ScalarField:
    n = [c - c % 2 for c in rho.counts]
    v = rho.values[: n[0], : n[1], : n[2]]
    v = v.reshape(n[0] // 2, 2, n[1] // 2, 2, n[2] // 2, 2).mean(axis=(1, 3, 5))
    origin = rho.origin + 0.5 * rho.axes.sum(axis=0)
    return ScalarField(origin, 2 * rho.axes, v, rho.kind, rho.expected_norm)


def zfs_error_estimate(rho: ScalarField, cutoff: float = 0.0) -> tuple[np.ndarray, float]:
    """Tensor and its estimated relative discretization error.

    The error is the Richardson estimate ``|T_h - T_2h| / 3`` of a
    second-order scheme, relative to ``|T_h|`` or, for nearly isotropic
    densities, to the dipolar scale of the density's own extent.
    """
    t = _zfs_grid_tensor(rho, cutoff)
    coarse = _zfs_grid_tensor(_coarsen(rho), 2.0 * cutoff)
    r = rho.coordinates().reshape(-1, 3)
    w = rho.values.reshape(-1) / rho.values.sum()
    spread = math.sqrt(max(float(w @ np.sum((r - w @ r) ** 2, axis=1)), 1e-12))
    scale = 0.25 * DIPOLAR_EE_MHZ_A3 * rho.integral() ** 2 / spread**3
    err = np.linalg.norm(t - coarse) / 3.0 / max(np.linalg.norm(t), 0.05 * scale)
    return t, float(err)


def zfs_from_spin_density(
    rho: ScalarField, cutoff: float = 0.0, check_convergence: bool = True
) -> ZfsTensor:
    """ZFS tensor of a triplet spin density on a grid.

    The voxel double sum is evaluated as an FFT convolution with the
    dipolar kernel.  Self pairs are always excluded; ``cutoff`` (Angstrom)
    additionally drops voxel pairs closer than that distance.  With
    ``check_convergence`` the sum is repeated on a grid coarsened by two and
    ``GridTooCoarse`` is raised when the estimated error exceeds 5%.
    """
    if rho.kind != "spin_density":
        raise KindMismatch(f"need a spin_density grid, got {rho.kind}")
    total = rho.integral()
    if abs(total - 2.0) > SPIN_TOL * 2.0:
        raise WrongTotalSpin(f"spin density integrates to {total:.4g}, need 2 for S = 1")
    if check_convergence and min(rho.counts) >= 8:
        t, err = zfs_error_estimate(rho, cutoff)
        if err > CONVERGENCE_TOL:
            raise GridTooCoarse(f"estimated ZFS discretization error {100 * err:.1f}% exceeds 5%")
    else:
        t = _zfs_grid_tensor(rho, cutoff)
    return ZfsTensor(t)


# ---------------------------------------------------------------------------
# hyperfine


def _index_coords(rho: ScalarField, point) -> np.ndarray:
    return np.linalg.solve(rho.axes.T, np.asarray(point, dtype=float) - rho.origin)


def hyperfine_from_spin_density(
    rho: ScalarField,
    nucleus: Nucleus,
    spin: float | None = None,
    exclusion_radius: float | None = None,
) -> HyperfineTensor:
    """Fermi-contact plus dipolar hyperfine tensor of one nucleus (MHz).

    ``spin`` defaults to half the declared spin-density integral.  The
    contact density is interpolated trilinearly at the nucleus; voxels
    within ``exclusion_radius`` (default half a voxel diagonal) are left
    out of the dipolar integral.
    """
    if rho.kind != "spin_density":
        raise KindMismatch(f"need a spin_density grid, got {rho.kind}")
    spin = 0.5 * rho.expected_norm if spin is None else spin
    if spin not in (0.5, 1.0):
        raise NonPhysicalInput(f"spin must be 1/2 or 1, got {spin}")
    idx = _index_coords(rho, nucleus.position)
    upper = np.array(rho.counts) - 1
    if np.any(idx < -1e-9) or np.any(idx > upper + 1e-9):
        raise NucleusOutsideGrid(f"nucleus at {nucleus.position} lies outside the grid")
    diag = float(np.linalg.norm(rho.axes.sum(axis=0)))
    radius = 0.5 * diag if exclusion_radius is None else exclusion_radius
    edge = float(np.min(np.linalg.norm(rho.axes, axis=1) * upper))
    if radius > 0.25 * edge:
        raise ExclusionRadiusTooLarge(
            f"exclusion radius {radius:.3g} A exceeds a quarter of the grid edge ({edge:.3g} A)"
        )
    pref = DIPOLAR_EN_MHZ_A3 * nucleus.g_n / (2.0 * spin)

    contact = float(ndimage.map_coordinates(rho.values, idx.reshape(3, 1), order=1)[0])
    a_iso = 8.0 * math.pi / 3.0 * pref * contact

    d = rho.coordinates().reshape(-1, 3) - nucleus.position
    q = rho.values.reshape(-1) * rho.voxel_volume
    dist = np.linalg.norm(d, axis=1)
    keep = dist > radius
    # (3 n n - I)/r^3 = -(r^2 I - 3 r r)/r^5
    dip = -np.einsum("j,jab->ab", q[keep], _dipolar_kernel(d[keep]))
    return HyperfineTensor(nucleus, a_iso * np.eye(3) + pref * dip)


def point_dipole_hyperfine(nucleus: Nucleus, center, charge: float, spin: float) -> np.ndarray:
    """Dipolar tensor of a point spin ``charge`` at ``center`` seen by ``nucleus``."""
    r = np.asarray(center, dtype=float) - nucleus.position
    pref = DIPOLAR_EN_MHZ_A3 * nucleus.g_n / (2.0 * spin)
    return -pref * charge * _dipolar_kernel(r)


# ---------------------------------------------------------------------------
# triplet levels

_SQ2 = math.sqrt(2.0)
SZ = np.diag([-1.0, 0.0, 1.0]).astype(complex)
SPLUS = np.array([[0, 0, 0], [_SQ2, 0, 0], [0, _SQ2, 0]], dtype=complex)
SX = 0.5 * (SPLUS + SPLUS.T)
SY = -0.5j * (SPLUS - SPLUS.T)
SPIN_OPS = (SX, SY, SZ)


@dataclass(frozen=True)
class SpinLevelSet:
    """Eigenvalues (MHz, ascending) and eigenvectors (columns, |-1,0,+1> basis)."""

    energies: np.ndarray
    vectors: np.ndarray
    field: np.ndarray


def spin_hamiltonian(zfs: ZfsTensor, field_mt=(0.0, 0.0, 0.0), nuclei=()) -> np.ndarray:
    """3x3 Hamiltonian in MHz.

    ``nuclei`` is a sequence of ``(HyperfineTensor, m_I)`` static nuclear
    configurations, each nuclear spin taken along the lab z axis.
    """
    h = np.zeros((3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            h += zfs.tensor[a, b] * (SPIN_OPS[a] @ SPIN_OPS[b])
    b = np.asarray(field_mt, dtype=float).reshape(3)
    for a in range(3):
        h += ELECTRON_ZEEMAN_MHZ_PER_MT * b[a] * SPIN_OPS[a]
    for hf, m_i in nuclei:
        coupling = np.asarray(hf.tensor)[:, 2] * m_i
        for a in range(3):
            h += coupling[a] * SPIN_OPS[a]
    return h


def triplet_levels(
    zfs: ZfsTensor, field_mt=(0.0, 0.0, 0.0), nuclei: Sequence = ()
) -> SpinLevelSet:
    b = np.asarray(field_mt, dtype=float).reshape(3)
    if np.linalg.norm(b) >= MAX_FIELD_MT:
        raise FieldTooLarge(f"|B| = {np.linalg.norm(b):.4g} mT outside the linear-Zeeman regime")
    w, v = np.linalg.eigh(spin_hamiltonian(zfs, b, nuclei))
    return SpinLevelSet(w, v, b)


@dataclass(frozen=True)
class OdmrLine:
    frequency: float
    intensity: float
    allowed: bool
    pairs: tuple[tuple[int, int], ...]


def odmr_frequencies(
    levels: SpinLevelSet, forbidden_below: float = 1e-6, merge_within: float = 1e-6
) -> list[OdmrLine]:
    """Transitions between all level pairs with their transverse matrix elements.

    Intensity is ``|<j|Sx|i>|^2 + |<j|Sy|i>|^2``; lines whose amplitude is
    below ``forbidden_below`` are flagged not allowed.  Zero-frequency pairs
    (degenerate levels) are dropped and coincident lines merged.
    """
    e, v = levels.energies, levels.vectors
    raw = []
    for i in range(3):
        for j in range(i + 1, 3):
            f = float(e[j] - e[i])
            if f <= merge_within:
                continue
            amp2 = sum(abs(v[:, j].conj() @ op @ v[:, i]) ** 2 for op in (SX, SY))
            raw.append((f, float(amp2), (i, j)))
    raw.sort()
    lines: list[OdmrLine] = []
    for f, amp2, pair in raw:
        if lines and f - lines[-1].frequency <= merge_within:
            last = lines[-1]
            total = last.intensity + amp2
            lines[-1] = OdmrLine(
                last.frequency, total, math.sqrt(total) >= forbidden_below, last.pairs + (pair,)
            )
        else:
            lines.append(OdmrLine(f, amp2, math.sqrt(amp2) >= forbidden_below, (pair,)))
    return lines


def isotope_risk(shell_site_counts: Sequence[int], abundance: float) -> float:
    """Probability that at least one listed lattice site holds a spin-carrying isotope."""
    if not 0.0 <= abundance <= 1.0:
        raise NonPhysicalInput(f"abundance {abundance} outside [0, 1]")
    n = 0
    for c in shell_site_counts:
        if int(c) != c or c < 0:
            raise NonPhysicalInput(f"site counts must be non-negative integers, got {c}")
        n += int(c)
    return 1.0 - (1.0 - abundance) ** n
