"""Huang-Rhys factors and phonon-sideband luminescence lineshapes.

The emission lineshape is built with the generating-function method: the
phonon part of the time-domain correlation function is
``G(t) = exp(S(t) - S(0))`` with ``S(t) = sum_k s_k exp(-i w_k t)`` (plus
the stimulated terms at finite temperature).  It is multiplied by the
Fourier transform of the zero-phonon-line shape and transformed back to
energy with a single FFT, so every replica inherits the ZPL broadening.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .constants import BOLTZMANN_MEV, HR_FACTOR
from .errors import (
    AtomCountMismatch,
    DimensionMismatch,
    DisplacementTooLarge,
    GridTooCoarse,
    NegativeTemperature,
    NonPhysicalInput,
    SmearingNonPositive,
    SpeciesMismatch,
    ZeroFrequencyMode,
)
from .ingest import DefectConfiguration, PhononBasis

ZERO_MODE_MEV = 1e-6
NEGATIVE_CLAMP = 1e-8


def _workers() -> int:
    return max(1, int(os.environ.get("DPK_THREADS", "1")))


def mass_weighted_displacement(
    ground: DefectConfiguration, excited: DefectConfiguration
) -> np.ndarray:
    """Return ``sqrt(m_a) * (R_excited - R_ground)`` flattened to length 3N.

    Displacements are reduced to the minimum image of the ground-state
    lattice.  Units are amu^1/2 Angstrom.
    """
    if ground.natoms != excited.natoms:
        raise AtomCountMismatch(f"{ground.natoms} atoms vs {excited.natoms} atoms")
    for i, (a, b) in enumerate(zip(ground.species, excited.species)):
        if a != b:
            raise SpeciesMismatch(f"atom {i + 1}: {a} vs {b}")
    lattice = ground.lattice
    d = excited.positions - ground.positions
    frac = d @ np.linalg.inv(lattice)
    frac -= np.round(frac)
    d = frac @ lattice
    limit = 0.5 * np.min(np.linalg.norm(lattice, axis=1))
    norms = np.linalg.norm(d, axis=1)
    worst = int(np.argmax(norms))
    if norms[worst] > limit:
        raise DisplacementTooLarge(
            f"atom {worst + 1} moves {norms[worst]:.3f} A, more than half the shortest lattice vector"
        )
    return (np.sqrt(ground.masses)[:, None] * d).reshape(-1)


@dataclass(frozen=True)
class HuangRhysDecomposition:
    """Per-mode energies (meV), projections q_k (amu^1/2 A) and factors s_k."""

    frequencies: np.ndarray
    q: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        for name in ("frequencies", "q", "s"):
            a = np.array(getattr(self, name), dtype=float).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not len(self.frequencies) == len(self.q) == len(self.s):
            raise DimensionMismatch("frequencies, q and s differ in length")
        if np.any(self.s < 0):
            raise NonPhysicalInput("partial Huang-Rhys factors must be non-negative")

    @classmethod
    def from_factors(cls, frequencies, s) -> HuangRhysDecomposition:
        """Build a decomposition from (energy, s_k) pairs, inverting for q_k."""
        frequencies = np.asarray(frequencies, dtype=float).reshape(-1)
        s = np.asarray(s, dtype=float).reshape(-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(frequencies > 0, np.sqrt(s / (HR_FACTOR * frequencies)), 0.0)
        return cls(frequencies, q, s)

    @property
    def total(self) -> float:
        return float(math.fsum(self.s))

    @property
    def max_frequency(self) -> float:
        return float(self.frequencies.max()) if len(self.frequencies) else 0.0

    def __len__(self):
        return len(self.s)


def partial_hr_factors(disp, basis: PhononBasis) -> HuangRhysDecomposition:
    """Project a mass-weighted displacement on the phonon modes.

    ``q_k = e_k . disp`` and ``s_k = w_k q_k^2 / (2 hbar)``.  Zero-frequency
    modes must carry no projection (a net translation in ``disp``).
    """
    disp = np.asarray(disp, dtype=float).reshape(-1)
    if disp.size != 3 * basis.natoms:
        raise DimensionMismatch(f"displacement length {disp.size} != 3 * {basis.natoms}")
    q = basis.eigenvectors @ disp
    w = basis.frequencies
    zero = w <= ZERO_MODE_MEV
    scale = max(1.0, float(np.linalg.norm(disp)))
    if np.any(np.abs(q[zero]) > 1e-8 * scale):
        k = int(np.flatnonzero(zero & (np.abs(q) > 1e-8 * scale))[0])
        raise ZeroFrequencyMode(
            f"mode {k + 1} has zero frequency but projection {q[k]:.3g} (translation contamination)"
        )
    s = HR_FACTOR * w * q**2
    s[zero] = 0.0
    return HuangRhysDecomposition(w, q, s)


def debye_waller(hr: HuangRhysDecomposition) -> float:
    """Fraction of emission in the zero-phonon line, ``exp(-S_tot)``."""
    return math.exp(-hr.total)


@dataclass(frozen=True)
class SpectralDensity:
    """Gaussian-smeared ``S(hbar w)`` on a uniform grid (meV, 1/meV)."""

    energies: np.ndarray
    values: np.ndarray
    smearing: float

    @property
    def step(self) -> float:
        return float(self.energies[1] - self.energies[0])

    def area(self) -> float:
        return float(np.trapezoid(self.values, self.energies))


def spectral_density(
    hr: HuangRhysDecomposition, smearing: float, step: float | None = None, emax: float | None = None
) -> SpectralDensity:
    if not smearing > 0:
        raise SmearingNonPositive(f"smearing must be positive, got {smearing}")
    step = smearing / 10.0 if step is None else step
    top = hr.max_frequency if len(hr) else 100.0
    emax = top + 8.0 * smearing if emax is None else emax
    emin = min(0.0, float(hr.frequencies.min()) - 8.0 * smearing) if len(hr) else 0.0
    n = int(math.ceil((emax - emin) / step)) + 1
    energies = emin + step * np.arange(n)
    values = np.zeros(n)
    norm = 1.0 / (smearing * math.sqrt(2.0 * math.pi))
    for w, s in zip(hr.frequencies, hr.s):
        if s:
            values += s * norm * np.exp(-0.5 * ((energies - w) / smearing) ** 2)
    return SpectralDensity(energies, values, smearing)


@dataclass(frozen=True)
class EnergyGrid:
    """Sampling of the emission spectrum (energies in eV).

    ``below``/``above`` are the spans below and above the ZPL; ``step``
    defaults to a fraction of the ZPL width; ``n_points`` forces the FFT
    length.  Unset values are chosen automatically.
    """

    step: float | None = None
    below: float | None = None
    above: float | None = None
    n_points: int | None = None


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    intensities: np.ndarray
    e_zpl: float
    s_total: float
    debye_waller: float
    gamma_zpl: float
    temperature: float = 0.0
    broadening: str = "gaussian"
    metadata: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(np.trapezoid(self.intensities, self.energies))

    def weight_between(self, lo: float, hi: float) -> float:
        """Sum of intensity times step over ``lo <= E < hi`` (eV)."""
        step = self.energies[1] - self.energies[0]
        sel = (self.energies >= lo) & (self.energies < hi)
        return float(self.intensities[sel].sum() * step)

    def replica_weight(self, k: int, phonon_energy_ev: float) -> float:
        """Weight of the k-phonon replica of a single-mode spectrum."""
        centre = self.e_zpl - k * phonon_energy_ev
        half = 0.5 * phonon_energy_ev
        return self.weight_between(centre - half, centre + half)

    def peak_energy(self, lo: float = -np.inf, hi: float = np.inf) -> float:
        sel = (self.energies >= lo) & (self.energies <= hi)
        return float(self.energies[sel][np.argmax(self.intensities[sel])])

    def header(self) -> dict[str, float | str]:
        out = {
            "zpl_energy_eV": self.e_zpl,
            "S_total": self.s_total,
            "debye_waller": self.debye_waller,
            "zpl_width_meV": self.gamma_zpl,
            "zpl_broadening": self.broadening,
            "temperature_K": self.temperature,
        }
        out.update(self.metadata)
        return out

    def to_text(self) -> str:
        out = [f"# {k} = {_g(v)}" for k, v in self.header().items()]
        out.append("# energy_eV intensity_per_eV")
        out += [f"{e:.6f} {i:.6e}" for e, i in zip(self.energies, self.intensities)]
        return "\n".join(out) + "\n"


def _g(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _modes_ev(source):
    if isinstance(source, HuangRhysDecomposition):
        keep = source.s > 0
        return source.frequencies[keep] * 1e-3, source.s[keep], source.total
    if isinstance(source, SpectralDensity):
        weights = source.values * source.step
        keep = weights != 0
        return source.energies[keep] * 1e-3, weights[keep], float(weights.sum())
    raise TypeError(f"expected HuangRhysDecomposition or SpectralDensity, got {type(source).__name__}")


def _occupation(w_ev, temperature):
    if temperature == 0:
        return np.zeros_like(w_ev)
    x = w_ev * 1e3 / (BOLTZMANN_MEV * temperature)
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(x > 0, 1.0 / np.expm1(x), 0.0)


def generating_function_spectrum(
    source,
    e_zpl: float,
    temperature: float = 0.0,
    gamma_zpl: float = 1.0,
    grid: EnergyGrid | None = None,
    broadening: str = "gaussian",
) -> Spectrum:
    """Emission lineshape from a Huang-Rhys decomposition or spectral density.

    Args:
        source: ``HuangRhysDecomposition`` or ``SpectralDensity``.
        e_zpl: zero-phonon-line energy in eV.
        temperature: kelvin; 0 gives the spontaneous-emission-only limit.
        gamma_zpl: ZPL width in meV (Gaussian sigma or Lorentzian HWHM).
        grid: energy sampling; chosen automatically when omitted.
        broadening: ``"gaussian"`` or ``"lorentzian"``.

    Returns:
        A ``Spectrum`` with unit area whose sideband lies below ``e_zpl``.
    """
    if not e_zpl > 0:
        raise NonPhysicalInput(f"E_zpl must be positive, got {e_zpl}")
    if temperature < 0:
        raise NegativeTemperature(f"temperature {temperature} K is negative")
    if not gamma_zpl > 0:
        raise SmearingNonPositive(f"ZPL width must be positive, got {gamma_zpl}")
    if broadening not in ("gaussian", "lorentzian"):
        raise ValueError(f"unknown broadening {broadening!r}")
    grid = grid or EnergyGrid()
    w, s, s_sum = _modes_ev(source)
    gamma = gamma_zpl * 1e-3
    wmax = float(w.max()) if w.size else 0.0

    step = grid.step
    if step is None:
        step = gamma / (5.0 if broadening == "gaussian" else 10.0)
    # time window must hold 20 hbar/gamma: T = 2 pi hbar / step
    if 2.0 * math.pi / step < 20.0 / gamma:
        raise GridTooCoarse(
            f"energy step {step:.3g} eV gives a time window shorter than 20 hbar/gamma"
        )
    nbar = _occupation(w, temperature)
    if grid.above is not None:
        above = grid.above
    else:
        # anti-Stokes replicas reach further above the ZPL when warm
        s_abs = float(np.sum(s * nbar))
        above = (s_abs + 8.0 * math.sqrt(s_abs) + 5.0) * wmax + 10.0 * gamma
    if grid.below is not None:
        below = grid.below
    else:
        tail = (s_sum + 8.0 * math.sqrt(s_sum) + 8.0) * wmax if w.size else 0.0
        below = max(0.5, tail + 10.0 * gamma)
    if grid.n_points is not None:
        n = int(grid.n_points)
    else:
        span = max(below + above, 8.0 * wmax)
        n = 1 << max(4, math.ceil(math.log2(span / step)))
    # Nyquist for the fastest mode: dt <= pi hbar / (4 wmax)
    if w.size and n * step < 8.0 * wmax:
        raise GridTooCoarse(
            f"{n} points of {step:.3g} eV do not resolve the {wmax * 1e3:.3g} meV mode in time"
        )
    n_neg = min(n // 2, int(math.ceil(above / step)))

    t = 2.0 * math.pi * scipy.fft.fftfreq(n, d=step)
    st = np.zeros(n, dtype=complex)
    chunk = max(1, 2_000_000 // n)
    for i in range(0, w.size, chunk):
        wi, si, ni = w[i : i + chunk], s[i : i + chunk], nbar[i : i + chunk]
        phase = np.exp(-1j * np.outer(t, wi))
        st += phase @ (si * (ni + 1.0)) + phase.conj() @ (si * ni)
    s0 = float(np.sum(s * (2.0 * nbar + 1.0)))
    g = np.exp(st - s0)
    if broadening == "gaussian":
        g *= np.exp(-0.5 * (gamma * t) ** 2)
    else:
        g *= np.exp(-gamma * np.abs(t))

    weights = scipy.fft.ifft(g, workers=_workers())
    intens = weights.real / step
    peak = float(intens.max())
    if intens.min() < -NEGATIVE_CLAMP * peak:
        raise GridTooCoarse(
            f"negative intensity {intens.min():.3g} (peak {peak:.3g}) signals aliasing; refine the grid"
        )
    intens = np.clip(intens, 0.0, None)

    x = step * np.arange(n, dtype=float)
    x[n - n_neg :] -= n * step
    order = np.argsort(-x)
    energies = e_zpl - x[order]
    return Spectrum(
        energies=energies,
        intensities=intens[order],
        e_zpl=float(e_zpl),
        s_total=float(s_sum),
        debye_waller=math.exp(-s0),
        gamma_zpl=float(gamma_zpl),
        temperature=float(temperature),
        broadening=broadening,
    )
