"""Domain types and line-oriented text parsers.

Four formats are understood, each with a canonical writer so that
``write_x(parse_x(text)) == text`` for canonical input:

structure::

    lattice
    ax ay az
    bx by bz
    cx cy cz
    charge 0
    atoms 2
    Si 28.0855 0.0 0.0 0.0
    C 12.011 0.9 0.0 0.0

phonons::

    phonons <natoms> <nmodes>
    mode 1 40.0
    ex ey ez          # one line per atom, mass-weighted and orthonormal

grid (values with iz fastest, ix slowest)::

    grid NX NY NZ spin_density|orbital <expected_norm>
    origin x y z
    axis1 x y z
    axis2 x y z
    axis3 x y z
    v v v ...

manifest::

    bulk_energy = -2494.0
    E_v = 0.0
    E_c = 1.16
    mu.C = -9.72
    entry Ci_0 charge=0 energy=-2500.0 corr=0.0 delta=C:+1
      level 0.5 occ=2.0 kweight=1.0 k=0

``#`` starts a comment in every format.  All parsers are pure functions of
their text input; the returned objects hold read-only arrays.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from .constants import ELEMENTS
from .errors import (
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

GRID_KINDS = ("spin_density", "orbital")
ORTHONORMAL_TOL = 1e-6
NORM_WARN = 0.02
NORM_ERROR = 0.05


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DefectConfiguration:
    """Lattice plus atoms of one electronic state (positions in Angstrom)."""

    lattice: np.ndarray
    species: tuple[str, ...]
    masses: np.ndarray
    positions: np.ndarray
    charge: int = 0
    label: str = ""

    def __post_init__(self):
        lattice = _frozen(self.lattice)
        masses = _frozen(self.masses)
        positions = _frozen(self.positions).reshape(-1, 3)
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "species", tuple(self.species))
        if lattice.shape != (3, 3):
            raise DimensionMismatch("lattice must be 3x3")
        if not np.all(np.isfinite(lattice)):
            raise NonFiniteValue("non-finite lattice vector")
        if abs(np.linalg.det(lattice)) < 1e-10:
            raise SingularLattice("lattice vectors are linearly dependent (det = 0)")
        if len(self.species) < 1:
            raise DimensionMismatch("at least one atom is required")
        if not (len(self.species) == len(masses) == len(positions)):
            raise DimensionMismatch("species, masses and positions differ in length")
        if not np.all(np.isfinite(positions)):
            raise NonFiniteValue("non-finite atomic position")
        if np.any(masses <= 0):
            raise DimensionMismatch("atomic masses must be positive")
        for s in self.species:
            if s not in ELEMENTS:
                raise UnknownSpecies(f"unknown species {s!r}")

    @property
    def natoms(self) -> int:
        return len(self.species)

    def count(self, symbol: str) -> int:
        return sum(1 for s in self.species if s == symbol)


@dataclass(frozen=True)
class PhononBasis:
    """Mode energies (meV) and mass-weighted orthonormal eigenvectors.

    ``eigenvectors`` has shape ``(nmodes, 3 * natoms)``; it may hold a
    declared subset of the full ``3 * natoms`` modes.
    """

    natoms: int
    frequencies: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        freqs = _frozen(self.frequencies).reshape(-1)
        vecs = _frozen(self.eigenvectors).reshape(len(freqs), -1)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "eigenvectors", vecs)
        if vecs.shape[1] != 3 * self.natoms:
            raise DimensionMismatch(
                f"eigenvector length {vecs.shape[1]} != 3 * natoms = {3 * self.natoms}"
            )
        if len(freqs) > 3 * self.natoms:
            raise DimensionMismatch(f"{len(freqs)} modes exceed 3 * natoms = {3 * self.natoms}")
        if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(vecs))):
            raise NonFiniteValue("non-finite phonon data")
        for k, w in enumerate(freqs):
            if w < 0:
                raise ImaginaryMode(k + 1)
        _check_orthonormal(vecs)

    @property
    def nmodes(self) -> int:
        return len(self.frequencies)

    def without_zero_modes(self, threshold: float = 1e-6) -> PhononBasis:
        keep = self.frequencies > threshold
        return PhononBasis(self.natoms, self.frequencies[keep], self.eigenvectors[keep])


def _check_orthonormal(vecs):
    if len(vecs) == 0:
        return
    overlap = vecs @ vecs.T - np.eye(len(vecs))
    dev = np.abs(overlap)
    worst = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[worst] > ORTHONORMAL_TOL:
        i, j = sorted(int(x) + 1 for x in worst)
        raise NonOrthonormal((i, j), float(dev[worst]))


@dataclass(frozen=True)
class ScalarField:
    """Real volumetric data on a (possibly skewed) regular grid.

    Point ``(ix, iy, iz)`` sits at ``origin + ix*axes[0] + iy*axes[1] + iz*axes[2]``.
    ``kind`` is ``spin_density`` (muB/A^3, integrates to 2S) or ``orbital``
    (A^-3/2, unit L2 norm).  ``expected_norm`` is the declared integral
    (spin density) or L2 norm (orbital).
    """

    origin: np.ndarray
    axes: np.ndarray
    values: np.ndarray
    kind: str = "spin_density"
    expected_norm: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "origin", _frozen(self.origin).reshape(3))
        object.__setattr__(self, "axes", _frozen(self.axes).reshape(3, 3))
        values = _frozen(self.values)
        object.__setattr__(self, "values", values)
        if values.ndim != 3 or min(values.shape) < 2:
            raise CountMismatch(f"grid counts must be >= 2 per axis, got {values.shape}")
        if self.kind not in GRID_KINDS:
            raise MalformedLine(f"unknown grid kind {self.kind!r}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("non-finite grid value")
        if abs(np.linalg.det(self.axes)) < 1e-14:
            raise SingularLattice("grid axes are linearly dependent")

    @classmethod
    def box(cls, func, center, half_width, n, kind="spin_density", expected_norm=1.0):
        """Sample ``func(x, y, z)`` on an ``n**3`` cube centred on ``center``.

        Points sit at voxel centres of the cube ``center +/- half_width``, so
        the spacing is ``2*half_width/n`` and the grid is symmetric about ``center``.
        """
        center = np.asarray(center, dtype=float)
        h = 2.0 * half_width / n
        origin = center - half_width + 0.5 * h
        r = np.arange(n) * h
        x, y, z = np.meshgrid(r + origin[0], r + origin[1], r + origin[2], indexing="ij")
        return cls(origin, np.eye(3) * h, func(x, y, z), kind, expected_norm)

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.values.shape)

    @property
    def voxel_volume(self) -> float:
        return float(abs(np.linalg.det(self.axes)))

    def coordinates(self) -> np.ndarray:
        """Cartesian coordinates of every grid point, shape ``(NX, NY, NZ, 3)``."""
        idx = np.indices(self.counts, dtype=float)
        return self.origin + np.einsum("ixyz,ij->xyzj", idx, self.axes)

    def integral(self) -> float:
        return float(self.values.sum() * self.voxel_volume)

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(self.values**2)) * self.voxel_volume)

    def measured_norm(self) -> float:
        return self.integral() if self.kind == "spin_density" else self.l2_norm()

    def check_normalization(self) -> float:
        """Apply the tolerance ladder; return the relative deviation."""
        measured = self.measured_norm()
        expected = self.expected_norm
        if expected == 0:
            dev = abs(measured)
        else:
            dev = abs(measured - expected) / abs(expected)
        if dev > NORM_ERROR:
            raise NormalizationError(measured, expected)
        if dev > NORM_WARN:
            warnings.warn(
                f"grid normalization {measured:.6g} deviates {100 * dev:.1f}% from {expected:.6g}",
                NormalizationWarning,
                stacklevel=2,
            )
        return dev

    def same_grid(self, other: ScalarField, tol: float = 1e-9) -> bool:
        return (
            self.counts == other.counts
            and np.allclose(self.origin, other.origin, atol=tol)
            and np.allclose(self.axes, other.axes, atol=tol)
        )


@dataclass(frozen=True)
class Level:
    energy: float
    occupation: float
    kweight: float
    k: int = 0


@dataclass(frozen=True)
class DefectEntry:
    label: str
    charge: int
    energy: float
    correction: float = 0.0
    delta: tuple[tuple[str, int], ...] = ()
    levels: tuple[Level, ...] = ()


@dataclass(frozen=True)
class EnergyManifest:
    bulk_energy: float
    e_v: float
    e_c: float
    chemical_potentials: dict[str, float] = field(default_factory=dict)
    entries: tuple[DefectEntry, ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.e_c > self.e_v:
            raise GapInverted(f"E_c = {self.e_c} is not above E_v = {self.e_v}")
        for e in self.entries:
            _check_levels(e)

    @property
    def gap(self) -> float:
        return self.e_c - self.e_v

    def entry(self, label: str) -> DefectEntry:
        for e in self.entries:
            if e.label == label:
                return e
        raise UnknownEntry(f"no entry labelled {label!r}")

    def charges(self) -> list[int]:
        return sorted({e.charge for e in self.entries}, reverse=True)


def _check_levels(entry: DefectEntry):
    if not entry.levels:
        return
    weights: dict[int, float] = {}
    for lv in entry.levels:
        if not 0.0 <= lv.occupation <= 2.0:
            raise InvalidOccupation(
                f"entry {entry.label}: occupation {lv.occupation} outside [0, 2]"
            )
        if lv.k in weights and weights[lv.k] != lv.kweight:
            raise InvalidOccupation(f"entry {entry.label}: inconsistent weights for k={lv.k}")
        weights[lv.k] = lv.kweight
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise InvalidOccupation(f"entry {entry.label}: k-point weights sum to {total!r}, not 1")


# ---------------------------------------------------------------------------
# tokenizing helpers


def _text(src: str | TextIO | bytes) -> str:
    if isinstance(src, bytes):
        return src.decode()
    if isinstance(src, str):
        return src
    return src.read()


def _lines(text: str) -> Iterator[tuple[int, list[str], str]]:
    """Yield (line number, tokens, raw line) for non-blank, comment-stripped lines."""
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if tokens:
            yield n, tokens, body


def _float(token: str, line: int) -> float:
    try:
        x = float(token)
    except ValueError:
        raise MalformedLine(f"expected a number, got {token!r}", line) from None
    if not math.isfinite(x):
        raise NonFiniteValue(f"non-finite value {token!r}", line)
    return x


def _int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedLine(f"expected an integer, got {token!r}", line) from None


def _expect(lines, keyword, nargs, what):
    try:
        n, tokens, _ = next(lines)
    except StopIteration:
        raise MalformedLine(f"unexpected end of file, expected {what}") from None
    if tokens[0] != keyword or (nargs is not None and len(tokens) != nargs + 1):
        raise MalformedLine(f"expected {what}, got {' '.join(tokens)!r}", n)
    return n, tokens[1:]


def _no_trailing(lines, what):
    for n, tokens, _ in lines:
        raise MalformedLine(f"trailing content after complete {what}: {' '.join(tokens)!r}", n)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# structure


def parse_structure(src, label: str = "") -> DefectConfiguration:
    lines = _lines(_text(src))
    _expect(lines, "lattice", 0, "'lattice'")
    lattice = []
    for _ in range(3):
        try:
            n, tokens, _ = next(lines)
        except StopIteration:
            raise MalformedLine("unexpected end of file inside lattice block") from None
        if len(tokens) != 3:
            raise MalformedLine(f"lattice vector needs 3 components, got {len(tokens)}", n)
        lattice.append([_float(t, n) for t in tokens])
    if abs(np.linalg.det(lattice)) < 1e-10:
        raise SingularLattice("lattice vectors are linearly dependent (det = 0)", n)
    n, args = _expect(lines, "charge", 1, "'charge <int>'")
    charge = _int(args[0], n)
    n, args = _expect(lines, "atoms", 1, "'atoms <N>'")
    natoms = _int(args[0], n)
    if natoms < 1:
        raise MalformedLine("atom count must be >= 1", n)
    species, masses, positions = [], [], []
    for _ in range(natoms):
        try:
            n, tokens, _ = next(lines)
        except StopIteration:
            raise MalformedLine(f"expected {natoms} atom lines, file ended early") from None
        if len(tokens) != 5:
            raise MalformedLine(f"atom line needs 'SYMBOL mass x y z', got {' '.join(tokens)!r}", n)
        if tokens[0] not in ELEMENTS:
            raise UnknownSpecies(f"unknown species {tokens[0]!r}", n)
        mass = _float(tokens[1], n)
        if mass <= 0:
            raise MalformedLine(f"mass must be positive, got {tokens[1]!r}", n)
        species.append(tokens[0])
        masses.append(mass)
        positions.append([_float(t, n) for t in tokens[2:]])
    _no_trailing(lines, "structure")
    return DefectConfiguration(np.array(lattice), species, masses, positions, charge, label)


def write_structure(cfg: DefectConfiguration) -> str:
    out = ["lattice"]
    out += [" ".join(_fmt(x) for x in v) for v in cfg.lattice]
    out.append(f"charge {cfg.charge}")
    out.append(f"atoms {cfg.natoms}")
    for s, m, p in zip(cfg.species, cfg.masses, cfg.positions):
        out.append(f"{s} {_fmt(m)} " + " ".join(_fmt(x) for x in p))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# phonons


def parse_phonons(src, drop_zero_modes: bool = False) -> PhononBasis:
    """Parse a phonon file.

    With ``drop_zero_modes`` the modes declared with zero frequency
    (rigid translations) are removed after validation.
    """
    lines = _lines(_text(src))
    n, args = _expect(lines, "phonons", 2, "'phonons <natoms> <nmodes>'")
    natoms, nmodes = _int(args[0], n), _int(args[1], n)
    if natoms < 1 or nmodes < 1:
        raise DimensionMismatch("natoms and nmodes must be positive", n)
    if nmodes > 3 * natoms:
        raise DimensionMismatch(f"{nmodes} modes exceed 3 * natoms = {3 * natoms}", n)
    freqs = np.empty(nmodes)
    vecs = np.empty((nmodes, natoms, 3))
    for k in range(nmodes):
        try:
            n, tokens, _ = next(lines)
        except StopIteration:
            raise DimensionMismatch(f"expected {nmodes} modes, found {k}") from None
        if tokens[0] != "mode" or len(tokens) != 3:
            raise DimensionMismatch(f"expected 'mode {k + 1} <freq>', got {' '.join(tokens)!r}", n)
        if _int(tokens[1], n) != k + 1:
            raise MalformedLine(f"mode index {tokens[1]} out of sequence (expected {k + 1})", n)
        freqs[k] = _float(tokens[2], n)
        if freqs[k] < 0:
            raise ImaginaryMode(k + 1, n)
        for a in range(natoms):
            try:
                n, tokens, _ = next(lines)
            except StopIteration:
                raise DimensionMismatch(f"mode {k + 1}: expected {natoms} eigenvector rows") from None
            if len(tokens) != 3:
                raise DimensionMismatch(f"mode {k + 1}: eigenvector row needs 3 components", n)
            vecs[k, a] = [_float(t, n) for t in tokens]
    _no_trailing(lines, "phonon file")
    basis = PhononBasis(natoms, freqs, vecs.reshape(nmodes, 3 * natoms))
    return basis.without_zero_modes(0.0) if drop_zero_modes else basis


def write_phonons(basis: PhononBasis) -> str:
    out = [f"phonons {basis.natoms} {basis.nmodes}"]
    for k, (w, v) in enumerate(zip(basis.frequencies, basis.eigenvectors), start=1):
        out.append(f"mode {k} {_fmt(w)}")
        out += [" ".join(_fmt(x) for x in row) for row in v.reshape(-1, 3)]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# grids

VALUES_PER_LINE = 6


def parse_grid(src, check: bool = True) -> ScalarField:
    text = _text(src)
    raw_lines = text.splitlines()
    header = []
    body_start = len(raw_lines)
    for i, raw in enumerate(raw_lines):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        if len(header) == 5:
            body_start = i
            break
        header.append((i + 1, tokens))
    if len(header) < 5:
        raise MalformedLine("grid header incomplete (need grid, origin, axis1-3 lines)")
    n, t = header[0]
    if t[0] != "grid" or len(t) != 6:
        raise MalformedLine("expected 'grid NX NY NZ kind expected_norm'", n)
    counts = tuple(_int(x, n) for x in t[1:4])
    if min(counts) < 2:
        raise CountMismatch(f"grid counts must be >= 2 per axis, got {counts}", n)
    kind = t[4]
    if kind not in GRID_KINDS:
        raise MalformedLine(f"unknown grid kind {kind!r}", n)
    expected = _float(t[5], n)
    vectors = []
    for (n, t), key in zip(header[1:], ("origin", "axis1", "axis2", "axis3")):
        if t[0] != key or len(t) != 4:
            raise MalformedLine(f"expected '{key} x y z'", n)
        vectors.append([_float(x, n) for x in t[1:]])

    line_no, tokens = [], []
    for i in range(body_start, len(raw_lines)):
        toks = raw_lines[i].split("#", 1)[0].split()
        tokens.extend(toks)
        line_no.extend([i + 1] * len(toks))
    try:
        values = np.array(tokens, dtype=float)
    except ValueError:
        for tok, ln in zip(tokens, line_no):
            _float(tok, ln)
        raise
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        j = int(bad[0])
        raise NonFiniteValue(f"non-finite value {tokens[j]!r} at index {j}", line_no[j])
    expected_count = counts[0] * counts[1] * counts[2]
    if values.size != expected_count:
        raise CountMismatch(f"header declares {expected_count} values, body has {values.size}")
    field_ = ScalarField(vectors[0], vectors[1:], values.reshape(counts), kind, expected)
    if check:
        field_.check_normalization()
    return field_


def write_grid(f: ScalarField) -> str:
    nx, ny, nz = f.counts
    out = [f"grid {nx} {ny} {nz} {f.kind} {_fmt(f.expected_norm)}"]
    out.append("origin " + " ".join(_fmt(x) for x in f.origin))
    for k, v in enumerate(f.axes, start=1):
        out.append(f"axis{k} " + " ".join(_fmt(x) for x in v))
    flat = f.values.reshape(-1)
    for i in range(0, flat.size, VALUES_PER_LINE):
        out.append(" ".join(_fmt(x) for x in flat[i : i + VALUES_PER_LINE]))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# manifest

_REQUIRED = ("bulk_energy", "E_v", "E_c")


def _kv(tokens, n):
    out = {}
    for t in tokens:
        if "=" not in t:
            raise MalformedLine(f"expected key=value, got {t!r}", n)
        k, v = t.split("=", 1)
        out[k] = v
    return out


def _parse_delta(text, n):
    delta = []
    for part in filter(None, text.split(",")):
        if ":" not in part:
            raise MalformedLine(f"delta item must be SPECIES:count, got {part!r}", n)
        sp, cnt = part.split(":", 1)
        if sp not in ELEMENTS:
            raise UnknownSpecies(f"unknown species {sp!r}", n)
        delta.append((sp, _int(cnt, n)))
    return tuple(delta)


def parse_manifest(src) -> EnergyManifest:
    scalars: dict[str, float] = {}
    mus: dict[str, float] = {}
    metadata: dict[str, str] = {}
    entries: list[dict] = []
    for n, tokens, body in _lines(_text(src)):
        if tokens[0] == "entry":
            if len(tokens) < 2:
                raise MalformedLine("entry needs a label", n)
            kv = _kv(tokens[2:], n)
            for key in ("charge", "energy"):
                if key not in kv:
                    raise MissingKey(key, n)
            unknown = set(kv) - {"charge", "energy", "corr", "delta"}
            if unknown:
                raise MalformedLine(f"unknown entry fields {sorted(unknown)}", n)
            entries.append(
                dict(
                    label=tokens[1],
                    charge=_int(kv["charge"], n),
                    energy=_float(kv["energy"], n),
                    correction=_float(kv.get("corr", "0.0"), n),
                    delta=_parse_delta(kv.get("delta", ""), n),
                    levels=[],
                )
            )
        elif tokens[0] == "level":
            if not entries:
                raise MalformedLine("level line outside of an entry", n)
            if not body[:1].isspace():
                raise MalformedLine("level lines must be indented under their entry", n)
            if len(tokens) < 2:
                raise MalformedLine("level needs an energy", n)
            kv = _kv(tokens[2:], n)
            for key in ("occ", "kweight"):
                if key not in kv:
                    raise MissingKey(key, n)
            unknown = set(kv) - {"occ", "kweight", "k"}
            if unknown:
                raise MalformedLine(f"unknown level fields {sorted(unknown)}", n)
            occ = _float(kv["occ"], n)
            if not 0.0 <= occ <= 2.0:
                raise InvalidOccupation(f"occupation {occ} outside [0, 2]", n)
            entries[-1]["levels"].append(
                Level(_float(tokens[1], n), occ, _float(kv["kweight"], n), _int(kv.get("k", "0"), n))
            )
        else:
            if "=" not in body:
                raise MalformedLine(f"expected 'key = value', got {body.strip()!r}", n)
            key, value = (s.strip() for s in body.split("=", 1))
            if not key or not value:
                raise MalformedLine(f"expected 'key = value', got {body.strip()!r}", n)
            if key in _REQUIRED:
                scalars[key] = _float(value, n)
            elif key.startswith("mu."):
                sp = key[3:]
                if sp not in ELEMENTS:
                    raise UnknownSpecies(f"unknown species {sp!r}", n)
                mus[sp] = _float(value, n)
            else:
                metadata[key] = value
    for key in _REQUIRED:
        if key not in scalars:
            raise MissingKey(key)
    if not entries:
        raise MissingKey("entry")
    if not scalars["E_c"] > scalars["E_v"]:
        raise GapInverted(f"E_c = {scalars['E_c']} is not above E_v = {scalars['E_v']}")
    return EnergyManifest(
        scalars["bulk_energy"],
        scalars["E_v"],
        scalars["E_c"],
        mus,
        tuple(DefectEntry(**{**e, "levels": tuple(e["levels"])}) for e in entries),
        metadata,
    )


def write_manifest(m: EnergyManifest) -> str:
    out = [
        f"bulk_energy = {_fmt(m.bulk_energy)}",
        f"E_v = {_fmt(m.e_v)}",
        f"E_c = {_fmt(m.e_c)}",
    ]
    out += [f"mu.{sp} = {_fmt(v)}" for sp, v in sorted(m.chemical_potentials.items())]
    out += [f"{k} = {v}" for k, v in m.metadata.items()]
    for e in m.entries:
        line = f"entry {e.label} charge={e.charge} energy={_fmt(e.energy)} corr={_fmt(e.correction)}"
        if e.delta:
            line += " delta=" + ",".join(f"{sp}:{c:+d}" for sp, c in e.delta)
        out.append(line)
        for lv in e.levels:
            out.append(
                f"  level {_fmt(lv.energy)} occ={_fmt(lv.occupation)} "
                f"kweight={_fmt(lv.kweight)} k={lv.k}"
            )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# file helpers


def read_structure(path, label: str | None = None) -> DefectConfiguration:
    path = Path(path)
    return parse_structure(path.read_text(), label=path.stem if label is None else label)


def read_phonons(path, drop_zero_modes: bool = False) -> PhononBasis:
    return parse_phonons(Path(path).read_text(), drop_zero_modes)


def read_grid(path, check: bool = True) -> ScalarField:
    with open(path) as fh:
        return parse_grid(io.StringIO(fh.read()), check)


def read_manifest(path) -> EnergyManifest:
    return parse_manifest(Path(path).read_text())
