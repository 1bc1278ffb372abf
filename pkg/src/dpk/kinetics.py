"""Rate-equation model of an optical cycle with triplet shelving and ionization.

States (those not mentioned by a config are left out):

    G    ground singlet
    X    bright excited singlet (emits with ``gamma_rad``)
    D    dark excited singlet, fed thermally from X
    T0, T+, T-   triplet sublevels fed from X by intersystem crossing
    I    ionized defect, returned to G by power-driven recapture

The generator follows the column convention ``G[i, j] = rate j -> i`` with
``G[j, j] = -sum_i G[i, j]``, so ``dp/dt = G p``.  It is assembled as

    G(P, drive) = G_base + P * G_pump + sum_pairs drive * (swap generator)

Config text is ``key = value`` per line with rates in 1/s; pump-driven
entries end in ``.per_power`` and are multiplied by the (dimensionless)
laser power.  Recognized keys:

    gamma_rad, gamma_nonrad            X -> G
    pump.per_power                     G -> X
    isc_in.T0 / isc_in.T+ / isc_in.T-  X -> T
    isc_out.T0 / isc_out.T+ / ...      T -> G
    ionize.per_power                   X -> I
    recapture.per_power                I -> G
    dark.activation, dark.decay        X -> D, D -> G
    microwave.T0-T+ , microwave.T0-T-  default drive strength of a pair
    assumed = key, key, ...            keys whose values are placeholders
    meta.<name> = value                free metadata echoed in headers
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    MalformedLine,
    MissingKey,
    NegativeRate,
    NonConvergent,
    NonFiniteValue,
    NonPhysicalInput,
    NoSuchPair,
    Reducible,
    SelectionRuleViolation,
    StepFailure,
)

STATE_ORDER = ("G", "X", "D", "T0", "T+", "T-", "I")
SUBLEVELS = ("T0", "T+", "T-")

_RATE_KEYS = {
    "gamma_rad": ("X", "G"),
    "gamma_nonrad": ("X", "G"),
    "dark.activation": ("X", "D"),
    "dark.decay": ("D", "G"),
    **{f"isc_in.{t}": ("X", t) for t in SUBLEVELS},
    **{f"isc_out.{t}": (t, "G") for t in SUBLEVELS},
}
_PUMP_KEYS = {
    "pump.per_power": ("G", "X"),
    "ionize.per_power": ("X", "I"),
    "recapture.per_power": ("I", "G"),
}
_PAIRS = {"microwave.T0-T+": ("T0", "T+"), "microwave.T0-T-": ("T0", "T-")}


@dataclass(frozen=True)
class RatesConfig:
    rates: dict[str, float]
    assumed: frozenset[str] = frozenset()
    metadata: dict[str, str] = field(default_factory=dict)


def parse_rates(text: str) -> RatesConfig:
    rates: dict[str, float] = {}
    assumed: set[str] = set()
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key or not value:
            raise MalformedLine(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key == "assumed":
            assumed.update(k.strip() for k in value.split(",") if k.strip())
        elif key.startswith("meta."):
            meta[key[5:]] = value
        elif key in _RATE_KEYS or key in _PUMP_KEYS or key in _PAIRS:
            try:
                number = float(value)
            except ValueError:
                raise MalformedLine(f"{key}: {value!r} is not a number", line=lineno) from None
            if not math.isfinite(number):
                raise NonFiniteValue(f"{key} = {value}", line=lineno)
            rates[key] = number
        else:
            raise MalformedLine(f"unknown rate key {key!r}", line=lineno)
    unknown = assumed - rates.keys()
    if unknown:
        raise MalformedLine(f"assumed lists keys that are not set: {', '.join(sorted(unknown))}")
    return RatesConfig(rates, frozenset(assumed), meta)


def read_rates(path) -> RatesConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_rates(fh.read())


@dataclass(frozen=True)
class RateNetwork:
    states: tuple[str, ...]
    base: np.ndarray
    pump: np.ndarray
    pairs: tuple[tuple[str, str], ...]
    default_drive: dict[tuple[str, str], float]
    gamma_rad: float
    config: RatesConfig

    def __post_init__(self):
        for arr in (self.base, self.pump):
            arr.setflags(write=False)

    def index(self, state: str) -> int:
        return self.states.index(state)

    @property
    def bright(self) -> int:
        return self.index("X")

    def pair(self, a: str, b: str) -> tuple[str, str]:
        for p in self.pairs:
            if set(p) == {a, b}:
                return p
        raise NoSuchPair(f"no microwave coupling between {a} and {b}")

    def generator(self, power: float = 0.0, drive: Mapping | None = None) -> np.ndarray:
        if power < 0:
            raise NonPhysicalInput(f"power must be non-negative, got {power}")
        g = self.base + power * self.pump
        for key, strength in (drive or {}).items():
            a, b = self.pair(*key)
            if strength < 0:
                raise NegativeRate(f"drive {a}<->{b} = {strength}")
            i, j = self.index(a), self.index(b)
            g[i, j] += strength
            g[j, i] += strength
            g[i, i] -= strength
            g[j, j] -= strength
        return g

    def header(self) -> str:
        lines = [f"# states: {' '.join(self.states)}"]
        for key in sorted(self.config.rates):
            flag = " assumed=true" if key in self.config.assumed else ""
            lines.append(f"# {key} = {self.config.rates[key]:.6g} 1/s{flag}")
        lines += [f"# meta.{k} = {v}" for k, v in sorted(self.config.metadata.items())]
        return "\n".join(lines)


def _add_rate(g: np.ndarray, states: Sequence[str], src: str, dst: str, rate: float):
    j, i = states.index(src), states.index(dst)
    g[i, j] += rate
    g[j, j] -= rate


def build_network(config: RatesConfig | Mapping[str, float] | str) -> RateNetwork:
    """Assemble and validate the generator described by a rates config."""
    if isinstance(config, str):
        config = parse_rates(config)
    elif not isinstance(config, RatesConfig):
        config = RatesConfig(dict(config))
    rates = config.rates
    for key in ("gamma_rad", "pump.per_power"):
        if key not in rates:
            raise MissingKey(key)
    for key, value in rates.items():
        if value < 0:
            raise NegativeRate(f"{key} = {value}")
    t0 = rates.get("isc_out.T0")
    for t in ("T+", "T-"):
        out = rates.get(f"isc_out.{t}")
        if t0 is not None and out is not None and out > t0:
            raise SelectionRuleViolation(
                f"isc_out.{t} = {out:g} exceeds isc_out.T0 = {t0:g}; m_S = 0 must decay fastest"
            )

    used = {"G", "X"}
    for key in rates:
        if key in _RATE_KEYS:
            used.update(_RATE_KEYS[key])
        elif key in _PUMP_KEYS:
            used.update(_PUMP_KEYS[key])
        elif key in _PAIRS:
            used.update(_PAIRS[key])
    states = tuple(s for s in STATE_ORDER if s in used)
    n = len(states)
    base, pump = np.zeros((n, n)), np.zeros((n, n))
    for key, value in rates.items():
        if key in _RATE_KEYS:
            _add_rate(base, states, *_RATE_KEYS[key], value)
        elif key in _PUMP_KEYS:
            _add_rate(pump, states, *_PUMP_KEYS[key], value)
    pairs = tuple(_PAIRS[k] for k in _PAIRS if k in rates)
    drive = {_PAIRS[k]: rates[k] for k in _PAIRS if k in rates}
    return RateNetwork(states, base, pump, pairs, drive, rates["gamma_rad"], config)


# ---------------------------------------------------------------------------
# steady state


def _reachable(g: np.ndarray, start: int) -> set[int]:
    seen, stack = {start}, [start]
    while stack:
        j = stack.pop()
        for i in np.nonzero(g[:, j] > 0)[0]:
            i = int(i)
            if i != j and i not in seen:
                seen.add(i)
                stack.append(i)
    return seen


def steady_state(
    net: RateNetwork, power: float = 0.0, drive: Mapping | None = None
) -> np.ndarray:
    """Stationary populations for a cycle started in the ground state.

    Only states reachable from G at this power take part; among them the
    chain must have exactly one closed communicating class, which carries
    all the stationary weight.  The class is solved by replacing one
    balance equation with the normalization condition.
    """
    g = net.generator(power, drive)
    n = len(net.states)
    reach = {i: _reachable(g, i) for i in _reachable(g, 0)}
    # recurrent: every state it leads to leads back to it
    classes: list[set[int]] = []
    for i, ri in reach.items():
        if all(i in reach[j] for j in ri) and ri not in classes:
            classes.append(ri)
    if len(classes) != 1:
        raise Reducible(f"{len(classes)} closed classes reachable from G at power {power:g}")
    idx = sorted(classes[0])
    sub = g[np.ix_(idx, idx)]
    a = sub.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(len(idx))
    rhs[-1] = 1.0
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise NonConvergent(f"stationary system is singular: {exc}") from None
    p = np.zeros(n)
    p[idx] = sol
    p[np.abs(p) < 1e-300] = 0.0
    scale = np.abs(g).max() or 1.0
    residual = np.abs(g @ p).max()
    if residual > 1e-10 * scale or p.min() < -1e-12:
        raise NonConvergent(f"residual {residual:.3g} against generator scale {scale:.3g}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


# ---------------------------------------------------------------------------
# time integration


@dataclass(frozen=True)
class PopulationTrajectory:
    times: np.ndarray
    populations: np.ndarray
    states: tuple[str, ...]

    def of(self, state: str) -> np.ndarray:
        return self.populations[:, self.states.index(state)]


Profile = float | Sequence[tuple[float, float]] | Callable[[float], float]


def _profile(spec, default=0.0) -> tuple[Callable[[float], object], list[float]]:
    """Normalize a profile to ``(f(t), breakpoints)``.

    Accepted forms: a constant, a callable of time, or a list of
    ``(t_start, value)`` pairs describing a piecewise-constant signal.
    """
    if spec is None:
        return (lambda t: default), []
    if callable(spec):
        return spec, []
    if isinstance(spec, (int, float, dict)):
        return (lambda t: spec), []
    segments = sorted((float(t), v) for t, v in spec)
    starts = [t for t, _ in segments]

    def f(t):
        k = int(np.searchsorted(starts, t, side="right")) - 1
        return segments[k][1] if k >= 0 else default

    return f, starts


def integrate(
    net: RateNetwork,
    initial,
    duration: float,
    power=0.0,
    microwave=None,
    times: Iterable[float] | None = None,
    rtol: float = 1e-8,
    min_step: float | None = None,
) -> PopulationTrajectory:
    """Propagate populations with an adaptive exponential-midpoint scheme.

    Each step applies ``expm(h G(t + h/2))``, which is exact for constant
    rates and keeps populations stochastic.  Step size is controlled by
    comparing one full step against two half steps.  Piecewise-constant
    profiles never straddle a switching time.

    ``power`` and ``microwave`` take a constant, a callable of time or a
    list of ``(t_start, value)`` pairs; microwave values are mappings from
    state pairs to drive strengths in 1/s.
    """
    p = np.asarray(initial, dtype=float).copy()
    if p.shape != (len(net.states),):
        raise NonPhysicalInput(f"initial vector must have {len(net.states)} entries")
    if p.min() < -1e-9 or abs(p.sum() - 1.0) > 1e-9:
        raise NonPhysicalInput("initial populations must be non-negative and sum to 1")
    if not duration > 0:
        raise NonPhysicalInput("duration must be positive")
    p = np.clip(p, 0.0, None)
    p /= p.sum()

    pw, pw_breaks = _profile(power)
    mw, mw_breaks = _profile(microwave, default={})
    samples = np.linspace(0.0, duration, 201) if times is None else np.unique(np.asarray(list(times), float))
    if samples.size == 0 or samples[0] < 0 or samples[-1] > duration:
        raise NonPhysicalInput("sample times must lie in [0, duration]")
    wanted = set(samples.tolist())
    breaks = (b for b in pw_breaks + mw_breaks if 0 < b < duration)
    stops = sorted({*wanted, *breaks, duration} - {0.0})
    min_step = duration * 1e-14 if min_step is None else min_step

    def step(t, h, p):
        mid = t + 0.5 * h
        return expm(h * net.generator(float(pw(mid)), mw(mid))) @ p

    out = [p.copy()] if 0.0 in wanted else []
    t, h = 0.0, duration / 100
    for stop in stops:
        while t < stop:
            h = min(h, stop - t)
            while True:
                full = step(t, h, p)
                half = step(t + 0.5 * h, 0.5 * h, step(t, 0.5 * h, p))
                err = np.abs(full - half).max()
                ok = err <= rtol * max(np.abs(half).max(), 1e-300) and half.min() >= -1e-12
                if ok:
                    break
                h *= 0.5
                if h < min_step:
                    raise StepFailure(f"step fell below {min_step:.3g} s at t = {t:.6g} s")
            p = np.clip(half, 0.0, None)
            p /= p.sum()
            t = stop if stop - t - h <= 1e-15 * duration else t + h
            h *= 2.0 if err < 0.1 * rtol else 1.0
        if stop in wanted:
            out.append(p.copy())
    return PopulationTrajectory(samples, np.array(out), net.states)


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class PlCurve:
    power: np.ndarray
    pl: np.ndarray
    header: str

    def to_text(self) -> str:
        body = "\n".join(f"{p:.6g} {r:.6g}" for p, r in zip(self.power, self.pl))
        return f"{self.header}\n# power PL_rate_1/s\n{body}\n"


def pl_rate(net: RateNetwork, power: float, drive: Mapping | None = None) -> float:
    """Photon emission rate ``gamma_rad * p_X`` at steady state (1/s)."""
    return net.gamma_rad * float(steady_state(net, power, drive)[net.bright])


def pl_curve(net: RateNetwork, powers: Iterable[float], drive: Mapping | None = None) -> PlCurve:
    powers = np.asarray(list(powers), dtype=float)
    pl = np.array([pl_rate(net, p, drive) for p in powers])
    return PlCurve(powers, pl, net.header())


def emission_yield(net: RateNetwork, power: float) -> float:
    """Photons emitted per optical excitation G -> X at steady state."""
    p = steady_state(net, power)
    excitation = power * net.pump[net.bright, 0] * p[0]
    if excitation == 0:
        raise NonPhysicalInput("no optical excitation at zero power")
    return net.gamma_rad * p[net.bright] / excitation


def odmr_contrast(
    net: RateNetwork, pair: tuple[str, str], power: float, drive: float | None = None
) -> float:
    """Relative PL change ``(PL_on - PL_off)/PL_off`` when ``pair`` is driven."""
    key = net.pair(*pair)
    strength = net.default_drive.get(key, 0.0) if drive is None else drive
    off = pl_rate(net, power)
    if off == 0:
        raise NonPhysicalInput("no PL without the drive; contrast undefined")
    on = pl_rate(net, power, {key: strength})
    return (on - off) / off
