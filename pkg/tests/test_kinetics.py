import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from dpk import kinetics as kn
from dpk.casestudy import packaged
from dpk.errors import (
    MalformedLine,
    MissingKey,
    NegativeRate,
    NonFiniteValue,
    NonPhysicalInput,
    NoSuchPair,
    Reducible,
    SelectionRuleViolation,
)


@pytest.fixture(scope="module")
def config():
    return kn.read_rates(packaged("ci_rates.txt"))


@pytest.fixture(scope="module")
def net(config):
    return kn.build_network(config)


def conserved(traj):
    assert np.abs(traj.populations.sum(axis=1) - 1.0).max() < 1e-9
    assert traj.populations.min() >= -1e-9


def ground(net):
    p = np.zeros(len(net.states))
    p[net.index("G")] = 1.0
    return p


# configuration --------------------------------------------------------------------


def test_parse_rates(config):
    assert config.rates["gamma_rad"] == pytest.approx(1 / 2.83e-6)
    assert "isc_out.T0" in config.assumed and "gamma_rad" not in config.assumed
    assert config.metadata["triplet_energy_eV"] == "0.29"


@pytest.mark.parametrize(
    "text,error",
    [
        ("gamma_rad 1.0\n", MalformedLine),
        ("bogus.key = 1.0\n", MalformedLine),
        ("gamma_rad = nan\n", NonFiniteValue),
        ("gamma_rad = 1\nassumed = pump.per_power\n", MalformedLine),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        kn.parse_rates(text)


def test_header_flags(net):
    head = net.header().splitlines()
    assert "# isc_out.T0 = 100000 1/s assumed=true" in head
    assert any(line.startswith("# gamma_rad = ") and "assumed" not in line for line in head)
    assert "# meta.triplet_energy_eV = 0.29" in head


# network ----------------------------------------------------------------------------


def test_two_state_generator():
    net = kn.build_network({"gamma_rad": 5.0, "pump.per_power": 2.0})
    assert net.states == ("G", "X")
    g = net.generator(3.0)
    np.testing.assert_allclose(g, [[-6.0, 5.0], [6.0, -5.0]])
    np.testing.assert_allclose(g.sum(axis=0), 0.0, atol=1e-12)


def test_full_network_generator(net):
    assert net.states == kn.STATE_ORDER
    for power in (0.0, 1.0, 30.0):
        g = net.generator(power, {("T0", "T+"): 1e4})
        off = g - np.diag(np.diag(g))
        assert off.min() >= 0
        assert np.abs(g.sum(axis=0)).max() <= 1e-12 * np.abs(g).max()
    t0, tp = net.index("T0"), net.index("T+")
    g = net.generator()
    assert g[net.index("G"), t0] > g[net.index("G"), tp]


def test_selection_rule(config):
    rates = dict(config.rates, **{"isc_out.T+": 2e5})
    with pytest.raises(SelectionRuleViolation):
        kn.build_network(rates)


def test_network_errors():
    with pytest.raises(NegativeRate):
        kn.build_network({"gamma_rad": -1.0, "pump.per_power": 1.0})
    with pytest.raises(MissingKey):
        kn.build_network({"gamma_rad": 1.0})
    net = kn.build_network({"gamma_rad": 1.0, "pump.per_power": 1.0})
    with pytest.raises(NonPhysicalInput):
        net.generator(-1.0)
    with pytest.raises(NoSuchPair):
        net.pair("T0", "T+")


def test_negative_drive(net):
    with pytest.raises(NegativeRate):
        net.generator(1.0, {("T0", "T+"): -1.0})


# steady state ----------------------------------------------------------------------


def test_zero_power_is_ground(net):
    np.testing.assert_array_equal(kn.steady_state(net, 0.0), ground(net))


@pytest.mark.parametrize("power", [0.1, 1.0, 7.5, 1e3])
def test_two_level_saturation(power):
    gamma = 3.0
    net = kn.build_network({"gamma_rad": gamma, "pump.per_power": 1.0})
    p = kn.steady_state(net, power)
    assert p[1] == pytest.approx(power / (power + gamma), abs=1e-12)


@pytest.mark.parametrize("power", [0.3, 1.0, 10.0])
def test_steady_state_matches_long_ode(net, power):
    p = kn.steady_state(net, power)
    assert p.sum() == pytest.approx(1.0, abs=1e-12) and p.min() >= 0
    g = net.generator(power)
    sol = solve_ivp(lambda t, y: g @ y, (0, 0.05), ground(net), method="Radau", rtol=1e-11, atol=1e-14, jac=g)
    np.testing.assert_allclose(sol.y[:, -1], p, atol=1e-6)


def test_two_closed_classes_are_reducible(config):
    rates = dict(config.rates, **{"isc_out.T+": 0.0, "isc_out.T-": 0.0})
    with pytest.raises(Reducible):
        kn.steady_state(kn.build_network(rates), 1.0)


def test_single_trap_absorbs_everything(config):
    rates = dict(config.rates, **{"isc_out.T+": 0.0, "isc_in.T-": 0.0})
    net = kn.build_network(rates)
    p = kn.steady_state(net, 1.0)
    assert p[net.index("T+")] == pytest.approx(1.0, abs=1e-12)


# integration -----------------------------------------------------------------------


def test_no_rates_constant_trajectory():
    net = kn.build_network({"gamma_rad": 0.0, "pump.per_power": 0.0})
    traj = kn.integrate(net, [0.3, 0.7], 1.0)
    np.testing.assert_allclose(traj.populations, np.tile([0.3, 0.7], (201, 1)), atol=1e-15)


def test_exponential_decay():
    gamma = 2.0e6
    net = kn.build_network({"gamma_rad": gamma, "pump.per_power": 1.0})
    traj = kn.integrate(net, [0.0, 1.0], 5.0 / gamma)
    conserved(traj)
    np.testing.assert_allclose(traj.of("X"), np.exp(-gamma * traj.times), atol=1e-6)


def test_pumped_two_level_against_closed_form():
    gamma, power = 1.0e3, 3.0e3
    net = kn.build_network({"gamma_rad": gamma, "pump.per_power": 1.0})
    traj = kn.integrate(net, [1.0, 0.0], 5e-3, power=power)
    conserved(traj)
    k = gamma + power
    np.testing.assert_allclose(traj.of("X"), power / k * (1 - np.exp(-k * traj.times)), atol=1e-6)


def test_pulse_then_dark_timescales(net):
    pulse, dark = 20e-6, 4e-3
    times = np.union1d(np.linspace(pulse, pulse + dark, 81), np.linspace(pulse, pulse + 60e-6, 31))
    traj = kn.integrate(net, ground(net), pulse + dark, power=[(0.0, 5.0), (pulse, 0.0)], times=times)
    conserved(traj)
    # zero-power generator eigenvalues are the oracle for the dark decay
    rates = sorted(-np.linalg.eigvals(net.generator(0.0)).real)
    t_pm = net.config.rates["isc_out.T+"]
    t_0 = net.config.rates["isc_out.T0"]
    assert any(abs(r - t_pm) < 1e-6 * t_pm for r in rates)
    assert any(abs(r - t_0) < 1e-6 * t_0 for r in rates)
    shelved = traj.of("T+")
    assert shelved[0] > 1e-3
    late = traj.times > pulse + 50e-6
    slope = np.polyfit(traj.times[late], np.log(shelved[late]), 1)[0]
    assert -slope == pytest.approx(t_pm, rel=1e-5)
    # T0 empties two orders of magnitude faster than T+/T-
    early = (traj.times > pulse + 1e-6) & (traj.times < pulse + 60e-6)
    t0 = traj.of("T0")[early]
    slope0 = np.polyfit(traj.times[early], np.log(t0), 1)[0]
    assert -slope0 == pytest.approx(t_0, rel=1e-3)


def test_long_integration_reaches_steady_state(net):
    traj = kn.integrate(net, ground(net), 0.03, power=1.0, times=[0.0, 0.015, 0.03])
    conserved(traj)
    np.testing.assert_allclose(traj.populations[-1], kn.steady_state(net, 1.0), atol=1e-6)


def test_microwave_schedule_conserves(net):
    drive = [(0.0, {}), (1e-4, {("T0", "T+"): 1e6}), (3e-4, {})]
    traj = kn.integrate(net, ground(net), 5e-4, power=lambda t: 2.0, microwave=drive)
    conserved(traj)


def test_integrate_rejects_bad_initial(net):
    with pytest.raises(NonPhysicalInput):
        kn.integrate(net, np.full(len(net.states), 0.5), 1e-3)
    with pytest.raises(NonPhysicalInput):
        kn.integrate(net, ground(net)[:-1], 1e-3)


# observables -----------------------------------------------------------------------


def test_pl_two_level_saturation():
    gamma = 4.0
    net = kn.build_network({"gamma_rad": gamma, "pump.per_power": 1.0})
    powers = [0.0, 0.5, 2.0, 8.0, 64.0]
    curve = kn.pl_curve(net, powers)
    np.testing.assert_allclose(curve.pl, [gamma * p / (p + gamma) for p in powers], rtol=1e-12)


def test_pl_curve_sublinear_with_ionization(config, net):
    powers = np.geomspace(0.01, 100.0, 41)
    with_ion = kn.pl_curve(net, powers).pl
    assert with_ion[0] > 0
    no_ion = kn.pl_curve(kn.build_network({k: v for k, v in config.rates.items() if "ionize" not in k}), powers).pl
    high = powers > 1.0
    assert np.all(with_ion[high] < no_ion[high])
    # beyond saturation the curve bends over
    second = np.diff(with_ion, 2)
    assert np.all(second[powers[1:-1] > 3.0] <= 0)


def test_pl_zero_power(net):
    assert kn.pl_rate(net, 0.0) == 0.0


def test_pl_curve_text(net):
    text = kn.pl_curve(net, [0.0, 1.0]).to_text()
    assert "# power PL_rate_1/s" in text
    assert text.splitlines()[-2] == "0 0"


def test_emission_yield(net):
    assert 0 < kn.emission_yield(net, 1.0) < 1
    with pytest.raises(NonPhysicalInput):
        kn.emission_yield(net, 0.0)


@pytest.mark.parametrize("pair", [("T0", "T+"), ("T0", "T-")])
def test_contrast_positive(net, pair):
    assert kn.odmr_contrast(net, pair, 1.0) > 0
    assert kn.odmr_contrast(net, pair, 1.0, drive=0.0) == 0.0


def test_contrast_brute_force(net):
    key = ("T0", "T+")
    on = net.gamma_rad * kn.steady_state(net, 1.0, {key: 1e6})[net.bright]
    off = net.gamma_rad * kn.steady_state(net, 1.0)[net.bright]
    assert kn.odmr_contrast(net, key, 1.0) == pytest.approx((on - off) / off, rel=1e-12)


def test_contrast_vanishes_for_equal_isc(config):
    rates = dict(config.rates, **{"isc_out.T+": 1e5, "isc_out.T-": 1e5})
    net = kn.build_network(rates)
    for pair in (("T0", "T+"), ("T0", "T-")):
        assert abs(kn.odmr_contrast(net, pair, 1.0)) < 1e-9


def test_contrast_missing_pair():
    net = kn.build_network({"gamma_rad": 1.0, "pump.per_power": 1.0, "isc_in.T0": 1.0, "isc_out.T0": 1.0})
    with pytest.raises(NoSuchPair):
        kn.odmr_contrast(net, ("T0", "T+"), 1.0)


def test_fixture_bright_lifetime(config):
    rates = config.rates
    total = rates["gamma_rad"] + rates["gamma_nonrad"] + sum(rates[f"isc_in.{t}"] for t in kn.SUBLEVELS)
    assert 1 / total == pytest.approx(5e-9, rel=1e-12)
    assert math.isclose(1 / rates["gamma_rad"], 2.83e-6, rel_tol=1e-12)
