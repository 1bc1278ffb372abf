"""Physical constants and unit conversions (CODATA 2018).

Every module converts through this table so that file-boundary units
(eV, Angstrom, meV, MHz, Debye) agree everywhere.  Values are hardcoded
rather than taken from ``scipy.constants`` because recent SciPy releases
ship CODATA 2022.
"""

import math

# exact SI defining constants
PLANCK = 6.62607015e-34  # J s
HBAR = PLANCK / (2.0 * math.pi)  # J s
ELEMENTARY_CHARGE = 1.602176634e-19  # C
SPEED_OF_LIGHT = 299792458.0  # m/s
BOLTZMANN = 1.380649e-23  # J/K

# measured, CODATA 2018
VACUUM_PERMEABILITY = 1.25663706212e-6  # N/A^2
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
BOHR_MAGNETON = 9.2740100783e-24  # J/T
NUCLEAR_MAGNETON = 5.0507837461e-27  # J/T
ELECTRON_G = 2.00231930436256  # |g_e|
ATOMIC_MASS = 1.66053906660e-27  # kg

DEBYE = 3.33564e-30  # C m

EV = ELEMENTARY_CHARGE  # J
MEV = 1e-3 * ELEMENTARY_CHARGE  # J
ANGSTROM = 1e-10  # m
MHZ = 1e6  # Hz
MILLITESLA = 1e-3  # T

HBAR_EV_S = HBAR / EV  # eV s
BOLTZMANN_EV = BOLTZMANN / EV  # eV/K
BOLTZMANN_MEV = BOLTZMANN / MEV  # meV/K

# electron Zeeman factor g_e mu_B / h in MHz per mT
ELECTRON_ZEEMAN_MHZ_PER_MT = ELECTRON_G * BOHR_MAGNETON * MILLITESLA / PLANCK / MHZ

# (mu0/4pi) (g_e mu_B)^2 / h at r = 1 Angstrom, in MHz
DIPOLAR_EE_MHZ_A3 = (
    VACUUM_PERMEABILITY / (4.0 * math.pi)
    * (ELECTRON_G * BOHR_MAGNETON) ** 2
    / PLANCK / ANGSTROM**3 / MHZ
)

# (mu0/4pi) g_e mu_B mu_N / h at r = 1 Angstrom, in MHz; multiply by g_N
DIPOLAR_EN_MHZ_A3 = (
    VACUUM_PERMEABILITY / (4.0 * math.pi)
    * ELECTRON_G * BOHR_MAGNETON * NUCLEAR_MAGNETON
    / PLANCK / ANGSTROM**3 / MHZ
)

# e * Angstrom expressed in Debye
EANGSTROM_IN_DEBYE = ELEMENTARY_CHARGE * ANGSTROM / DEBYE

# Huang-Rhys factor of a mode: s = HR_FACTOR * (hbar omega / meV) * (q / amu^1/2 A)^2
HR_FACTOR = MEV * ATOMIC_MASS * ANGSTROM**2 / (2.0 * HBAR**2)

# nuclear g-factors (mu / (I mu_N))
NUCLEAR_G = {
    "1H": 5.5856946893,
    "13C": 1.4048236,
    "14N": 0.40376100,
    "15N": -0.56637768,
    "29Si": -1.11058,
}

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr "
    "Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
