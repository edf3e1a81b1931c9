"""Pinned physical constants and the unit system.

Energies are in cm^-1, times in ps, fields in MV/cm and dipoles in Debye.
Every conversion in the package goes through the values below.
"""

import math

from scipy import constants

VERSION = 'codata2018-1'

#: Speed of light in cm/ps.
SPEED_OF_LIGHT = 0.0299792458

#: Boltzmann constant in cm^-1/K.
BOLTZMANN = 0.695034800

#: Angular frequency (rad/ps) of a 1 cm^-1 energy.
TWO_PI_C = 2.0 * math.pi * SPEED_OF_LIGHT

#: Vacuum permittivity (F/m) and speed of light (m/s).
EPSILON_0 = constants.epsilon_0
SPEED_OF_LIGHT_SI = constants.c

#: One Debye in C m.
DEBYE = 1e-21 / constants.c

#: Energy (cm^-1) of a 1 Debye dipole in a 1 MV/cm field.
DEBYE_MV_CM = DEBYE * 1e8 / (constants.h * constants.c * 100.0)


def table():
    """Return the constants table as a plain dict for run manifests."""
    return {
        'version': VERSION,
        'speed_of_light_cm_ps': SPEED_OF_LIGHT,
        'boltzmann_cm1_K': BOLTZMANN,
        'epsilon_0_F_m': EPSILON_0,
        'debye_C_m': DEBYE,
        'debye_MV_cm_in_cm1': DEBYE_MV_CM,
    }
