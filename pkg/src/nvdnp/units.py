"""Unit conversions.

Internally every frequency is an angular frequency in rad/us and every time is
in us. User-facing values are ordinary frequencies in MHz.
"""

import math

TWO_PI = 2.0 * math.pi

#: 13C gyromagnetic ratio, ordinary frequency per Gauss (MHz/G).
GAMMA_C13_MHZ_PER_GAUSS = 1.0705e-3


def mhz_to_angular(f_mhz):
    return TWO_PI * f_mhz


def angular_to_mhz(omega):
    return omega / TWO_PI
