"""Radar velocity formulas and their simulation inverse."""

import math

from crossroad.errors import InvalidParameterError, InvalidReadingError
from crossroad.models import FrequencyPair, RadarCalibration, Velocity, VelocityDelta
from crossroad.rng import Rng

DEFAULT_CALIBRATION = RadarCalibration()


def doppler_velocity(
    reading: FrequencyPair, cal: RadarCalibration = DEFAULT_CALIBRATION
) -> Velocity:
    """Convert an emitted/reflected frequency pair into a velocity.

    v = k * (f_r - f_o) / f_o, with no clamping.

    Args:
        reading: The radar measurement.
        cal: Radar calibration supplying the scale factor k.

    Returns:
        The velocity in radar units.

    Raises:
        InvalidReadingError: If either frequency is non-finite or f_o is
            not positive.
    """
    if not (math.isfinite(reading.f_o) and math.isfinite(reading.f_r)):
        raise InvalidReadingError(f"Non-finite radar reading: {reading}")
    if reading.f_o <= 0:
        raise InvalidReadingError(f"Emitted frequency must be > 0, got {reading.f_o}")
    return cal.k * (reading.f_r - reading.f_o) / reading.f_o


def velocity_delta(v1: Velocity, v2: Velocity) -> VelocityDelta:
    """Return v2 - v1.

    Raises:
        InvalidReadingError: If either velocity is not finite.
    """
    if not (math.isfinite(v1) and math.isfinite(v2)):
        raise InvalidReadingError(f"Non-finite velocities: v1={v1}, v2={v2}")
    return v2 - v1


def reflect_frequency(
    true_velocity: Velocity,
    f_o: float,
    cal: RadarCalibration,
    rng: Rng | None = None,
) -> FrequencyPair:
    """Simulate the reflected frequency for a target moving at true_velocity.

    f_r = f_o * (1 + v / k) + noise, where noise is Gaussian with standard
    deviation cal.noise_sigma. With noise off the rng is not touched.

    Raises:
        InvalidParameterError: If f_o is not a positive finite number, or
            noise is on and no rng is given.
    """
    if not (math.isfinite(f_o) and f_o > 0):
        raise InvalidParameterError(f"Emitted frequency must be > 0, got {f_o}")
    f_r = f_o * (1.0 + true_velocity / cal.k)
    if cal.noise_sigma > 0:
        if rng is None:
            raise InvalidParameterError("Radar noise is on but no rng was given")
        f_r += rng.gaussian(0.0, cal.noise_sigma)
    return FrequencyPair(f_o=f_o, f_r=f_r)
