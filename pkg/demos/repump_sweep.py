"""Peak signal against repump detuning and strength.

The repump maps onto per-velocity-class rates through the phenomenological
knobs eta, the gamma2 cap and an optional saturation rate; the numbers are
qualitative.
"""

import numpy as np

from ndfwm import DopplerParams, FieldConfig, PumpSource, RelaxationParams, doppler_average
from ndfwm.repump import REFERENCE_DETUNINGS, RepumpParams, repump_spectrum


def main():
    relax = RelaxationParams(3.0, 6.0, 3.0, 3.0)
    fields = FieldConfig(delta0=105.0)
    pump = PumpSource.unit_inversion(relax)
    grid = np.linspace(-300, 300, 301)
    dop = DopplerParams.from_ku(300.0, fields.wavenumber, quadrature_order=32)
    base = doppler_average(grid, fields, relax, pump, dop).intensity.max()

    print("repump detuning sweep (rate 3, saturation 0.6)")
    for dr in REFERENCE_DETUNINGS:
        rp = RepumpParams(delta_r=dr, rate=3.0, saturation_rate=0.6)
        peak = repump_spectrum(grid, fields, relax, pump, dop, rp).intensity.max()
        print(f"  delta_r {dr:+7.1f} MHz: peak / baseline = {peak / base:.4f}")

    print("resonant strength sweep")
    for sat in (None, 0.6):
        peaks = [repump_spectrum(grid, fields, relax, pump, dop,
                                 RepumpParams(0.0, m * relax.gamma2, saturation_rate=sat)).intensity.max()
                 for m in (0.1, 0.2, 0.4, 0.8)]
        steps = np.diff([base] + peaks) / base
        print(f"  saturation {sat}: relative increments {np.array2string(steps, precision=5)}")


if __name__ == "__main__":
    main()
