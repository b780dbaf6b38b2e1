"""Closed-form amplitude against the brute-force density-matrix solvers.

Draws random parameter sets and prints the relative disagreement of the
harmonic-balance and time-domain routes, plus the fixed raw-to-amplitude
constant.
"""

import numpy as np

from ndfwm import FieldConfig, PumpSource, PumpTermMode, RelaxationParams, fwm_amplitude
from ndfwm.oracle import OracleMethod, third_order_signal


def main(draws=8, seed=11):
    rng = np.random.default_rng(seed)
    print(f"{'delta':>8} {'closed |A|':>12} {'HB rel err':>11} {'TD rel err':>11} {'raw ratio':>18}")
    for _ in range(draws):
        g1, g2, g21, gph = rng.uniform(0.1, 10.0, 4)
        relax = RelaxationParams(g1, g2, g21, gph)
        fields = FieldConfig(delta0=rng.uniform(10, 100))
        pump = PumpSource(rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0))
        d = rng.uniform(-150, 150)
        closed = complex(fwm_amplitude(d, 0.0, fields, relax, pump, PumpTermMode.BOTH_PUMPS))
        hb = third_order_signal(fields, relax, pump, d, 0.0, OracleMethod.HARMONIC_BALANCE)
        td = third_order_signal(fields, relax, pump, d, 0.0, OracleMethod.TIME_DOMAIN)
        ratio = np.conj(hb.raw) / closed
        print(f"{d:8.2f} {abs(closed):12.4e} {abs(hb.amplitude / closed - 1):11.1e} "
              f"{abs(td.amplitude / closed - 1):11.1e} {ratio.real:+.12f}{ratio.imag:+.0e}j")


if __name__ == "__main__":
    main()
