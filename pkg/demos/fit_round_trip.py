"""Recover rates and pump detuning from a noisy synthetic spectrum."""

import numpy as np

from ndfwm import FieldConfig, PumpSource, RelaxationParams, spectrum_stationary
from ndfwm.fit import FitProblem, IntensityData, fit_spectrum


def main(noise=0.01, seed=0):
    truth = RelaxationParams(3.0, 6.0, 6.0, 3.0)
    fields = FieldConfig(delta0=50.0)
    grid = np.linspace(-150, 150, 301)
    clean = spectrum_stationary(grid, fields, truth, PumpSource.unit_inversion(truth)).intensity
    data = clean + noise * clean.max() * np.random.default_rng(seed).standard_normal(grid.size)

    free = ("gamma1", "gamma2", "delta0", "scale")
    initial = {"gamma1": 3.9, "gamma2": 7.8, "delta0": 65.0, "scale": 1.3}
    bounds = {"gamma1": (0.1, 100), "gamma2": (0.1, 100), "delta0": (0, 200), "scale": (1e-3, 1e3)}
    result = fit_spectrum(FitProblem(IntensityData(grid, data), free, initial, bounds, truth, fields,
                                     PumpSource.unit_inversion(truth)))
    target = {"gamma1": 3.0, "gamma2": 6.0, "delta0": 50.0, "scale": 1.0}
    for name in free:
        est = result.estimates[name]
        print(f"{name:8s} {est:10.5f}  (true {target[name]:g}, rel err {abs(est / target[name] - 1):.1e})")
    print(f"rss {result.initial_rss:.3e} -> {result.rss:.3e}, converged {result.converged}, "
          f"weak {result.weakly_identified or 'none'}")


if __name__ == "__main__":
    main()
