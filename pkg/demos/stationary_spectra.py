"""Stationary lineshapes for the two reference rate sets.

Runs each set twice: once with gamma2 taken literally and once with gamma2
read as the net decay gamma2 - gamma21.  Prints the peak table and the
central-dip record; pass --plot FILE to save a figure (needs matplotlib).
"""

import argparse

import numpy as np

from ndfwm import FieldConfig, PumpSource, RelaxationParams, spectrum_stationary
from ndfwm.analysis import dip_condition, find_peaks

CASES = {
    "a, literal": RelaxationParams(3.0, 6.0, 6.0, 3.0),
    "b, literal": RelaxationParams(3.0, 0.1, 6.0, 3.0),
    "a, net decay": RelaxationParams(3.0, 12.0, 6.0, 3.0),
    "b, net decay": RelaxationParams(3.0, 6.1, 6.0, 3.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--plot", help="save a figure to this path")
    args = ap.parse_args()

    grid = np.linspace(-150, 150, 1201)
    fields = FieldConfig(delta0=50.0)
    spectra = {}
    for name, relax in CASES.items():
        spec = spectrum_stationary(grid, fields, relax, PumpSource.unit_inversion(relax))
        spectra[name] = spec
        report = find_peaks(spec, 0.05, dip_window=20.0)
        peaks = ", ".join(f"{p.position:+.1f} (fwhm {p.fwhm:.1f})" for p in report.peaks)
        dip = report.central_dip
        print(f"[{name}] dip condition {dip_condition(relax)}")
        print(f"    peaks: {peaks}")
        print(f"    central dip: {'none' if dip is None else f'{dip.position:+.2f}, depth {dip.depth:.3f}'}")

    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
        for ax, (name, spec) in zip(axes.flat, spectra.items()):
            ax.plot(spec.delta, spec.intensity / spec.intensity.max())
            ax.set_title(name)
        for ax in axes[-1]:
            ax.set_xlabel("probe detuning [MHz]")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)


if __name__ == "__main__":
    main()
