import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndfwm import (
    DegenerateRates,
    FieldConfig,
    InvalidRates,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    Spectrum,
    derived_dephasing,
    equilibrium_population_difference,
    fwm_amplitude,
    pulsation_weight_R,
    spectrum_stationary,
)
from ndfwm.analysis import find_peaks
from ndfwm.oracle import pulsation_solve

rate = st.floats(0.1, 10.0)
detuning = st.floats(-200.0, 200.0)
modes = st.sampled_from(list(PumpTermMode))


def nondegenerate(g1, g2):
    return abs(g2 - g1) > 1e-2


# -- examples -------------------------------------------------------------

@pytest.mark.parametrize("rates, expected", [((3, 6, 3), 7.5), ((0, 0, 0), 0.0), ((1, 1, 0), 1.0)])
def test_derived_dephasing_examples(rates, expected):
    g1, g2, gph = rates
    assert derived_dephasing(RelaxationParams(g1, g2, 0.0, gph)) == pytest.approx(expected)


def test_pulsation_weight_examples():
    assert pulsation_weight_R(RelaxationParams(3, 6, 6, 3)) == pytest.approx(2.0)
    assert pulsation_weight_R(RelaxationParams(3, 5, 0, 1)) == 0.0
    assert pulsation_weight_R(RelaxationParams(3, 0.1, 6, 3)) == pytest.approx(-2.06897, abs=5e-6)


def test_pulsation_weight_rejects_degenerate_rates():
    with pytest.raises(DegenerateRates):
        pulsation_weight_R(RelaxationParams(3, 3, 1, 0))


def test_population_difference_examples():
    r = RelaxationParams(2, 6, 1, 0)
    assert equilibrium_population_difference(PumpSource(2, 0), r) == pytest.approx(1.0)
    assert equilibrium_population_difference(PumpSource(2, 3), r) == pytest.approx(0.75)
    r2 = RelaxationParams(3, 6, 3, 0)
    assert equilibrium_population_difference(PumpSource(0, 6), r2) == pytest.approx(0.0)


def test_population_difference_needs_finite_lifetimes():
    with pytest.raises(InvalidRates):
        equilibrium_population_difference(PumpSource(1, 0), RelaxationParams(0, 6, 1, 0))


def test_zero_forward_pump_gives_zero(set_a):
    fields = FieldConfig(omega_f=0.0, delta0=50)
    amp = fwm_amplitude(np.linspace(-100, 100, 11), 0.0, fields, set_a, PumpSource(3, 0))
    assert np.all(amp == 0)


def test_conjugation_example(set_a):
    pump = PumpSource.unit_inversion(set_a)
    a = fwm_amplitude(17.0, 0.0, FieldConfig(delta0=50), set_a, pump)
    b = fwm_amplitude(-17.0, 0.0, FieldConfig(delta0=-50), set_a, pump)
    assert abs(a) == pytest.approx(abs(b), rel=1e-12)


def test_reference_a_has_triplet_of_maxima_when_read_as_net_decay():
    # gamma2 = 12 gives the net decay gamma2 - gamma21 = 6 of the reference set
    relax = RelaxationParams(3, 12, 6, 3)
    spec = spectrum_stationary(np.linspace(-150, 150, 601), FieldConfig(delta0=50), relax,
                               PumpSource.unit_inversion(relax))
    assert len(find_peaks(spec).peaks) == 3


def test_reference_a_side_maxima_near_pump_detuning(set_a, grid):
    spec = spectrum_stationary(grid, FieldConfig(delta0=50), set_a, PumpSource.unit_inversion(set_a))
    pos = find_peaks(spec).positions
    gt = derived_dephasing(set_a)
    assert np.any(np.abs(pos - 50) <= gt) and np.any(np.abs(pos + 50) <= gt)


def test_reference_b_has_central_peak_not_minimum(set_b, grid):
    # recorded outcome: the caption rates give a narrow central maximum
    spec = spectrum_stationary(grid, FieldConfig(delta0=50), set_b, PumpSource.unit_inversion(set_b))
    centre = np.argmin(np.abs(grid))
    assert spec.intensity[centre] == spec.intensity.max()


def test_spectrum_rejects_unsorted_grid(set_a):
    with pytest.raises(ValueError):
        spectrum_stationary([0.0, 1.0, 0.5], FieldConfig(delta0=50), set_a, PumpSource(3, 0))


def test_admissible_flag():
    assert RelaxationParams(3, 6, 6, 3).admissible
    assert not RelaxationParams(3, 0.1, 6, 3).admissible


# -- properties -----------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(rate, rate, rate, rate, detuning, st.floats(10, 100), st.floats(0.1, 5.0),
       st.sampled_from(["omega_f", "omega_b", "omega_p"]), modes)
def test_third_order_scaling(g1, g2, g21, gph, delta, d0, c, which, mode):
    if not nondegenerate(g1, g2):
        return
    relax = RelaxationParams(g1, g2, g21, gph)
    fields = FieldConfig(delta0=d0)
    pump = PumpSource(1.0, 0.2)
    base = fwm_amplitude(delta, 3.0, fields, relax, pump, mode)
    scaled = fwm_amplitude(delta, 3.0, fields.replace(**{which: c}), relax, pump, mode)
    assert scaled == pytest.approx(c * base, rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(rate, rate, rate, rate, detuning, st.floats(-100, 100), modes)
def test_conjugation_symmetry_at_rest(g1, g2, g21, gph, delta, d0, mode):
    if not nondegenerate(g1, g2):
        return
    relax = RelaxationParams(g1, g2, g21, gph)
    pump = PumpSource(1.0, 0.0)
    a = fwm_amplitude(delta, 0.0, FieldConfig(delta0=d0), relax, pump, mode)
    b = fwm_amplitude(-delta, 0.0, FieldConfig(delta0=-d0), relax, pump, mode)
    assert abs(a) == pytest.approx(abs(b), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(rate, rate, rate, detuning)
def test_partial_fraction_matches_direct_pulsation_solve(g1, g2, g21, delta):
    if not nondegenerate(g1, g2):
        return
    relax = RelaxationParams(g1, g2, g21, 0.0)
    R = pulsation_weight_R(relax)
    closed = -((1 - R) / (g1 - 1j * delta) + (1 + R) / (g2 - 1j * delta))
    assert pulsation_solve(delta, relax, 1.0) == pytest.approx(closed, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(rate, rate, rate, rate, st.floats(10, 100), modes)
def test_intensity_is_squared_modulus(g1, g2, g21, gph, d0, mode):
    if not nondegenerate(g1, g2):
        return
    relax = RelaxationParams(g1, g2, g21, gph)
    spec = spectrum_stationary(np.linspace(-150, 150, 31), FieldConfig(delta0=d0), relax,
                               PumpSource(1.0, 0.0), mode)
    a = spec.amplitude
    assert np.array_equal(spec.intensity, a.real * a.real + a.imag * a.imag)
    assert np.all(spec.intensity >= 0)


@given(rate, rate, rate, st.floats(0.01, 10))
def test_population_difference_positive_without_upper_pumping(g1, g2, g21, lam1):
    relax = RelaxationParams(g1, g2, g21, 0.0)
    assert equilibrium_population_difference(PumpSource(lam1, 0.0), relax) > 0


@settings(max_examples=40, deadline=None)
@given(rate, rate, rate, rate, st.floats(10, 100), st.floats(0.2, 5.0), modes)
def test_lineshape_invariant_under_rate_rescaling(g1, g2, g21, gph, d0, c, mode):
    if not nondegenerate(g1, g2):
        return
    relax = RelaxationParams(g1, g2, g21, gph)
    scaled = RelaxationParams(c * g1, c * g2, c * g21, c * gph)
    grid = np.linspace(-150, 150, 41)
    pump = PumpSource.unit_inversion
    a = spectrum_stationary(grid, FieldConfig(delta0=d0), relax, pump(relax), mode).intensity
    b = spectrum_stationary(c * grid, FieldConfig(delta0=c * d0), scaled, pump(scaled), mode).intensity
    # amplitude carries three inverse rates, so intensity scales as c**-6
    assert np.allclose(b * c ** 6, a, rtol=1e-10, atol=1e-14 * a.max())


def test_spectrum_is_read_only(set_a, grid):
    spec = spectrum_stationary(grid, FieldConfig(delta0=50), set_a, PumpSource(3, 0))
    assert isinstance(spec, Spectrum)
    with pytest.raises(ValueError):
        spec.amplitude[0] = 1.0
