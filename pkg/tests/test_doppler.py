import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ndfwm import (
    DopplerParams,
    FieldConfig,
    InvalidWidth,
    PumpSource,
    PumpTermMode,
    QuadratureNotConverged,
    RelaxationParams,
    doppler_average,
    spectrum_stationary,
)
from ndfwm.analysis import detect_central_dip
from ndfwm.doppler import (
    ResidualMode,
    coarse_panels,
    doppler_average_exact,
    gauss_hermite_rule,
    graded_rule,
    maxwell_weight,
)

K = FieldConfig().wavenumber


def test_maxwell_peak_value():
    assert maxwell_weight(0.0, 2.5) == pytest.approx(1 / (2.5 * math.sqrt(math.pi)), rel=1e-15)


def test_maxwell_normalised():
    total, _ = quad(maxwell_weight, -np.inf, np.inf, args=(37.0,), epsabs=1e-13)
    assert abs(total - 1) < 1e-8


def test_maxwell_one_width_ratio():
    assert maxwell_weight(3.0, 3.0) / maxwell_weight(0.0, 3.0) == pytest.approx(math.exp(-1), rel=1e-14)


@pytest.mark.parametrize("u", [0.0, -1.0])
def test_maxwell_rejects_nonpositive_width(u):
    with pytest.raises(InvalidWidth):
        maxwell_weight(0.0, u)


def test_gauss_hermite_moments():
    x, w = gauss_hermite_rule(12)
    assert w.sum() == pytest.approx(1, abs=1e-14)
    assert np.sum(w * x * x) == pytest.approx(0.5, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([4, 8, 16, 32, 64, 128]),
       st.lists(st.complex_numbers(max_magnitude=8, allow_nan=False, allow_infinity=False),
                min_size=0, max_size=4),
       st.floats(0.5e-3, 0.9))
def test_graded_rule_weights_sum_to_one(order, reals, width):
    poles = np.array([complex(z.real, width) for z in reals] or [complex(np.nan)])
    x, w = graded_rule(poles[None, :], order)
    assert abs(w.sum() - 1) < 1e-12
    assert np.all(w >= 0)
    assert coarse_panels(order) >= 8


@pytest.mark.parametrize("mode", list(PumpTermMode))
def test_vanishing_width_reduces_to_rest(set_a, set_b, grid, mode):
    fields = FieldConfig(delta0=50)
    for relax in (set_a, set_b):
        pump = PumpSource.unit_inversion(relax)
        ref = spectrum_stationary(grid, fields, relax, pump, mode)
        dop = DopplerParams.from_ku(300e-6, fields.wavenumber)
        avg = doppler_average(grid, fields, relax, pump, dop, mode)
        assert np.max(np.abs(avg.intensity - ref.intensity)) / ref.intensity.max() < 1e-4


@pytest.mark.parametrize("mode", list(PumpTermMode))
@pytest.mark.parametrize("ku", [100.0, 300.0, 500.0])
def test_matches_exact_faddeeva_route(set_a, mode, ku):
    fields = FieldConfig(delta0=50)
    grid = np.linspace(-150, 150, 121)
    pump = PumpSource.unit_inversion(set_a)
    exact = doppler_average_exact(grid, fields, set_a, pump, ku / fields.wavenumber, mode)
    dop = DopplerParams.from_ku(ku, fields.wavenumber)
    avg = doppler_average(grid, fields, set_a, pump, dop, mode)
    assert np.max(np.abs(avg.amplitude - exact.amplitude)) < 1e-9 * np.max(np.abs(exact.amplitude))


def test_order_ladder_decreases_from_coarse_orders(set_a):
    fields = FieldConfig(delta0=50)
    grid = np.linspace(-150, 150, 121)
    pump = PumpSource.unit_inversion(set_a)
    exact = doppler_average_exact(grid, fields, set_a, pump, 300 / K).intensity
    errors = []
    for order in (4, 8, 16):
        dop = DopplerParams.from_ku(300, K, quadrature_order=order, check_convergence=False)
        errors.append(np.max(np.abs(doppler_average(grid, fields, set_a, pump, dop).intensity - exact)))
    assert errors[0] > errors[1] > errors[2]


def test_linear_in_source_scale(set_a):
    fields = FieldConfig(delta0=50)
    grid = np.linspace(-100, 100, 41)
    dop = DopplerParams.from_ku(300, K, check_convergence=False)
    a = doppler_average(grid, fields, set_a, PumpSource(3.0, 0.0), dop).amplitude
    b = doppler_average(grid, fields.replace(omega_p=2.5), set_a, PumpSource(3.0, 0.0), dop).amplitude
    assert np.allclose(b, 2.5 * a, rtol=1e-13, atol=0)


def test_mirror_symmetry_both_pumps(set_a):
    grid = np.linspace(-150, 150, 61)
    dop = DopplerParams.from_ku(300, K)
    pump = PumpSource.unit_inversion(set_a)
    a = doppler_average(grid, FieldConfig(delta0=50), set_a, pump, dop).intensity
    b = doppler_average(-grid[::-1], FieldConfig(delta0=-50), set_a, pump, dop).intensity[::-1]
    assert np.max(np.abs(a - b)) < 1e-4 * a.max()


def test_transverse_modes_agree_for_small_angle(set_a):
    grid = np.linspace(-100, 100, 41)
    fields = FieldConfig(delta0=50)
    pump = PumpSource.unit_inversion(set_a)
    ref = doppler_average(grid, fields, set_a, pump,
                          DopplerParams.from_ku(300, K, residual_mode="two-dimensional"))
    approx = doppler_average(grid, fields, set_a, pump,
                             DopplerParams.from_ku(300, K, residual_mode="gaussian-broaden"))
    # residual coupling in the coherence factors is of order (k sin(theta) u / gamma_T)**2
    assert np.max(np.abs(ref.intensity - approx.intensity)) < 1e-2 * ref.intensity.max()


def test_net_decay_dip_persists_after_averaging():
    relax = RelaxationParams(3.0, 6.1, 6.0, 3.0)
    grid = np.linspace(-150, 150, 601)
    spec = doppler_average(grid, FieldConfig(delta0=50), relax, PumpSource.unit_inversion(relax),
                           DopplerParams.from_ku(300, K))
    dip = detect_central_dip(spec, 20.0)
    assert dip is not None and abs(dip.position) < 1


def test_tight_tolerance_raises(set_a):
    dop = DopplerParams.from_ku(300, K, quadrature_order=4, tolerance=1e-12)
    with pytest.raises(QuadratureNotConverged):
        doppler_average(np.linspace(-100, 100, 21), FieldConfig(delta0=50), set_a,
                        PumpSource(3.0, 0.0), dop)


def test_metadata_records_rule(set_a):
    dop = DopplerParams.from_ku(300, K)
    spec = doppler_average(np.linspace(-10, 10, 5), FieldConfig(delta0=50), set_a, PumpSource(3, 0), dop)
    meta = spec.metadata["doppler"]
    assert meta["ku"] == pytest.approx(300)
    assert meta["quadrature_order"] == 64
    assert meta["doubling_change"] < 1e-4


def test_residual_mode_parse():
    assert ResidualMode.parse("two-dimensional") is ResidualMode.TWO_DIMENSIONAL
    with pytest.raises(ValueError):
        ResidualMode.parse("three-dimensional")
