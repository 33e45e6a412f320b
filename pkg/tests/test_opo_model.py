"""
Тесты модели шумов OPO; независимый оракул на mpmath (50 знаков)
"""
import math

import mpmath
import numpy as np
import pytest

from gaussian_core import VACUUM_VARIANCE, loss_channel, vacuum
from measurement import HomodyneDetector, homodyne_variance
from opo_model import (
    MW,
    EfficiencyChain,
    OpoParams,
    escape_efficiency,
    estimate_waveguide_coupling,
    homodyne_efficiency,
    normalized_frequency,
    normalized_pump,
    opo_source_state,
    predicted_levels,
    pump_sweep_levels,
    raw_noise_levels,
    source_noise_levels,
)
from simulation_errors import AboveThresholdError, InvalidArgumentError

mpmath.mp.dps = 50


def oracle_levels(pump_w, threshold_w, t_oc, l0, a, fwhm, sideband, eta, theta, clearance_db):
    """Цепочка R± -> флуктуации фазы -> клиренс -> дБ в произвольной точности"""
    mpf = mpmath.mpf
    x = mpmath.sqrt(mpf(pump_w) / mpf(threshold_w))
    f = mpf(sideband) / mpf(fwhm)
    rho = mpf(t_oc) / (mpf(t_oc) + mpf(l0) + mpf(a) * mpf(pump_w))
    gain = rho * mpf(eta) * 4 * x
    r_minus = 1 - gain / ((1 + x) ** 2 + 4 * f ** 2)
    r_plus = 1 + gain / ((1 - x) ** 2 + 4 * f ** 2)
    c2, s2 = mpmath.cos(mpf(theta)) ** 2, mpmath.sin(mpf(theta)) ** 2
    r_minus, r_plus = r_minus * c2 + r_plus * s2, r_plus * c2 + r_minus * s2
    if clearance_db is not None:
        k = mpmath.power(10, -mpf(clearance_db) / 10)
        r_minus, r_plus = r_minus * (1 - k) + k, r_plus * (1 - k) + k
    return 10 * mpmath.log10(r_minus), 10 * mpmath.log10(r_plus)


def lab_oracle(lab, pump_w=0.1, eta=None):
    opo, chain = lab
    return oracle_levels(pump_w, 0.179, 0.113, 0.00254, 0.00922, 11.8e6, 1.5e6,
                         eta if eta is not None else homodyne_efficiency(chain),
                         chain.phase_fluct, chain.clearance_db)


def test_normalized_pump():
    assert normalized_pump(0.0, 0.179) == 0.0
    assert np.isclose(normalized_pump(0.1, 0.179), 0.74744, atol=1e-5)
    with pytest.raises(AboveThresholdError):
        normalized_pump(0.179, 0.179)
    with pytest.raises(InvalidArgumentError):
        normalized_pump(-0.01, 0.179)


def test_escape_efficiency():
    assert escape_efficiency(0.113, 0.0, 0.0, 0.5) == 1.0
    assert np.isclose(escape_efficiency(0.113, 0.00254, 0.00922, 0.1), 0.97027, atol=1e-5)
    low_pump = escape_efficiency(0.113, 0.00254, 0.00922, 0.0)
    assert np.isclose(low_pump, 0.97802, atol=1e-5)
    assert abs(low_pump - 0.97) <= 0.01
    with pytest.raises(InvalidArgumentError):
        escape_efficiency(0.0, 0.0, 0.0, 0.1)


def test_normalized_frequency():
    assert abs(normalized_frequency(1.5e6, 11.8e6) - 0.127) <= 5e-4
    assert normalized_frequency(0.0, 11.8e6) == 0.0
    assert normalized_frequency(11.8e6, 11.8e6) == 1.0
    with pytest.raises(InvalidArgumentError):
        normalized_frequency(1.5e6, 0.0)


def test_homodyne_efficiency(lab):
    assert homodyne_efficiency(EfficiencyChain()) == 1.0
    assert abs(homodyne_efficiency(lab.chain) - 0.704) <= 5e-4
    assert np.isclose(homodyne_efficiency(EfficiencyChain(eta_coupling=0.72)), 0.72)


def test_efficiency_chain_validation():
    with pytest.raises(InvalidArgumentError):
        EfficiencyChain(eta_pd=0.0)
    with pytest.raises(InvalidArgumentError):
        EfficiencyChain(clearance_db=0.0)
    with pytest.raises(InvalidArgumentError):
        EfficiencyChain(phase_fluct=-0.01)
    # η_c != η_f·η_w²
    with pytest.raises(InvalidArgumentError):
        EfficiencyChain(eta_coupling=0.72, fiber_coupling=0.87, waveguide_coupling=0.91)


def test_fiber_waveguide_split():
    eta_w = estimate_waveguide_coupling(0.72, 0.87)
    assert abs(eta_w - 0.91) < 0.005
    chain = EfficiencyChain.from_fiber_waveguide(0.87, eta_w, eta_pd=0.998)
    assert np.isclose(chain.eta_coupling, 0.72)
    with pytest.raises(InvalidArgumentError):
        estimate_waveguide_coupling(0.9, 0.87)


def test_raw_noise_levels():
    assert raw_noise_levels(0.0, 0.3, 0.9, 0.8) == (1.0, 1.0)
    r_minus, _ = raw_noise_levels(0.999, 0.0, 1.0, 1.0)
    assert r_minus < 0.002
    with pytest.raises(AboveThresholdError):
        raw_noise_levels(1.0, 0.1, 1.0, 1.0)

    x, f = math.sqrt(100 / 179), 1.5 / 11.8
    r_minus, r_plus = raw_noise_levels(x, f, 0.970274, 0.704279)
    assert np.isclose(r_minus, 0.34478, atol=1e-4)
    # R+ сверяется с оракулом, а не с округленным значением
    gain = 0.970274 * 0.704279 * 4 * x
    assert np.isclose(r_plus, 1 + gain / ((1 - x) ** 2 + 4 * f ** 2), rtol=1e-12)
    assert abs(r_plus - 16.93) < 0.05


def test_raw_noise_level_properties():
    xs = np.linspace(0.0, 0.95, 40)
    for f in (0.0, 0.127, 0.5):
        levels = [raw_noise_levels(x, f, 0.97, 0.7) for x in xs]
        minus = [m for m, _ in levels]
        plus = [p for _, p in levels]
        assert all(b < a for a, b in zip(minus, minus[1:]))
        assert all(b > a for a, b in zip(plus, plus[1:]))

    for x in (0.2, 0.5, 0.8):
        deviations = [raw_noise_levels(x, f, 0.97, 0.7) for f in np.linspace(0, 2, 20)]
        assert all(abs(b[0] - 1) < abs(a[0] - 1) for a, b in zip(deviations, deviations[1:]))
        assert all(abs(b[1] - 1) < abs(a[1] - 1) for a, b in zip(deviations, deviations[1:]))

    # R+ и R- отличаются только знаком x: отношение отклонений от 1 не зависит от ρη
    for x in (0.1, 0.4, 0.7, 0.93):
        for f in (0.0, 0.2, 1.3):
            expected = ((1 + x) ** 2 + 4 * f ** 2) / ((1 - x) ** 2 + 4 * f ** 2)
            for rho, eta in ((1.0, 1.0), (0.97, 0.7), (0.5, 0.3)):
                r_minus, r_plus = raw_noise_levels(x, f, rho, eta)
                assert np.isclose((r_plus - 1) / (1 - r_minus), expected, rtol=1e-12)

    # без потерь на нулевой частоте состояние чистое: R- · R+ = 1
    for x in (0.1, 0.4, 0.7, 0.93):
        r_minus, r_plus = raw_noise_levels(x, 0.0, 1.0, 1.0)
        assert np.isclose(r_minus * r_plus, 1.0, rtol=1e-12)
        assert np.isclose(r_minus, ((1 - x) / (1 + x)) ** 2, rtol=1e-12)


def test_predicted_levels_match_oracle(lab):
    db_minus, db_plus = predicted_levels(lab.opo, lab.chain)
    oracle_minus, oracle_plus = lab_oracle(lab)
    assert abs(db_minus - float(oracle_minus)) <= 1e-9 * abs(float(oracle_minus))
    assert abs(db_plus - float(oracle_plus)) <= 1e-9 * abs(float(oracle_plus))
    assert abs(db_minus - (-4.147)) < 1e-3
    assert abs(db_plus - 12.098) < 0.02


def test_predicted_levels_near_measurement(lab):
    db_minus, db_plus = predicted_levels(lab.opo, lab.chain)
    assert abs(db_minus - (-4.02)) <= 0.5
    assert abs(db_plus - 11.85) <= 0.5


def test_perfect_coupling_squeezing(lab):
    """Без η_c при 100 мВт ожидается около -8.4 дБ"""
    db_minus, _ = predicted_levels(lab.opo, lab.chain.without_coupling())
    assert abs(db_minus - (-8.4)) <= 0.3


def test_zero_pump_is_shot_noise():
    params = OpoParams.from_units(pump_mw=0.0, threshold_mw=179, t_oc=0.113, l0=0.00254,
                                  bliira_per_w=0.00922)
    assert predicted_levels(params, EfficiencyChain()) == (0.0, 0.0)
    assert opo_source_state(params).allclose(vacuum(1))


def test_opo_params_validation():
    with pytest.raises(AboveThresholdError):
        OpoParams.from_units(pump_mw=179, threshold_mw=179, t_oc=0.113)
    with pytest.raises(InvalidArgumentError):
        OpoParams.from_units(pump_mw=10, threshold_mw=179, t_oc=0.0)
    with pytest.raises(InvalidArgumentError):
        OpoParams.from_units(pump_mw=10, threshold_mw=179, t_oc=0.1, fwhm_mhz=0.0)


def test_opo_source_state(lab):
    state = opo_source_state(lab.opo)
    r_minus = 4 * state.cov[0, 0]
    assert abs(r_minus - 0.06950) < 1e-3
    expected, _ = source_noise_levels(lab.opo, 1.0)
    assert np.isclose(r_minus, expected, rtol=1e-12)


def test_source_state_pipeline_equivalence(lab):
    """Источник -> потери η -> детектор с θ̃ и C совпадает с predicted_levels"""
    chain = lab.chain
    state = loss_channel(opo_source_state(lab.opo), 0, chain.eta_prop * chain.eta_coupling)
    det = HomodyneDetector.from_chain(0, chain)
    db_minus, db_plus = predicted_levels(lab.opo, chain)
    assert np.isclose(homodyne_variance(state, det).db, db_minus, rtol=1e-9)
    assert np.isclose(homodyne_variance(state, det.with_lo_phase(math.pi / 2)).db, db_plus, rtol=1e-9)
    assert VACUUM_VARIANCE == 0.25


def test_pump_sweep_levels(lab):
    pumps = [p * MW for p in np.linspace(10, 170, 18)]
    rows = pump_sweep_levels(lab.opo, lab.chain, pumps)
    assert len(rows) == 18
    squeezing = [row[2] for row in rows]
    # на малых накачках сжатие растет, у порога насыщается около -4.1 дБ
    assert all(b < a for a, b in zip(squeezing[:5], squeezing[1:5]))
    assert all(-4.3 < db < 0 for db in squeezing)
    assert -4.3 < squeezing[-1] < -4.0
    for pump, x, db_minus, db_plus in rows:
        oracle_minus, oracle_plus = lab_oracle(lab, pump)
        assert np.isclose(db_minus, float(oracle_minus), rtol=1e-9)
        assert np.isclose(db_plus, float(oracle_plus), rtol=1e-9)
