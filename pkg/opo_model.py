"""
Модель шумов подпорогового OPO: уровни сжатия/антисжатия с учетом
эффективности выхода, эффективности гомодинного детектирования,
флуктуаций фазы и клиренса электронного шума.
"""
import math
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from gaussian_core import GaussianState, from_noise_levels
from measurement import (
    NO_CLEARANCE,
    apply_clearance,
    apply_phase_fluctuation,
    check_clearance,
    to_db,
)
from simulation_errors import AboveThresholdError, InvalidArgumentError

logger = logging.getLogger(__name__)

MW = 1e-3
MHZ = 1e6
COUPLING_SPLIT_TOL = 1e-6


def _finite(name: str, value: float):
    if value is None or not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class OpoParams:
    """Физические параметры одного OPO (СИ: Вт, Гц, рад)"""
    pump_power: float
    threshold_power: float
    output_coupler_T: float
    passive_loss_L0: float = 0.0
    bliira_coeff: float = 0.0
    cavity_fwhm: float = 11.8 * MHZ
    sideband_freq: float = 1.5 * MHZ
    squeeze_angle: float = 0.0

    def __post_init__(self):
        for name in ('pump_power', 'threshold_power', 'output_coupler_T', 'passive_loss_L0',
                     'bliira_coeff', 'cavity_fwhm', 'sideband_freq', 'squeeze_angle'):
            _finite(name, getattr(self, name))
        if self.threshold_power <= 0:
            raise InvalidArgumentError(f"threshold power must be positive, got {self.threshold_power}")
        if self.pump_power < 0:
            raise InvalidArgumentError(f"pump power must be >= 0, got {self.pump_power}")
        if self.pump_power >= self.threshold_power:
            raise AboveThresholdError(
                f"pump {self.pump_power * 1e3:.3f} mW is not below threshold "
                f"{self.threshold_power * 1e3:.3f} mW"
            )
        if not 0 < self.output_coupler_T <= 1:
            raise InvalidArgumentError(f"output coupler T must lie in (0, 1], got {self.output_coupler_T}")
        if self.passive_loss_L0 < 0 or self.bliira_coeff < 0:
            raise InvalidArgumentError("intracavity losses must be >= 0")
        if self.cavity_fwhm <= 0:
            raise InvalidArgumentError(f"cavity FWHM must be positive, got {self.cavity_fwhm}")
        if self.sideband_freq < 0:
            raise InvalidArgumentError(f"side-band frequency must be >= 0, got {self.sideband_freq}")

    @classmethod
    def from_units(cls, pump_mw: float, threshold_mw: float, t_oc: float, l0: float = 0.0,
                   bliira_per_w: float = 0.0, fwhm_mhz: float = 11.8, sideband_mhz: float = 1.5,
                   angle_deg: float = 0.0) -> 'OpoParams':
        """Параметры в единицах конфигурации (мВт, МГц, градусы)"""
        return cls(
            pump_power=pump_mw * MW,
            threshold_power=threshold_mw * MW,
            output_coupler_T=t_oc,
            passive_loss_L0=l0,
            bliira_coeff=bliira_per_w,
            cavity_fwhm=fwhm_mhz * MHZ,
            sideband_freq=sideband_mhz * MHZ,
            squeeze_angle=math.radians(angle_deg),
        )


@dataclass(frozen=True)
class EfficiencyChain:
    """Разложение эффективности детектирования и электроника детектора"""
    eta_pd: float = 1.0
    eta_prop: float = 1.0
    eta_coupling: float = 1.0
    eta_visibility: float = 1.0
    fiber_coupling: Optional[float] = None
    waveguide_coupling: Optional[float] = None
    clearance_db: Optional[float] = NO_CLEARANCE
    phase_fluct: float = 0.0

    def __post_init__(self):
        for name in ('eta_pd', 'eta_prop', 'eta_coupling', 'eta_visibility'):
            value = getattr(self, name)
            if value is None or not math.isfinite(value) or not 0 < value <= 1:
                raise InvalidArgumentError(f"{name} must lie in (0, 1], got {value!r}")
        for name in ('fiber_coupling', 'waveguide_coupling'):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or not 0 < value <= 1):
                raise InvalidArgumentError(f"{name} must lie in (0, 1], got {value!r}")
        check_clearance(self.clearance_db)
        if self.phase_fluct is None or not math.isfinite(self.phase_fluct) or self.phase_fluct < 0:
            raise InvalidArgumentError(f"phase fluctuation must be >= 0, got {self.phase_fluct!r}")
        if self.fiber_coupling is not None and self.waveguide_coupling is not None:
            split = self.fiber_coupling * self.waveguide_coupling ** 2
            if abs(self.eta_coupling - split) > COUPLING_SPLIT_TOL:
                raise InvalidArgumentError(
                    f"eta_coupling {self.eta_coupling} != fiber * waveguide^2 = {split:.6f}"
                )

    @classmethod
    def from_fiber_waveguide(cls, fiber_coupling: float, waveguide_coupling: float,
                             **kwargs) -> 'EfficiencyChain':
        """Цепочка с η_c = η_f·η_w²"""
        return cls(eta_coupling=fiber_coupling * waveguide_coupling ** 2,
                   fiber_coupling=fiber_coupling, waveguide_coupling=waveguide_coupling, **kwargs)

    def without_coupling(self) -> 'EfficiencyChain':
        return EfficiencyChain(self.eta_pd, self.eta_prop, 1.0, self.eta_visibility,
                               clearance_db=self.clearance_db, phase_fluct=self.phase_fluct)


def estimate_waveguide_coupling(eta_coupling: float, fiber_coupling: float) -> float:
    """η_w = √(η_c/η_f) при пренебрежимых потерях распространения"""
    if not 0 < eta_coupling <= 1 or not 0 < fiber_coupling <= 1:
        raise InvalidArgumentError("coupling efficiencies must lie in (0, 1]")
    if eta_coupling > fiber_coupling:
        raise InvalidArgumentError("overall coupling cannot exceed the fiber coupling")
    return math.sqrt(eta_coupling / fiber_coupling)


def normalized_pump(pump_power: float, threshold_power: float) -> float:
    """x = √(P/P_th)"""
    _finite('pump_power', pump_power)
    _finite('threshold_power', threshold_power)
    if threshold_power <= 0:
        raise InvalidArgumentError(f"threshold power must be positive, got {threshold_power}")
    if pump_power < 0:
        raise InvalidArgumentError(f"pump power must be >= 0, got {pump_power}")
    if pump_power >= threshold_power:
        raise AboveThresholdError(f"pump {pump_power} W at or above threshold {threshold_power} W")
    return math.sqrt(pump_power / threshold_power)


def escape_efficiency(output_coupler_T: float, passive_loss_L0: float,
                      bliira_coeff: float, pump_power: float) -> float:
    """ρ = T/(T + L), L = L0 + a·P"""
    _finite('output_coupler_T', output_coupler_T)
    if output_coupler_T <= 0:
        raise InvalidArgumentError(f"output coupler T must be positive, got {output_coupler_T}")
    for name, value in (('passive_loss_L0', passive_loss_L0), ('bliira_coeff', bliira_coeff),
                        ('pump_power', pump_power)):
        _finite(name, value)
        if value < 0:
            raise InvalidArgumentError(f"{name} must be >= 0, got {value}")
    loss = passive_loss_L0 + bliira_coeff * pump_power
    return output_coupler_T / (output_coupler_T + loss)


def normalized_frequency(sideband_freq: float, cavity_fwhm: float) -> float:
    """f = частота боковой полосы / FWHM резонатора"""
    _finite('sideband_freq', sideband_freq)
    _finite('cavity_fwhm', cavity_fwhm)
    if cavity_fwhm <= 0:
        raise InvalidArgumentError(f"cavity FWHM must be positive, got {cavity_fwhm}")
    if sideband_freq < 0:
        raise InvalidArgumentError(f"side-band frequency must be >= 0, got {sideband_freq}")
    return sideband_freq / cavity_fwhm


def homodyne_efficiency(chain: EfficiencyChain) -> float:
    """η = η_PD·η_p·η_c·η_v²"""
    return chain.eta_pd * chain.eta_prop * chain.eta_coupling * chain.eta_visibility ** 2


def raw_noise_levels(x: float, f: float, rho: float, eta: float) -> Tuple[float, float]:
    """R± = 1 ± ρη·4x/((1∓x)² + 4f²)"""
    for name, value in (('x', x), ('f', f), ('rho', rho), ('eta', eta)):
        _finite(name, value)
    if x < 0:
        raise InvalidArgumentError(f"normalized pump must be >= 0, got {x}")
    if x >= 1:
        raise AboveThresholdError(f"normalized pump x = {x} is not below threshold")
    if f < 0:
        raise InvalidArgumentError(f"normalized frequency must be >= 0, got {f}")
    if not 0 < rho <= 1 or not 0 < eta <= 1:
        raise InvalidArgumentError(f"rho and eta must lie in (0, 1], got ({rho}, {eta})")

    gain = rho * eta * 4 * x
    r_minus = 1 - gain / ((1 + x) ** 2 + 4 * f ** 2)
    r_plus = 1 + gain / ((1 - x) ** 2 + 4 * f ** 2)
    return r_minus, r_plus


def source_noise_levels(params: OpoParams, eta: float = 1.0) -> Tuple[float, float]:
    """R± для параметров OPO при заданной эффективности детектирования"""
    x = normalized_pump(params.pump_power, params.threshold_power)
    f = normalized_frequency(params.sideband_freq, params.cavity_fwhm)
    rho = escape_efficiency(params.output_coupler_T, params.passive_loss_L0,
                            params.bliira_coeff, params.pump_power)
    return raw_noise_levels(x, f, rho, eta)


def predicted_levels(params: OpoParams, chain: EfficiencyChain) -> Tuple[float, float]:
    """
    Ожидаемые уровни (сжатие, антисжатие) в дБ:
    R± -> флуктуации фазы -> клиренс -> дБ
    """
    r_minus, r_plus = source_noise_levels(params, homodyne_efficiency(chain))
    r_minus, r_plus = apply_phase_fluctuation(r_minus, r_plus, chain.phase_fluct)
    r_minus = apply_clearance(r_minus, chain.clearance_db)
    r_plus = apply_clearance(r_plus, chain.clearance_db)
    return to_db(r_minus), to_db(r_plus)


def pump_sweep_levels(params: OpoParams, chain: EfficiencyChain,
                      pump_powers: Iterable[float]) -> List[Tuple[float, float, float, float]]:
    """Кривые зависимости от мощности накачки: (P, x, дБ-, дБ+) для каждой точки"""
    rows = []
    for pump in pump_powers:
        point = OpoParams(pump, params.threshold_power, params.output_coupler_T,
                          params.passive_loss_L0, params.bliira_coeff, params.cavity_fwhm,
                          params.sideband_freq, params.squeeze_angle)
        db_minus, db_plus = predicted_levels(point, chain)
        rows.append((pump, normalized_pump(pump, params.threshold_power), db_minus, db_plus))
    logger.info(f"Computed {len(rows)} pump points")
    return rows


def opo_source_state(params: OpoParams) -> GaussianState:
    """Состояние на выходном зеркале OPO (учитывается только ρ, η = 1)"""
    r_minus, r_plus = source_noise_levels(params, 1.0)
    return from_noise_levels(r_minus, r_plus, params.squeeze_angle)
