"""
Гомодинное детектирование, пересчет в дБ и критерий неразделимости Дуана-Саймона
"""
import math
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from gaussian_core import (
    GaussianState,
    VACUUM_VARIANCE,
    joint_quadrature_variance,
    loss_channel,
    quadrature_variance,
)
from simulation_errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# C -> ∞: электронный шум не учитывается
NO_CLEARANCE = None

KIND_SINGLE = 'single'
KIND_SUM = 'sum'
KIND_DIFFERENCE = 'difference'
RECORD_KINDS = (KIND_SINGLE, KIND_SUM, KIND_DIFFERENCE)

# Некоррелированный уровень для суммы/разности: два вакуума
UNCORRELATED_REFERENCE = 2 * VACUUM_VARIANCE

VERDICT_ENTANGLED = 'entangled'
VERDICT_SEPARABLE = 'separable-or-unknown'

DB_TOL = 1e-12


def _check_positive(name: str, value: float):
    if value is None or not math.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be positive and finite, got {value!r}")


def _check_efficiency(name: str, value: float):
    if value is None or not math.isfinite(value) or value <= 0 or value > 1:
        raise InvalidArgumentError(f"{name} must lie in (0, 1], got {value!r}")


def check_clearance(clearance_db: Optional[float]):
    if clearance_db is NO_CLEARANCE:
        return
    if not math.isfinite(clearance_db) or clearance_db <= 0:
        raise InvalidArgumentError(f"clearance must be > 0 dB or the no-clearance sentinel, got {clearance_db!r}")


def to_db(variance_shot: float) -> float:
    """10·log10 от дисперсии в единицах дробового шума"""
    _check_positive('variance', variance_shot)
    return 10.0 * math.log10(variance_shot)


def from_db(db: float) -> float:
    if db is None or not math.isfinite(db):
        raise InvalidArgumentError(f"dB value must be finite, got {db!r}")
    return 10.0 ** (db / 10.0)


def clearance_factor(clearance_db: Optional[float]) -> float:
    """k = 10^(-C/10); 0 для NO_CLEARANCE"""
    check_clearance(clearance_db)
    if clearance_db is NO_CLEARANCE:
        return 0.0
    return 10.0 ** (-clearance_db / 10.0)


def _clear(variance_shot: float, k: float) -> float:
    return variance_shot * (1.0 - k) + k


def apply_clearance(variance_shot: float, clearance_db: Optional[float]) -> float:
    """R'' = R'(1 - 10^(-C/10)) + 10^(-C/10)"""
    _check_positive('variance', variance_shot)
    return _clear(variance_shot, clearance_factor(clearance_db))


def apply_phase_fluctuation(r_minus: float, r_plus: float, phase_fluct: float) -> Tuple[float, float]:
    """R'± = R± cos²θ + R∓ sin²θ"""
    if phase_fluct is None or not math.isfinite(phase_fluct) or phase_fluct < 0:
        raise InvalidArgumentError(f"phase fluctuation must be >= 0, got {phase_fluct!r}")
    c2 = math.cos(phase_fluct) ** 2
    s2 = math.sin(phase_fluct) ** 2
    return r_minus * c2 + r_plus * s2, r_plus * c2 + r_minus * s2


@dataclass(frozen=True)
class HomodyneDetector:
    """Балансный гомодинный детектор одной моды"""
    mode: int
    lo_phase: float = 0.0
    visibility: float = 1.0
    eta_pd: float = 1.0
    phase_fluct: float = 0.0
    clearance_db: Optional[float] = NO_CLEARANCE

    def __post_init__(self):
        if not isinstance(self.mode, (int, np.integer)) or self.mode < 0:
            raise InvalidArgumentError(f"detector mode must be a non-negative index, got {self.mode!r}")
        if self.lo_phase is None or not math.isfinite(self.lo_phase):
            raise InvalidArgumentError(f"LO phase must be finite, got {self.lo_phase!r}")
        _check_efficiency('visibility', self.visibility)
        _check_efficiency('eta_pd', self.eta_pd)
        if self.phase_fluct is None or not math.isfinite(self.phase_fluct) or self.phase_fluct < 0:
            raise InvalidArgumentError(f"phase fluctuation must be >= 0, got {self.phase_fluct!r}")
        check_clearance(self.clearance_db)

    @property
    def efficiency(self) -> float:
        """Эффективность на стороне детектора η_v²·η_PD"""
        return self.visibility ** 2 * self.eta_pd

    @property
    def measured_phase(self) -> float:
        return self.lo_phase + self.phase_fluct

    def with_lo_phase(self, lo_phase: float) -> 'HomodyneDetector':
        return HomodyneDetector(self.mode, lo_phase, self.visibility, self.eta_pd,
                                self.phase_fluct, self.clearance_db)

    def with_mode(self, mode: int) -> 'HomodyneDetector':
        return HomodyneDetector(mode, self.lo_phase, self.visibility, self.eta_pd,
                                self.phase_fluct, self.clearance_db)

    @classmethod
    def from_chain(cls, mode: int, chain, lo_phase: float = 0.0) -> 'HomodyneDetector':
        """Детектор со стороной детектирования цепочки эффективностей (η_v, η_PD, θ̃, C)"""
        return cls(mode, lo_phase, chain.eta_visibility, chain.eta_pd,
                   chain.phase_fluct, chain.clearance_db)


@dataclass(frozen=True)
class MeasurementRecord:
    """Результат одного гомодинного или совместного измерения"""
    label: str
    variance_shot: float
    db: float
    lo_phase: float
    kind: str = KIND_SINGLE

    def __post_init__(self):
        _check_positive('variance', self.variance_shot)
        if self.kind not in RECORD_KINDS:
            raise InvalidArgumentError(f"unknown record kind {self.kind!r}")
        if abs(self.db - 10.0 * math.log10(self.variance_shot)) > DB_TOL:
            raise InvalidArgumentError("record dB value does not match its variance")

    @classmethod
    def create(cls, label: str, variance_shot: float, lo_phase: float,
               kind: str = KIND_SINGLE) -> 'MeasurementRecord':
        return cls(label, variance_shot, to_db(variance_shot), lo_phase, kind)

    @property
    def lo_phase_deg(self) -> float:
        return math.degrees(self.lo_phase)


class ScanSummary(NamedTuple):
    records: List[MeasurementRecord]
    minimum: MeasurementRecord
    maximum: MeasurementRecord


class CorrelationResult(NamedTuple):
    """Δ² и его слагаемые в сырых квадратурных единицах (вакуум: 1/2 на слагаемое)"""
    delta_sq: float
    term_x: float
    term_p: float


class InseparabilityVerdict(NamedTuple):
    verdict: str
    margin: float

    @property
    def entangled(self) -> bool:
        return self.verdict == VERDICT_ENTANGLED


def detected_state(state: GaussianState, det: HomodyneDetector) -> GaussianState:
    """Состояние после потерь на стороне детектора"""
    return loss_channel(state, det.mode, det.efficiency)


def homodyne_variance(state: GaussianState, det: HomodyneDetector,
                      label: Optional[str] = None) -> MeasurementRecord:
    """
    Дисперсия квадратуры при фазе LO + θ̃ после потерь η_v²·η_PD,
    нормированная на дробовой шум и с учетом клиренса.
    """
    lossy = detected_state(state, det)
    raw = quadrature_variance(lossy, det.mode, det.measured_phase)
    variance_shot = apply_clearance(raw / VACUUM_VARIANCE, det.clearance_db)
    return MeasurementRecord.create(label or f"mode{det.mode}", variance_shot, det.lo_phase, KIND_SINGLE)


def lo_phase_scan(state: GaussianState, det: HomodyneDetector, n_points: int,
                  label: Optional[str] = None) -> ScanSummary:
    """Сканирование фазы LO по равномерной сетке [0, 2π)"""
    if not isinstance(n_points, (int, np.integer)) or n_points < 2:
        raise InvalidArgumentError(f"LO scan needs at least 2 points, got {n_points!r}")
    label = label or f"mode{det.mode}"
    records = [
        homodyne_variance(state, det.with_lo_phase(2 * math.pi * i / n_points), label)
        for i in range(n_points)
    ]
    minimum = min(records, key=lambda r: r.variance_shot)
    maximum = max(records, key=lambda r: r.variance_shot)
    return ScanSummary(records, minimum, maximum)


def locked_levels(state: GaussianState, det: HomodyneDetector,
                  label: Optional[str] = None) -> Tuple[MeasurementRecord, MeasurementRecord]:
    """Записи при LO, зафиксированном на lo_phase и на lo_phase + 90°"""
    x_record = homodyne_variance(state, det, label)
    p_record = homodyne_variance(state, det.with_lo_phase(det.lo_phase + math.pi / 2), label)
    return x_record, p_record


def arm_noise_levels(state: GaussianState, det: HomodyneDetector) -> Tuple[float, float]:
    """Шум x и p квадратур одного плеча (дБ над дробовым шумом)"""
    x_record, p_record = locked_levels(state, det)
    return x_record.db, p_record.db


def correlation_variance(state: GaussianState, det1: HomodyneDetector,
                         det2: HomodyneDetector) -> CorrelationResult:
    """
    Δ² = <[Δ(x1 - x2)]²> + <[Δ(p1 + p2)]²>

    Фазы детекторов задают оси x каждой моды; потери и θ̃ каждого детектора
    применяются до объединения, клиренс к каждому совместному слагаемому.
    """
    if det1.mode == det2.mode:
        raise InvalidArgumentError(f"correlation needs two different modes, got {det1.mode} twice")

    lossy = detected_state(detected_state(state, det1), det2)
    phi1, phi2 = det1.measured_phase, det2.measured_phase
    raw_x = joint_quadrature_variance(lossy, [(det1.mode, phi1, 1.0), (det2.mode, phi2, -1.0)])
    raw_p = joint_quadrature_variance(
        lossy, [(det1.mode, phi1 + math.pi / 2, 1.0), (det2.mode, phi2 + math.pi / 2, 1.0)]
    )

    k = 0.5 * (clearance_factor(det1.clearance_db) + clearance_factor(det2.clearance_db))
    term_x = UNCORRELATED_REFERENCE * _clear(raw_x / UNCORRELATED_REFERENCE, k)
    term_p = UNCORRELATED_REFERENCE * _clear(raw_p / UNCORRELATED_REFERENCE, k)
    return CorrelationResult(term_x + term_p, term_x, term_p)


def inseparability_check(delta_sq: float) -> InseparabilityVerdict:
    """Две моды неразделимы при Δ² < 1"""
    _check_positive('delta_sq', delta_sq)
    verdict = VERDICT_ENTANGLED if delta_sq < 1 else VERDICT_SEPARABLE
    return InseparabilityVerdict(verdict, 1.0 - delta_sq)


def sum_diff_noise_db(term: float, kind: str = KIND_DIFFERENCE) -> float:
    """Шум суммы/разности относительно уровня без квантовых корреляций"""
    if kind not in (KIND_SUM, KIND_DIFFERENCE):
        raise InvalidArgumentError(f"kind must be 'sum' or 'difference', got {kind!r}")
    _check_positive('term', term)
    return to_db(term / UNCORRELATED_REFERENCE)


def correlation_records(result: CorrelationResult, label: str,
                        det1: HomodyneDetector) -> List[MeasurementRecord]:
    """Записи разности x и суммы p (variance_shot относительно некоррелированного уровня)"""
    return [
        MeasurementRecord.create(f"{label}.x_diff", result.term_x / UNCORRELATED_REFERENCE,
                                 det1.lo_phase, KIND_DIFFERENCE),
        MeasurementRecord.create(f"{label}.p_sum", result.term_p / UNCORRELATED_REFERENCE,
                                 det1.lo_phase + math.pi / 2, KIND_SUM),
    ]
