"""
Воспроизведение измерений: зависимость сжатия от накачки и калибровка EPR-эксперимента
"""
import math
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from circuit_evaluator import EvaluationResult, apply_overrides, evaluate
from circuit_netlist import Netlist
from measurement import (
    KIND_DIFFERENCE,
    KIND_SUM,
    arm_noise_levels,
    inseparability_check,
    locked_levels,
    sum_diff_noise_db,
)
from opo_model import MW, normalized_pump
from presets import lab_parameters, preset_fig1a, preset_fig1b
from settings import RunParameters
from simulation_errors import InvalidArgumentError, NetlistError

logger = logging.getLogger(__name__)

PUMP_GRID_MW = tuple(float(p) for p in np.linspace(10.0, 170.0, 18))

# Уровни совместных шумов EPR-эксперимента относительно некоррелированного уровня
TARGET_TERM_X_DB = -1.44
TARGET_TERM_P_DB = -1.49

BISECTION_BOUNDS = (1e-6, 1.0)
BISECTION_ITERATIONS = 100
BISECTION_XTOL = 1e-15
CALIBRATION_PASSES = 8
CALIBRATION_TOL_DB = 1e-9

SQUEEZING_COLUMNS = ('pump_mw', 'x', 'squeezing_db', 'antisqueezing_db')
# объявления, которые нужны своей схеме для воспроизведения: имя -> вид
SQUEEZING_NAMES = {'sq1': 'opo', 'hd': 'homodyne'}
EPR_NAMES = {'eff1': 'loss', 'eff2': 'loss', 'hd1': 'homodyne', 'hd2': 'homodyne',
             'epr': 'joint'}
EPR_COLUMNS = ('hd1_x_db', 'hd1_p_db', 'hd2_x_db', 'hd2_p_db', 'term_x', 'term_p',
               'term_x_db', 'term_p_db', 'delta_sq', 'verdict', 'margin', 'eff1', 'eff2')

Overrides = Sequence[Tuple[str, float]]


def require_declarations(netlist: Netlist, command: str, names: Dict[str, str]):
    for name, kind in names.items():
        decl = netlist.find(name)
        if decl is None or decl.kind != kind:
            raise NetlistError(f"{command} needs a {kind} declaration named {name!r}")


def squeezing_curve(parameters: Optional[RunParameters] = None,
                    pumps_mw: Sequence[float] = PUMP_GRID_MW,
                    overrides: Overrides = (),
                    base: Optional[Netlist] = None) -> List[Dict[str, float]]:
    """
    Схема (a) на сетке накачек; уровни при LO, зафиксированном
    на сжатой (angle_deg источника) и антисжатой квадратурах.

    base: своя схема с источником sq1 и детектором hd вместо встроенной.
    """
    parameters = parameters or lab_parameters()
    opo, chain = parameters
    if base is not None:
        require_declarations(base, 'repro-squeezing', SQUEEZING_NAMES)
    rows = []
    for pump_mw in pumps_mw:
        if base is None:
            netlist = preset_fig1a(pump_mw * MW, chain, opo)
        else:
            netlist = base.with_parameter('sources.sq1.pump_mw', pump_mw)
        netlist = apply_overrides(netlist, overrides)
        result = evaluate(netlist)
        source = netlist.find('sq1').params
        # LO на оси сжатия источника (с учетом переопределений angle_deg)
        detector = result.detectors['hd'].with_lo_phase(math.radians(source['angle_deg']))
        squeezed, antisqueezed = locked_levels(result.final_state, detector, 'hd')
        rows.append({
            'pump_mw': float(pump_mw),
            'x': normalized_pump(pump_mw * MW, source['threshold_mw'] * MW),
            'squeezing_db': squeezed.db,
            'antisqueezing_db': antisqueezed.db,
        })
    logger.info(f"Squeezing curve: {len(rows)} pump points")
    return rows


def bisect_efficiency(level_db: Callable[[float], float], target_db: float,
                      bounds: Tuple[float, float] = BISECTION_BOUNDS,
                      iterations: int = BISECTION_ITERATIONS) -> float:
    """
    Эффективность, при которой level_db(eta) = target_db.
    level_db должен убывать с ростом eta (больше эффективность, сильнее корреляции).
    """
    low, high = bounds
    if level_db(high) > target_db or level_db(low) < target_db:
        raise InvalidArgumentError(
            f"target {target_db} dB is outside the reachable range "
            f"[{level_db(high):.3f}, {level_db(low):.3f}] dB"
        )
    return bisect(lambda eta: level_db(eta) - target_db, low, high,
                  xtol=BISECTION_XTOL, maxiter=iterations)


@dataclass
class EprCalibration:
    eff1: float
    eff2: float
    result: EvaluationResult
    passes: int


class EprExperiment:
    """
    Схема (b) с двумя свободными эффективностями eff1/eff2 на путях SL1/SL2.
    base: своя схема с loss eff1/eff2, гомодинами hd1/hd2 и joint epr.
    """

    def __init__(self, parameters: Optional[RunParameters] = None, overrides: Overrides = (),
                 base: Optional[Netlist] = None):
        self.parameters = parameters or lab_parameters()
        self.overrides = list(overrides)
        if base is not None:
            require_declarations(base, 'repro-epr', EPR_NAMES)
        self.base = base

    def evaluate(self, eff1: float, eff2: float) -> EvaluationResult:
        if self.base is None:
            opo, chain = self.parameters
            netlist = preset_fig1b(path_etas=(eff1, eff2), chains=(chain, chain), opo=opo)
        else:
            netlist = (self.base.with_parameter('elements.eff1.eta', eff1)
                       .with_parameter('elements.eff2.eta', eff2))
        return evaluate(apply_overrides(netlist, self.overrides))

    def term_levels(self, eff1: float, eff2: float) -> Tuple[float, float]:
        correlation = self.evaluate(eff1, eff2).correlations['epr']
        return (sum_diff_noise_db(correlation.term_x, KIND_DIFFERENCE),
                sum_diff_noise_db(correlation.term_p, KIND_SUM))

    def calibrate(self, target_x_db: float = TARGET_TERM_X_DB,
                  target_p_db: float = TARGET_TERM_P_DB) -> EprCalibration:
        """
        Поочередная бисекция: term_x зависит в основном от пути SL1, term_p от SL2;
        слабую связь через отвод BS3 снимают повторные проходы.
        """
        eff1 = eff2 = BISECTION_BOUNDS[1]
        for passes in range(1, CALIBRATION_PASSES + 1):
            eff1 = bisect_efficiency(lambda e: self.term_levels(e, eff2)[0], target_x_db)
            eff2 = bisect_efficiency(lambda e: self.term_levels(eff1, e)[1], target_p_db)
            db_x, db_p = self.term_levels(eff1, eff2)
            logger.info(f"Calibration pass {passes}: eff1={eff1:.9f} eff2={eff2:.9f} "
                        f"term_x={db_x:.6f} dB term_p={db_p:.6f} dB")
            if abs(db_x - target_x_db) < CALIBRATION_TOL_DB and abs(db_p - target_p_db) < CALIBRATION_TOL_DB:
                break
        return EprCalibration(eff1, eff2, self.evaluate(eff1, eff2), passes)


def epr_row(calibration: EprCalibration) -> Dict[str, object]:
    """Строка отчета: шумы плеч, совместные слагаемые, Δ² и вердикт"""
    result = calibration.result
    correlation = result.correlations['epr']
    verdict = inseparability_check(correlation.delta_sq)
    row: Dict[str, object] = {}
    for name in ('hd1', 'hd2'):
        x_db, p_db = arm_noise_levels(result.final_state, result.detectors[name])
        row[f"{name}_x_db"] = x_db
        row[f"{name}_p_db"] = p_db
    row.update({
        'term_x': correlation.term_x,
        'term_p': correlation.term_p,
        'term_x_db': sum_diff_noise_db(correlation.term_x, KIND_DIFFERENCE),
        'term_p_db': sum_diff_noise_db(correlation.term_p, KIND_SUM),
        'delta_sq': correlation.delta_sq,
        'verdict': verdict.verdict,
        'margin': verdict.margin,
        'eff1': calibration.eff1,
        'eff2': calibration.eff2,
    })
    return row


def reproduce_epr(parameters: Optional[RunParameters] = None, overrides: Overrides = (),
                  base: Optional[Netlist] = None) -> List[Dict[str, object]]:
    calibration = EprExperiment(parameters, overrides, base).calibrate()
    row = epr_row(calibration)
    logger.info(f"EPR reproduction: delta_sq={row['delta_sq']:.6f} ({row['verdict']}) "
                f"after {calibration.passes} pass(es)")
    return [row]
