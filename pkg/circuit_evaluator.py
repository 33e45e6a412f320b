"""
Вычисление схемы: источники -> элементы в топологическом порядке -> детекторы
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from circuit_netlist import (
    SCAN,
    Declaration,
    Netlist,
    beam_splitter_ratio,
    collapsed_lo_splitters,
    homodyne_detector,
    signal_port,
    split_port,
    validate,
)
from gaussian_core import (
    GaussianState,
    beam_splitter,
    displace,
    loss_channel,
    rotate,
    tensor_product,
    vacuum,
)
from measurement import (
    CorrelationResult,
    HomodyneDetector,
    MeasurementRecord,
    ScanSummary,
    correlation_records,
    correlation_variance,
    homodyne_variance,
    lo_phase_scan,
)
from opo_model import OpoParams, opo_source_state
from simulation_errors import ParameterPathError

logger = logging.getLogger(__name__)

SCAN_POINTS = 360


@dataclass
class EvaluationResult:
    """Итог вычисления схемы; final_state содержит только моды детекторов"""
    final_state: GaussianState
    records: List[MeasurementRecord] = field(default_factory=list)
    mode_map: Dict[str, int] = field(default_factory=dict)
    correlations: Dict[str, CorrelationResult] = field(default_factory=dict)
    scans: Dict[str, ScanSummary] = field(default_factory=dict)
    detectors: Dict[str, HomodyneDetector] = field(default_factory=dict)

    def single_records(self) -> List[MeasurementRecord]:
        return [r for r in self.records if r.kind == 'single']


def source_state(decl: Declaration) -> GaussianState:
    """Одномодовое состояние источника"""
    if decl.kind == 'opo':
        return opo_source_state(OpoParams.from_units(**decl.params))
    if decl.kind == 'coherent':
        # LO несет только среднее, шум вакуумный
        return displace(vacuum(1), 0, math.sqrt(decl.params['power_mw']) / 2.0)
    return vacuum(1)


def _apply_element(state: GaussianState, element: Declaration,
                   ports: Dict[Tuple[str, int], int]) -> GaussianState:
    modes = [ports[split_port(p)] for p in element.inputs]
    if element.kind == 'bs':
        a, b = modes
        state = beam_splitter(state, a, b, 1.0 - beam_splitter_ratio(element))
        ports[(element.name, 0)] = a
        ports[(element.name, 1)] = b
        return state

    mode = modes[0]
    if element.kind == 'phase':
        state = rotate(state, mode, math.radians(element.params['phase_deg']))
    else:
        state = loss_channel(state, mode, element.params['eta'])
    ports[(element.name, 0)] = mode
    return state


def evaluate(netlist: Netlist, order: Optional[Sequence[str]] = None,
             scan_points: int = SCAN_POINTS) -> EvaluationResult:
    """
    Каждый источник занимает одну моду в порядке объявления.
    bs, поглощенные детекторами вместе с LO, не вычисляются.
    """
    if order is None:
        order = validate(netlist)

    state = tensor_product(*[source_state(s) for s in netlist.sources])
    ports: Dict[Tuple[str, int], int] = {(s.name, 0): i for i, s in enumerate(netlist.sources)}

    collapsed = collapsed_lo_splitters(netlist)
    for name in order:
        if name in collapsed:
            continue
        state = _apply_element(state, netlist.find(name), ports)

    detectors: Dict[str, HomodyneDetector] = {}
    for decl in netlist.detectors:
        if decl.kind == 'homodyne':
            mode = ports[split_port(signal_port(netlist, decl))]
            detectors[decl.name] = homodyne_detector(decl, mode)

    result = EvaluationResult(final_state=state)
    for decl in netlist.detectors:
        if decl.kind == 'homodyne':
            det = detectors[decl.name]
            if decl.params['lo_phase_deg'] == SCAN:
                summary = lo_phase_scan(state, det, scan_points, decl.name)
                result.scans[decl.name] = summary
                result.records.extend(summary.records)
            else:
                result.records.append(homodyne_variance(state, det, decl.name))
        else:
            det1, det2 = detectors[decl.params['a']], detectors[decl.params['b']]
            correlation = correlation_variance(state, det1, det2)
            result.correlations[decl.name] = correlation
            result.records.extend(correlation_records(correlation, decl.name, det1))

    if detectors:
        modes = [det.mode for det in detectors.values()]
        result.final_state = state.reduced(modes)
        result.mode_map = {name: i for i, name in enumerate(detectors)}
        result.detectors = {name: det.with_mode(result.mode_map[name])
                            for name, det in detectors.items()}

    logger.info(f"Evaluated {len(order)} elements, {len(result.records)} records")
    return result


def parse_assignment(text: str) -> Tuple[str, float]:
    """'sources.sq1.pump_mw=120' -> ('sources.sq1.pump_mw', 120.0)"""
    path, sep, value = text.partition('=')
    if not sep or not path:
        raise ParameterPathError(f"override must look like path=value, got {text!r}")
    try:
        number = float(value)
    except ValueError:
        raise ParameterPathError(f"override value for {path!r} is not a number: {value!r}")
    return path.strip(), number


def apply_overrides(netlist: Netlist, overrides: Iterable[Tuple[str, float]]) -> Netlist:
    """Переопределения применяются по порядку, последнее побеждает"""
    for path, value in overrides:
        netlist = netlist.with_parameter(path, value)
        logger.info(f"Override {path} = {value}")
    return netlist
