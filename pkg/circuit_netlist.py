"""
Текстовое описание схемы фотонного чипа: разбор, каноническая сериализация и проверка

Грамматика (построчно, комментарии через '#'):
    source <name> opo pump_mw= threshold_mw= t_oc= [l0=] [bliira_per_w=] fwhm_mhz= sideband_mhz= [angle_deg=]
    source <name> coherent power_mw=
    source <name> vacuum
    bs <name> in=<a>,<b> (ratio= | mzi_phase_deg=)      выходы <name>.0 и <name>.1
    loss <name> in=<a> eta=
    fiber <name> in=<a> [eta=]
    phase <name> in=<a> phase_deg=
    homodyne <name> signal=<a> lo=<lo> [lo_phase_deg=<num|scan>] [eta_pd=] [visibility=]
             [phase_fluct_deg=] [clearance_db=<num|none>]
    joint <name> a=<hd1> b=<hd2> mode=diff_x_sum_p
"""
import copy
import math
import re
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import networkx as nx

from measurement import HomodyneDetector
from opo_model import OpoParams
from simulation_errors import (
    CycleError,
    DuplicateNameError,
    DuplicateWireError,
    InvalidArgumentError,
    NetlistError,
    NetlistSyntaxError,
    ParameterPathError,
    UnknownReferenceError,
    UnwiredInputError,
)

logger = logging.getLogger(__name__)

SOURCE_KINDS = ('opo', 'coherent', 'vacuum')
ELEMENT_KINDS = ('bs', 'loss', 'fiber', 'phase')
DETECTOR_KINDS = ('homodyne', 'joint')
KEYWORDS = ('source',) + ELEMENT_KINDS + DETECTOR_KINDS

JOINT_MODES = ('diff_x_sum_p',)
SCAN = 'scan'

# Типы значений ключей
NUMBER = 'number'
PORTS = 'ports'
REF = 'ref'
NUMBER_OR_SCAN = 'number_or_scan'
NUMBER_OR_NONE = 'number_or_none'
CHOICE = 'choice'

NUMERIC_TYPES = (NUMBER, NUMBER_OR_SCAN, NUMBER_OR_NONE)

_NUMBER_RE = re.compile(r'^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$')
_SUFFIXED_RE = re.compile(r'^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?([A-Za-z%]+)$')
_NAME_RE = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*$')
_PORT_RE = re.compile(r'^([A-Za-z_][A-Za-z0-9_]*)(?:\.(\d+))?$')


@dataclass(frozen=True)
class KeySchema:
    """Допустимые ключи одного вида объявления"""
    keys: Dict[str, str]
    required: Tuple[str, ...] = ()
    defaults: Dict[str, Any] = field(default_factory=dict)
    exclusive: Tuple[str, ...] = ()
    arity: int = 0


SCHEMAS: Dict[str, KeySchema] = {
    'opo': KeySchema(
        keys={'pump_mw': NUMBER, 'threshold_mw': NUMBER, 't_oc': NUMBER, 'l0': NUMBER,
              'bliira_per_w': NUMBER, 'fwhm_mhz': NUMBER, 'sideband_mhz': NUMBER,
              'angle_deg': NUMBER},
        required=('pump_mw', 'threshold_mw', 't_oc', 'fwhm_mhz', 'sideband_mhz'),
        defaults={'l0': 0.0, 'bliira_per_w': 0.0, 'angle_deg': 0.0},
    ),
    'coherent': KeySchema(keys={'power_mw': NUMBER}, required=('power_mw',)),
    'vacuum': KeySchema(keys={}),
    'bs': KeySchema(keys={'in': PORTS, 'ratio': NUMBER, 'mzi_phase_deg': NUMBER},
                    exclusive=('ratio', 'mzi_phase_deg'), arity=2),
    'loss': KeySchema(keys={'in': PORTS, 'eta': NUMBER}, required=('eta',), arity=1),
    'fiber': KeySchema(keys={'in': PORTS, 'eta': NUMBER}, defaults={'eta': 1.0}, arity=1),
    'phase': KeySchema(keys={'in': PORTS, 'phase_deg': NUMBER}, required=('phase_deg',), arity=1),
    'homodyne': KeySchema(
        keys={'signal': REF, 'lo': REF, 'lo_phase_deg': NUMBER_OR_SCAN, 'eta_pd': NUMBER,
              'visibility': NUMBER, 'phase_fluct_deg': NUMBER, 'clearance_db': NUMBER_OR_NONE},
        required=('signal', 'lo'),
        defaults={'lo_phase_deg': 0.0, 'eta_pd': 1.0, 'visibility': 1.0,
                  'phase_fluct_deg': 0.0, 'clearance_db': None},
    ),
    'joint': KeySchema(keys={'a': REF, 'b': REF, 'mode': CHOICE}, required=('a', 'b'),
                       defaults={'mode': 'diff_x_sum_p'}),
}


@dataclass
class Declaration:
    """Одна строка описания: источник, элемент или детектор"""
    keyword: str
    name: str
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    line_no: int = field(default=0, compare=False)
    line_text: str = field(default='', compare=False)

    @property
    def inputs(self) -> List[str]:
        return list(self.params.get('in', []))

    @property
    def output_count(self) -> int:
        if self.keyword == 'source':
            return 1
        return 2 if self.kind == 'bs' else 1

    def fail(self, error_cls, message: str, **kwargs):
        raise error_cls(message, line_no=self.line_no or None,
                        line_text=self.line_text or None, **kwargs)


@dataclass
class Netlist:
    """Разобранное описание схемы"""
    sources: List[Declaration] = field(default_factory=list)
    elements: List[Declaration] = field(default_factory=list)
    detectors: List[Declaration] = field(default_factory=list)

    def all_declarations(self) -> List[Declaration]:
        return self.sources + self.elements + self.detectors

    def find(self, name: str) -> Optional[Declaration]:
        for decl in self.all_declarations():
            if decl.name == name:
                return decl
        return None

    @property
    def wires(self) -> Dict[str, str]:
        """Входной порт потребителя ('<имя>:<i>') -> порт производителя"""
        wires = {}
        for element in self.elements:
            for i, port in enumerate(element.inputs):
                wires[f"{element.name}:{i}"] = port
        for detector in self.detectors:
            if detector.kind == 'homodyne':
                wires[f"{detector.name}:signal"] = detector.params['signal']
                wires[f"{detector.name}:lo"] = detector.params['lo']
        return wires

    def with_parameter(self, path: str, value: float) -> 'Netlist':
        """Копия схемы с измененным числовым параметром 'sources.sq1.pump_mw'"""
        parts = path.split('.')
        if len(parts) != 3 or parts[0] not in ('sources', 'elements', 'detectors'):
            raise ParameterPathError(f"parameter path must look like 'sources.<name>.<key>', got {path!r}")
        section, name, key = parts
        updated = copy.deepcopy(self)
        target = next((d for d in getattr(updated, section) if d.name == name), None)
        if target is None:
            raise ParameterPathError(f"no {section[:-1]} named {name!r} for path {path!r}")
        schema = SCHEMAS[target.kind]
        if key not in schema.keys:
            raise ParameterPathError(f"{target.kind} {name!r} has no parameter {key!r}")
        if schema.keys[key] not in NUMERIC_TYPES:
            raise ParameterPathError(f"parameter {path!r} is not numeric")
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ParameterPathError(f"value for {path!r} must be a finite number, got {value!r}")
        if key in schema.exclusive:
            for other in schema.exclusive:
                target.params.pop(other, None)
        target.params[key] = float(value)
        return updated


def mzi_reflectivity(mzi_phase: float) -> float:
    """Отражение MZI из двух 50:50 ответвителей с внутренней фазой φ: sin²(φ/2)"""
    return math.sin(mzi_phase / 2.0) ** 2


def mzi_phase_for_ratio(ratio: float) -> float:
    """Обратное отображение: φ = 2·arcsin(√R)"""
    if not 0 <= ratio <= 1:
        raise NetlistError(f"splitting ratio must lie in [0, 1], got {ratio}")
    return 2.0 * math.asin(math.sqrt(ratio))


def beam_splitter_ratio(decl: Declaration) -> float:
    """Коэффициент отражения элемента bs"""
    if 'mzi_phase_deg' in decl.params:
        return mzi_reflectivity(math.radians(decl.params['mzi_phase_deg']))
    return decl.params['ratio']


def homodyne_detector(decl: Declaration, mode: int) -> HomodyneDetector:
    params = decl.params
    lo_phase = params['lo_phase_deg']
    return HomodyneDetector(
        mode=mode,
        lo_phase=0.0 if lo_phase == SCAN else math.radians(lo_phase),
        visibility=params['visibility'],
        eta_pd=params['eta_pd'],
        phase_fluct=math.radians(params['phase_fluct_deg']),
        clearance_db=params['clearance_db'],
    )


def _check_ranges(decl: Declaration):
    """Физические диапазоны параметров; порог накачки проверяет модель OPO"""
    params = decl.params
    try:
        if decl.kind == 'opo':
            OpoParams.from_units(**params)
        elif decl.kind == 'coherent' and params['power_mw'] < 0:
            raise InvalidArgumentError(f"LO power must be >= 0, got {params['power_mw']}")
        elif decl.kind == 'homodyne':
            homodyne_detector(decl, 0)
        elif params.get('ratio') is not None and not 0 <= params['ratio'] <= 1:
            raise InvalidArgumentError(f"ratio must lie in [0, 1], got {params['ratio']}")
        elif params.get('eta') is not None and not 0 <= params['eta'] <= 1:
            raise InvalidArgumentError(f"eta must lie in [0, 1], got {params['eta']}")
    except InvalidArgumentError as e:
        decl.fail(NetlistError, f"{decl.kind} {decl.name!r}: {e}")


def split_port(port: str) -> Tuple[str, int]:
    match = _PORT_RE.match(port)
    if not match:
        raise NetlistSyntaxError(f"malformed port reference {port!r}")
    return match.group(1), int(match.group(2) or 0)


# ------------------------------------------------------------
# Разбор
# ------------------------------------------------------------

def _parse_number(token: str, key: str, line_no: int, column: int, line: str) -> float:
    if _NUMBER_RE.match(token):
        return float(token)
    suffixed = _SUFFIXED_RE.match(token)
    if suffixed:
        raise NetlistSyntaxError(f"unknown unit suffix {suffixed.group(3)!r} for {key}; "
                                 f"units are implied by the key name",
                                 line_no=line_no, column=column, line_text=line)
    raise NetlistSyntaxError(f"{key} expects a number, got {token!r}",
                             line_no=line_no, column=column, line_text=line)


def _parse_value(kind: str, key: str, value_type: str, token: str,
                 line_no: int, column: int, line: str):
    if value_type == NUMBER:
        return _parse_number(token, key, line_no, column, line)
    if value_type == NUMBER_OR_SCAN:
        return SCAN if token == SCAN else _parse_number(token, key, line_no, column, line)
    if value_type == NUMBER_OR_NONE:
        return None if token == 'none' else _parse_number(token, key, line_no, column, line)
    if value_type == CHOICE:
        if token not in JOINT_MODES:
            raise NetlistSyntaxError(f"unknown {key} {token!r}, expected one of {JOINT_MODES}",
                                     line_no=line_no, column=column, line_text=line)
        return token
    if value_type == PORTS:
        ports = token.split(',')
        for port in ports:
            if not _PORT_RE.match(port):
                raise NetlistSyntaxError(f"malformed port reference {port!r}",
                                         line_no=line_no, column=column, line_text=line)
        return ports
    # REF
    if not _PORT_RE.match(token):
        raise NetlistSyntaxError(f"malformed reference {token!r}",
                                 line_no=line_no, column=column, line_text=line)
    return token


def _parse_line(line: str, line_no: int) -> Optional[Declaration]:
    content = line.split('#', 1)[0]
    tokens = [(m.group(0), m.start() + 1) for m in re.finditer(r'\S+', content)]
    if not tokens:
        return None

    keyword, kw_col = tokens[0]
    if keyword not in KEYWORDS:
        raise NetlistSyntaxError(f"unknown keyword {keyword!r}", line_no=line_no,
                                 column=kw_col, line_text=line)
    if len(tokens) < 2:
        raise NetlistSyntaxError(f"{keyword} declaration needs a name", line_no=line_no,
                                 column=len(content.rstrip()) + 1, line_text=line)

    name, name_col = tokens[1]
    if not _NAME_RE.match(name):
        raise NetlistSyntaxError(f"invalid name {name!r}", line_no=line_no,
                                 column=name_col, line_text=line)

    rest = tokens[2:]
    if keyword == 'source':
        if not rest:
            raise NetlistSyntaxError(f"source {name!r} needs a kind ({', '.join(SOURCE_KINDS)})",
                                     line_no=line_no, column=len(content.rstrip()) + 1, line_text=line)
        kind, kind_col = rest[0]
        if kind not in SOURCE_KINDS:
            raise NetlistSyntaxError(f"unknown source kind {kind!r}", line_no=line_no,
                                     column=kind_col, line_text=line)
        rest = rest[1:]
    else:
        kind = keyword

    schema = SCHEMAS[kind]
    params: Dict[str, Any] = {}
    for token, col in rest:
        if token.count('=') != 1 or token.startswith('=') or token.endswith('='):
            raise NetlistSyntaxError(f"malformed key=value pair {token!r}", line_no=line_no,
                                     column=col, line_text=line)
        key, value = token.split('=')
        if key not in schema.keys:
            raise NetlistSyntaxError(f"unknown key {key!r} for {kind}", line_no=line_no,
                                     column=col, line_text=line)
        if key in params:
            raise NetlistSyntaxError(f"key {key!r} given twice", line_no=line_no,
                                     column=col, line_text=line)
        value_col = col + len(key) + 1
        params[key] = _parse_value(kind, key, schema.keys[key], value, line_no, value_col, line)

        if key == 'in':
            ports = params[key]
            if len(ports) > schema.arity:
                raise NetlistSyntaxError(f"{kind} takes {schema.arity} input(s), got {len(ports)}",
                                         line_no=line_no, column=value_col, line_text=line)
            if len(set(ports)) != len(ports):
                raise DuplicateWireError(f"port wired twice in {token!r}", line_no=line_no,
                                         column=value_col, line_text=line)

    for key in schema.required:
        if key not in params:
            raise NetlistSyntaxError(f"{kind} {name!r} is missing required key {key!r}",
                                     line_no=line_no, line_text=line)
    if schema.exclusive:
        given = [k for k in schema.exclusive if k in params]
        if len(given) != 1:
            raise NetlistSyntaxError(
                f"{kind} {name!r} needs exactly one of {', '.join(schema.exclusive)}",
                line_no=line_no, line_text=line)
    for key, default in schema.defaults.items():
        params.setdefault(key, default)
    if schema.arity:
        params.setdefault('in', [])

    return Declaration(keyword, name, kind, params, line_no, line.rstrip('\n'))


def _name_column(line: str) -> int:
    match = re.match(r"\s*\S+\s+", line)
    return match.end() + 1 if match else 1


def parse_netlist(text: str) -> Netlist:
    """Построчный разбор описания схемы (до проверки связности)"""
    netlist = Netlist()
    seen: Dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        decl = _parse_line(line, line_no)
        if decl is None:
            continue
        if decl.name in seen:
            raise DuplicateNameError(f"name {decl.name!r} already declared on line {seen[decl.name]}",
                                     line_no=line_no, column=_name_column(line), line_text=line)
        seen[decl.name] = line_no
        if decl.keyword == 'source':
            netlist.sources.append(decl)
        elif decl.keyword in ELEMENT_KINDS:
            netlist.elements.append(decl)
        else:
            netlist.detectors.append(decl)

    logger.info(f"Parsed netlist: {len(netlist.sources)} sources, "
                f"{len(netlist.elements)} elements, {len(netlist.detectors)} detectors")
    return netlist


# ------------------------------------------------------------
# Каноническая сериализация
# ------------------------------------------------------------

def format_number(value: float) -> str:
    """Кратчайшая точная запись числа; целые без дробной части"""
    value = float(value) + 0.0
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _format_value(value_type: str, value: Any) -> str:
    if value_type == PORTS:
        return ','.join(value)
    if value_type in (REF, CHOICE):
        return value
    if value is None:
        return 'none'
    if value == SCAN:
        return SCAN
    return format_number(value)


def serialize_declaration(decl: Declaration) -> str:
    schema = SCHEMAS[decl.kind]
    head = [decl.keyword, decl.name] + ([decl.kind] if decl.keyword == 'source' else [])
    pairs = [f"{key}={_format_value(schema.keys[key], decl.params[key])}" for key in sorted(decl.params)]
    return ' '.join(head + pairs)


def serialize_netlist(netlist: Netlist) -> str:
    """Каноническая форма: источники, элементы, детекторы; ключи по алфавиту"""
    lines = ['# sources']
    lines += [serialize_declaration(d) for d in netlist.sources]
    lines.append('# elements')
    lines += [serialize_declaration(d) for d in netlist.elements]
    lines.append('# detectors')
    lines += [serialize_declaration(d) for d in netlist.detectors]
    return '\n'.join(lines) + '\n'


# ------------------------------------------------------------
# Проверка связности
# ------------------------------------------------------------

def collapsed_lo_splitters(netlist: Netlist) -> Dict[str, str]:
    """
    bs, поглощенные гомодинными детекторами: имя bs -> имя детектора.
    LO классический, смешивание с ним входит в модель детектора.
    """
    collapsed = {}
    for det in netlist.detectors:
        if det.kind != 'homodyne':
            continue
        target = netlist.find(det.params['signal'])
        if target is not None and target.kind == 'bs' and '.' not in det.params['signal']:
            collapsed[target.name] = det.name
    return collapsed


def signal_port(netlist: Netlist, det: Declaration) -> str:
    """Порт, который читает гомодинный детектор (с учетом поглощенного bs)"""
    signal = det.params['signal']
    target = netlist.find(signal)
    if target is not None and target.kind == 'bs' and '.' not in signal:
        lo = det.params['lo']
        canonical = [split_port(p) for p in target.inputs]
        lo_port = split_port(lo)
        if lo_port not in canonical:
            det.fail(UnknownReferenceError,
                     f"signal {signal!r} is a beam splitter without LO {lo!r} among its inputs")
        others = [p for p, c in zip(target.inputs, canonical) if c != lo_port]
        return others[0]
    return signal


def _resolve(netlist: Netlist, port: str, consumer: Declaration) -> Tuple[str, int]:
    name, index = split_port(port)
    producer = netlist.find(name)
    if producer is None or producer.keyword not in ('source',) + ELEMENT_KINDS:
        consumer.fail(UnknownReferenceError, f"{consumer.name!r} references undeclared port {port!r}")
    if index >= producer.output_count:
        consumer.fail(UnknownReferenceError,
                      f"{consumer.name!r} references output {index} of {name!r}, "
                      f"which has {producer.output_count} output(s)")
    return name, index


def find_dangling_outputs(netlist: Netlist) -> List[str]:
    """Выходы, которые никто не потребляет (предупреждение, не ошибка)"""
    consumed = set()
    collapsed = collapsed_lo_splitters(netlist)
    for element in netlist.elements:
        for port in element.inputs:
            consumed.add(split_port(port))
    for det in netlist.detectors:
        if det.kind == 'homodyne':
            consumed.add(split_port(det.params['signal']))
    for name in collapsed:
        consumed.update({(name, 0), (name, 1)})

    dangling = []
    for decl in netlist.sources + netlist.elements:
        if decl.kind == 'coherent':
            # LO используется как опорная фаза детектора
            continue
        for i in range(decl.output_count):
            if (decl.name, i) not in consumed:
                dangling.append(decl.name if decl.output_count == 1 else f"{decl.name}.{i}")
    return dangling


def validate(netlist: Netlist) -> List[str]:
    """
    Проверка связности и ацикличности.
    Возвращает порядок вычисления элементов (топологический, при равенстве по имени).
    """
    graph = nx.DiGraph()
    for decl in netlist.sources + netlist.elements:
        graph.add_node(decl.name)

    consumers: Dict[Tuple[str, int], Declaration] = {}

    def consume(port_id: Tuple[str, int], consumer: Declaration, port: str):
        if port_id in consumers:
            consumer.fail(DuplicateWireError,
                          f"port {port!r} is already consumed by {consumers[port_id].name!r}")
        consumers[port_id] = consumer

    collapsed = collapsed_lo_splitters(netlist)

    for source in netlist.sources:
        _check_ranges(source)

    for element in netlist.elements:
        arity = SCHEMAS[element.kind].arity
        if len(element.inputs) < arity:
            element.fail(UnwiredInputError,
                         f"{element.kind} {element.name!r} input {len(element.inputs)} is not wired")
        _check_ranges(element)
        for port in element.inputs:
            port_id = _resolve(netlist, port, element)
            if port_id[0] in collapsed:
                element.fail(DuplicateWireError,
                             f"{port!r} belongs to {port_id[0]!r}, which feeds detector {collapsed[port_id[0]]!r}")
            consume(port_id, element, port)
            graph.add_edge(port_id[0], element.name)

    homodynes = {}
    for det in netlist.detectors:
        if det.kind == 'homodyne':
            _check_ranges(det)
            lo = netlist.find(det.params['lo'])
            if lo is None or lo.kind != 'coherent':
                det.fail(UnknownReferenceError, f"LO {det.params['lo']!r} is not a coherent source")
            signal = det.params['signal']
            if signal in collapsed and collapsed[signal] != det.name:
                det.fail(DuplicateWireError, f"beam splitter {signal!r} already feeds {collapsed[signal]!r}")
            port = signal_port(netlist, det)
            port_id = _resolve(netlist, port, det)
            if signal not in collapsed:
                consume(port_id, det, port)
            homodynes[det.name] = det
        else:
            a, b = det.params['a'], det.params['b']
            for ref in (a, b):
                if ref not in homodynes:
                    det.fail(UnknownReferenceError, f"joint {det.name!r} references unknown homodyne {ref!r}")
                if homodynes[ref].params['lo_phase_deg'] == SCAN:
                    det.fail(NetlistError, f"joint {det.name!r} needs a fixed LO phase on {ref!r}")
            if a == b:
                det.fail(DuplicateWireError, f"joint {det.name!r} uses homodyne {a!r} twice")

    # потребители внутри поглощенного bs: сам bs проверен как элемент выше
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        names = [edge[0] for edge in cycle]
        first = netlist.find(names[0])
        raise CycleError(f"cycle detected: {' -> '.join(names + [names[0]])}", names,
                         line_no=first.line_no or None, line_text=first.line_text or None)

    for port in find_dangling_outputs(netlist):
        logger.warning(f"Output {port!r} is not consumed by anything")

    element_names = {e.name for e in netlist.elements}
    order = [n for n in nx.lexicographical_topological_sort(graph) if n in element_names]
    logger.info(f"Validated netlist, evaluation order: {order}")
    return order
