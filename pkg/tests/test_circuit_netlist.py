"""
Тесты разбора, канонической записи и проверки описаний схем
"""
import logging
import math

import numpy as np
import pytest

from circuit_netlist import (
    SCAN,
    beam_splitter_ratio,
    find_dangling_outputs,
    format_number,
    mzi_phase_for_ratio,
    mzi_reflectivity,
    parse_netlist,
    serialize_netlist,
    validate,
)
from presets import preset_fig1a, preset_fig1b, preset_path
from simulation_errors import (
    AboveThresholdError,
    CycleError,
    DuplicateNameError,
    DuplicateWireError,
    NetlistError,
    NetlistSyntaxError,
    ParameterPathError,
    UnknownReferenceError,
    UnwiredInputError,
)

OPO = ("source sq opo pump_mw=100 threshold_mw=179 t_oc=0.113 "
       "fwhm_mhz=11.8 sideband_mhz=1.5")


def golden(name):
    return preset_path(name).read_bytes().decode('utf-8')


@pytest.mark.parametrize('name', ['fig1a', 'fig1b'])
def test_golden_round_trip(name):
    text = golden(name)
    assert serialize_netlist(parse_netlist(text)) == text


def test_presets_match_golden_files():
    assert serialize_netlist(preset_fig1a()) == golden('fig1a')
    assert serialize_netlist(preset_fig1b()) == golden('fig1b')
    assert parse_netlist(golden('fig1a')) == preset_fig1a()
    assert parse_netlist(golden('fig1b')) == preset_fig1b()


def test_parse_defaults_and_comments():
    text = "\n".join([
        "# two vacua and a splitter",
        "",
        "source a vacuum   # left",
        "source b vacuum",
        "source lo coherent power_mw=3.5",
        "bs mix in=a,b mzi_phase_deg=90",
        "fiber f in=mix.1",
        "homodyne hd signal=mix.0 lo=lo",
    ])
    netlist = parse_netlist(text)
    assert [s.name for s in netlist.sources] == ['a', 'b', 'lo']
    fiber = netlist.find('f')
    assert fiber.params == {'in': ['mix.1'], 'eta': 1.0}
    hd = netlist.find('hd')
    assert hd.params['lo_phase_deg'] == 0.0
    assert hd.params['clearance_db'] is None
    assert hd.line_no == 8
    assert math.isclose(beam_splitter_ratio(netlist.find('mix')), 0.5)

    canonical = serialize_netlist(netlist)
    assert "homodyne hd clearance_db=none eta_pd=1 lo=lo lo_phase_deg=0 phase_fluct_deg=0 " \
           "signal=mix.0 visibility=1" in canonical
    assert serialize_netlist(parse_netlist(canonical)) == canonical


def test_format_number():
    assert format_number(100.0) == '100'
    assert format_number(-0.0) == '0'
    assert format_number(0.00922) == '0.00922'
    assert format_number(1e-7) == '1e-07'
    assert format_number(0.1 + 0.2) == '0.30000000000000004'


def test_mzi_mapping():
    assert mzi_reflectivity(0.0) == 0.0
    assert math.isclose(mzi_reflectivity(math.pi), 1.0)
    assert math.isclose(mzi_reflectivity(math.pi / 2), 0.5)
    for ratio in (0.0, 0.01, 0.5, 0.99, 1.0):
        assert math.isclose(mzi_reflectivity(mzi_phase_for_ratio(ratio)), ratio, abs_tol=1e-12)
    with pytest.raises(NetlistError):
        mzi_phase_for_ratio(1.5)


def test_mzi_reflectivity_is_periodic_and_symmetric():
    for phase in np.linspace(0.0, 2 * math.pi, 37):
        value = mzi_reflectivity(phase)
        assert 0.0 <= value <= 1.0
        assert math.isclose(mzi_reflectivity(phase + 2 * math.pi), value, abs_tol=1e-12)
        assert math.isclose(mzi_reflectivity(phase - 2 * math.pi), value, abs_tol=1e-12)
        # зеркальная симметрия относительно π
        assert math.isclose(mzi_reflectivity(math.pi + phase), mzi_reflectivity(math.pi - phase), abs_tol=1e-12)


MALFORMED = [
    # (описание, класс ошибки, строка)
    ("sorce a vacuum", NetlistSyntaxError, 1),
    ("source", NetlistSyntaxError, 1),
    ("source 1a vacuum", NetlistSyntaxError, 1),
    ("source a", NetlistSyntaxError, 1),
    ("source a laser", NetlistSyntaxError, 1),
    ("source a coherent power_mw", NetlistSyntaxError, 1),
    ("source a coherent power_mw=3.5 colour=3", NetlistSyntaxError, 1),
    ("source a coherent power_mw=1 power_mw=2", NetlistSyntaxError, 1),
    ("source a vacuum\nsource lo coherent power_mw=3.5mW", NetlistSyntaxError, 2),
    ("source a coherent power_mw=abc", NetlistSyntaxError, 1),
    ("source sq opo pump_mw=100 threshold_mw=179 t_oc=0.1 fwhm_mhz=11.8", NetlistSyntaxError, 1),
    ("source a vacuum\nsource b vacuum\nbs m in=a,b ratio=0.5 mzi_phase_deg=90", NetlistSyntaxError, 3),
    ("source a vacuum\nsource b vacuum\nbs m in=a,b", NetlistSyntaxError, 3),
    ("source a vacuum\nsource b vacuum\nloss l in=a,b eta=0.5", NetlistSyntaxError, 3),
    ("source a vacuum\nloss l in=a eta=0.5\njoint j a=l b=l mode=sum", NetlistSyntaxError, 3),
    ("source a vacuum\nsource b vacuum\nbs m in=a,a ratio=0.5", DuplicateWireError, 3),
    ("source a vacuum\nsource a vacuum", DuplicateNameError, 2),
    ("source a vacuum\nloss l eta=0.5", UnwiredInputError, 2),
    ("source a vacuum\nloss l in=ghost eta=0.5", UnknownReferenceError, 2),
    ("source a vacuum\nloss l1 in=a eta=0.5\nloss l2 in=a eta=0.5", DuplicateWireError, 3),
    ("source a vacuum\nloss l in=a eta=1.5", NetlistError, 2),
    ("source a vacuum\nloss l in=a eta=0.5\nloss m in=l.1 eta=0.5", UnknownReferenceError, 3),
    ("source a vacuum\nsource b vacuum\nhomodyne hd signal=a lo=b", UnknownReferenceError, 3),
    ("source a vacuum\nsource lo coherent power_mw=1\nhomodyne hd signal=a lo=lo\njoint j a=hd b=hx",
     UnknownReferenceError, 4),
    ("source a vacuum\nsource b vacuum\nsource lo coherent power_mw=1\n"
     "homodyne h1 signal=a lo=lo lo_phase_deg=scan\nhomodyne h2 signal=b lo=lo\njoint j a=h1 b=h2",
     NetlistError, 6),
    ("source a vacuum\nsource lo coherent power_mw=1\nbs m in=a,lo ratio=0.5\n"
     "loss l in=m.1 eta=0.5\nhomodyne hd signal=m lo=lo", DuplicateWireError, 4),
    # физические диапазоны
    ("source lo coherent power_mw=-1", NetlistError, 1),
    (OPO.replace("t_oc=0.113", "t_oc=1.5"), NetlistError, 1),
    (OPO.replace("fwhm_mhz=11.8", "fwhm_mhz=0"), NetlistError, 1),
    ("source a vacuum\nsource lo coherent power_mw=1\nhomodyne hd signal=a lo=lo eta_pd=1.5",
     NetlistError, 3),
    ("source a vacuum\nsource lo coherent power_mw=1\nhomodyne hd signal=a lo=lo visibility=0",
     NetlistError, 3),
    ("source a vacuum\nsource lo coherent power_mw=1\nhomodyne hd signal=a lo=lo clearance_db=-3",
     NetlistError, 3),
    ("source a vacuum\nsource lo coherent power_mw=1\nhomodyne hd signal=a lo=lo phase_fluct_deg=-1",
     NetlistError, 3),
    ("source a vacuum\nsource b vacuum\nbs m in=a,b ratio=1.2", NetlistError, 3),
]


@pytest.mark.parametrize('text, error_cls, line_no', MALFORMED)
def test_malformed_netlists(text, error_cls, line_no):
    with pytest.raises(NetlistError) as excinfo:
        validate(parse_netlist(text))
    assert excinfo.type is error_cls
    assert excinfo.value.line_no == line_no
    assert str(excinfo.value).startswith(f"line {line_no}")


def test_error_reports_column():
    with pytest.raises(NetlistSyntaxError) as excinfo:
        parse_netlist("source lo coherent power_mw=3.5mW")
    assert excinfo.value.column == 29
    assert "mW" in str(excinfo.value)
    assert str(excinfo.value).endswith("| source lo coherent power_mw=3.5mW")

    with pytest.raises(DuplicateNameError) as excinfo:
        parse_netlist("source s vacuum\nsource  s vacuum")
    assert excinfo.value.column == 9


def test_cycle_is_rejected():
    text = "loss l1 in=l2 eta=0.5\nloss l2 in=l1 eta=0.5"
    with pytest.raises(CycleError) as excinfo:
        validate(parse_netlist(text))
    assert set(excinfo.value.cycle) == {'l1', 'l2'}
    assert excinfo.value.line_no in (1, 2)


def test_evaluation_order():
    assert validate(preset_fig1a()) == ['prop1', 'couple1', 'bs2']
    assert validate(preset_fig1b()) == [
        'prop1', 'eff1', 'prop2', 'eff2', 'theta12', 'bs2', 'bs3', 'fiber1', 'bs1', 'fiber2', 'bs4',
    ]


def test_order_ignores_declaration_order():
    text = golden('fig1b')
    lines = text.splitlines()
    elements = lines[lines.index('# elements') + 1:lines.index('# detectors')]
    shuffled = lines[:lines.index('# elements') + 1] + elements[::-1] + lines[lines.index('# detectors'):]
    assert validate(parse_netlist("\n".join(shuffled))) == validate(parse_netlist(text))


def test_dangling_outputs_warn(caplog):
    assert find_dangling_outputs(preset_fig1a()) == []
    assert find_dangling_outputs(preset_fig1b()) == ['bs3.1']
    with caplog.at_level(logging.WARNING, logger='circuit_netlist'):
        validate(preset_fig1b())
    assert any("bs3.1" in message for message in caplog.messages)


def test_with_parameter():
    netlist = preset_fig1a()
    changed = netlist.with_parameter('sources.sq1.pump_mw', 120)
    assert changed.find('sq1').params['pump_mw'] == 120.0
    assert netlist.find('sq1').params['pump_mw'] == 100.0

    scan_fixed = netlist.with_parameter('detectors.hd.lo_phase_deg', 45)
    assert scan_fixed.find('hd').params['lo_phase_deg'] == 45.0
    assert netlist.find('hd').params['lo_phase_deg'] == SCAN

    mzi = preset_fig1b().with_parameter('elements.bs2.mzi_phase_deg', 90)
    assert 'ratio' not in mzi.find('bs2').params
    assert math.isclose(beam_splitter_ratio(mzi.find('bs2')), 0.5)

    for path in ('sources.sq1', 'things.sq1.pump_mw', 'sources.nope.pump_mw',
                 'sources.sq1.colour', 'elements.prop1.in'):
        with pytest.raises(ParameterPathError):
            netlist.with_parameter(path, 1.0)
    with pytest.raises(ParameterPathError):
        netlist.with_parameter('sources.sq1.pump_mw', float('nan'))


def test_opo_declaration_is_parsed():
    netlist = parse_netlist(OPO)
    params = netlist.find('sq').params
    assert params['l0'] == 0.0
    assert params['bliira_per_w'] == 0.0
    assert params['angle_deg'] == 0.0
    assert validate(netlist) == []


def test_pump_above_threshold_fails_validation():
    with pytest.raises(AboveThresholdError):
        validate(parse_netlist(OPO.replace("pump_mw=100", "pump_mw=179")))


def _num(value) -> str:
    return repr(float(value))


def random_netlist_text(rng) -> str:
    """Случайная корректная схема: OPO и вакуумы через цепочку элементов к гомодинам"""
    threshold = rng.uniform(50.0, 300.0)
    lines = [
        f"source sq opo pump_mw={_num(rng.uniform(0.05, 0.95) * threshold)} threshold_mw={_num(threshold)} "
        f"t_oc={_num(rng.uniform(0.02, 0.2))} l0={_num(rng.uniform(0.0, 0.01))} "
        f"fwhm_mhz={_num(rng.uniform(5.0, 30.0))} sideband_mhz={_num(rng.uniform(0.0, 5.0))} "
        f"angle_deg={_num(rng.uniform(-180.0, 180.0))}",
        f"source lo coherent power_mw={_num(rng.uniform(0.1, 10.0))}",
    ]
    free = ['sq']
    for i in range(int(rng.integers(1, 8))):
        kind = str(rng.choice(['bs', 'loss', 'fiber', 'phase']))
        if kind == 'bs':
            while len(free) < 2:
                vacuum = f"v{i}_{len(free)}"
                lines.append(f"source {vacuum} vacuum")
                free.append(vacuum)
            a, b = (free.pop(int(rng.integers(len(free)))) for _ in range(2))
            split = (f"ratio={_num(rng.uniform(0.0, 1.0))}" if rng.random() < 0.5
                     else f"mzi_phase_deg={_num(rng.uniform(-360.0, 360.0))}")
            lines.append(f"bs b{i} in={a},{b} {split}")
            free += [f"b{i}.0", f"b{i}.1"]
            continue
        port = free.pop(int(rng.integers(len(free))))
        if kind == 'loss':
            lines.append(f"loss e{i} in={port} eta={_num(rng.uniform(0.0, 1.0))}")
        elif kind == 'fiber':
            eta = f" eta={_num(rng.uniform(0.5, 1.0))}" if rng.random() < 0.5 else ""
            lines.append(f"fiber e{i} in={port}{eta}")
        else:
            lines.append(f"phase e{i} in={port} phase_deg={_num(rng.uniform(-360.0, 360.0))}")
        free.append(f"e{i}")

    fixed = []
    for j, port in enumerate(free[:3]):
        scan = rng.random() < 0.3
        clearance = "none" if rng.random() < 0.5 else _num(rng.uniform(3.0, 30.0))
        lines.append(
            f"homodyne h{j} signal={port} lo=lo lo_phase_deg={SCAN if scan else _num(rng.uniform(0.0, 180.0))} "
            f"eta_pd={_num(rng.uniform(0.5, 1.0))} visibility={_num(rng.uniform(0.5, 1.0))} "
            f"phase_fluct_deg={_num(rng.uniform(0.0, 5.0))} clearance_db={clearance}"
        )
        if not scan:
            fixed.append(f"h{j}")
    if len(fixed) >= 2:
        lines.append(f"joint j a={fixed[0]} b={fixed[1]} mode=diff_x_sum_p")
    return "\n".join(lines)


def test_generated_netlists_round_trip(rng):
    for _ in range(40):
        netlist = parse_netlist(random_netlist_text(rng))
        validate(netlist)
        canonical = serialize_netlist(netlist)
        assert parse_netlist(canonical) == netlist
        assert serialize_netlist(parse_netlist(canonical)) == canonical
