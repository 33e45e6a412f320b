"""
Готовые схемы установок: (a) гомодинное измерение сжатого света,
(b) генерация и проверка EPR-пучков. Плюс каталог presets/*.net
"""
import math
import logging
from pathlib import Path
from typing import List, Optional, Tuple

from cachetools import cached

from circuit_netlist import Declaration, Netlist, parse_netlist
from opo_model import MHZ, MW, EfficiencyChain, OpoParams
from settings import RunParameters, load_run_parameters
from simulation_errors import InvalidArgumentError

logger = logging.getLogger(__name__)

PRESETS_DIR = Path(__file__).resolve().parent / 'presets'
LAB_PARAMETERS_PATH = PRESETS_DIR / 'lab_parameters.json'

LO_POWER_MW = 3.5
TAP_RATIO = 0.01
THETA12_DEG = 90.0


@cached(cache={})
def lab_parameters() -> RunParameters:
    """Параметры OPO и детектирования из presets/lab_parameters.json"""
    return load_run_parameters(LAB_PARAMETERS_PATH)


def _units(value: float) -> float:
    # пересчет единиц без хвостов вида 100.00000000000001
    return round(value, 12) + 0.0


def _opo_source(name: str, opo: OpoParams, pump_w: float) -> Declaration:
    return Declaration('source', name, 'opo', {
        'pump_mw': _units(pump_w / MW),
        'threshold_mw': _units(opo.threshold_power / MW),
        't_oc': opo.output_coupler_T,
        'l0': opo.passive_loss_L0,
        'bliira_per_w': opo.bliira_coeff,
        'fwhm_mhz': _units(opo.cavity_fwhm / MHZ),
        'sideband_mhz': _units(opo.sideband_freq / MHZ),
        'angle_deg': _units(math.degrees(opo.squeeze_angle)),
    })


def _lo_source(name: str) -> Declaration:
    return Declaration('source', name, 'coherent', {'power_mw': LO_POWER_MW})


def _loss(name: str, port: str, eta: float, kind: str = 'loss') -> Declaration:
    return Declaration(kind, name, kind, {'in': [port], 'eta': eta})


def _bs(name: str, port_a: str, port_b: str, ratio: float) -> Declaration:
    return Declaration('bs', name, 'bs', {'in': [port_a, port_b], 'ratio': ratio})


def _homodyne(name: str, signal: str, lo: str, chain: EfficiencyChain,
              lo_phase_deg) -> Declaration:
    return Declaration('homodyne', name, 'homodyne', {
        'signal': signal,
        'lo': lo,
        'lo_phase_deg': lo_phase_deg,
        'eta_pd': chain.eta_pd,
        'visibility': chain.eta_visibility,
        'phase_fluct_deg': _units(math.degrees(chain.phase_fluct)),
        'clearance_db': chain.clearance_db,
    })


def preset_fig1a(pump_w: Optional[float] = None, chain: Optional[EfficiencyChain] = None,
                 opo: Optional[OpoParams] = None) -> Netlist:
    """
    SL1 -> η_p -> η_c -> BS2 (50:50 с LO1) -> HD, фаза LO сканируется.
    По умолчанию параметры и накачка из lab_parameters.json.
    """
    lab = lab_parameters()
    opo = opo or lab.opo
    chain = chain or lab.chain
    pump_w = opo.pump_power if pump_w is None else pump_w

    return Netlist(
        sources=[_opo_source('sq1', opo, pump_w), _lo_source('lo1')],
        elements=[
            _loss('prop1', 'sq1', chain.eta_prop),
            _loss('couple1', 'prop1', chain.eta_coupling),
            _bs('bs2', 'couple1', 'lo1', 0.5),
        ],
        detectors=[_homodyne('hd', 'bs2', 'lo1', chain, 'scan')],
    )


def preset_fig1b(pump_w: Optional[Tuple[float, float]] = None, theta12_deg: float = THETA12_DEG,
                 path_etas: Optional[Tuple[float, float]] = None,
                 chains: Optional[Tuple[EfficiencyChain, EfficiencyChain]] = None,
                 opo: Optional[OpoParams] = None, tap_ratio: float = TAP_RATIO,
                 fiber_etas: Tuple[float, float] = (1.0, 1.0)) -> Netlist:
    """
    SL1, SL2 -> BS2 с относительной фазой θ12 -> EPR1 (через отвод BS3 99:1), EPR2 ->
    BS1/BS4 с LO1/LO2 -> HD1/HD2 и совместное измерение Δ².

    path_etas: эффективности eff1/eff2 на путях SL1/SL2 до BS2 (по умолчанию η_c цепочки).
    """
    lab = lab_parameters()
    opo = opo or lab.opo
    chains = chains or (lab.chain, lab.chain)
    pump_w = pump_w or (opo.pump_power, opo.pump_power)
    path_etas = path_etas or (chains[0].eta_coupling, chains[1].eta_coupling)
    if len(pump_w) != 2 or len(chains) != 2 or len(path_etas) != 2 or len(fiber_etas) != 2:
        raise InvalidArgumentError("fig1b needs exactly two values per arm")

    return Netlist(
        sources=[
            _opo_source('sq1', opo, pump_w[0]),
            _opo_source('sq2', opo, pump_w[1]),
            _lo_source('lo1'),
            _lo_source('lo2'),
            Declaration('source', 'tap_vac', 'vacuum', {}),
        ],
        elements=[
            _loss('prop1', 'sq1', chains[0].eta_prop),
            _loss('prop2', 'sq2', chains[1].eta_prop),
            _loss('eff1', 'prop1', path_etas[0]),
            _loss('eff2', 'prop2', path_etas[1]),
            Declaration('phase', 'theta12', 'phase', {'in': ['eff2'], 'phase_deg': theta12_deg}),
            _bs('bs2', 'eff1', 'theta12', 0.5),
            _bs('bs3', 'bs2.0', 'tap_vac', tap_ratio),
            _loss('fiber1', 'bs3.0', fiber_etas[0], 'fiber'),
            _loss('fiber2', 'bs2.1', fiber_etas[1], 'fiber'),
            _bs('bs1', 'fiber1', 'lo1', 0.5),
            _bs('bs4', 'fiber2', 'lo2', 0.5),
        ],
        detectors=[
            _homodyne('hd1', 'bs1', 'lo1', chains[0], 0.0),
            _homodyne('hd2', 'bs4', 'lo2', chains[1], 0.0),
            Declaration('joint', 'epr', 'joint', {'a': 'hd1', 'b': 'hd2', 'mode': 'diff_x_sum_p'}),
        ],
    )


def lossless_opo(threshold_mw: float = 179.0) -> OpoParams:
    """OPO без внутренних потерь на нулевой частоте: R- = e^(-2r) при x = tanh(r/2)"""
    return OpoParams.from_units(pump_mw=0.0, threshold_mw=threshold_mw, t_oc=0.1,
                                fwhm_mhz=11.8, sideband_mhz=0.0)


def pump_for_squeezing(r: float, threshold_power: float) -> float:
    """Накачка (Вт) идеального OPO, дающая параметр сжатия r"""
    if r < 0:
        raise InvalidArgumentError(f"squeezing parameter must be >= 0, got {r}")
    return threshold_power * math.tanh(r / 2.0) ** 2


def preset_ideal_epr(r: float, theta12_deg: float = THETA12_DEG) -> Netlist:
    """fig1b без потерь: идеальные детекторы, без отвода BS3"""
    opo = lossless_opo()
    pump = pump_for_squeezing(r, opo.threshold_power)
    ideal = EfficiencyChain()
    return preset_fig1b(pump_w=(pump, pump), theta12_deg=theta12_deg, path_etas=(1.0, 1.0),
                        chains=(ideal, ideal), opo=opo, tap_ratio=0.0)


# ------------------------------------------------------------
# Каталог файлов presets/*.net
# ------------------------------------------------------------

def available_presets() -> List[str]:
    """Имена поставляемых схем"""
    if not PRESETS_DIR.exists():
        return []
    return sorted(path.stem for path in PRESETS_DIR.glob('*.net'))


def preset_path(name: str) -> Path:
    path = PRESETS_DIR / f"{name}.net"
    if not path.exists():
        raise FileNotFoundError(f"unknown preset {name!r}, available: {', '.join(available_presets())}")
    return path


def load_preset(name: str) -> Netlist:
    logger.info(f"Loading preset {name}")
    return parse_netlist(preset_path(name).read_text(encoding='utf-8'))


def resolve_netlist_path(value: str) -> Path:
    """Путь к файлу схемы; имя без файла ищется среди presets/*.net"""
    path = Path(value)
    if path.exists() or path.suffix:
        return path
    return preset_path(value)
