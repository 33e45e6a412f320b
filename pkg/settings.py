"""
Настройки cvchipsim: переменные окружения, логирование и файлы параметров запуска
"""
import os
import json
import math
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, NamedTuple, Optional, Union

from dotenv import load_dotenv

from opo_model import EfficiencyChain, OpoParams
from simulation_errors import ConfigFileError, InvalidArgumentError

load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

OPO_KEYS = ('pump_mw', 'threshold_mw', 't_oc', 'l0', 'bliira_per_w',
            'fwhm_mhz', 'sideband_mhz', 'angle_deg')
CHAIN_KEYS = ('eta_pd', 'eta_prop', 'eta_coupling', 'eta_visibility',
              'fiber_coupling', 'waveguide_coupling', 'clearance_db', 'phase_fluct_deg')


@dataclass(frozen=True)
class Settings:
    """Параметры окружения; влияют только на диагностику и параллелизм"""
    log_level: str = 'WARNING'
    log_file: Optional[str] = None
    sweep_workers: int = 4

    @classmethod
    def from_env(cls) -> 'Settings':
        level = os.environ.get('CVCHIPSIM_LOG_LEVEL', 'WARNING').upper()
        if not isinstance(logging.getLevelName(level), int):
            raise InvalidArgumentError(f"unknown CVCHIPSIM_LOG_LEVEL {level!r}")
        try:
            workers = int(os.environ.get('CVCHIPSIM_SWEEP_WORKERS', 4))
        except ValueError:
            raise InvalidArgumentError("CVCHIPSIM_SWEEP_WORKERS must be an integer")
        if workers < 1:
            raise InvalidArgumentError(f"CVCHIPSIM_SWEEP_WORKERS must be >= 1, got {workers}")
        return cls(level, os.environ.get('CVCHIPSIM_LOG_FILE') or None, workers)


def setup_logging(settings: Settings, verbose: bool = False):
    """Логи только в stderr (stdout занят данными) и, по желанию, в файл"""
    handlers = [logging.StreamHandler()]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file))
    logging.basicConfig(
        level=logging.INFO if verbose else settings.log_level,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


class RunParameters(NamedTuple):
    """Набор параметров OPO и цепочки эффективностей"""
    opo: OpoParams
    chain: EfficiencyChain


def parameters_from_dict(data: Dict[str, Any]) -> RunParameters:
    """Словарь с ключами в единицах конфигурации -> RunParameters"""
    if not isinstance(data, dict):
        raise ConfigFileError("run parameters must be a JSON object")
    unknown = sorted(set(data) - set(OPO_KEYS) - set(CHAIN_KEYS))
    if unknown:
        raise ConfigFileError(f"unknown run parameter keys: {', '.join(unknown)}")
    for key, value in data.items():
        if value is None and key in ('clearance_db', 'fiber_coupling', 'waveguide_coupling'):
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigFileError(f"run parameter {key!r} must be a number, got {value!r}")

    opo_args = {k: float(data[k]) for k in OPO_KEYS if k in data}
    for key in ('pump_mw', 'threshold_mw', 't_oc'):
        if key not in opo_args:
            raise ConfigFileError(f"run parameters are missing {key!r}")
    opo = OpoParams.from_units(**opo_args)

    chain_args = {k: data[k] for k in CHAIN_KEYS if k in data and k != 'phase_fluct_deg'}
    chain_args['phase_fluct'] = math.radians(data.get('phase_fluct_deg', 0.0))
    chain = EfficiencyChain(**chain_args)
    return RunParameters(opo, chain)


def load_run_parameters(path: Union[str, Path]) -> RunParameters:
    """Чтение JSON-файла параметров запуска (--config)"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except UnicodeDecodeError as e:
        raise ConfigFileError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})") from e
    except json.JSONDecodeError as e:
        raise ConfigFileError(f"{path}: invalid JSON ({e})") from e
    logger.info(f"Loaded run parameters from {path}")
    return parameters_from_dict(data)
