"""
cvchipsim: командная строка симулятора фотонного чипа

    cvchipsim validate --input presets/fig1b.net
    cvchipsim simulate --input fig1a --format json --output hd.json
    cvchipsim sweep --input fig1b --sweep elements.theta12.phase_deg=0:90:10
    cvchipsim repro-squeezing
    cvchipsim repro-epr --config my_parameters.json
"""
import sys
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

import click

from circuit_evaluator import apply_overrides, evaluate, parse_assignment
from circuit_netlist import Netlist, parse_netlist, validate
from data_export import (
    FORMATS,
    RECORD_COLUMNS,
    STDOUT,
    SWEEP_COLUMNS,
    SWEEP_JOINT_COLUMNS,
    emit,
    record_rows,
    write_metadata,
)
from presets import LAB_PARAMETERS_PATH, lab_parameters, resolve_netlist_path
from reproduction import EPR_COLUMNS, SQUEEZING_COLUMNS, reproduce_epr, squeezing_curve
from settings import RunParameters, Settings, load_run_parameters, setup_logging
from simulation_errors import (
    ConfigFileError,
    NetlistError,
    NetlistSyntaxError,
    ParameterPathError,
    RunConfigError,
    SimulationError,
)
from sweep_manager import sweep_manager, sweep_values

logger = logging.getLogger(__name__)

COMMANDS = ('validate', 'simulate', 'sweep', 'repro-squeezing', 'repro-epr')
NETLIST_COMMANDS = ('validate', 'simulate', 'sweep')

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_MODEL_ERROR = 2
EXIT_USAGE = 64


class SweepSpec(NamedTuple):
    path: str
    start: float
    stop: float
    count: int


def parse_sweep_spec(text: str) -> SweepSpec:
    """'elements.theta12.phase_deg=0:90:10' -> SweepSpec"""
    path, sep, grid = text.partition('=')
    parts = grid.split(':')
    if not sep or not path or len(parts) != 3:
        raise RunConfigError(f"sweep must look like path=start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise RunConfigError(f"sweep grid {grid!r} is not start:stop:count")
    if count < 1:
        raise RunConfigError(f"sweep count must be >= 1, got {count}")
    return SweepSpec(path.strip(), start, stop, count)


@dataclass
class RunConfig:
    """Параметры одного запуска"""
    command: str
    input_path: Optional[str] = None
    output_path: str = STDOUT
    format: str = 'csv'
    sweep_spec: Optional[SweepSpec] = None
    overrides: List[Tuple[str, float]] = field(default_factory=list)
    config_path: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise RunConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise RunConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if (self.sweep_spec is not None) != (self.command == 'sweep'):
            raise RunConfigError("--sweep is required for sweep and only allowed there")
        if self.sweep_spec is not None and self.sweep_spec.count < 1:
            raise RunConfigError("sweep count must be >= 1")
        if self.command in NETLIST_COMMANDS and not self.input_path:
            raise RunConfigError(f"{self.command} needs --input")
        if self.config_path and self.command not in ('repro-squeezing', 'repro-epr'):
            raise RunConfigError("--config only applies to repro commands")
        if self.config_path and self.input_path:
            raise RunConfigError("--config and --input are mutually exclusive")


def _load_netlist(config: RunConfig, with_overrides: bool = True) -> Netlist:
    path = resolve_netlist_path(config.input_path)
    try:
        text = path.read_text(encoding='utf-8')
    except UnicodeDecodeError as e:
        raise NetlistSyntaxError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})") from e
    netlist = parse_netlist(text)
    return apply_overrides(netlist, config.overrides) if with_overrides else netlist


def _parameters(config: RunConfig) -> RunParameters:
    if config.config_path:
        return load_run_parameters(config.config_path)
    return lab_parameters()


def _emit(config: RunConfig, columns, rows, extra: Optional[Dict[str, Any]] = None):
    emit(columns, rows, config.format, config.output_path)
    if config.format == 'json':
        metadata = {
            'command': config.command,
            'input': config.input_path,
            'overrides': [[path, value] for path, value in config.overrides],
            'parameters': config.config_path or LAB_PARAMETERS_PATH.name,
        }
        metadata.update(extra or {})
        write_metadata(config.output_path, metadata)


def _run_validate(config: RunConfig):
    netlist = _load_netlist(config)
    order = validate(netlist)
    click.echo(f"✅ {config.input_path}: {len(netlist.sources)} sources, "
               f"{len(netlist.elements)} elements, {len(netlist.detectors)} detectors; "
               f"order: {' '.join(order)}", err=True)


def _run_simulate(config: RunConfig):
    netlist = _load_netlist(config)
    result = evaluate(netlist, validate(netlist))
    _emit(config, RECORD_COLUMNS, record_rows(result.records))


def _run_sweep(config: RunConfig):
    netlist = _load_netlist(config)
    validate(netlist)
    spec = config.sweep_spec
    values = sweep_values(spec.start, spec.stop, spec.count)
    rows = sweep_manager.run_sweep(netlist, spec.path, values,
                                   progress=logger.isEnabledFor(logging.INFO))
    has_joint = any(d.kind == 'joint' for d in netlist.detectors)
    columns = SWEEP_JOINT_COLUMNS if has_joint else SWEEP_COLUMNS
    table = [
        {'value': r.value, 'db_min': r.db_min, 'db_max': r.db_max, 'delta_sq': r.delta_sq}
        for r in rows
    ]
    _emit(config, columns, table, {'sweep': list(spec)})


def _base_netlist(config: RunConfig) -> Optional[Netlist]:
    # переопределения применяются к каждой точке воспроизведения
    return _load_netlist(config, with_overrides=False) if config.input_path else None


def _run_repro_squeezing(config: RunConfig):
    rows = squeezing_curve(_parameters(config), overrides=config.overrides,
                           base=_base_netlist(config))
    _emit(config, SQUEEZING_COLUMNS, rows)


def _run_repro_epr(config: RunConfig):
    rows = reproduce_epr(_parameters(config), config.overrides, _base_netlist(config))
    _emit(config, EPR_COLUMNS, rows)


RUNNERS: Dict[str, Callable[[RunConfig], None]] = {
    'validate': _run_validate,
    'simulate': _run_simulate,
    'sweep': _run_sweep,
    'repro-squeezing': _run_repro_squeezing,
    'repro-epr': _run_repro_epr,
}


def run(config: RunConfig) -> int:
    """Выполнение команды; возвращает код завершения"""
    try:
        RUNNERS[config.command](config)
        return EXIT_OK
    except RunConfigError as e:
        click.echo(f"usage error: {e}", err=True)
        return EXIT_USAGE
    except (NetlistError, ParameterPathError, ConfigFileError, OSError) as e:
        logger.error(f"{config.command} failed: {e}")
        click.echo(f"error: {e}", err=True)
        return EXIT_INPUT_ERROR
    except SimulationError as e:
        logger.error(f"{config.command} failed: {e}")
        click.echo(f"model error: {e}", err=True)
        return EXIT_MODEL_ERROR


# ------------------------------------------------------------
# click
# ------------------------------------------------------------

class CvChipSimGroup(click.Group):
    """Группа команд с кодом 64 для ошибок использования"""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            code = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo('Aborted!', err=True)
            sys.exit(EXIT_INPUT_ERROR)
        sys.exit(code or EXIT_OK)


def _assignments(ctx, param, values) -> List[Tuple[str, float]]:
    try:
        return [parse_assignment(v) for v in values]
    except ParameterPathError as e:
        raise click.BadParameter(str(e))


def _sweep_option(ctx, param, value) -> Optional[SweepSpec]:
    if value is None:
        return None
    try:
        return parse_sweep_spec(value)
    except RunConfigError as e:
        raise click.BadParameter(str(e))


def common_options(func):
    func = click.option('--set', 'overrides', multiple=True, callback=_assignments,
                        metavar='PATH=VALUE', help='Переопределение параметра (можно несколько)')(func)
    func = click.option('--format', 'fmt', type=click.Choice(FORMATS), default='csv',
                        show_default=True)(func)
    func = click.option('--output', 'output_path', default=STDOUT, show_default=True,
                        help="Файл результата или '-' для stdout")(func)
    return func


def _invoke(command: str, **kwargs) -> int:
    try:
        config = RunConfig(command, **kwargs)
    except RunConfigError as e:
        raise click.UsageError(str(e))
    return run(config)


@click.group(cls=CvChipSimGroup)
@click.option('--verbose', is_flag=True, help='Подробный лог (INFO) в stderr')
def cli(verbose):
    """Симулятор непрерывно-переменной квантовой оптики на фотонном чипе"""
    try:
        settings = Settings.from_env()
    except SimulationError as e:
        raise click.UsageError(str(e))
    setup_logging(settings, verbose)
    sweep_manager.workers = settings.sweep_workers


@cli.command('validate')
@click.option('--input', 'input_path', required=True, help='Файл схемы или имя из presets/')
@common_options
def validate_command(input_path, output_path, fmt, overrides):
    """Проверка схемы"""
    return _invoke('validate', input_path=input_path, output_path=output_path,
                   format=fmt, overrides=list(overrides))


@cli.command('simulate')
@click.option('--input', 'input_path', required=True, help='Файл схемы или имя из presets/')
@common_options
def simulate_command(input_path, output_path, fmt, overrides):
    """Вычисление схемы и выгрузка записей детекторов"""
    return _invoke('simulate', input_path=input_path, output_path=output_path,
                   format=fmt, overrides=list(overrides))


@cli.command('sweep')
@click.option('--input', 'input_path', required=True, help='Файл схемы или имя из presets/')
@click.option('--sweep', 'sweep_spec', required=True, callback=_sweep_option,
              metavar='PATH=START:STOP:COUNT')
@common_options
def sweep_command(input_path, sweep_spec, output_path, fmt, overrides):
    """Свип числового параметра схемы"""
    return _invoke('sweep', input_path=input_path, sweep_spec=sweep_spec,
                   output_path=output_path, format=fmt, overrides=list(overrides))


@cli.command('repro-squeezing')
@click.option('--input', 'input_path', help='Своя схема с sq1 и hd вместо встроенной (a)')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False),
              help='JSON с параметрами OPO и детектирования')
@common_options
def repro_squeezing_command(input_path, config_path, output_path, fmt, overrides):
    """Уровни сжатия/антисжатия на сетке накачек 10..170 мВт"""
    return _invoke('repro-squeezing', input_path=input_path, config_path=config_path,
                   output_path=output_path, format=fmt, overrides=list(overrides))


@cli.command('repro-epr')
@click.option('--input', 'input_path', help='Своя схема с eff1, eff2, hd1, hd2 и epr вместо встроенной (b)')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False),
              help='JSON с параметрами OPO и детектирования')
@common_options
def repro_epr_command(input_path, config_path, output_path, fmt, overrides):
    """Калибровка EPR-эксперимента и критерий неразделимости"""
    return _invoke('repro-epr', input_path=input_path, config_path=config_path,
                   output_path=output_path, format=fmt, overrides=list(overrides))


def main():
    cli()


if __name__ == '__main__':
    main()
