"""
Менеджер параметрических свипов с возможностью отмены
"""
import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from circuit_evaluator import EvaluationResult, evaluate
from circuit_netlist import Netlist, validate
from simulation_errors import InvalidArgumentError, SweepCancelledError

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = 4


@dataclass(frozen=True)
class SweepRow:
    """Сводка одной точки свипа"""
    value: float
    db_min: Optional[float]
    db_max: Optional[float]
    delta_sq: Optional[float]
    result: EvaluationResult


def summarize(value: float, result: EvaluationResult) -> SweepRow:
    """db_min/db_max по всем одиночным записям точки (включая сетки сканирования)"""
    singles = result.single_records()
    db_min = min(r.db for r in singles) if singles else None
    db_max = max(r.db for r in singles) if singles else None
    delta_sq = None
    if result.correlations:
        delta_sq = next(iter(result.correlations.values())).delta_sq
    return SweepRow(value, db_min, db_max, delta_sq, result)


def sweep_values(start: float, stop: float, count: int) -> List[float]:
    """Равномерная сетка из count точек, обе границы включены"""
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise InvalidArgumentError(f"sweep count must be >= 1, got {count!r}")
    if count == 1:
        return [float(start)]
    return [float(v) for v in np.linspace(start, stop, count)]


class SweepManager:
    """Менеджер для запуска свипов по параметру схемы"""

    def __init__(self, workers: int = DEFAULT_WORKERS):
        if workers < 1:
            raise InvalidArgumentError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.active_sweeps: Dict[int, Dict[str, object]] = {}  # sweep_id -> {'path', 'cancelled'}
        self.lock = threading.Lock()
        self._ids = itertools.count(1)

    def cancel_sweep(self, sweep_id: int) -> bool:
        """Отмена свипа: оставшиеся точки не вычисляются"""
        with self.lock:
            if sweep_id not in self.active_sweeps:
                logger.warning(f"⚠️ Свип {sweep_id} не найден среди активных")
                return False
            self.active_sweeps[sweep_id]['cancelled'] = True
            logger.info(f"🔴 Свип {sweep_id} помечен как отмененный")
            return True

    def is_sweep_cancelled(self, sweep_id: int) -> bool:
        with self.lock:
            sweep = self.active_sweeps.get(sweep_id)
            return bool(sweep and sweep['cancelled'])

    def _evaluate_point(self, sweep_id: int, netlist: Netlist, path: str,
                        value: float) -> SweepRow:
        if self.is_sweep_cancelled(sweep_id):
            raise SweepCancelledError(f"sweep {sweep_id} cancelled before {path}={value}")
        point = netlist.with_parameter(path, value)
        return summarize(value, evaluate(point, validate(point)))

    def run_sweep(self, netlist: Netlist, path: str, values: Sequence[float],
                  sweep_id: Optional[int] = None, progress: bool = False) -> List[SweepRow]:
        """
        Переоценка схемы для каждого значения параметра.
        Точки считаются параллельно, строки возвращаются в порядке values;
        первая по порядку ошибка пробрасывается.
        """
        values = [float(v) for v in values]
        if not values:
            return []
        # проверка пути до запуска рабочих потоков
        netlist.with_parameter(path, values[0])

        with self.lock:
            sweep_id = sweep_id if sweep_id is not None else next(self._ids)
            self.active_sweeps[sweep_id] = {'path': path, 'cancelled': False}
        logger.info(f"Starting sweep {sweep_id}: {path} over {len(values)} points")

        try:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                futures = [executor.submit(self._evaluate_point, sweep_id, netlist, path, v)
                           for v in values]
                rows = []
                try:
                    for future in tqdm(futures, desc=path, unit='pt', disable=not progress):
                        rows.append(future.result())
                except Exception:
                    # после первой ошибки оставшиеся точки не запускаются
                    executor.shutdown(wait=False, cancel_futures=True)
                    raise
        finally:
            with self.lock:
                self.active_sweeps.pop(sweep_id, None)

        logger.info(f"✅ Sweep {sweep_id} completed: {len(rows)} rows")
        return rows


# Глобальный экземпляр менеджера
sweep_manager = SweepManager()
