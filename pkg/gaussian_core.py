"""
Гауссовы состояния многомодового света и симплектические преобразования

Соглашение: x = (a + a†)/2, дисперсия вакуума 1/4, порядок квадратур (x1, p1, x2, p2, ...).
Все операции возвращают новые состояния, GaussianState неизменяем.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple, Any

import numpy as np
from scipy.linalg import block_diag

from simulation_errors import InvalidArgumentError, UnphysicalStateError

logger = logging.getLogger(__name__)

VACUUM_VARIANCE = 0.25
SYMMETRY_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-12
MAX_MODES = 8

# (mode, lo_phase, coefficient)
QuadratureTerm = Tuple[int, float, float]


def symplectic_form(n_modes: int) -> np.ndarray:
    """Стандартная симплектическая форма Ω в порядке xpxp"""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for m in range(n_modes):
        omega[2 * m, 2 * m + 1] = 1.0
        omega[2 * m + 1, 2 * m] = -1.0
    return omega


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Вектор средних и ковариационная матрица n оптических мод"""
    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if not isinstance(self.n_modes, (int, np.integer)) or self.n_modes < 1:
            raise InvalidArgumentError(f"n_modes must be a positive integer, got {self.n_modes!r}")
        if self.n_modes > MAX_MODES:
            raise InvalidArgumentError(f"at most {MAX_MODES} modes are supported, got {self.n_modes}")

        mean = _frozen(np.asarray(self.mean, dtype=float).reshape(-1))
        cov = _frozen(self.cov)
        dim = 2 * self.n_modes

        if mean.shape != (dim,):
            raise InvalidArgumentError(f"mean must have length {dim}, got {mean.shape[0]}")
        if cov.shape != (dim, dim):
            raise InvalidArgumentError(f"cov must be {dim}x{dim}, got {cov.shape}")
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise InvalidArgumentError("state contains non-finite entries")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise InvalidArgumentError("covariance matrix is not symmetric")

        # cov + (i/4)Ω >= 0
        bound = cov + 1j * VACUUM_VARIANCE * symplectic_form(self.n_modes)
        smallest = float(np.min(np.linalg.eigvalsh(bound)))
        if smallest < -UNCERTAINTY_TOL:
            raise UnphysicalStateError(
                f"covariance violates the uncertainty bound (min eigenvalue {smallest:.3e})"
            )

        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cov', cov)

    def mode_indices(self, mode: int) -> List[int]:
        _check_mode(self, mode)
        return [2 * mode, 2 * mode + 1]

    def mode_block(self, mode: int) -> np.ndarray:
        """2x2 ковариационный блок моды"""
        idx = self.mode_indices(mode)
        return self.cov[np.ix_(idx, idx)].copy()

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Симплектический спектр (по одному значению на моду, по возрастанию)"""
        omega = symplectic_form(self.n_modes)
        values = np.sort(np.abs(np.linalg.eigvals(1j * omega @ self.cov)))
        return values[::2]

    def purity(self) -> float:
        """Чистота μ = 1/(4^n sqrt(det V)) в соглашении вакуума 1/4"""
        return float(1.0 / math.sqrt(np.linalg.det(self.cov / VACUUM_VARIANCE)))

    def reduced(self, modes: Sequence[int]) -> 'GaussianState':
        """Частичный след: оставляет перечисленные моды в заданном порядке"""
        if not modes:
            raise InvalidArgumentError("reduced state needs at least one mode")
        idx: List[int] = []
        for m in modes:
            idx.extend(self.mode_indices(m))
        return GaussianState(len(modes), self.mean[idx], self.cov[np.ix_(idx, idx)])

    def append_vacuum(self, count: int = 1) -> 'GaussianState':
        return tensor_product(self, vacuum(count))

    def allclose(self, other: 'GaussianState', atol: float = 1e-12) -> bool:
        return (self.n_modes == other.n_modes
                and np.allclose(self.mean, other.mean, rtol=0.0, atol=atol)
                and np.allclose(self.cov, other.cov, rtol=0.0, atol=atol))

    def to_dict(self) -> Dict[str, Any]:
        """Отладочная JSON-сериализация (cov построчно)"""
        return {
            'n_modes': int(self.n_modes),
            'mean': [float(v) for v in self.mean],
            'cov': [[float(v) for v in row] for row in self.cov],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GaussianState':
        try:
            return cls(int(data['n_modes']), np.array(data['mean'], dtype=float),
                       np.array(data['cov'], dtype=float))
        except KeyError as e:
            raise InvalidArgumentError(f"state object is missing key {e}") from e


@dataclass(frozen=True, eq=False)
class SymplecticTransform:
    """Симплектическая матрица, действующая на перечисленные моды"""
    matrix: np.ndarray
    acts_on: Tuple[int, ...] = field(default=(0,))

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        acts_on = tuple(int(m) for m in self.acts_on)
        if matrix.shape != (2 * len(acts_on), 2 * len(acts_on)):
            raise InvalidArgumentError(
                f"matrix shape {matrix.shape} does not match {len(acts_on)} modes"
            )
        if len(set(acts_on)) != len(acts_on):
            raise InvalidArgumentError(f"repeated mode in acts_on {acts_on}")
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'acts_on', acts_on)

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        omega = symplectic_form(len(self.acts_on))
        return bool(np.max(np.abs(self.matrix @ omega @ self.matrix.T - omega)) <= tol)

    def expand(self, n_modes: int) -> np.ndarray:
        """Полная 2n x 2n матрица, единичная на остальных модах"""
        full = np.identity(2 * n_modes)
        idx: List[int] = []
        for m in self.acts_on:
            if m < 0 or m >= n_modes:
                raise InvalidArgumentError(f"mode {m} out of range for {n_modes} modes")
            idx.extend([2 * m, 2 * m + 1])
        full[np.ix_(idx, idx)] = self.matrix
        return full

    def apply(self, state: GaussianState) -> GaussianState:
        s = self.expand(state.n_modes)
        cov = s @ state.cov @ s.T
        # численная симметризация
        cov = 0.5 * (cov + cov.T)
        return GaussianState(state.n_modes, s @ state.mean, cov)


def _check_mode(state: GaussianState, mode: int):
    if not isinstance(mode, (int, np.integer)) or mode < 0 or mode >= state.n_modes:
        raise InvalidArgumentError(f"mode {mode!r} out of range for {state.n_modes} modes")


def _check_finite(name: str, value: float):
    if value is None or not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


def vacuum(n: int) -> GaussianState:
    """Вакуум n мод: нулевые средние, cov = I/4"""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"vacuum needs at least one mode, got {n!r}")
    return GaussianState(int(n), np.zeros(2 * n), VACUUM_VARIANCE * np.identity(2 * n))


def tensor_product(*states: GaussianState) -> GaussianState:
    """Произведение независимых состояний (блочно-диагональная cov)"""
    if not states:
        raise InvalidArgumentError("tensor_product needs at least one state")
    n = sum(s.n_modes for s in states)
    mean = np.concatenate([s.mean for s in states])
    return GaussianState(n, mean, block_diag(*(s.cov for s in states)))


def _single_mode(var_along: float, var_orthogonal: float, angle: float) -> GaussianState:
    r = rotation_matrix(angle)
    cov = r @ np.diag([var_along, var_orthogonal]) @ r.T
    return GaussianState(1, np.zeros(2), 0.5 * (cov + cov.T))


def squeezed_mode(r: float, angle: float = 0.0) -> GaussianState:
    """Чистое сжатое состояние: e^(-2r)/4 вдоль angle, e^(2r)/4 ортогонально"""
    _check_finite('r', r)
    _check_finite('angle', angle)
    if r < 0:
        raise InvalidArgumentError(f"squeezing parameter must be >= 0, got {r}")
    return _single_mode(math.exp(-2 * r) * VACUUM_VARIANCE,
                        math.exp(2 * r) * VACUUM_VARIANCE, angle)


def from_noise_levels(r_minus: float, r_plus: float, angle: float = 0.0) -> GaussianState:
    """
    Одномодовое (в общем случае смешанное) состояние с уровнями шума R- и R+
    в единицах дробового шума.
    """
    _check_finite('r_minus', r_minus)
    _check_finite('r_plus', r_plus)
    _check_finite('angle', angle)
    if r_minus <= 0 or r_plus <= 0:
        raise InvalidArgumentError(f"noise levels must be positive, got ({r_minus}, {r_plus})")
    if r_minus * r_plus < 1 - UNCERTAINTY_TOL:
        raise UnphysicalStateError(
            f"R- * R+ = {r_minus * r_plus:.6g} violates the uncertainty bound"
        )
    return _single_mode(r_minus * VACUUM_VARIANCE, r_plus * VACUUM_VARIANCE, angle)


def displace(state: GaussianState, mode: int, dx: float, dp: float = 0.0) -> GaussianState:
    """Смещение средних квадратур моды (когерентная амплитуда)"""
    _check_mode(state, mode)
    mean = np.array(state.mean)
    mean[2 * mode] += dx
    mean[2 * mode + 1] += dp
    return GaussianState(state.n_modes, mean, state.cov)


def rotation_transform(mode: int, theta: float) -> SymplecticTransform:
    return SymplecticTransform(rotation_matrix(theta), (mode,))


def beam_splitter_transform(mode_i: int, mode_j: int, t: float) -> SymplecticTransform:
    """
    Вещественное ортогональное смешивание:
    x_i' = √t x_i + √(1-t) x_j,  x_j' = -√(1-t) x_i + √t x_j (то же для p)
    """
    if mode_i == mode_j:
        raise InvalidArgumentError(f"beam splitter needs two distinct modes, got {mode_i} twice")
    _check_finite('t', t)
    if t < 0 or t > 1:
        raise InvalidArgumentError(f"transmissivity must lie in [0, 1], got {t}")
    a, b = math.sqrt(t), math.sqrt(1 - t)
    eye = np.identity(2)
    matrix = np.block([[a * eye, b * eye], [-b * eye, a * eye]])
    return SymplecticTransform(matrix, (mode_i, mode_j))


def rotate(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Фазовый сдвиг R(θ) на квадратурном блоке моды"""
    _check_mode(state, mode)
    _check_finite('theta', theta)
    return rotation_transform(mode, theta).apply(state)


def beam_splitter(state: GaussianState, mode_i: int, mode_j: int, t: float) -> GaussianState:
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    return beam_splitter_transform(mode_i, mode_j, t).apply(state)


def loss_channel(state: GaussianState, mode: int, eta: float) -> GaussianState:
    """
    Канал потерь: cov' = η·cov + (1-η)/4·I на блоке моды,
    перекрестные блоки умножаются на √η, mean' = √η·mean.
    """
    _check_mode(state, mode)
    _check_finite('eta', eta)
    if eta < 0 or eta > 1:
        raise InvalidArgumentError(f"efficiency must lie in [0, 1], got {eta}")
    if eta == 1:
        return state

    idx = state.mode_indices(mode)
    gain = np.ones(2 * state.n_modes)
    gain[idx] = math.sqrt(eta)
    cov = np.outer(gain, gain) * state.cov
    cov[idx, idx] += (1 - eta) * VACUUM_VARIANCE
    return GaussianState(state.n_modes, gain * state.mean, cov)


def quadrature_vector(n_modes: int, terms: Iterable[QuadratureTerm]) -> np.ndarray:
    u = np.zeros(2 * n_modes)
    for mode, lo_phase, coefficient in terms:
        if not isinstance(mode, (int, np.integer)) or mode < 0 or mode >= n_modes:
            raise InvalidArgumentError(f"mode {mode!r} out of range for {n_modes} modes")
        u[2 * mode] += coefficient * math.cos(lo_phase)
        u[2 * mode + 1] += coefficient * math.sin(lo_phase)
    return u


def joint_quadrature_variance(state: GaussianState, terms: Sequence[QuadratureTerm]) -> float:
    """
    Дисперсия линейной комбинации Σ c_i·x_θi (например x1 - x2 или p1 + p2)
    в сырых квадратурных единицах.
    """
    terms = list(terms)
    if not terms:
        raise InvalidArgumentError("joint quadrature variance needs at least one term")
    u = quadrature_vector(state.n_modes, terms)
    return float(u @ state.cov @ u)


def quadrature_variance(state: GaussianState, mode: int, lo_phase: float) -> float:
    return joint_quadrature_variance(state, [(mode, lo_phase, 1.0)])
