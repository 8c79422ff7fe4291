"""
Бимформинг второго скачка в режиме decode-and-forward.

Секретная скорость log2((N0 + |h^H w|^2) / (N0 + |z^H w|^2)) максимизируется бисекцией по t
над программами допустимости tr(X (H - t Z)) >= N0 (t - 1). Робастные варианты: наихудший
случай по шарам Фробениуса и вероятностное ограничение неотказа.
"""
import logging
import numpy as np
import scipy.optimize
import scipy.special

from typing import Callable, Optional, Union
from .af import relaxation_solution
from .channel import complex_gaussian, make_rng
from .conic import ConicSolver, bisect, constrained_program, ratio_inequality
from .exceptions import DomainError
from .linalg import hermitian_eig
from .models._arrays import hermitian_matrix
from .models.beam_models import BeamSolution, DfAlgorithmConfig, OutageSettings, StatisticalParams, WorstCaseParams
from .models.channel_models import DfChannel, PowerConstraint
from .models.conic_models import BisectionSpec, ConicProgram, NormBound, SolverSettings

logger = logging.getLogger(__name__)


def df_secrecy_rate(w: np.ndarray, ch: DfChannel) -> float:
    """
    Секретная скорость второго скачка DF, бит/символ.

    Args:
        w (np.ndarray): Веса релеев
        ch (DfChannel): Каналы реле -> получатель и реле -> подслушиватель

    Returns:
        float: log2((N0 + |h^H w|^2) / (N0 + |z^H w|^2)), может быть отрицательной

    Example:
        >>> round(df_secrecy_rate(np.array([1.0]), DfChannel(h=[2], z=[1], N0=1.0)), 6)
        1.321928
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (ch.M,):
        raise ValueError(f"Длина w {w.shape} не совпадает с M = {ch.M}")
    return float(np.log2((ch.N0 + abs(np.vdot(ch.h, w)) ** 2) / (ch.N0 + abs(np.vdot(ch.z, w)) ** 2)))


def erf_inv(x: float) -> float:
    """
    Обратная функция ошибок.

    Args:
        x (float): Аргумент из (-1, 1)

    Returns:
        float: y, erf(y) = x

    Raises:
        DomainError: Если x вне (-1, 1)
    """
    x = float(x)
    if not -1.0 < x < 1.0:
        raise DomainError(f"erf_inv определена на (-1, 1), получено {x}")
    return float(scipy.special.erfinv(x))


def chance_scale(t: float, params: StatisticalParams) -> float:
    """k(t) = sqrt(2 (var_h + t^2 var_z)) erf^{-1}(2 eps - 1) >= 0: запас в единицах ||X||_F."""
    return float(np.sqrt(2.0 * (params.var_h + t * t * params.var_z)) * erf_inv(2.0 * params.eps - 1.0))


def worst_case_rate(w: np.ndarray, Hhat: np.ndarray, Zhat: np.ndarray, params: WorstCaseParams,
                    N0: float = 1.0) -> float:
    """Гарантированная скорость w при ||H~||_F <= eps_h, ||Z~||_F <= eps_z."""
    w = np.asarray(w, dtype=np.complex128)
    power = float(np.real(np.vdot(w, w)))
    num = N0 + float(np.real(np.vdot(w, Hhat @ w))) - params.eps_h * power
    den = N0 + float(np.real(np.vdot(w, Zhat @ w))) + params.eps_z * power
    if num <= 0:
        return float('-inf')
    return float(np.log2(num / den))


def statistical_rate(w: np.ndarray, Hhat: np.ndarray, Zhat: np.ndarray, params: StatisticalParams,
                     N0: float = 1.0) -> float:
    """
    Скорость w, выдерживаемая с вероятностью не ниже eps: log2 t, где t - корень
    w^H (H^ - t Z^) w - N0 (t - 1) - k(t) ||w||^2 (убывает по t). Если ограничение нарушено
    уже при t = 1, возвращается 0.
    """
    w = np.asarray(w, dtype=np.complex128)
    gain_h = float(np.real(np.vdot(w, Hhat @ w)))
    gain_z = float(np.real(np.vdot(w, Zhat @ w)))
    power = float(np.real(np.vdot(w, w)))

    def margin(t: float) -> float:
        return gain_h - t * gain_z - N0 * (t - 1.0) - chance_scale(t, params) * power

    if margin(1.0) <= 0:
        return 0.0
    upper = 2.0
    while margin(upper) > 0:
        upper *= 2.0
    return float(np.log2(scipy.optimize.brentq(margin, 1.0, upper, xtol=1e-12)))


def sample_error_statistic(X: np.ndarray, Hhat: np.ndarray, Zhat: np.ndarray, t: float, params: StatisticalParams,
                           trials: int, seed: int = 0, chunk_size: int = 10_000) -> np.ndarray:
    """
    Выборка y = tr((H^ - t Z^ + H~ - t Z~) X) по испытаниям Monte Carlo.

    Ошибки эрмитовы: H~ = (G + G^H) / 2, G с i.i.d. CN(0, 2 var_h) элементами, поэтому каждый
    элемент H~ имеет дисперсию var_h и Var y = (var_h + t^2 var_z) ||X||_F^2. Каждая пачка из
    chunk_size испытаний получает свой поток ГСЧ.

    Args:
        X (np.ndarray): Эрмитова матрица X >= 0
        Hhat (np.ndarray): Оценка H^
        Zhat (np.ndarray): Оценка Z^
        t (float): Уровень отношения
        params (StatisticalParams): Дисперсии ошибок
        trials (int): Число испытаний
        seed (int): Зерно
        chunk_size (int): Размер пачки

    Returns:
        np.ndarray: Вектор из trials значений y
    """
    X = np.asarray(X, dtype=np.complex128)
    M = X.shape[0]
    mean = float(np.real(np.trace((Hhat - t * Zhat) @ X)))
    samples = np.empty(trials)
    for chunk, start in enumerate(range(0, trials, chunk_size)):
        n = min(chunk_size, trials - start)
        rng = make_rng(seed, stream=chunk)
        # для эрмитовой X: tr(((G + G^H) / 2) X) = Re tr(G X)
        G = complex_gaussian(rng, np.sqrt(2.0 * params.var_h), (n, M, M)) if params.var_h > 0 else np.zeros((n, M, M))
        F = complex_gaussian(rng, np.sqrt(2.0 * params.var_z), (n, M, M)) if params.var_z > 0 else np.zeros((n, M, M))
        samples[start:start + n] = (mean + np.real(np.einsum('nij,ji->n', G, X))
                                    - t * np.real(np.einsum('nij,ji->n', F, X)))
    return samples


def verify_outage(w: np.ndarray, h_hat: np.ndarray, z_hat: np.ndarray, params: StatisticalParams, t: float,
                  trials: int = 100_000, seed: int = 0, N0: float = 1.0, chunk_size: int = 10_000) -> float:
    """
    Эмпирическая вероятность неотказа Pr(tr(X (H - t Z)) >= N0 (t - 1)) для X = w w^H.

    Args:
        w (np.ndarray): Веса релеев
        h_hat (np.ndarray): Оценка канала получателя
        z_hat (np.ndarray): Оценка канала подслушивателя
        params (StatisticalParams): Дисперсии ошибок
        t (float): Уровень отношения
        trials (int): Число испытаний, не меньше 10^4
        seed (int): Зерно
        N0 (float): Дисперсия шума приёмников
        chunk_size (int): Размер пачки испытаний

    Returns:
        float: Доля испытаний, в которых ограничение выполнено

    Raises:
        ValidationError: Если trials < 10^4
    """
    settings = OutageSettings(trials=trials, chunk_size=chunk_size, seed=seed)
    w = np.asarray(w, dtype=np.complex128)
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    z_hat = np.asarray(z_hat, dtype=np.complex128)
    X = np.outer(w, w.conj())
    y = sample_error_statistic(X, np.outer(h_hat, h_hat.conj()), np.outer(z_hat, z_hat.conj()), t, params,
                               settings.trials, settings.seed, settings.chunk_size)
    probability = float(np.mean(y >= N0 * (t - 1.0)))
    logger.info("verify_outage: t=%.6f eps=%.3f -> %.5f (%d испытаний)", t, params.eps, probability, settings.trials)
    return probability


class DfBeamformer(ConicSolver):
    """
    Оптимальный и робастный DF бимформинг: бисекция по t над коническими программами допустимости.

    Attributes:
        config (DfAlgorithmConfig): Точность бисекции и параметры извлечения w

    Examples:
        >>> ch = DfChannel(h=[2], z=[1], N0=1.0)
        >>> sol = DfBeamformer().optimize_df_perfect(ch, PowerConstraint.individual([1.0]))
        >>> round(sol.secrecy_rate, 4)
        1.3219
    """

    def __init__(self, settings: Optional[SolverSettings] = None, config: Optional[DfAlgorithmConfig] = None,
                 **kwargs):
        super().__init__(settings, **kwargs)
        self.config = config if config is not None else DfAlgorithmConfig()

    def _bisect_rate(self, M: int, build: Callable[[float], ConicProgram], H_eff: np.ndarray, N0: float,
                     constraint: PowerConstraint, rate_evaluator: Callable[[np.ndarray], float],
                     robust: Optional[dict] = None) -> BeamSolution:
        constraint.check_dim(M)
        start = self.solves
        values, _ = hermitian_eig(H_eff)
        upper = 1.0 + max(float(values[0]), 0.0) * constraint.total_budget() / N0
        spec = BisectionSpec(lower=1.0, upper=upper, tol=self.config.bisection_tol,
                             oracle=self.feasibility_oracle(build))
        t_star, witness = bisect(spec)
        X, outcome = self.recover_min_trace(build(t_star), witness)
        logger.info("DF: t*=%.8f (верхняя граница %.6f), скорость %.6f, решений: %d",
                    t_star, upper, np.log2(t_star), self.solves - start)
        return relaxation_solution(X, t_star, 1.0, rate_evaluator, constraint, self.config,
                                   outcome.residuals, self.solves - start, robust)

    def optimize_df_perfect(self, ch: DfChannel, constraint: PowerConstraint) -> BeamSolution:
        """
        DF при точном знании каналов.

        Args:
            ch (DfChannel): Каналы второго скачка
            constraint (PowerConstraint): Ограничение мощности

        Returns:
            BeamSolution: t1 = t*, t2 = 1, секретная скорость log2(t*)
        """
        H, Z = ch.H, ch.Z

        def build(t: float) -> ConicProgram:
            return constrained_program(ch.M, constraint, [ratio_inequality(H, Z, t, ch.N0)])

        return self._bisect_rate(ch.M, build, H, ch.N0, constraint, lambda w: df_secrecy_rate(w, ch))

    def optimize_df_worstcase(self, Hhat: np.ndarray, Zhat: np.ndarray, params: WorstCaseParams,
                              constraint: PowerConstraint, N0: float = 1.0) -> BeamSolution:
        """
        DF, робастный к ошибкам оценки в шарах Фробениуса радиусов eps_h, eps_z.

        Ограничение уровня t: tr(X ((H^ - eps_h I) - t (Z^ + eps_z I))) >= N0 (t - 1).

        Args:
            Hhat (np.ndarray): Оценка H^ = h^ h^^H
            Zhat (np.ndarray): Оценка Z^ = z^ z^^H
            params (WorstCaseParams): Радиусы неопределённости
            constraint (PowerConstraint): Ограничение мощности (суммарное добавляется вариантом BOTH)
            N0 (float): Дисперсия шума приёмников

        Returns:
            BeamSolution: Решение с гарантированной скоростью w_rate
        """
        Hhat, Zhat = hermitian_matrix(Hhat), hermitian_matrix(Zhat)
        M = Hhat.shape[0]
        H_eff = Hhat - params.eps_h * np.eye(M)
        Z_eff = Zhat + params.eps_z * np.eye(M)

        def build(t: float) -> ConicProgram:
            return constrained_program(M, constraint, [ratio_inequality(H_eff, Z_eff, t, N0)])

        return self._bisect_rate(M, build, H_eff, N0, constraint,
                                 lambda w: worst_case_rate(w, Hhat, Zhat, params, N0), params.model_dump())

    def optimize_df_statistical(self, Hhat: np.ndarray, Zhat: np.ndarray, params: StatisticalParams,
                                constraint: PowerConstraint, N0: float = 1.0) -> BeamSolution:
        """
        DF с вероятностным ограничением Pr(tr(X (H - t Z)) >= N0 (t - 1)) >= eps.

        Для гауссовых ошибок ограничение равносильно конусу второго порядка
        k(t) ||X||_F <= tr((H^ - t Z^) X) - N0 (t - 1), k(t) = sqrt(2 (var_h + t^2 var_z)) erf^{-1}(2 eps - 1).

        Args:
            Hhat (np.ndarray): Оценка H^
            Zhat (np.ndarray): Оценка Z^
            params (StatisticalParams): Дисперсии ошибок и порог eps
            constraint (PowerConstraint): Ограничение мощности
            N0 (float): Дисперсия шума приёмников

        Returns:
            BeamSolution: Решение; w_rate - скорость, выдерживаемая с вероятностью eps
        """
        Hhat, Zhat = hermitian_matrix(Hhat), hermitian_matrix(Zhat)
        M = Hhat.shape[0]

        def build(t: float) -> ConicProgram:
            k = chance_scale(t, params)
            if k == 0:
                return constrained_program(M, constraint, [ratio_inequality(Hhat, Zhat, t, N0)])
            bound = NormBound(c0=-N0 * (t - 1.0) / k, c1=1.0 / k, C=Hhat - t * Zhat)
            return constrained_program(M, constraint, [], norm_bound=bound)

        return self._bisect_rate(M, build, Hhat, N0, constraint,
                                 lambda w: statistical_rate(w, Hhat, Zhat, params, N0), params.model_dump())

    def optimize_df(self, Hhat: np.ndarray, Zhat: np.ndarray, params: Union[WorstCaseParams, StatisticalParams],
                    constraint: PowerConstraint, N0: float = 1.0) -> BeamSolution:
        """Робастный DF по виду params."""
        if isinstance(params, WorstCaseParams):
            return self.optimize_df_worstcase(Hhat, Zhat, params, constraint, N0)
        return self.optimize_df_statistical(Hhat, Zhat, params, constraint, N0)
