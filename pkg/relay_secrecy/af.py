"""
Бимформинг в режиме amplify-and-forward.

Секретная скорость log2(t1 * t2), где t1 = (N0 + tr(A X)) / (N0 + tr(B X)) с
A = D_h + Ps hg hg^H, B = D_z + Ps hz hz^H и t2 = (N0 + tr(D_z X)) / (N0 + tr(D_h X)),
максимизируется по X = w w^H при ограничении мощности.
"""
import logging
import numpy as np

from enum import Enum
from typing import Callable, Optional, Tuple
from .channel import make_rng, complex_gaussian
from .conic import ConicSolver, bisect, constrained_program, fractional_program, fractional_solution, ratio_inequality
from .exceptions import ZeroMatrix
from .linalg import gen_eig_max, hermitian_eig
from .models.beam_models import AfAlgorithmConfig, BeamSolution, DfAlgorithmConfig, T2Search
from .models.channel_models import AfDerived, ChannelState, PowerConstraint, PowerKind
from .models.conic_models import BisectionSpec, ConicResiduals, ConicStatus, ObjectiveKind, SolverSettings

logger = logging.getLogger(__name__)

_ZERO_TRACE = 1e-12


class Ratio(str, Enum):
    T1 = "t1"
    T2 = "t2"


def af_snr(w: np.ndarray, d: AfDerived, ch: ChannelState) -> Tuple[float, float]:
    """
    ОСШ на получателе и подслушивателе.

    Args:
        w (np.ndarray): Веса релеев
        d (AfDerived): Величины AF (см. channel.derive_af)
        ch (ChannelState): Реализация канала

    Returns:
        tuple: (gamma_d, gamma_e)

    Example:
        >>> ch = ChannelState(g=[1], h=[1], z=[1], Ps=1.0, Nm=1.0, N0=1.0)
        >>> round(af_snr(np.array([1.0]), derive_af(ch), ch)[0], 6)
        0.333333
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (d.M,):
        raise ValueError(f"Длина w {w.shape} не совпадает с M = {d.M}")
    gamma_d = ch.Ps * abs(np.vdot(d.hg, w)) ** 2 / (np.real(np.vdot(w, d.Dh @ w)) + ch.N0)
    gamma_e = ch.Ps * abs(np.vdot(d.hz, w)) ** 2 / (np.real(np.vdot(w, d.Dz @ w)) + ch.N0)
    return float(gamma_d), float(gamma_e)


def af_secrecy_rate(w: np.ndarray, d: AfDerived, ch: ChannelState) -> float:
    """log2(1 + gamma_d) - log2(1 + gamma_e); для плохих w может быть отрицательной."""
    gamma_d, gamma_e = af_snr(w, d, ch)
    return float(np.log2((1.0 + gamma_d) / (1.0 + gamma_e)))


def ratio_pencil(d: AfDerived, ch: ChannelState, which: Ratio) -> Tuple[np.ndarray, np.ndarray]:
    """Пара (A, B) отношения (N0 + tr(A X)) / (N0 + tr(B X)) для t1 или t2."""
    if Ratio(which) == Ratio.T1:
        return d.Dh + ch.Ps * np.outer(d.hg, d.hg.conj()), d.Dz + ch.Ps * np.outer(d.hz, d.hz.conj())
    return d.Dz, d.Dh


def t_from_relaxation(X: np.ndarray, d: AfDerived, ch: ChannelState) -> Tuple[float, float]:
    """(t1, t2) по следовым формулам для матрицы X."""
    A1, B1 = ratio_pencil(d, ch, Ratio.T1)
    A2, B2 = ratio_pencil(d, ch, Ratio.T2)

    def ratio(A, B):
        return float((ch.N0 + np.real(np.trace(A @ X))) / (ch.N0 + np.real(np.trace(B @ X))))

    return ratio(A1, B1), ratio(A2, B2)


def _closed_form(d: AfDerived, ch: ChannelState, PT: float, which: Ratio) -> Tuple[float, np.ndarray]:
    if PT <= 0:
        raise ValueError("PT должна быть положительной")
    A, B = ratio_pencil(d, ch, which)
    shift = (ch.N0 / PT) * np.eye(d.M)
    res = gen_eig_max(A + shift, B + shift)
    return res.lambda_max, np.sqrt(PT) * res.eigvec


def t1_max_total(d: AfDerived, ch: ChannelState, PT: float) -> Tuple[float, np.ndarray]:
    """
    Максимум t1 при суммарной мощности PT: наибольшее обобщённое собственное значение пары
    (D_h + (N0/PT) I + Ps hg hg^H, D_z + (N0/PT) I + Ps hz hz^H).

    Args:
        d (AfDerived): Величины AF
        ch (ChannelState): Реализация канала
        PT (float): Суммарная мощность релеев

    Returns:
        tuple: (t1u, w) с ||w||^2 = PT
    """
    return _closed_form(d, ch, PT, Ratio.T1)


def t2_max_total(d: AfDerived, ch: ChannelState, PT: float) -> Tuple[float, np.ndarray]:
    """Максимум t2 при суммарной мощности PT: пара (D_z + (N0/PT) I, D_h + (N0/PT) I)."""
    return _closed_form(d, ch, PT, Ratio.T2)


def rank_ratio(X: np.ndarray) -> float:
    """lambda_2 / lambda_1 для X >= 0; 0 для нулевой матрицы и M = 1."""
    values, _ = hermitian_eig(X)
    if values[0] <= _ZERO_TRACE or values.shape[0] < 2:
        return 0.0
    return float(min(max(values[1], 0.0) / values[0], 1.0))


def extract_rank_one(X: np.ndarray, rank_tol: float, randomization_samples: int,
                     rate_evaluator: Optional[Callable[[np.ndarray], float]] = None,
                     constraint: Optional[PowerConstraint] = None, seed: int = 0) -> np.ndarray:
    """
    Вектор весов из решения релаксации.

    Если lambda_2 / lambda_1 <= rank_tol, ответ sqrt(lambda_1) v_1. Иначе кандидаты: главная
    компонента, она же на границе ограничения мощности и randomization_samples гауссовых проб
    V Lambda^{1/2} r, каждая отмасштабированная на границу; выбирается кандидат с наибольшей
    скоростью rate_evaluator (при равенстве побеждает главная компонента).

    Args:
        X (np.ndarray): Решение релаксации, X >= 0
        rank_tol (float): Порог признания ранга один
        randomization_samples (int): Число гауссовых проб
        rate_evaluator (Callable): Истинная секретная скорость вектора w
        constraint (PowerConstraint): Активное ограничение мощности для масштабирования проб
        seed (int): Зерно генератора проб

    Returns:
        np.ndarray: Веса w, допустимые по ограничению мощности

    Raises:
        ZeroMatrix: Если tr(X) <= 1e-12
    """
    X = np.asarray(X, dtype=np.complex128)
    if float(np.real(np.trace(X))) <= _ZERO_TRACE:
        raise ZeroMatrix("tr(X) <= 1e-12: вектор весов не определён")
    values, V = hermitian_eig(X)
    values = np.clip(values, 0.0, None)
    principal = np.sqrt(values[0]) * V[:, 0]
    ratio = float(values[1] / values[0]) if values.shape[0] > 1 else 0.0
    if ratio <= rank_tol or randomization_samples == 0 or rate_evaluator is None:
        return principal

    logger.info("X не ранга один (lambda_2 / lambda_1 = %.3e), рандомизация по %d пробам", ratio, randomization_samples)
    candidates = [principal]
    if constraint is not None:
        candidates.append(constraint.scale_to_boundary(principal))
    rng = make_rng(seed, stream=1)
    shaped = (V * np.sqrt(values)) @ complex_gaussian(rng, 1.0, (X.shape[0], randomization_samples))
    for k in range(randomization_samples):
        xi = shaped[:, k]
        candidates.append(constraint.scale_to_boundary(xi) if constraint is not None else xi)
    rates = np.array([rate_evaluator(c) for c in candidates])
    best = int(np.argmax(rates))
    logger.debug("Рандомизация: лучший кандидат %d, скорость %.6f (главная компонента %.6f)", best, rates[best], rates[0])
    return candidates[best]


def relaxation_solution(X: np.ndarray, t1: float, t2: float, rate_evaluator: Callable[[np.ndarray], float],
                        constraint: PowerConstraint, cfg: DfAlgorithmConfig,
                        residuals: Optional[ConicResiduals] = None, solves: int = 0,
                        robust: Optional[dict] = None) -> BeamSolution:
    """
    Решение по оптимуму релаксации: скорость log2(t1 * t2), вектор w из X.

    При неположительной скорости или нулевой X возвращается w = 0. Если извлечённый w даёт
    отрицательную скорость rate_evaluator, он также заменяется нулём.
    """
    M = X.shape[0]
    residuals = residuals if residuals is not None else ConicResiduals()
    rate = float(np.log2(t1 * t2))
    if rate <= 0 or float(np.real(np.trace(X))) <= _ZERO_TRACE:
        logger.info("Положительная секретная скорость недостижима, w = 0")
        return BeamSolution.zero(M, constraint, residuals=residuals, solves=solves, robust=robust)

    w = extract_rank_one(X, cfg.rank_tol, cfg.randomization_samples, rate_evaluator, constraint, cfg.seed)
    ratio = rank_ratio(X)
    rank_gap = ratio > cfg.rank_tol
    if rank_gap:
        logger.warning("Разрыв ранга: lambda_2 / lambda_1 = %.3e > %.1e", ratio, cfg.rank_tol)
    w_rate = rate_evaluator(w)
    if not w_rate > 0:
        w, w_rate = np.zeros(M, dtype=np.complex128), 0.0
    return BeamSolution(w=w, X=X, t1=t1, t2=t2, secrecy_rate=rate, w_rate=w_rate, rank_ratio=ratio,
                        rank_gap=rank_gap, constraint=constraint, residuals=residuals, solves=solves,
                        robust=robust)


class AfBeamformer(ConicSolver):
    """
    Оптимальный AF бимформинг: итеративный алгоритм по сетке t1 с бисекцией по t2.

    Attributes:
        config (AfAlgorithmConfig): Параметры алгоритма

    Examples:
        >>> ch = load_channel("tests/corpus/m1_strong.json")
        >>> beamformer = AfBeamformer(config=AfAlgorithmConfig(N=100))
        >>> sol = beamformer.optimize_af(derive_af(ch), ch, PowerConstraint.total(1.0))
        >>> round(sol.secrecy_rate, 4)
        0.3304
    """

    def __init__(self, settings: Optional[SolverSettings] = None, config: Optional[AfAlgorithmConfig] = None,
                 **kwargs):
        super().__init__(settings, **kwargs)
        self.config = config if config is not None else AfAlgorithmConfig()

    def _ratio_program(self, d: AfDerived, ch: ChannelState, constraint: PowerConstraint, which: Ratio):
        A, B = ratio_pencil(d, ch, which)
        return lambda t: constrained_program(d.M, constraint, [ratio_inequality(A, B, t, ch.N0)])

    def _joint_program(self, d: AfDerived, ch: ChannelState, constraint: PowerConstraint, t1: float, t2: float,
                       objective: ObjectiveKind = ObjectiveKind.FEASIBILITY):
        A1, B1 = ratio_pencil(d, ch, Ratio.T1)
        A2, B2 = ratio_pencil(d, ch, Ratio.T2)
        ineqs = [ratio_inequality(A1, B1, t1, ch.N0), ratio_inequality(A2, B2, t2, ch.N0)]
        return constrained_program(d.M, constraint, ineqs, objective=objective)

    def t_max(self, d: AfDerived, ch: ChannelState, constraint: PowerConstraint, which: Ratio,
              tol: Optional[float] = None, closed_form: bool = True) -> Tuple[float, np.ndarray]:
        """
        Максимум t1 или t2 при заданном ограничении мощности.

        При суммарном ограничении используется замкнутая форма (если closed_form), иначе бисекция
        по программам допустимости на интервале [1, max(1, замкнутая форма при PT = total_budget)].

        Args:
            d (AfDerived): Величины AF
            ch (ChannelState): Реализация канала
            constraint (PowerConstraint): Ограничение мощности
            which (Ratio): T1 или T2
            tol (float): Точность бисекции, по умолчанию config.bisection_tol
            closed_form (bool): Разрешить замкнутую форму для суммарного ограничения

        Returns:
            tuple: (t_star, X), X достигает t_star в пределах tol
        """
        constraint.check_dim(d.M)
        which = Ratio(which)
        t_relaxed, w = _closed_form(d, ch, constraint.total_budget(), which)
        if constraint.kind == PowerKind.TOTAL and closed_form:
            # отношение ниже 1 при полной мощности: максимум 1 достигается при X = 0
            if t_relaxed < 1.0:
                return 1.0, np.zeros((d.M, d.M), dtype=np.complex128)
            return t_relaxed, np.outer(w, w.conj())
        spec = BisectionSpec(
            lower=1.0,
            upper=max(1.0, t_relaxed),
            tol=tol if tol is not None else self.config.bisection_tol,
            oracle=self.feasibility_oracle(self._ratio_program(d, ch, constraint, which)),
        )
        t_star, X = bisect(spec)
        logger.debug("t_max(%s, %s): %.10g (верхняя граница %.10g)", which.value, constraint.kind.value, t_star, t_relaxed)
        if X is None:
            X = np.zeros((d.M, d.M), dtype=np.complex128)
        return t_star, X

    def t_max_individual(self, d: AfDerived, ch: ChannelState, p, which: Ratio,
                         tol: Optional[float] = None) -> Tuple[float, np.ndarray]:
        """Максимум t1 или t2 при индивидуальных ограничениях diag(X) <= p (бисекция)."""
        return self.t_max(d, ch, PowerConstraint.individual(p), which, tol)

    def _solution(self, X: np.ndarray, t1: float, t2: float, d: AfDerived, ch: ChannelState,
                  constraint: PowerConstraint, cfg: AfAlgorithmConfig, residuals: ConicResiduals,
                  solves: int) -> BeamSolution:
        return relaxation_solution(X, t1, t2, lambda w: af_secrecy_rate(w, d, ch), constraint, cfg,
                                   residuals, solves)

    def af_achievable(self, d: AfDerived, ch: ChannelState, constraint: PowerConstraint) -> BeamSolution:
        """
        Достижимая скорость: X, максимизирующая t1, и соответствующее ей t2.

        Args:
            d (AfDerived): Величины AF
            ch (ChannelState): Реализация канала
            constraint (PowerConstraint): Ограничение мощности

        Returns:
            BeamSolution: Решение со скоростью log2(t1 * t2)
        """
        start = self.solves
        _, X = self.t_max(d, ch, constraint, Ratio.T1)
        t1, t2 = t_from_relaxation(X, d, ch)
        logger.info("AF достижимая: t1=%.6f t2=%.6f скорость=%.6f", t1, t2, np.log2(t1 * t2))
        return self._solution(X, t1, t2, d, ch, constraint, self.config, ConicResiduals(), self.solves - start)

    def _raise_t2(self, d: AfDerived, ch: ChannelState, constraint: PowerConstraint, t1: float, floor: float,
                  upper: float, cfg: AfAlgorithmConfig) -> Optional[Tuple[float, np.ndarray]]:
        """
        Наибольшее t2 совместной программы при фиксированном t1, если оно не ниже floor.

        Returns:
            tuple: (t2, X) или None, если совместная программа недопустима при t2 = floor
        """
        if cfg.t2_search == T2Search.FRACTIONAL:
            A1, B1 = ratio_pencil(d, ch, Ratio.T1)
            A2, B2 = ratio_pencil(d, ch, Ratio.T2)
            prog = fractional_program(A2, B2, ch.N0, constraint, [ratio_inequality(A1, B1, t1, ch.N0)])
            outcome = self.solve(prog)
            if outcome.status == ConicStatus.INFEASIBLE:
                return None
            if outcome.status == ConicStatus.OPTIMAL:
                if outcome.objective_value < floor:
                    return None
                return outcome.objective_value - cfg.bisection_tol, fractional_solution(outcome.X)
            logger.warning("AF: дробная программа при t1=%.6f вернула %s, переход к бисекции",
                           t1, outcome.status.value)
        oracle = self.feasibility_oracle(lambda t2: self._joint_program(d, ch, constraint, t1, t2))
        feasible, X = oracle(floor)
        if not feasible:
            return None
        return bisect(BisectionSpec(lower=floor, upper=upper, tol=cfg.bisection_tol, oracle=oracle, witness=X))

    def optimize_af(self, d: AfDerived, ch: ChannelState, constraint: PowerConstraint,
                    cfg: Optional[AfAlgorithmConfig] = None) -> BeamSolution:
        """
        Совместная максимизация t1 * t2.

        Старт с достижимой пары (t1o, t2o). Для t1 = i dt, i = N, ..., 1, dt = t1_max / N: если
        t1 < 1 или t1 * t2_max < t1o * t2o, перебор завершается; иначе проверяется допустимость
        совместной программы при t2 = t1o t2o / t1 и, если она допустима, t2 поднимается до t2_max
        (cfg.t2_search: одна дробно-линейная программа или бисекция). Точка i = N совпадает с
        достижимой парой и не решается. В конце X восстанавливается минимизацией tr(X) при найденных
        (t1o, t2o).

        Args:
            d (AfDerived): Величины AF
            ch (ChannelState): Реализация канала
            constraint (PowerConstraint): Ограничение мощности
            cfg (AfAlgorithmConfig): Параметры алгоритма, по умолчанию self.config

        Returns:
            BeamSolution: Оптимальное решение; скорость не меньше достижимой

        Raises:
            NumericalFailure: При численном сбое решателя
        """
        cfg = cfg if cfg is not None else self.config
        constraint.check_dim(d.M)
        start = self.solves

        t1_top, X_best = self.t_max(d, ch, constraint, Ratio.T1, cfg.bisection_tol)
        t2_top, _ = self.t_max(d, ch, constraint, Ratio.T2, cfg.bisection_tol)
        t1o, t2o = t_from_relaxation(X_best, d, ch)
        best = t1o * t2o
        logger.info("AF: t1_max=%.6f t2_max=%.6f, достижимая пара (%.6f, %.6f)", t1_top, t2_top, t1o, t2o)

        dt = t1_top / cfg.N
        for i in range(cfg.N, 0, -1):
            t1 = i * dt
            if t1 < 1.0 or t1 * t2_top < best:
                logger.debug("AF: останов на i=%d (t1=%.6f)", i, t1)
                break
            if i == cfg.N:
                # при t1 = t1_max допустима только достижимая пара, свидетель X_best
                continue
            floor = best / t1
            found = self._raise_t2(d, ch, constraint, t1, floor, max(t2_top, floor), cfg)
            if found is None:
                logger.debug("AF: совместная программа недопустима при t1=%.6f t2=%.6f", t1, floor)
                break
            t2, X = found
            if t1 * t2 > best:
                t1o, t2o, best, X_best = t1, t2, t1 * t2, X

        prog = self._joint_program(d, ch, constraint, t1o, t2o, objective=ObjectiveKind.MIN_TRACE)
        X_opt, outcome = self.recover_min_trace(prog, X_best)
        logger.info("AF оптимум: t1=%.6f t2=%.6f скорость=%.6f, решений: %d",
                    t1o, t2o, np.log2(best), self.solves - start)
        return self._solution(X_opt, t1o, t2o, d, ch, constraint, cfg, outcome.residuals, self.solves - start)
