import os
import logging
import numpy as np
import cvxpy as cp

from typing import Callable, Dict, List, Optional, Tuple
from .exceptions import EmptyInterval, NumericalFailure
from .models.channel_models import PowerConstraint
from .models.conic_models import SolverSettings, ObjectiveKind, ConicProgram, ConicStatus, ConicResiduals, \
                                 ConicOutcome, BisectionSpec, ConicProgramDump, TraceInequality, NormBound

logger = logging.getLogger(__name__)

_SOLVED = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
_INFEASIBLE = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)


def embed_complex(H: np.ndarray) -> np.ndarray:
    """
    Вещественное вложение эрмитовой матрицы: [[Re H, -Im H], [Im H, Re H]].

    H >= 0 тогда и только тогда, когда вложение >= 0; спектр вложения совпадает со спектром H
    с удвоенной кратностью. Для эрмитовых A, X: tr(E(A) E(X)) = 2 tr(A X), ||E(X)||_F = sqrt(2) ||X||_F.

    Args:
        H (np.ndarray): Эрмитова матрица M x M

    Returns:
        np.ndarray: Вещественная симметричная матрица 2M x 2M
    """
    H = np.asarray(H, dtype=np.complex128)
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


class _CompiledProgram:
    """Параметрическая (DPP) задача cvxpy для одного структурного ключа программы."""

    def __init__(self, prog: ConicProgram, phase_one: bool):
        M = prog.dim
        n = 2 * M
        self.dim = M
        self.phase_one = phase_one
        self.Y = cp.Variable((n, n), symmetric=True)
        self.s = cp.Variable() if phase_one else None
        relax = self.s if phase_one else 0.0
        # вложенная структура: Y = [[Xr, -Xi], [Xi, Xr]]
        constraints = [self.Y >> 0, self.Y[:M, :M] == self.Y[M:, M:], self.Y[M:, :M] == -self.Y[:M, M:]]

        self.E: List[cp.Parameter] = []
        self.b: List[cp.Parameter] = []
        self.ineq_cons = []
        for _ in prog.trace_ineqs:
            E, b = cp.Parameter((n, n)), cp.Parameter()
            con = 0.5 * cp.sum(cp.multiply(E, self.Y)) + relax >= b
            self.E.append(E)
            self.b.append(b)
            self.ineq_cons.append(con)
        constraints += self.ineq_cons

        self.p = self.diag_con = None
        if prog.diag_upper is not None:
            self.p = cp.Parameter(M, nonneg=True)
            self.diag_con = cp.diag(self.Y[:M, :M]) <= self.p
            constraints.append(self.diag_con)

        self.PT = self.trace_con = None
        if prog.trace_upper is not None:
            self.PT = cp.Parameter(nonneg=True)
            self.trace_con = 0.5 * cp.trace(self.Y) <= self.PT
            constraints.append(self.trace_con)

        self.norm_inv = self.norm_c0 = self.norm_E = None
        if prog.norm_bound is not None:
            self.norm_inv = cp.Parameter(nonneg=True)
            self.norm_c0 = cp.Parameter()
            self.norm_E = cp.Parameter((n, n))
            lhs = self.norm_inv * cp.norm(self.Y, 'fro') / np.sqrt(2.0)
            constraints.append(lhs <= self.norm_c0 + 0.5 * cp.sum(cp.multiply(self.norm_E, self.Y)) + relax)

        self.C = None
        if phase_one:
            constraints.append(self.s >= -1.0)
            objective = cp.Minimize(self.s)
        elif prog.objective == ObjectiveKind.MIN_TRACE:
            objective = cp.Minimize(0.5 * cp.trace(self.Y))
        else:
            self.C = cp.Parameter((n, n))
            objective = cp.Maximize(0.5 * cp.sum(cp.multiply(self.C, self.Y)))
        self.problem = cp.Problem(objective, constraints)

    def bind(self, prog: ConicProgram) -> np.ndarray:
        """Записывает численные данные программы в параметры; возвращает нормированные b_i."""
        b_scaled = np.zeros(len(prog.trace_ineqs))
        for i, ineq in enumerate(prog.trace_ineqs):
            scale = 1.0 + abs(ineq.b)
            self.E[i].value = embed_complex(ineq.A) / scale
            self.b[i].value = ineq.b / scale
            b_scaled[i] = ineq.b / scale
        if self.p is not None:
            self.p.value = np.asarray(prog.diag_upper, dtype=float)
        if self.PT is not None:
            self.PT.value = float(prog.trace_upper)
        if self.norm_inv is not None:
            nb = prog.norm_bound
            scale = 1.0 + abs(nb.c0)
            self.norm_inv.value = 1.0 / scale
            self.norm_c0.value = nb.c0 / scale
            self.norm_E.value = nb.c1 * embed_complex(nb.C) / scale
        if self.C is not None:
            self.C.value = embed_complex(prog.C)
        return b_scaled

    def extract(self) -> np.ndarray:
        Y = self.Y.value
        M = self.dim
        X = Y[:M, :M] + 1j * Y[M:, :M]
        return 0.5 * (X + X.conj().T)


class ConicSolver:
    """
    Решатель программ с одной эрмитовой PSD переменной на базе cvxpy.

    Программы ставятся на вещественном вложении X -> [[Re X, -Im X], [Im X, Re X]] и компилируются
    один раз на структурный ключ (размерность, вид цели, число ограничений); повторные решения
    меняют только значения параметров. Экземпляр не потокобезопасен: для параллельных решений
    используйте отдельные экземпляры.

    Attributes:
        settings (SolverSettings): Настройки решателя
        solves (int): Число выполненных решений

    Examples:
        >>> solver = ConicSolver()
        >>> prog = ConicProgram(dim=2, trace_ineqs=[TraceInequality(A=np.eye(2), b=1.0)], diag_upper=[1, 1])
        >>> solver.solve(prog).status
        <ConicStatus.FEASIBLE: 'feasible'>
    """

    def __init__(self, settings: Optional[SolverSettings] = None, **kwargs):
        self.settings = settings if settings is not None else SolverSettings(**kwargs)
        self.solves = 0
        self._compiled: Dict[Tuple, _CompiledProgram] = {}

    def clear_cache(self) -> None:
        self._compiled.clear()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.clear_cache()

    def _compiled_for(self, prog: ConicProgram, phase_one: bool) -> _CompiledProgram:
        key = prog.signature() + (phase_one,)
        if key not in self._compiled:
            self._compiled[key] = _CompiledProgram(prog, phase_one)
        return self._compiled[key]

    def _backend_options(self) -> dict:
        opts = dict(self.settings.backend_options)
        if self.settings.backend == 'CLARABEL':
            opts.setdefault('max_iter', self.settings.max_iterations)
        elif self.settings.backend == 'SCS':
            opts.setdefault('max_iters', 50 * self.settings.max_iterations)
        return opts

    def solve(self, prog: ConicProgram) -> ConicOutcome:
        """
        Решает коническую программу.

        Допустимость решается фазой I: min s при ограничениях, ослабленных на s (1 + |b_i|), s >= -1;
        программа недопустима, если s* > feasibility_tol. Возвращаемая X спроецирована на PSD конус.

        Args:
            prog (ConicProgram): Программа

        Returns:
            ConicOutcome: FEASIBLE / INFEASIBLE / OPTIMAL / NUMERICAL_FAILURE
        """
        phase_one = prog.objective == ObjectiveKind.FEASIBILITY
        compiled = self._compiled_for(prog, phase_one)
        b_scaled = compiled.bind(prog)
        self.solves += 1
        if self.settings.dump_dir:
            self.dump_problem(prog, os.path.join(self.settings.dump_dir, f"program_{self.solves:06d}.json"))
        try:
            compiled.problem.solve(solver=self.settings.backend, **self._backend_options())
        except cp.error.SolverError as e:
            logger.warning("Решатель %s завершился с ошибкой: %s", self.settings.backend, e)
            return ConicOutcome(status=ConicStatus.NUMERICAL_FAILURE)
        status = compiled.problem.status
        stats = compiled.problem.solver_stats
        iterations = int(stats.num_iters) if stats is not None and stats.num_iters is not None else 0

        if status in _INFEASIBLE and not phase_one:
            return ConicOutcome(status=ConicStatus.INFEASIBLE, iterations=iterations)
        if status not in _SOLVED or compiled.Y.value is None:
            logger.warning("Решатель вернул статус %s (итераций: %d)", status, iterations)
            return ConicOutcome(status=ConicStatus.NUMERICAL_FAILURE, iterations=iterations)

        X, min_eig = self._project_psd(compiled.extract())
        residuals = ConicResiduals(primal=self._primal_residual(prog, X), min_eig=min_eig)
        if phase_one:
            slack = float(compiled.s.value)
            residuals.slack = slack
            feasible = slack <= self.settings.feasibility_tol
            logger.debug("phase-I: s*=%.3e -> %s (итераций: %d)", slack, "допустимо" if feasible else "недопустимо", iterations)
            return ConicOutcome(
                status=ConicStatus.FEASIBLE if feasible else ConicStatus.INFEASIBLE,
                X=X if feasible else None,
                iterations=iterations,
                residuals=residuals,
            )

        value = float(compiled.problem.value)
        residuals.gap = self._duality_gap(prog, compiled, b_scaled, value)
        logger.debug("%s: value=%.10g gap=%s (итераций: %d)", prog.objective.value, value, residuals.gap, iterations)
        return ConicOutcome(status=ConicStatus.OPTIMAL, X=X, objective_value=value,
                            iterations=iterations, residuals=residuals)

    def _project_psd(self, X: np.ndarray) -> Tuple[np.ndarray, float]:
        values, vectors = np.linalg.eigh(X)
        min_eig = float(values[0])
        floor = -self.settings.psd_floor * max(float(np.sum(values)), 1.0)
        if min_eig < floor:
            logger.debug("Наименьшее собственное число X = %.3e ниже допуска %.3e", min_eig, floor)
        clipped = np.clip(values, 0.0, None)
        X = (vectors * clipped) @ vectors.conj().T
        return 0.5 * (X + X.conj().T), min_eig

    @staticmethod
    def _primal_residual(prog: ConicProgram, X: np.ndarray) -> float:
        worst = 0.0
        for ineq in prog.trace_ineqs:
            lhs = float(np.real(np.trace(ineq.A @ X)))
            worst = max(worst, (ineq.b - lhs) / (1.0 + abs(ineq.b)))
        diag = np.real(np.diag(X))
        if prog.diag_upper is not None:
            worst = max(worst, float(np.max((diag - prog.diag_upper) / (1.0 + prog.diag_upper))))
        if prog.trace_upper is not None:
            worst = max(worst, (float(np.sum(diag)) - prog.trace_upper) / (1.0 + prog.trace_upper))
        if prog.norm_bound is not None:
            nb = prog.norm_bound
            rhs = nb.c0 + nb.c1 * float(np.real(np.trace(nb.C @ X)))
            worst = max(worst, (float(np.linalg.norm(X, 'fro')) - rhs) / (1.0 + abs(nb.c0)))
        return worst

    @staticmethod
    def _duality_gap(prog: ConicProgram, compiled: _CompiledProgram, b_scaled: np.ndarray,
                     value: float) -> Optional[float]:
        if prog.norm_bound is not None:
            return None
        try:
            y = np.array([float(con.dual_value) for con in compiled.ineq_cons])
            bound = -float(np.dot(y, b_scaled)) if y.size else 0.0
            if compiled.diag_con is not None:
                bound += float(np.dot(np.asarray(compiled.diag_con.dual_value, dtype=float), prog.diag_upper))
            if compiled.trace_con is not None:
                bound += float(compiled.trace_con.dual_value) * prog.trace_upper
        except (TypeError, ValueError):
            return None
        # верхняя граница двойственной задачи для цели в форме максимизации
        primal = value if prog.objective == ObjectiveKind.MAX_LINEAR else -value
        return abs(bound - primal) / (1.0 + abs(primal))

    def feasibility_oracle(self, build: Callable[[float], ConicProgram]) -> Callable[[float], Tuple[bool, Optional[np.ndarray]]]:
        """Оракул для bisect: t -> (допустимо, свидетель X) по программе build(t)."""
        def oracle(t: float) -> Tuple[bool, Optional[np.ndarray]]:
            outcome = self.solve(build(t))
            if outcome.status == ConicStatus.NUMERICAL_FAILURE:
                raise NumericalFailure(f"Численный сбой решателя при t={t:.10g}", outcome)
            return outcome.is_feasible, outcome.X
        return oracle

    def recover_min_trace(self, prog: ConicProgram, fallback: Optional[np.ndarray]) -> Tuple[np.ndarray, ConicOutcome]:
        """
        Минимизирует tr(X) на допустимом множестве программы; при отказе возвращает fallback.
        """
        outcome = self.solve(prog.model_copy(update={'objective': ObjectiveKind.MIN_TRACE}))
        primal = outcome.residuals.primal
        if outcome.status == ConicStatus.OPTIMAL and (primal is None or primal <= 1e-5):
            return outcome.X, outcome
        logger.warning("Восстановление min tr(X) вернуло %s, используется свидетель бисекции", outcome.status.value)
        if fallback is None:
            fallback = np.zeros((prog.dim, prog.dim), dtype=np.complex128)
        return fallback, outcome

    def dump_problem(self, prog: ConicProgram, path: str) -> None:
        """Отладочный дамп программы в вещественном вложении в JSON."""
        dump = ConicProgramDump(
            dim=prog.dim,
            embedded_dim=2 * prog.dim,
            objective=prog.objective.value,
            C=None if prog.C is None else embed_complex(prog.C).tolist(),
            trace_ineqs=[{'A': embed_complex(i.A).tolist(), 'b': i.b} for i in prog.trace_ineqs],
            diag_upper=None if prog.diag_upper is None else prog.diag_upper.tolist(),
            trace_upper=prog.trace_upper,
            norm_bound=None if prog.norm_bound is None else {
                'c0': prog.norm_bound.c0,
                'c1': prog.norm_bound.c1,
                'C': embed_complex(prog.norm_bound.C).tolist(),
            },
        )
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'w', encoding='UTF-8') as f:
            f.write(dump.model_dump_json(indent=2))


def solve(prog: ConicProgram, settings: Optional[SolverSettings] = None) -> ConicOutcome:
    return ConicSolver(settings).solve(prog)


def bisect(spec: BisectionSpec) -> Tuple[float, Optional[np.ndarray]]:
    """
    Бисекция квазивыпуклой задачи по монотонному оракулу допустимости.

    Сначала проверяется lower (иначе EmptyInterval; пропускается, если в spec задан свидетель
    witness), затем upper (если допустимо, ответ upper);
    далее интервал делится пополам, пока его ширина больше tol. Ответ: последняя допустимая точка
    и её свидетель.

    Args:
        spec (BisectionSpec): Интервал, точность и оракул

    Returns:
        tuple: (t_star, X) с допустимым оракулом в t_star и недопустимым в t_star + tol

    Raises:
        EmptyInterval: Если оракул недопустим в lower

    Example:
        >>> spec = BisectionSpec(lower=0, upper=10, tol=1e-6, oracle=lambda t: (t <= 2.5, None))
        >>> round(bisect(spec)[0], 5)
        2.5
    """
    witness = spec.witness
    if witness is None:
        feasible, witness = spec.oracle(spec.lower)
        if not feasible:
            raise EmptyInterval(spec.lower, spec.upper)
    lower, upper = spec.lower, spec.upper
    if upper - lower <= spec.tol:
        return lower, witness
    feasible, X = spec.oracle(upper)
    if feasible:
        return upper, X
    steps = 0
    while upper - lower > spec.tol:
        mid = 0.5 * (lower + upper)
        feasible, X = spec.oracle(mid)
        if feasible:
            lower, witness = mid, X
        else:
            upper = mid
        steps += 1
        logger.debug("bisect: шаг %d, [%.10g, %.10g]", steps, lower, upper)
    return lower, witness


def ratio_inequality(A: np.ndarray, B: np.ndarray, t: float, N0: float) -> TraceInequality:
    """Ограничение уровня отношения (N0 + tr(A X)) / (N0 + tr(B X)) >= t: tr(X (A - t B)) >= N0 (t - 1)."""
    return TraceInequality(A=np.asarray(A) - t * np.asarray(B), b=N0 * (t - 1.0))


def constrained_program(dim: int, constraint: PowerConstraint, ineqs: List[TraceInequality],
                        norm_bound: Optional[NormBound] = None,
                        objective: ObjectiveKind = ObjectiveKind.FEASIBILITY) -> ConicProgram:
    """Программа с ограничением мощности: diag(X) <= p и/или tr(X) <= P_T."""
    constraint.check_dim(dim)
    diag_upper, trace_upper = constraint.bounds()
    return ConicProgram(dim=dim, objective=objective, trace_ineqs=ineqs, diag_upper=diag_upper,
                        trace_upper=trace_upper, norm_bound=norm_bound)


def _bordered(A: np.ndarray, corner: float) -> np.ndarray:
    dim = A.shape[0]
    out = np.zeros((dim + 1, dim + 1), dtype=np.complex128)
    out[:dim, :dim] = A
    out[dim, dim] = corner
    return out


def fractional_program(A: np.ndarray, B: np.ndarray, N0: float, constraint: PowerConstraint,
                       ineqs: List[TraceInequality]) -> ConicProgram:
    """
    max (N0 + tr(A X)) / (N0 + tr(B X)) при tr(A_i X) >= b_i и ограничении мощности одной программой.

    Переменная Z = [[Y, *], [*, s]] размера dim + 1, X = Y / s. Знаменатель нормирован:
    N0 s + tr(B Y) <= 1, остальные ограничения однородны по (Y, s). Оптимум цели равен максимуму
    отношения; B >= 0, N0 > 0.

    Args:
        A (np.ndarray): Числитель отношения
        B (np.ndarray): Знаменатель отношения, PSD
        N0 (float): Шум
        constraint (PowerConstraint): Ограничение мощности
        ineqs (list): Ограничения tr(A_i X) >= b_i на исходную переменную

    Returns:
        ConicProgram: Программа MAX_LINEAR размера dim + 1; X восстанавливает fractional_solution
    """
    A = np.asarray(A, dtype=np.complex128)
    dim = A.shape[0]
    constraint.check_dim(dim)
    if N0 <= 0:
        raise ValueError("N0 должна быть положительной")
    rows = [TraceInequality(A=_bordered(ineq.A, -ineq.b), b=0.0) for ineq in ineqs]
    diag_upper, trace_upper = constraint.bounds()
    if diag_upper is not None:
        for m in range(dim):
            E = np.zeros((dim, dim))
            E[m, m] = -1.0
            rows.append(TraceInequality(A=_bordered(E, diag_upper[m]), b=0.0))
    if trace_upper is not None:
        rows.append(TraceInequality(A=_bordered(-np.eye(dim), trace_upper), b=0.0))
    rows.append(TraceInequality(A=_bordered(-np.asarray(B, dtype=np.complex128), -N0), b=-1.0))
    # tr(Y) <= P s и s <= 1 / N0
    bound = (constraint.total_budget() + 1.0) / N0
    return ConicProgram(dim=dim + 1, objective=ObjectiveKind.MAX_LINEAR, C=_bordered(A, N0), trace_ineqs=rows,
                        trace_upper=bound)


def fractional_solution(Z: np.ndarray) -> np.ndarray:
    """X = Y / s из решения fractional_program."""
    dim = Z.shape[0] - 1
    s = float(np.real(Z[dim, dim]))
    if s <= 0:
        raise NumericalFailure(f"Вырожденное решение дробной программы: s = {s:.3e}")
    X = Z[:dim, :dim] / s
    return 0.5 * (X + X.conj().T)
