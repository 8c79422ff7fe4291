import numpy as np

from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Any, Callable, Dict, List, Optional, Tuple
from ._arrays import real_vector, hermitian_matrix


class SolverSettings(BaseModel):
    """Настройки конического решателя и бисекции."""
    model_config = ConfigDict(str_strip_whitespace=True)

    backend: str = Field(default="CLARABEL", min_length=1, description="Имя решателя cvxpy")
    max_iterations: int = Field(default=200, ge=1, description="Предел итераций внутренней точки")
    feasibility_tol: float = Field(default=1e-7, gt=0, description="Порог фазы I: s* > tol => недопустимо")
    psd_floor: float = Field(default=1e-8, gt=0, description="Допуск на отрицательные собственные числа X относительно tr(X)")
    bisection_tol: float = Field(default=1e-6, gt=0, description="Абсолютная точность бисекции по t")
    backend_options: Dict[str, Any] = Field(default_factory=dict, description="Дополнительные параметры решателя")
    dump_dir: Optional[str] = Field(default=None, description="Каталог для отладочных JSON-дампов программ")

    @field_validator('backend')
    @classmethod
    def validate_backend(cls, v: str) -> str:
        return v.upper()


class ObjectiveKind(str, Enum):
    FEASIBILITY = "feasibility"
    MIN_TRACE = "min_trace"
    MAX_LINEAR = "max_linear"


class TraceInequality(BaseModel):
    """Линейное ограничение tr(A X) >= b."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: np.ndarray = Field(..., description="Эрмитова матрица ограничения")
    b: float = Field(..., description="Правая часть")

    @field_validator('A', mode='before')
    @classmethod
    def validate_matrix(cls, v: Any) -> np.ndarray:
        return hermitian_matrix(v)


class NormBound(BaseModel):
    """Ограничение ||X||_F <= c0 + c1 * tr(C X)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    c0: float = Field(..., description="Свободный член")
    c1: float = Field(..., description="Множитель при tr(C X)")
    C: np.ndarray = Field(..., description="Эрмитова матрица линейной части")

    @field_validator('C', mode='before')
    @classmethod
    def validate_matrix(cls, v: Any) -> np.ndarray:
        return hermitian_matrix(v)


class ConicProgram(BaseModel):
    """
    Программа с одной эрмитовой PSD переменной X размера dim x dim.

    Цель: допустимость, минимум tr(X) или максимум tr(C X). Ограничения: tr(A_i X) >= b_i,
    diag(X) <= p, tr(X) <= P_T и не более одного ограничения на норму Фробениуса.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(..., ge=1, le=64, description="Размерность PSD переменной")
    objective: ObjectiveKind = Field(default=ObjectiveKind.FEASIBILITY, description="Вид цели")
    C: Optional[np.ndarray] = Field(default=None, description="Матрица цели для MAX_LINEAR")
    trace_ineqs: List[TraceInequality] = Field(default_factory=list, description="Ограничения tr(A_i X) >= b_i")
    diag_upper: Optional[np.ndarray] = Field(default=None, description="Верхние границы diag(X)")
    trace_upper: Optional[float] = Field(default=None, gt=0, description="Верхняя граница tr(X)")
    norm_bound: Optional[NormBound] = Field(default=None, description="Ограничение на ||X||_F")

    @field_validator('C', mode='before')
    @classmethod
    def validate_objective_matrix(cls, v: Any) -> Optional[np.ndarray]:
        return None if v is None else hermitian_matrix(v)

    @field_validator('diag_upper', mode='before')
    @classmethod
    def validate_diag_upper(cls, v: Any) -> Optional[np.ndarray]:
        if v is None:
            return v
        arr = real_vector(v)
        if np.any(arr < 0):
            raise ValueError("Границы diag(X) должны быть неотрицательными")
        return arr

    @model_validator(mode='after')
    def validate_program(self) -> 'ConicProgram':
        shape = (self.dim, self.dim)
        for i, ineq in enumerate(self.trace_ineqs):
            if ineq.A.shape != shape:
                raise ValueError(f"Ограничение {i}: размер A {ineq.A.shape} != {shape}")
        if self.diag_upper is not None and self.diag_upper.shape[0] != self.dim:
            raise ValueError("Длина diag_upper не совпадает с dim")
        if self.norm_bound is not None and self.norm_bound.C.shape != shape:
            raise ValueError("Размер матрицы в norm_bound не совпадает с dim")
        if self.objective == ObjectiveKind.MAX_LINEAR:
            if self.C is None or self.C.shape != shape:
                raise ValueError("Для MAX_LINEAR требуется матрица C размера dim x dim")
            if self.diag_upper is None and self.trace_upper is None:
                raise ValueError("Для MAX_LINEAR требуется diag_upper или trace_upper (ограниченность)")
        return self

    def signature(self) -> Tuple:
        """Структурный ключ программы: одинаковые ключи компилируются в одну параметрическую задачу."""
        return (
            self.dim,
            self.objective.value,
            len(self.trace_ineqs),
            self.diag_upper is not None,
            self.trace_upper is not None,
            self.norm_bound is not None,
        )


class ConicStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    NUMERICAL_FAILURE = "numerical_failure"


class ConicResiduals(BaseModel):
    primal: Optional[float] = Field(default=None, description="Наибольшее относительное нарушение ограничений")
    gap: Optional[float] = Field(default=None, description="Относительный зазор двойственности")
    slack: Optional[float] = Field(default=None, description="Оптимум s фазы I")
    min_eig: Optional[float] = Field(default=None, description="Наименьшее собственное число X до проекции")


class ConicOutcome(BaseModel):
    """Результат решения конической программы."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: ConicStatus = Field(..., description="Статус")
    X: Optional[np.ndarray] = Field(default=None, description="Решение (PSD, после проекции)")
    objective_value: Optional[float] = Field(default=None, description="Значение цели")
    iterations: int = Field(default=0, ge=0, description="Итерации решателя")
    residuals: ConicResiduals = Field(default_factory=ConicResiduals, description="Невязки")

    @property
    def is_feasible(self) -> bool:
        return self.status in (ConicStatus.FEASIBLE, ConicStatus.OPTIMAL)


class BisectionSpec(BaseModel):
    """
    Задание бисекции: интервал [lower, upper], точность tol и монотонный оракул допустимости.

    Оракул принимает t и возвращает пару (допустимо, свидетель X или None). Если witness задан,
    lower считается допустимой с этим свидетелем и повторно не проверяется.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lower: float = Field(..., description="Нижняя граница")
    upper: float = Field(..., description="Верхняя граница")
    tol: float = Field(default=1e-6, gt=0, description="Ширина интервала для остановки")
    oracle: Callable[[float], Tuple[bool, Optional[np.ndarray]]] = Field(..., description="Оракул допустимости")
    witness: Optional[np.ndarray] = Field(default=None, description="Известный свидетель допустимости в lower")

    @model_validator(mode='after')
    def validate_interval(self) -> 'BisectionSpec':
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("Границы интервала должны быть конечными")
        if self.upper < self.lower:
            raise ValueError(f"upper ({self.upper}) должна быть не меньше lower ({self.lower})")
        return self


class _EmbeddedInequality(BaseModel):
    A: List[List[float]]
    b: float


class ConicProgramDump(BaseModel):
    """Отладочный дамп программы в вещественном вложении (2M x 2M) для сверки с внешними решателями."""
    dim: int
    embedded_dim: int
    objective: str
    C: Optional[List[List[float]]] = None
    trace_ineqs: List[_EmbeddedInequality] = Field(default_factory=list)
    diag_upper: Optional[List[float]] = None
    trace_upper: Optional[float] = None
    norm_bound: Optional[Dict[str, Any]] = None
    note: str = "tr(E(A) E(X)) = 2 tr(A X), ||E(X)||_F = sqrt(2) ||X||_F"
