import numpy as np

from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator
from typing import Annotated, Any, Dict, Literal, Optional, Union
from .channel_models import PowerConstraint
from .conic_models import ConicResiduals
from ._arrays import complex_vector, hermitian_matrix, complex_to_json


class DfAlgorithmConfig(BaseModel):
    """Параметры бисекции и извлечения вектора весов из релаксации."""
    bisection_tol: float = Field(default=1e-6, gt=0, description="Точность бисекции по t")
    rank_tol: float = Field(default=1e-6, gt=0, description="Порог lambda_2 / lambda_1 для признания X ранга один")
    randomization_samples: int = Field(default=1000, ge=0, description="Число гауссовых проб при рандомизации")
    seed: int = Field(default=0, ge=0, description="Зерно генератора рандомизации")


class T2Search(str, Enum):
    FRACTIONAL = "fractional"
    BISECTION = "bisection"


class AfAlgorithmConfig(DfAlgorithmConfig):
    """Параметры итеративного алгоритма AF."""
    N: int = Field(default=1000, ge=2, description="Число точек сетки по t1, шаг dt = t1_max / N")
    t2_search: T2Search = Field(default=T2Search.FRACTIONAL, description="Поиск наибольшего t2 в точке сетки: одна дробно-линейная программа или бисекция по программам допустимости")


class WorstCaseParams(BaseModel):
    """Ошибки оценки ограничены по норме Фробениуса: ||H~|| <= eps_h, ||Z~|| <= eps_z."""
    kind: Literal["worst_case"] = "worst_case"
    eps_h: float = Field(..., ge=0, description="Радиус неопределённости канала получателя")
    eps_z: float = Field(..., ge=0, description="Радиус неопределённости канала подслушивателя")


class StatisticalParams(BaseModel):
    """Гауссовы ошибки оценки с дисперсиями var_h, var_z и требуемая вероятность неотказа eps."""
    kind: Literal["statistical"] = "statistical"
    var_h: float = Field(..., ge=0, description="Дисперсия элементов H~")
    var_z: float = Field(..., ge=0, description="Дисперсия элементов Z~")
    eps: float = Field(..., gt=0.5, lt=1.0, description="Порог вероятности неотказа, (0.5, 1)")


RobustParams = Annotated[Union[WorstCaseParams, StatisticalParams], Field(discriminator='kind')]


class OutageSettings(BaseModel):
    """Настройки Monte Carlo проверки вероятности неотказа."""
    trials: int = Field(default=100_000, ge=10_000, description="Число испытаний")
    chunk_size: int = Field(default=10_000, ge=1, description="Размер пачки испытаний (свой поток ГСЧ на пачку)")
    convention: Literal["hermitian_sym"] = Field(default="hermitian_sym", description="Способ построения эрмитовой ошибки: (G + G^H) / 2")
    seed: int = Field(default=0, ge=0, description="Зерно")


class BeamSolution(BaseModel):
    """
    Решение задачи бимформинга.

    Attributes:
        w (np.ndarray): Веса релеев
        X (np.ndarray): Матрица релаксации
        t1 (float): Достигнутое t1 (для DF: оптимум бисекции t)
        t2 (float): Достигнутое t2 (для DF всегда 1)
        secrecy_rate (float): log2(t1 * t2), бит/символ, не меньше 0
        w_rate (float): Скорость, которую реально обеспечивает w (для робастных схем: гарантированная)
        rank_ratio (float): lambda_2 / lambda_1 матрицы X
        rank_gap (bool): Релаксация не подтверждена как точная (rank_ratio > rank_tol)
        constraint (PowerConstraint): Ограничение мощности
        residuals (ConicResiduals): Невязки последнего решения
        solves (int): Число решённых конических программ
        robust (dict): Параметры робастности (только DF)
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    w: np.ndarray = Field(..., description="Веса релеев")
    X: np.ndarray = Field(..., description="Матрица релаксации")
    t1: float = Field(..., ge=0, description="t1")
    t2: float = Field(..., ge=0, description="t2")
    secrecy_rate: float = Field(..., ge=0, description="Секретная скорость, бит/символ")
    w_rate: float = Field(..., description="Скорость, достигаемая вектором w")
    rank_ratio: float = Field(..., ge=0, le=1, description="lambda_2 / lambda_1")
    rank_gap: bool = Field(default=False, description="Флаг разрыва ранга")
    constraint: PowerConstraint = Field(..., description="Ограничение мощности")
    residuals: ConicResiduals = Field(default_factory=ConicResiduals, description="Невязки решателя")
    solves: int = Field(default=0, ge=0, description="Число конических решений")
    robust: Optional[Dict[str, Any]] = Field(default=None, description="Эхо параметров робастности")

    @field_validator('w', mode='before')
    @classmethod
    def validate_weights(cls, v: Any) -> np.ndarray:
        return complex_vector(v)

    @field_validator('X', mode='before')
    @classmethod
    def validate_relaxation(cls, v: Any) -> np.ndarray:
        return hermitian_matrix(v, tol=1e-6)

    @field_serializer('w')
    def serialize_w(self, w: np.ndarray) -> Dict[str, list]:
        return complex_to_json(w)

    @field_serializer('X')
    def serialize_x(self, X: np.ndarray) -> Dict[str, list]:
        return complex_to_json(X)

    def to_json(self, indent: Optional[int] = 2) -> str:
        return self.model_dump_json(indent=indent)

    @classmethod
    def zero(cls, M: int, constraint: PowerConstraint, **kwargs) -> 'BeamSolution':
        """Нулевые веса: нижняя граница секретной скорости 0."""
        return cls(
            w=np.zeros(M, dtype=np.complex128),
            X=np.zeros((M, M), dtype=np.complex128),
            t1=1.0, t2=1.0, secrecy_rate=0.0, w_rate=0.0, rank_ratio=0.0,
            constraint=constraint, **kwargs
        )
