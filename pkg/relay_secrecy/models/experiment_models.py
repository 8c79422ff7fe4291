from enum import Enum
from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Dict, List, Optional, Tuple
from .beam_models import AfAlgorithmConfig, DfAlgorithmConfig, RobustParams
from .channel_models import PowerKind
from .conic_models import SolverSettings


class ExperimentMode(str, Enum):
    AF_SWEEP = "af_sweep"
    DF_ROBUST_SWEEP = "df_robust_sweep"
    SOLVE_ONE = "solve_one"


class SolveStrategy(str, Enum):
    AF_OPTIMAL = "af_optimal"
    AF_ACHIEVABLE = "af_achievable"
    DF_PERFECT = "df_perfect"
    DF_ROBUST = "df_robust"


class VarianceRule(BaseModel):
    """Дисперсии ошибок оценки, обратно пропорциональные мощности: var = coeff / PT."""
    var_h_coeff: float = Field(default=0.1, ge=0, description="Коэффициент дисперсии ошибки H~")
    var_z_coeff: float = Field(default=0.2, ge=0, description="Коэффициент дисперсии ошибки Z~")

    def variances(self, PT: float) -> Tuple[float, float]:
        return self.var_h_coeff / PT, self.var_z_coeff / PT


class ExperimentConfig(BaseModel):
    """
    Конфигурация эксперимента: параметры канала, сетка мощностей, робастность и настройки решателя.

    Загружается из одного JSON документа; флаги --config, --seed, --out переопределяют значения файла.
    """
    mode: ExperimentMode = Field(default=ExperimentMode.AF_SWEEP, description="Вид эксперимента")
    M: int = Field(default=10, ge=1, le=64, description="Число релеев")
    sigma_g: float = Field(default=10.0, gt=0, description="СКО канала источник -> реле")
    sigma_h: float = Field(default=2.0, gt=0, description="СКО канала реле -> получатель")
    sigma_z: float = Field(default=2.0, gt=0, description="СКО канала реле -> подслушиватель")
    Ps: float = Field(default=1.0, gt=0, description="Мощность источника")
    Nm: float = Field(default=1.0, gt=0, description="Дисперсия шума релеев")
    N0: float = Field(default=1.0, gt=0, description="Дисперсия шума приёмников")
    power_grid: List[float] = Field(
        default_factory=lambda: [float(x) for x in range(5, 105, 5)],
        min_length=1,
        description="Сетка мощностей: PT / Ps для af_sweep, PT для df_robust_sweep и solve_one"
    )
    eps: List[float] = Field(default_factory=lambda: [0.7, 0.8, 0.9, 0.95],
                             description="Пороги вероятности неотказа, каждый в (0.5, 1)")
    variance: VarianceRule = Field(default_factory=VarianceRule, description="Правило дисперсий ошибок")
    seed: int = Field(default=0, ge=0, description="Зерно реализации канала")
    af: AfAlgorithmConfig = Field(default_factory=AfAlgorithmConfig, description="Параметры алгоритма AF")
    df: DfAlgorithmConfig = Field(default_factory=DfAlgorithmConfig, description="Параметры бисекции DF")
    solver: SolverSettings = Field(default_factory=SolverSettings, description="Настройки конического решателя")
    strategy: SolveStrategy = Field(default=SolveStrategy.AF_OPTIMAL, description="Оптимизатор для solve_one")
    constraint_kind: PowerKind = Field(default=PowerKind.TOTAL, description="Ограничение мощности для solve_one")
    p: Optional[List[float]] = Field(default=None, description="Индивидуальные мощности для solve_one; None - поровну PT / M")
    robust: Optional[RobustParams] = Field(default=None, description="Параметры робастности для df_robust")
    outage_trials: int = Field(default=100_000, ge=10_000, description="Испытаний Monte Carlo для validate-outage")
    workers: int = Field(default=1, ge=1, description="Число процессов для async развёрток")
    out: Optional[str] = Field(default=None, description="Путь выходного CSV/JSON; None - stdout")
    plot_script: bool = Field(default=False, description="Записать рядом matplotlib скрипт построения графика (<out>_plot.py)")

    @field_validator('power_grid')
    @classmethod
    def validate_power_grid(cls, v: List[float]) -> List[float]:
        if any(not x > 0 for x in v):
            raise ValueError("Все значения сетки мощностей должны быть положительными")
        return v

    @field_validator('eps')
    @classmethod
    def validate_eps(cls, v: List[float]) -> List[float]:
        if any(not 0.5 < e < 1.0 for e in v):
            raise ValueError("Каждый порог eps должен лежать в (0.5, 1)")
        return v

    @model_validator(mode='after')
    def validate_mode(self) -> 'ExperimentConfig':
        if self.mode == ExperimentMode.DF_ROBUST_SWEEP and not self.eps:
            raise ValueError("Для df_robust_sweep список eps не может быть пустым")
        if self.strategy == SolveStrategy.DF_ROBUST and self.robust is None and self.mode == ExperimentMode.SOLVE_ONE:
            raise ValueError("Для стратегии df_robust требуется поле robust")
        return self


class SweepRow(BaseModel):
    """Строка развёртки: точка сетки, скорости по стратегиям (None - сбой) и диагностика."""
    index: int = Field(..., ge=0, description="Номер точки сетки")
    x: float = Field(..., description="PT / Ps (AF) или PT (DF)")
    rates: Dict[str, Optional[float]] = Field(default_factory=dict, description="Скорости, бит/символ")
    rank_gaps: int = Field(default=0, ge=0, description="Число решений с разрывом ранга")
    solves: int = Field(default=0, ge=0, description="Число конических решений в точке")

    @field_validator('rates')
    @classmethod
    def validate_rates(cls, v: Dict[str, Optional[float]]) -> Dict[str, Optional[float]]:
        for name, rate in v.items():
            if rate is not None and rate < 0:
                raise ValueError(f"Отрицательная скорость в столбце {name}")
        return v


class OutageReport(BaseModel):
    """Итог validate-outage."""
    eps: float = Field(..., description="Требуемая вероятность неотказа")
    t: float = Field(..., description="Проверяемый уровень отношения")
    empirical: float = Field(..., ge=0, le=1, description="Эмпирическая вероятность неотказа")
    trials: int = Field(..., description="Число испытаний")
    stderr: float = Field(..., ge=0, description="Биномиальная стандартная ошибка sqrt(eps (1 - eps) / trials)")
