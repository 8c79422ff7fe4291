import numpy as np

from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator
from typing import Any, List, Optional, Tuple, Union
from ._arrays import complex_vector, real_vector, hermitian_matrix, complex_to_json


class ChannelStateFile(BaseModel):
    """JSON-схема одной реализации канала (версия 1)."""
    schema_version: int = Field(default=1, ge=1, le=1, description="Версия схемы документа")
    M: int = Field(..., ge=1, description="Число релеев")
    g_re: List[float] = Field(..., description="Re g_m, канал источник -> реле")
    g_im: List[float] = Field(..., description="Im g_m")
    h_re: List[float] = Field(..., description="Re h_m, канал реле -> получатель")
    h_im: List[float] = Field(..., description="Im h_m")
    z_re: List[float] = Field(..., description="Re z_m, канал реле -> подслушиватель")
    z_im: List[float] = Field(..., description="Im z_m")
    Ps: float = Field(..., gt=0, description="Мощность источника")
    Nm: Union[float, List[float]] = Field(..., description="Дисперсии шума на релеях (общая или по каждому реле)")
    N0: float = Field(..., gt=0, description="Дисперсия шума у получателя и подслушивателя")

    @model_validator(mode='after')
    def validate_lengths(self) -> 'ChannelStateFile':
        """Проверка согласованности длин векторов."""
        for name in ('g_re', 'g_im', 'h_re', 'h_im', 'z_re', 'z_im'):
            if len(getattr(self, name)) != self.M:
                raise ValueError(f"Длина {name} должна быть равна M={self.M}")
        if isinstance(self.Nm, list) and len(self.Nm) != self.M:
            raise ValueError(f"Длина Nm должна быть равна M={self.M}")
        return self


class ChannelState(BaseModel):
    """
    Одна реализация всех коэффициентов замираний, мощностей и шумов двухскачковой сети.

    Attributes:
        g (np.ndarray): Коэффициенты источник -> реле g_m
        h (np.ndarray): Коэффициенты реле -> получатель h_m
        z (np.ndarray): Коэффициенты реле -> подслушиватель z_m
        Ps (float): Мощность источника E[|x_s|^2]
        Nm (np.ndarray): Дисперсии шума на релеях
        N0 (float): Дисперсия шума у получателя и подслушивателя
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    g: np.ndarray = Field(..., description="Коэффициенты источник -> реле")
    h: np.ndarray = Field(..., description="Коэффициенты реле -> получатель")
    z: np.ndarray = Field(..., description="Коэффициенты реле -> подслушиватель")
    Ps: float = Field(..., gt=0, description="Мощность источника")
    Nm: np.ndarray = Field(..., description="Дисперсии шума на релеях")
    N0: float = Field(..., gt=0, description="Дисперсия шума на приёмниках")

    @model_validator(mode='before')
    @classmethod
    def broadcast_noise(cls, data: Any) -> Any:
        if isinstance(data, dict) and 'Nm' in data and np.ndim(data['Nm']) == 0 and 'g' in data:
            data = dict(data)
            data['Nm'] = np.full(np.atleast_1d(data['g']).shape[0], float(data['Nm']))
        return data

    @field_validator('g', 'h', 'z', mode='before')
    @classmethod
    def validate_fading(cls, v: Any) -> np.ndarray:
        return complex_vector(v)

    @field_validator('Nm', mode='before')
    @classmethod
    def validate_noise(cls, v: Any) -> np.ndarray:
        arr = real_vector(v)
        if np.any(arr <= 0):
            raise ValueError("Дисперсии шума на релеях должны быть строго положительными")
        return arr

    @model_validator(mode='after')
    def validate_dims(self) -> 'ChannelState':
        """Все векторы имеют одну размерность M >= 1."""
        dims = {self.g.shape[0], self.h.shape[0], self.z.shape[0], self.Nm.shape[0]}
        if len(dims) != 1:
            raise ValueError(f"Размерности g, h, z, Nm не совпадают: {sorted(dims)}")
        if not (np.isfinite(self.Ps) and np.isfinite(self.N0)):
            raise ValueError("Мощности должны быть конечными")
        return self

    @property
    def M(self) -> int:
        return int(self.g.shape[0])

    def to_file_model(self) -> ChannelStateFile:
        nm = self.Nm.tolist()
        return ChannelStateFile(
            M=self.M,
            g_re=self.g.real.tolist(), g_im=self.g.imag.tolist(),
            h_re=self.h.real.tolist(), h_im=self.h.imag.tolist(),
            z_re=self.z.real.tolist(), z_im=self.z.imag.tolist(),
            Ps=self.Ps,
            Nm=nm[0] if len(set(nm)) == 1 else nm,
            N0=self.N0,
        )

    @classmethod
    def from_file_model(cls, doc: ChannelStateFile) -> 'ChannelState':
        return cls(
            g=np.asarray(doc.g_re) + 1j * np.asarray(doc.g_im),
            h=np.asarray(doc.h_re) + 1j * np.asarray(doc.h_im),
            z=np.asarray(doc.z_re) + 1j * np.asarray(doc.z_im),
            Ps=doc.Ps,
            Nm=np.full(doc.M, float(doc.Nm)) if np.ndim(doc.Nm) == 0 else doc.Nm,
            N0=doc.N0,
        )

    def to_json(self, indent: Optional[int] = 2) -> str:
        return self.to_file_model().model_dump_json(indent=indent)

    @classmethod
    def from_json(cls, text: str) -> 'ChannelState':
        return cls.from_file_model(ChannelStateFile.model_validate_json(text))

    def to_df_channel(self) -> 'DfChannel':
        """Второй скачок DF: векторы h = [h_1^*, ..., h_M^*]^T и z = [z_1^*, ..., z_M^*]^T."""
        return DfChannel(h=np.conj(self.h), z=np.conj(self.z), N0=self.N0)


class AfDerived(BaseModel):
    """
    Переформулированные величины AF: масштабы l_m, векторы h_g, h_z и диагональные матрицы D_h, D_z.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    l: np.ndarray = Field(..., description="Масштабирующие множители реле")
    hg: np.ndarray = Field(..., description="h_g,m = h_m^* g_m^* l_m")
    hz: np.ndarray = Field(..., description="h_z,m = z_m^* g_m^* l_m")
    Dh: np.ndarray = Field(..., description="Diag(|h_m|^2 l_m^2 N_m)")
    Dz: np.ndarray = Field(..., description="Diag(|z_m|^2 l_m^2 N_m)")

    @field_validator('l', mode='before')
    @classmethod
    def validate_scaling(cls, v: Any) -> np.ndarray:
        arr = real_vector(v)
        if np.any(arr <= 0):
            raise ValueError("Масштабы l_m должны быть положительными")
        return arr

    @field_validator('hg', 'hz', mode='before')
    @classmethod
    def validate_vectors(cls, v: Any) -> np.ndarray:
        return complex_vector(v)

    @field_validator('Dh', 'Dz', mode='before')
    @classmethod
    def validate_diagonal(cls, v: Any) -> np.ndarray:
        arr = hermitian_matrix(v)
        if np.any(arr - np.diag(np.diag(arr))) or np.any(np.diag(arr).real < 0):
            raise ValueError("D_h и D_z должны быть диагональными с неотрицательной диагональю")
        return arr

    @property
    def M(self) -> int:
        return int(self.l.shape[0])


class PowerKind(str, Enum):
    """Вид ограничения мощности релеев."""
    TOTAL = "total"
    INDIVIDUAL = "individual"
    BOTH = "both"


class PowerConstraint(BaseModel):
    """
    Ограничение мощности релеев: суммарное ||w||^2 <= P_T, индивидуальные |w_m|^2 <= p_m или оба сразу.

    Example:
        >>> PowerConstraint.total(10.0).total_budget()
        10.0
        >>> PowerConstraint.individual([1.0, 2.0]).bounds()
        (array([1., 2.]), None)
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, use_enum_values=False)

    kind: PowerKind = Field(..., description="Вид ограничения")
    PT: Optional[float] = Field(None, gt=0, description="Суммарная мощность релеев")
    p: Optional[np.ndarray] = Field(None, description="Индивидуальные мощности релеев")

    @field_validator('p', mode='before')
    @classmethod
    def validate_individual(cls, v: Any) -> Optional[np.ndarray]:
        if v is None:
            return v
        arr = real_vector(v)
        if np.any(arr <= 0):
            raise ValueError("Индивидуальные мощности должны быть строго положительными")
        return arr

    @model_validator(mode='after')
    def validate_variant(self) -> 'PowerConstraint':
        if self.kind in (PowerKind.TOTAL, PowerKind.BOTH) and self.PT is None:
            raise ValueError(f"Для ограничения '{self.kind.value}' требуется PT")
        if self.kind in (PowerKind.INDIVIDUAL, PowerKind.BOTH) and self.p is None:
            raise ValueError(f"Для ограничения '{self.kind.value}' требуется p")
        return self

    @field_serializer('p')
    def serialize_p(self, p: Optional[np.ndarray]) -> Optional[List[float]]:
        return None if p is None else p.tolist()

    @classmethod
    def total(cls, PT: float) -> 'PowerConstraint':
        return cls(kind=PowerKind.TOTAL, PT=PT)

    @classmethod
    def individual(cls, p: Any) -> 'PowerConstraint':
        return cls(kind=PowerKind.INDIVIDUAL, p=p)

    @classmethod
    def both(cls, PT: float, p: Any) -> 'PowerConstraint':
        return cls(kind=PowerKind.BOTH, PT=PT, p=p)

    @classmethod
    def equal_individual(cls, PT: float, M: int) -> 'PowerConstraint':
        """Равные индивидуальные ограничения p_m = P_T / M."""
        return cls.individual(np.full(M, PT / M))

    def check_dim(self, M: int) -> None:
        if self.p is not None and self.p.shape[0] != M:
            raise ValueError(f"Длина p ({self.p.shape[0]}) не совпадает с числом релеев M={M}")

    def total_budget(self) -> float:
        """Наибольшая суммарная мощность, допускаемая ограничением."""
        if self.kind == PowerKind.TOTAL:
            return float(self.PT)
        if self.kind == PowerKind.INDIVIDUAL:
            return float(np.sum(self.p))
        return float(min(self.PT, np.sum(self.p)))

    def bounds(self) -> Tuple[Optional[np.ndarray], Optional[float]]:
        """Пара (diag_upper, trace_upper) для конической программы."""
        diag_upper = self.p if self.kind in (PowerKind.INDIVIDUAL, PowerKind.BOTH) else None
        trace_upper = self.PT if self.kind in (PowerKind.TOTAL, PowerKind.BOTH) else None
        return diag_upper, trace_upper

    def is_satisfied(self, w: np.ndarray, tol: float = 1e-8) -> bool:
        power = np.abs(w) ** 2
        if self.PT is not None and self.kind != PowerKind.INDIVIDUAL:
            if np.sum(power) > self.PT * (1 + tol) + tol:
                return False
        if self.p is not None and self.kind != PowerKind.TOTAL:
            if np.any(power > self.p * (1 + tol) + tol):
                return False
        return True

    def scale_to_boundary(self, w: np.ndarray) -> np.ndarray:
        """Масштабирует w до границы допустимого множества (наибольший допустимый множитель)."""
        power = np.abs(w) ** 2
        if not np.any(power > 0):
            return np.zeros_like(w)
        factors = []
        if self.PT is not None and self.kind != PowerKind.INDIVIDUAL:
            factors.append(self.PT / np.sum(power))
        if self.p is not None and self.kind != PowerKind.TOTAL:
            active = power > 0
            factors.append(np.min(self.p[active] / power[active]))
        return w * np.sqrt(min(factors))


class DfChannel(BaseModel):
    """
    Второй скачок DF: векторы h = [h_1^*, ..., h_M^*]^T, z = [z_1^*, ..., z_M^*]^T и шум N0.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h: np.ndarray = Field(..., description="Вектор канала до получателя")
    z: np.ndarray = Field(..., description="Вектор канала до подслушивателя")
    N0: float = Field(..., gt=0, description="Дисперсия шума")

    @field_validator('h', 'z', mode='before')
    @classmethod
    def validate_vectors(cls, v: Any) -> np.ndarray:
        return complex_vector(v)

    @model_validator(mode='after')
    def validate_dims(self) -> 'DfChannel':
        if self.h.shape != self.z.shape:
            raise ValueError("Векторы h и z должны иметь одинаковую размерность")
        if not np.isfinite(self.N0):
            raise ValueError("N0 должна быть конечной")
        return self

    @property
    def M(self) -> int:
        return int(self.h.shape[0])

    @property
    def H(self) -> np.ndarray:
        return np.outer(self.h, self.h.conj())

    @property
    def Z(self) -> np.ndarray:
        return np.outer(self.z, self.z.conj())

    def to_json_dict(self) -> dict:
        return {"h": complex_to_json(self.h), "z": complex_to_json(self.z), "N0": self.N0}
