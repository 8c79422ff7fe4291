import numpy as np

from typing import Any, Dict, List


def complex_vector(v: Any) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=np.complex128))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("Ожидается непустой комплексный вектор")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Вектор содержит нечисловые значения")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def real_vector(v: Any) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("Ожидается непустой вещественный вектор")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Вектор содержит нечисловые значения")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def hermitian_matrix(a: Any, tol: float = 1e-9) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("Ожидается квадратная матрица")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Матрица содержит нечисловые значения")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.conj().T)) > tol * scale:
        raise ValueError("Матрица не эрмитова")
    arr = 0.5 * (arr + arr.conj().T)
    arr.flags.writeable = False
    return arr


def complex_to_json(v: np.ndarray) -> Dict[str, List]:
    return {"re": np.real(v).tolist(), "im": np.imag(v).tolist()}
