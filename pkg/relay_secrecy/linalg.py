"""
Плотная комплексная линейная алгебра для малых эрмитовых систем.

Холецкий, эрмитово спектральное разложение и определённая обобщённая задача на собственные
значения A psi = lambda B psi (B > 0), к которой сводятся замкнутые формы при суммарном
ограничении мощности.
"""
import logging
import numpy as np
import scipy.linalg

from typing import NamedTuple, Tuple
from .exceptions import NotPositiveDefinite, NoConvergence

logger = logging.getLogger(__name__)


class GenEigResult(NamedTuple):
    lambda_max: float
    eigvec: np.ndarray


def _as_hermitian(A: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"Ожидается квадратная матрица, получено {A.shape}")
    return 0.5 * (A + A.conj().T)


def cholesky(B: np.ndarray) -> np.ndarray:
    """
    Нижнетреугольный множитель L: L L^H = B.

    Args:
        B (np.ndarray): Эрмитова положительно определённая матрица

    Returns:
        np.ndarray: Нижнетреугольная комплексная матрица L

    Raises:
        NotPositiveDefinite: Если ведущий элемент L_ii^2 <= dim * eps * max(diag(B))

    Example:
        >>> cholesky(np.diag([4.0, 9.0])).real
        array([[2., 0.],
               [0., 3.]])
    """
    B = _as_hermitian(B)
    n = B.shape[0]
    max_diag = float(np.max(np.abs(np.diag(B).real)))
    threshold = n * np.finfo(float).eps * max_diag
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Разложение Холецкого не существует: {e}") from e
    pivots = np.abs(np.diag(L)) ** 2
    bad = np.flatnonzero(pivots <= threshold)
    if max_diag <= 0 or bad.size:
        index = int(bad[0]) if bad.size else 0
        raise NotPositiveDefinite(
            f"Ведущий элемент {index} не превышает порог {threshold:.3e}", pivot_index=index
        )
    return L


def hermitian_eig(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Собственные значения (по убыванию) и ортонормированные собственные векторы эрмитовой матрицы.

    Args:
        A (np.ndarray): Эрмитова матрица

    Returns:
        tuple: (eigenvalues, V), столбец V[:, i] соответствует eigenvalues[i]

    Raises:
        NoConvergence: Если LAPACK не сошёлся
    """
    A = _as_hermitian(A)
    try:
        values, vectors = scipy.linalg.eigh(A)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"Спектральное разложение не сошлось: {e}") from e
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def gen_eig_max(A: np.ndarray, B: np.ndarray) -> GenEigResult:
    """
    Наибольшее обобщённое собственное значение пары (A, B) и его единичный собственный вектор.

    Сведение через L = cholesky(B) к эрмитовой задаче для L^{-1} A L^{-H}; psi = L^{-H} y.

    Args:
        A (np.ndarray): Эрмитова матрица
        B (np.ndarray): Эрмитова положительно определённая матрица той же размерности

    Returns:
        GenEigResult: lambda_max и eigvec с ||eigvec|| = 1

    Raises:
        NotPositiveDefinite: Если B не положительно определена

    Example:
        >>> gen_eig_max(np.diag([2.0, 1.0]), np.diag([1.0, 2.0])).lambda_max
        2.0
    """
    A = _as_hermitian(A)
    B = _as_hermitian(B)
    if A.shape != B.shape:
        raise ValueError(f"Размеры A {A.shape} и B {B.shape} не совпадают")
    L = cholesky(B)
    Y = scipy.linalg.solve_triangular(L, A, lower=True)
    C = scipy.linalg.solve_triangular(L, Y.conj().T, lower=True).conj().T
    values, vectors = hermitian_eig(C)
    psi = scipy.linalg.solve_triangular(L.conj().T, vectors[:, 0], lower=False)
    psi = psi / np.linalg.norm(psi)
    logger.debug("gen_eig_max: dim=%d lambda_max=%.12g", A.shape[0], values[0])
    return GenEigResult(lambda_max=float(values[0]), eigvec=psi)
