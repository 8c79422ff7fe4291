import logging
import numpy as np

from pydantic import BaseModel, Field
from .models.channel_models import AfDerived, ChannelState, DfChannel

logger = logging.getLogger(__name__)


class ChannelSamplingModel(BaseModel):
    seed: int = Field(..., ge=0, description="Зерно")
    M: int = Field(..., ge=1, description="Число релеев")
    sigma_g: float = Field(..., gt=0, description="СКО g_m")
    sigma_h: float = Field(..., gt=0, description="СКО h_m")
    sigma_z: float = Field(..., gt=0, description="СКО z_m")
    Ps: float = Field(default=1.0, gt=0, description="Мощность источника")
    Nm: float = Field(default=1.0, gt=0, description="Общая дисперсия шума релеев")
    N0: float = Field(default=1.0, gt=0, description="Дисперсия шума приёмников")
    stream: int = Field(default=0, ge=0, description="Номер независимого потока ГСЧ")


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 с независимым потоком на каждое значение stream при одном seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def complex_gaussian(rng: np.random.Generator, sigma: float, size) -> np.ndarray:
    """Круговые комплексные гауссовы величины CN(0, sigma^2): Re и Im с дисперсией sigma^2 / 2."""
    scale = sigma / np.sqrt(2.0)
    return rng.normal(0.0, scale, size) + 1j * rng.normal(0.0, scale, size)


def derive_af(ch: ChannelState) -> AfDerived:
    """
    Величины AF: l_m = 1/sqrt(|g_m|^2 Ps + N_m), h_g, h_z, D_h, D_z.

    Args:
        ch (ChannelState): Реализация канала

    Returns:
        AfDerived: Переформулированные величины

    Example:
        >>> ch = ChannelState(g=[1], h=[1], z=[1], Ps=1.0, Nm=1.0, N0=1.0)
        >>> derive_af(ch).l
        array([0.70710678])
    """
    l = 1.0 / np.sqrt(np.abs(ch.g) ** 2 * ch.Ps + ch.Nm)
    return AfDerived(
        l=l,
        hg=np.conj(ch.h) * np.conj(ch.g) * l,
        hz=np.conj(ch.z) * np.conj(ch.g) * l,
        Dh=np.diag(np.abs(ch.h) ** 2 * l ** 2 * ch.Nm),
        Dz=np.diag(np.abs(ch.z) ** 2 * l ** 2 * ch.Nm),
    )


def sample_channel(seed: int, M: int, sigma_g: float, sigma_h: float, sigma_z: float,
                   Ps: float = 1.0, Nm: float = 1.0, N0: float = 1.0, stream: int = 0) -> ChannelState:
    """
    Случайная реализация канала с независимыми CN(0, sigma^2) коэффициентами.

    Args:
        seed (int): Зерно
        M (int): Число релеев
        sigma_g (float): СКО канала источник -> реле
        sigma_h (float): СКО канала реле -> получатель
        sigma_z (float): СКО канала реле -> подслушиватель
        Ps (float): Мощность источника
        Nm (float): Дисперсия шума релеев (общая)
        N0 (float): Дисперсия шума приёмников
        stream (int): Номер потока ГСЧ (разные точки развёртки получают разные потоки)

    Returns:
        ChannelState: Детерминированная при данных (seed, stream) реализация

    Raises:
        ValidationError: Если какая-либо дисперсия не положительна (sigma = 0 запрещено)
    """
    params = ChannelSamplingModel(seed=seed, M=M, sigma_g=sigma_g, sigma_h=sigma_h, sigma_z=sigma_z,
                                  Ps=Ps, Nm=Nm, N0=N0, stream=stream)
    rng = make_rng(params.seed, params.stream)
    g = complex_gaussian(rng, params.sigma_g, params.M)
    h = complex_gaussian(rng, params.sigma_h, params.M)
    z = complex_gaussian(rng, params.sigma_z, params.M)
    logger.debug("sample_channel: seed=%d stream=%d M=%d", params.seed, params.stream, params.M)
    return ChannelState(g=g, h=h, z=z, Ps=params.Ps, Nm=np.full(params.M, params.Nm), N0=params.N0)


def sample_df_channel(seed: int, M: int, sigma_h: float, sigma_z: float, N0: float = 1.0,
                      stream: int = 0) -> DfChannel:
    """Оценки (h^, z^) второго скачка DF из релеевских замираний."""
    params = ChannelSamplingModel(seed=seed, M=M, sigma_g=1.0, sigma_h=sigma_h, sigma_z=sigma_z,
                                  N0=N0, stream=stream)
    rng = make_rng(params.seed, params.stream)
    h = complex_gaussian(rng, params.sigma_h, params.M)
    z = complex_gaussian(rng, params.sigma_z, params.M)
    return DfChannel(h=h, z=z, N0=params.N0)


def load_channel(path: str) -> ChannelState:
    with open(path, 'r', encoding='UTF-8') as f:
        return ChannelState.from_json(f.read())


def save_channel(ch: ChannelState, path: str) -> None:
    with open(path, 'w', encoding='UTF-8') as f:
        f.write(ch.to_json())
