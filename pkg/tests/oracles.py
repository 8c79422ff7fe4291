"""Независимые оракулы для тестов: перебор по сетке весов и скалярные формулы."""
import numpy as np

from relay_secrecy.models.channel_models import AfDerived, ChannelState, DfChannel


def two_relay_grid(p, radii: int = 101, phases: int = 128):
    """
    Веса w = (sqrt(p1) r1, sqrt(p2) r2 e^{i theta}) на сетке (r1, r2, theta).

    Общая фаза не влияет на скорость, поэтому первый вес вещественный.
    """
    r = np.linspace(0.0, 1.0, radii)
    theta = np.linspace(0.0, 2.0 * np.pi, phases, endpoint=False)
    r1, r2, th = np.meshgrid(r, r, theta, indexing='ij')
    w1 = np.sqrt(p[0]) * r1.ravel()
    w2 = np.sqrt(p[1]) * r2.ravel() * np.exp(1j * th.ravel())
    return w1.astype(np.complex128), w2


def af_grid_rate(d: AfDerived, ch: ChannelState, p, radii: int = 101, phases: int = 128) -> float:
    """Наибольшая AF скорость по сетке весов при индивидуальных ограничениях (M = 2)."""
    w1, w2 = two_relay_grid(p, radii, phases)
    power = np.stack([np.abs(w1) ** 2, np.abs(w2) ** 2])
    dh, dz = np.real(np.diag(d.Dh)), np.real(np.diag(d.Dz))
    sig_d = ch.Ps * np.abs(np.conj(d.hg[0]) * w1 + np.conj(d.hg[1]) * w2) ** 2
    sig_e = ch.Ps * np.abs(np.conj(d.hz[0]) * w1 + np.conj(d.hz[1]) * w2) ** 2
    gamma_d = sig_d / (dh @ power + ch.N0)
    gamma_e = sig_e / (dz @ power + ch.N0)
    return float(np.max(np.log2((1 + gamma_d) / (1 + gamma_e))))


def af_grid_ratio(d: AfDerived, ch: ChannelState, p, radii: int = 101, phases: int = 128) -> float:
    """Наибольшее t1 = (N0 + w^H A w) / (N0 + w^H B w) по сетке весов (M = 2)."""
    w1, w2 = two_relay_grid(p, radii, phases)
    W = np.stack([w1, w2])
    A = d.Dh + ch.Ps * np.outer(d.hg, d.hg.conj())
    B = d.Dz + ch.Ps * np.outer(d.hz, d.hz.conj())
    num = ch.N0 + np.real(np.einsum('in,ij,jn->n', W.conj(), A, W))
    den = ch.N0 + np.real(np.einsum('in,ij,jn->n', W.conj(), B, W))
    return float(np.max(num / den))


def df_grid_rate(ch: DfChannel, p, radii: int = 101, phases: int = 128) -> float:
    """Наибольшая DF скорость по сетке весов (M = 2)."""
    w1, w2 = two_relay_grid(p, radii, phases)
    gain_h = np.abs(np.conj(ch.h[0]) * w1 + np.conj(ch.h[1]) * w2) ** 2
    gain_z = np.abs(np.conj(ch.z[0]) * w1 + np.conj(ch.z[1]) * w2) ** 2
    return float(np.max(np.log2((ch.N0 + gain_h) / (ch.N0 + gain_z))))


def af_scalar_rate(ch: ChannelState, power: np.ndarray) -> np.ndarray:
    """AF скорость одиночного реле как функция мощности |w|^2 (формулы ОСШ по определению)."""
    g, h, z = ch.g[0], ch.h[0], ch.z[0]
    l2 = 1.0 / (abs(g) ** 2 * ch.Ps + ch.Nm[0])
    gamma_d = ch.Ps * abs(h * g) ** 2 * l2 * power / (abs(h) ** 2 * l2 * ch.Nm[0] * power + ch.N0)
    gamma_e = ch.Ps * abs(z * g) ** 2 * l2 * power / (abs(z) ** 2 * l2 * ch.Nm[0] * power + ch.N0)
    return np.log2((1 + gamma_d) / (1 + gamma_e))
