import time
import numpy as np
import pytest

from oracles import af_grid_rate, af_grid_ratio, af_scalar_rate
from relay_secrecy.af import AfBeamformer, Ratio, af_secrecy_rate, af_snr, extract_rank_one, rank_ratio, \
                             relaxation_solution, t1_max_total, t2_max_total, t_from_relaxation
from relay_secrecy.channel import derive_af, sample_channel
from relay_secrecy.exceptions import ZeroMatrix
from relay_secrecy.models.beam_models import AfAlgorithmConfig, DfAlgorithmConfig, T2Search
from relay_secrecy.models.channel_models import ChannelState, PowerConstraint


@pytest.fixture
def m2_channel():
    ch = ChannelState(g=[1 + 0.5j, -0.7 + 1.2j], h=[1.5 - 0.3j, 0.4 + 1.1j], z=[0.3 + 0.2j, -0.6 + 0.1j],
                      Ps=1.0, Nm=1.0, N0=1.0)
    return ch, derive_af(ch)


@pytest.fixture
def m3_channel():
    ch = sample_channel(seed=5, M=3, sigma_g=1.0, sigma_h=2.0, sigma_z=1.0)
    return ch, derive_af(ch)


def test_af_snr_zero_weights(m1_unit):
    assert af_snr(np.zeros(1), derive_af(m1_unit), m1_unit) == (0.0, 0.0)


def test_af_snr_unit_channel(m1_unit):
    gamma_d, gamma_e = af_snr(np.array([1.0]), derive_af(m1_unit), m1_unit)
    assert gamma_d == pytest.approx(1 / 3)
    assert gamma_e == pytest.approx(1 / 3)
    assert af_secrecy_rate(np.array([1.0]), derive_af(m1_unit), m1_unit) == pytest.approx(0.0, abs=1e-15)


def test_af_snr_matches_relay_sums(m3_channel):
    ch, d = m3_channel
    w = np.array([0.3 - 0.2j, -0.5 + 0.1j, 0.4 + 0.4j])
    l = 1 / np.sqrt(np.abs(ch.g) ** 2 * ch.Ps + ch.Nm)
    signal = ch.Ps * abs(np.sum(ch.h * ch.g * l * w)) ** 2
    noise = np.sum(np.abs(ch.h) ** 2 * l ** 2 * ch.Nm * np.abs(w) ** 2) + ch.N0
    gamma_d, _ = af_snr(w, d, ch)
    assert gamma_d == pytest.approx(signal / noise, rel=1e-12)


def test_af_snr_length_mismatch(m1_unit):
    with pytest.raises(ValueError):
        af_snr(np.ones(2), derive_af(m1_unit), m1_unit)


def test_rate_is_log_of_ratio_product(m3_channel):
    ch, d = m3_channel
    w = np.array([1.0, 0.5j, -0.3])
    t1, t2 = t_from_relaxation(np.outer(w, w.conj()), d, ch)
    assert af_secrecy_rate(w, d, ch) == pytest.approx(np.log2(t1 * t2), abs=1e-12)
    assert af_secrecy_rate(w * np.exp(0.7j), d, ch) == pytest.approx(af_secrecy_rate(w, d, ch), abs=1e-12)


def test_closed_forms_symmetric_channel(symmetric):
    d = derive_af(symmetric)
    t1, w = t1_max_total(d, symmetric, 2.0)
    t2, _ = t2_max_total(d, symmetric, 2.0)
    assert t1 == pytest.approx(1.0, abs=1e-10)
    assert t2 == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(w) ** 2 == pytest.approx(2.0)


def test_t1_closed_form_without_eavesdropper():
    ch = ChannelState(g=[1.0, 1.0j], h=[1.0, 2.0], z=[0.0, 0.0], Ps=1.0, Nm=1.0, N0=1.0)
    d = derive_af(ch)
    t1, w = t1_max_total(d, ch, 1.0)
    assert t1 >= 1.0
    assert t_from_relaxation(np.outer(w, w.conj()), d, ch)[0] == pytest.approx(t1, rel=1e-10)


def test_t1_closed_form_is_maximal(m3_channel):
    ch, d = m3_channel
    PT = 2.0
    t1, w = t1_max_total(d, ch, PT)
    assert np.linalg.norm(w) ** 2 == pytest.approx(PT)
    assert t_from_relaxation(np.outer(w, w.conj()), d, ch)[0] == pytest.approx(t1, rel=1e-10)
    rng = np.random.default_rng(1)
    for _ in range(200):
        candidate = rng.normal(size=3) + 1j * rng.normal(size=3)
        candidate *= np.sqrt(PT) / np.linalg.norm(candidate)
        assert t_from_relaxation(np.outer(candidate, candidate.conj()), d, ch)[0] <= t1 * (1 + 1e-12)


def test_t2_closed_form_diagonal_ratio(m3_channel):
    ch, d = m3_channel
    PT = 1.5
    t2, _ = t2_max_total(d, ch, PT)
    dh, dz = np.real(np.diag(d.Dh)), np.real(np.diag(d.Dz))
    assert t2 == pytest.approx(np.max((dz + ch.N0 / PT) / (dh + ch.N0 / PT)), rel=1e-10)


@pytest.mark.parametrize("which", [Ratio.T1, Ratio.T2])
def test_t_max_closed_form_matches_bisection(af_beamformer, m3_channel, which):
    ch, d = m3_channel
    constraint = PowerConstraint.total(2.0)
    t_closed, _ = af_beamformer.t_max(d, ch, constraint, which)
    t_bisect, X = af_beamformer.t_max(d, ch, constraint, which, tol=1e-8, closed_form=False)
    assert t_bisect == pytest.approx(t_closed, rel=1e-5)
    assert t_closed >= 1.0
    assert np.real(np.trace(X)) <= 2.0 * (1 + 1e-5)


@pytest.mark.slow
@pytest.mark.parametrize("which", [Ratio.T1, Ratio.T2])
@pytest.mark.parametrize("seed", range(50))
def test_t_max_closed_form_matches_bisection_seeded(af_beamformer, seed, which):
    ch = sample_channel(seed=700 + seed, M=2 + seed % 5, sigma_g=1.0, sigma_h=2.0, sigma_z=1.5)
    d = derive_af(ch)
    constraint = PowerConstraint.total(0.5 + seed % 4)
    t_closed, _ = af_beamformer.t_max(d, ch, constraint, which)
    t_bisect, _ = af_beamformer.t_max(d, ch, constraint, which, tol=1e-8, closed_form=False)
    assert t_bisect == pytest.approx(t_closed, rel=1e-4)



def test_t_max_total_clamps_to_one(m1_strong):
    beamformer = AfBeamformer()
    d = derive_af(m1_strong)
    # при h = 2, z = 1 отношение t2 ниже 1 при любой мощности
    t2, X = beamformer.t_max(d, m1_strong, PowerConstraint.total(1.0), Ratio.T2)
    assert t2 == 1.0
    assert np.all(X == 0)


def test_t_max_individual_single_relay(af_beamformer, m1_strong):
    d = derive_af(m1_strong)
    t_ind, _ = af_beamformer.t_max_individual(d, m1_strong, [0.5], Ratio.T1, tol=1e-8)
    t_tot, _ = t1_max_total(d, m1_strong, 0.5)
    # (1 + 4 x) / (1 + x) при x = 0.5
    assert t_tot == pytest.approx(2.0)
    assert t_ind == pytest.approx(t_tot, rel=1e-5)


@pytest.mark.slow
def test_t_max_individual_grid_oracle(af_beamformer, m2_channel):
    ch, d = m2_channel
    p = [0.8, 1.5]
    t_star, _ = af_beamformer.t_max_individual(d, ch, p, Ratio.T1, tol=1e-7)
    grid = af_grid_ratio(d, ch, p)
    assert t_star >= 1.0
    assert grid <= t_star * (1 + 1e-5)
    assert grid >= t_star * (1 - 1e-2)


def test_achievable_symmetric_is_zero(af_beamformer, symmetric):
    d = derive_af(symmetric)
    sol = af_beamformer.af_achievable(d, symmetric, PowerConstraint.total(2.0))
    assert sol.secrecy_rate == pytest.approx(0.0, abs=1e-9)
    assert sol.w_rate <= 1e-9


def test_optimize_af_golden(af_beamformer, m1_strong, golden):
    sol = af_beamformer.optimize_af(derive_af(m1_strong), m1_strong, PowerConstraint.total(1.0))
    assert sol.secrecy_rate == pytest.approx(golden["secrecy_rate"], abs=1e-4)
    assert np.sum(np.abs(sol.w) ** 2) == pytest.approx(golden["relay_power"], abs=0.02)
    assert sol.t1 == pytest.approx(golden["t1"], abs=0.02)
    assert sol.t2 == pytest.approx(golden["t2"], abs=0.01)
    assert sol.w_rate == pytest.approx(golden["secrecy_rate"], abs=1e-3)
    assert not sol.rank_gap
    assert sol.solves > 0


def test_optimize_af_beats_full_power(af_beamformer, m1_strong):
    d = derive_af(m1_strong)
    constraint = PowerConstraint.total(1.0)
    achievable = af_beamformer.af_achievable(d, m1_strong, constraint)
    optimal = af_beamformer.optimize_af(d, m1_strong, constraint)
    # при полной мощности t1 t2 = 2.5 * 0.5
    assert achievable.secrecy_rate == pytest.approx(np.log2(1.25), abs=1e-9)
    assert optimal.secrecy_rate > achievable.secrecy_rate + 1e-3


def test_optimize_af_unit_channel_is_zero(af_beamformer, m1_unit):
    sol = af_beamformer.optimize_af(derive_af(m1_unit), m1_unit, PowerConstraint.total(1.0))
    assert sol.secrecy_rate == pytest.approx(0.0, abs=1e-6)
    assert sol.w_rate <= 1e-6


def test_optimize_af_single_relay_individual(af_beamformer, m1_strong):
    d = derive_af(m1_strong)
    sol = af_beamformer.optimize_af(d, m1_strong, PowerConstraint.individual([0.5]))
    power = np.linspace(0.0, 0.5, 50_001)
    expected = float(np.max(af_scalar_rate(m1_strong, power)))
    assert sol.secrecy_rate == pytest.approx(expected, abs=1e-4)
    assert abs(sol.w[0]) ** 2 == pytest.approx(0.5, abs=1e-3)


def test_optimize_af_respects_cfg_override(m1_strong, golden):
    beamformer = AfBeamformer(config=AfAlgorithmConfig(N=2))
    d = derive_af(m1_strong)
    coarse = beamformer.optimize_af(d, m1_strong, PowerConstraint.total(1.0))
    fine = beamformer.optimize_af(d, m1_strong, PowerConstraint.total(1.0), cfg=AfAlgorithmConfig(N=200))
    assert coarse.secrecy_rate <= fine.secrecy_rate + 1e-9
    assert fine.secrecy_rate == pytest.approx(golden["secrecy_rate"], abs=1e-4)


@pytest.mark.slow
def test_optimize_af_orderings(m3_channel):
    ch, d = m3_channel
    beamformer = AfBeamformer(config=AfAlgorithmConfig(N=50, randomization_samples=100))
    total = PowerConstraint.total(3.0)
    individual = PowerConstraint.equal_individual(3.0, 3)

    optimal_total = beamformer.optimize_af(d, ch, total)
    optimal_individual = beamformer.optimize_af(d, ch, individual)
    achievable_total = beamformer.af_achievable(d, ch, total)

    assert optimal_total.secrecy_rate >= achievable_total.secrecy_rate - 1e-9
    assert optimal_total.secrecy_rate >= optimal_individual.secrecy_rate - 1e-2
    assert total.is_satisfied(optimal_total.w, tol=1e-5)
    assert individual.is_satisfied(optimal_individual.w, tol=1e-5)
    assert optimal_total.w_rate <= optimal_total.secrecy_rate + 1e-5

    rates = [beamformer.optimize_af(d, ch, PowerConstraint.total(PT)).secrecy_rate for PT in (0.5, 1.0, 2.0)]
    assert all(b >= a - 1e-2 for a, b in zip(rates, rates[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(25))
def test_optimize_af_grid_oracle(seed):
    ch = sample_channel(seed=300 + seed, M=2, sigma_g=1.0, sigma_h=2.0, sigma_z=1.0)
    d = derive_af(ch)
    p = [0.8, 1.5]
    beamformer = AfBeamformer(config=AfAlgorithmConfig(N=200, randomization_samples=200))
    sol = beamformer.optimize_af(d, ch, PowerConstraint.individual(p))
    grid = af_grid_rate(d, ch, p)
    assert sol.secrecy_rate == pytest.approx(grid, rel=2e-2, abs=2e-2)
    assert sol.w_rate <= grid + 1e-2


def test_t2_search_variants_agree(m3_channel):
    ch, d = m3_channel
    constraint = PowerConstraint.equal_individual(3.0, 3)
    rates = {}
    for search in T2Search:
        beamformer = AfBeamformer(config=AfAlgorithmConfig(N=30, randomization_samples=50, t2_search=search))
        rates[search] = beamformer.optimize_af(d, ch, constraint).secrecy_rate
    assert rates[T2Search.FRACTIONAL] == pytest.approx(rates[T2Search.BISECTION], abs=1e-4)


def test_rates_invariant_to_common_phase_on_h(m3_channel):
    ch, d = m3_channel
    rotated = ChannelState(g=ch.g, h=ch.h * np.exp(0.9j), z=ch.z, Ps=ch.Ps, Nm=ch.Nm, N0=ch.N0)
    d_rotated = derive_af(rotated)
    constraint = PowerConstraint.total(2.0)
    beamformer = AfBeamformer(config=AfAlgorithmConfig(N=30, randomization_samples=50))
    assert t1_max_total(d_rotated, rotated, 2.0)[0] == pytest.approx(t1_max_total(d, ch, 2.0)[0], abs=1e-9)
    assert beamformer.af_achievable(d_rotated, rotated, constraint).secrecy_rate == \
        pytest.approx(beamformer.af_achievable(d, ch, constraint).secrecy_rate, abs=1e-9)
    assert beamformer.optimize_af(d_rotated, rotated, constraint).secrecy_rate == \
        pytest.approx(beamformer.optimize_af(d, ch, constraint).secrecy_rate, abs=1e-6)


@pytest.mark.slow
def test_ten_relays_total_dominates_individual(ten_relay_channel):
    ch, d = ten_relay_channel
    PT = 50.0
    beamformer = AfBeamformer()
    achievable = beamformer.af_achievable(d, ch, PowerConstraint.total(PT))

    started = time.perf_counter()
    total = beamformer.optimize_af(d, ch, PowerConstraint.total(PT))
    assert time.perf_counter() - started < 30.0
    started = time.perf_counter()
    individual = beamformer.optimize_af(d, ch, PowerConstraint.equal_individual(PT, 10))
    assert time.perf_counter() - started < 30.0

    assert total.secrecy_rate >= achievable.secrecy_rate - 1e-9
    assert total.secrecy_rate >= individual.secrecy_rate - 1e-6



def test_rank_ratio():
    assert rank_ratio(np.diag([2.0, 1.0])) == pytest.approx(0.5)
    assert rank_ratio(np.zeros((2, 2))) == 0.0
    assert rank_ratio(np.array([[3.0]])) == 0.0


def test_extract_rank_one_exact():
    x = np.array([1.0 + 1j, -0.5, 2j])
    w = extract_rank_one(np.outer(x, x.conj()), 1e-6, 100)
    assert np.allclose(np.outer(w, w.conj()), np.outer(x, x.conj()), atol=1e-10)


def test_extract_rank_one_principal_without_evaluator():
    w = extract_rank_one(np.diag([3.0, 1.0]), 1e-6, 100)
    assert abs(w[0]) == pytest.approx(np.sqrt(3.0))
    assert abs(w[1]) == pytest.approx(0.0, abs=1e-12)


def test_extract_rank_one_randomization():
    constraint = PowerConstraint.total(2.0)
    w = extract_rank_one(np.eye(2), 1e-6, 50, rate_evaluator=lambda v: float(np.sum(np.abs(v) ** 2)),
                         constraint=constraint, seed=3)
    assert np.sum(np.abs(w) ** 2) == pytest.approx(2.0)
    assert constraint.is_satisfied(w)


def test_extract_rank_one_deterministic():
    X = np.diag([2.0, 1.0, 0.5]).astype(complex)
    kwargs = dict(rate_evaluator=lambda v: float(np.real(v[1])), constraint=PowerConstraint.total(3.0), seed=9)
    a = extract_rank_one(X, 1e-6, 30, **kwargs)
    b = extract_rank_one(X, 1e-6, 30, **kwargs)
    assert np.array_equal(a, b)


def test_extract_rank_one_zero_matrix():
    with pytest.raises(ZeroMatrix):
        extract_rank_one(np.zeros((2, 2)), 1e-6, 10)


def test_relaxation_solution_non_positive_rate():
    constraint = PowerConstraint.total(1.0)
    sol = relaxation_solution(np.eye(2), 0.9, 1.0, lambda w: 1.0, constraint, DfAlgorithmConfig())
    assert sol.secrecy_rate == 0.0
    assert np.all(sol.w == 0)
    assert sol.t1 == 1.0 and sol.t2 == 1.0


def test_relaxation_solution_negative_w_rate():
    x = np.array([1.0, 0.0])
    sol = relaxation_solution(np.outer(x, x), 2.0, 1.0, lambda w: -0.1, PowerConstraint.total(1.0),
                              DfAlgorithmConfig())
    assert sol.secrecy_rate == pytest.approx(1.0)
    assert np.all(sol.w == 0) and sol.w_rate == 0.0
