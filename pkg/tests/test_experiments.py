import asyncio
import numpy as np
import pandas as pd
import pytest

from pydantic import ValidationError
from relay_secrecy.af import AfBeamformer
from relay_secrecy.exceptions import ConfigError, NumericalFailure
from relay_secrecy.experiments import AF_COLUMNS, SweepRunner, df_column
from relay_secrecy.models.beam_models import AfAlgorithmConfig, DfAlgorithmConfig
from relay_secrecy.models.channel_models import PowerKind
from relay_secrecy.models.experiment_models import ExperimentConfig, ExperimentMode, SolveStrategy, SweepRow, \
                                                   VarianceRule


def af_config(**kwargs) -> ExperimentConfig:
    defaults = dict(mode=ExperimentMode.AF_SWEEP, M=2, power_grid=[1.0, 4.0], seed=3,
                    af=AfAlgorithmConfig(N=20, randomization_samples=50))
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


def df_config(**kwargs) -> ExperimentConfig:
    defaults = dict(mode=ExperimentMode.DF_ROBUST_SWEEP, M=2, sigma_h=1.0, sigma_z=2.0, power_grid=[10.0],
                    eps=[0.7, 0.95], seed=1, df=DfAlgorithmConfig(randomization_samples=50))
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


def test_af_sweep_frame():
    frame = SweepRunner(af_config()).sync_run_af_sweep()
    assert list(frame.columns) == ["pt_over_ps", *AF_COLUMNS, "rank_gaps", "solves"]
    assert frame["pt_over_ps"].tolist() == [1.0, 4.0]
    for column in AF_COLUMNS:
        assert (frame[column] >= 0).all()
    assert (frame["af_optimal_total"] >= frame["af_achievable_total"] - 1e-9).all()
    assert (frame["af_optimal_individual"] >= frame["af_achievable_individual"] - 1e-9).all()
    assert (frame["af_optimal_total"] >= frame["af_optimal_individual"] - 1e-2).all()
    assert (frame["solves"] > 0).all()


def test_af_sweep_is_deterministic():
    config = af_config(power_grid=[2.0])
    pd.testing.assert_frame_equal(SweepRunner(config).sync_run_af_sweep(), SweepRunner(config).sync_run_af_sweep())


def test_af_sweep_writes_csv_and_plot(tmp_path):
    out = tmp_path / "af" / "rates.csv"
    SweepRunner(af_config(power_grid=[2.0], out=str(out), plot_script=True)).sync_run_af_sweep()
    lines = out.read_text(encoding='UTF-8').splitlines()
    assert lines[0] == "pt_over_ps," + ",".join(AF_COLUMNS) + ",rank_gaps,solves"
    assert len(lines) == 2
    assert lines[1].startswith("2.000000,")
    script = (tmp_path / "af" / "rates_plot.py").read_text(encoding='UTF-8')
    assert "open('rates.csv', newline='')" in script
    assert f"columns = {list(AF_COLUMNS)!r}" in script
    assert "plt.savefig('rates.pdf'" in script
    compile(script, "rates_plot.py", "exec")


def test_failed_strategy_is_reported_as_fail(monkeypatch):
    def broken(self, d, ch, constraint, cfg=None):
        raise NumericalFailure("сбой")

    monkeypatch.setattr(AfBeamformer, "optimize_af", broken)
    runner = SweepRunner(af_config(power_grid=[2.0]))
    frame = runner.sync_run_af_sweep()
    assert np.isnan(frame.loc[0, "af_optimal_total"])
    assert frame.loc[0, "af_achievable_total"] >= 0
    row = runner.to_csv(frame).splitlines()[1].split(",")
    assert row[1] == "FAIL" and row[2] == "FAIL"
    assert row[3] != "FAIL"


@pytest.mark.slow
def test_af_sweep_order_relations_on_ten_relays():
    config = af_config(M=10, sigma_g=10.0, sigma_h=2.0, sigma_z=2.0, seed=2024, power_grid=[5.0, 20.0, 50.0],
                       af=AfAlgorithmConfig(N=200, randomization_samples=100))
    frame = SweepRunner(config).sync_run_af_sweep()
    assert not frame[list(AF_COLUMNS)].isna().any().any()
    for column in AF_COLUMNS:
        values = frame[column].tolist()
        assert all(b >= a - 1e-3 for a, b in zip(values, values[1:])), column
    assert (frame["af_optimal_total"] >= frame["af_achievable_total"] - 1e-9).all()
    assert (frame["af_optimal_individual"] >= frame["af_achievable_individual"] - 1e-9).all()
    assert (frame["af_optimal_total"] >= frame["af_optimal_individual"] - 1e-6).all()
    assert (frame["af_optimal_total"] > frame["af_achievable_total"]).any()


def test_solve_one_rejects_wrong_power_vector_length(m1_strong):
    config = ExperimentConfig(mode=ExperimentMode.SOLVE_ONE, strategy=SolveStrategy.DF_PERFECT, power_grid=[1.0],
                              constraint_kind=PowerKind.INDIVIDUAL, p=[0.5, 0.5])
    with pytest.raises(ConfigError):
        SweepRunner(config).solve_one(m1_strong)


def test_df_sweep_frame():
    frame = SweepRunner(df_config()).sync_run_df_robust_sweep()
    assert list(frame.columns) == ["pt", "df_statistical_eps_0.7", "df_statistical_eps_0.95", "rank_gaps", "solves"]
    assert frame.loc[0, df_column(0.7)] >= frame.loc[0, df_column(0.95)] - 1e-6
    assert frame.loc[0, df_column(0.95)] >= 0


def test_df_sweep_requires_eps():
    with pytest.raises(ValidationError):
        df_config(eps=[])
    with pytest.raises(ValidationError):
        df_config(eps=[0.5])


def test_sweep_checks_mode():
    with pytest.raises(ConfigError):
        SweepRunner(af_config()).sync_run_df_robust_sweep()
    with pytest.raises(ConfigError):
        asyncio.run(SweepRunner(df_config()).async_run_af_sweep())


@pytest.mark.slow
def test_async_sweep_matches_sync(tmp_path):
    out = tmp_path / "async.csv"
    config = af_config(workers=2, out=str(out))
    sync_frame = SweepRunner(config.model_copy(update={'out': None})).sync_run_af_sweep()
    async_frame = asyncio.run(SweepRunner(config).async_run_af_sweep())
    pd.testing.assert_frame_equal(sync_frame, async_frame)
    assert out.read_text(encoding='UTF-8') == SweepRunner.to_csv(async_frame)


def test_solve_one_df_perfect(m1_strong):
    config = ExperimentConfig(mode=ExperimentMode.SOLVE_ONE, strategy=SolveStrategy.DF_PERFECT, power_grid=[1.0])
    solution = SweepRunner(config).solve_one(m1_strong)
    # (1 + |h|^2) / (1 + |z|^2) при полной мощности
    assert solution.secrecy_rate == pytest.approx(np.log2(2.5), abs=1e-5)


def test_solve_one_df_robust(m1_strong):
    config = ExperimentConfig(mode=ExperimentMode.SOLVE_ONE, strategy=SolveStrategy.DF_ROBUST, power_grid=[1.0],
                              robust={"kind": "worst_case", "eps_h": 0.5, "eps_z": 0.5})
    solution = SweepRunner(config).solve_one(m1_strong)
    # (1 + 4 - 0.5) / (1 + 1 + 0.5)
    assert solution.secrecy_rate == pytest.approx(np.log2(4.5 / 2.5), abs=1e-5)
    assert solution.robust["kind"] == "worst_case"


def test_solve_one_requires_robust_params():
    with pytest.raises(ValidationError):
        ExperimentConfig(mode=ExperimentMode.SOLVE_ONE, strategy=SolveStrategy.DF_ROBUST)


def test_solve_file_af_achievable(corpus_path):
    config = ExperimentConfig(mode=ExperimentMode.SOLVE_ONE, strategy=SolveStrategy.AF_ACHIEVABLE,
                              power_grid=[1.0])
    solution = SweepRunner(config).solve_file(corpus_path('m1_strong.json'))
    assert solution.secrecy_rate == pytest.approx(np.log2(1.25), abs=1e-9)


def test_validate_outage():
    config = ExperimentConfig(mode=ExperimentMode.SOLVE_ONE, M=3, sigma_h=1.0, sigma_z=2.0, power_grid=[10.0],
                              eps=[0.9], outage_trials=20_000, seed=2, df=DfAlgorithmConfig(randomization_samples=100))
    report = SweepRunner(config).validate_outage()
    assert report.eps == 0.9
    assert report.trials == 20_000
    assert report.stderr == pytest.approx(np.sqrt(0.9 * 0.1 / 20_000))
    assert report.t >= 1.0
    assert report.empirical >= 0.9 - 3 * report.stderr


def test_variance_rule():
    assert VarianceRule().variances(100.0) == pytest.approx((0.001, 0.002))


def test_sweep_row_rejects_negative_rate():
    with pytest.raises(ValidationError):
        SweepRow(index=0, x=1.0, rates={"af_optimal_total": -0.1})
    assert SweepRow(index=0, x=1.0, rates={"af_optimal_total": None}).rates["af_optimal_total"] is None


def test_power_grid_must_be_positive():
    with pytest.raises(ValidationError):
        af_config(power_grid=[1.0, 0.0])
    with pytest.raises(ValidationError):
        af_config(power_grid=[])
