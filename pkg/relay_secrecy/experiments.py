"""
Развёртки секретной скорости по мощности и одиночные решения для командной строки.

Каждая развёртка строится на одной фиксированной реализации канала (seed конфигурации);
точки сетки независимы и в async вариантах считаются в пуле процессов.
"""
import os
import asyncio
import logging
import aiofiles
import numpy as np
import pandas as pd

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence
from .af import AfBeamformer
from .channel import derive_af, load_channel, sample_channel, sample_df_channel
from .df import DfBeamformer, verify_outage
from .exceptions import BeamformingError, ConfigError
from .models.beam_models import BeamSolution, StatisticalParams
from .models.channel_models import ChannelState, PowerConstraint, PowerKind
from .models.experiment_models import ExperimentConfig, ExperimentMode, OutageReport, SolveStrategy, SweepRow

logger = logging.getLogger(__name__)

AF_COLUMNS = ("af_optimal_total", "af_optimal_individual", "af_achievable_total", "af_achievable_individual")
FLOAT_FORMAT = "%.6f"


def df_column(eps: float) -> str:
    return f"df_statistical_eps_{eps:g}"


def af_realization(config: ExperimentConfig) -> ChannelState:
    return sample_channel(config.seed, config.M, config.sigma_g, config.sigma_h, config.sigma_z,
                          Ps=config.Ps, Nm=config.Nm, N0=config.N0)


def af_sweep_point(config: ExperimentConfig, index: int) -> SweepRow:
    """Четыре AF стратегии в точке сетки PT / Ps; сбой стратегии даёт None в её столбце."""
    ch = af_realization(config)
    d = derive_af(ch)
    ratio = config.power_grid[index]
    PT = ratio * config.Ps
    constraints = {
        "total": PowerConstraint.total(PT),
        "individual": PowerConstraint.equal_individual(PT, config.M),
    }
    beamformer = AfBeamformer(config.solver, config.af)
    rates, rank_gaps = {}, 0
    for column in AF_COLUMNS:
        _, name, kind = column.split("_")
        run = beamformer.optimize_af if name == "optimal" else beamformer.af_achievable
        try:
            solution = run(d, ch, constraints[kind])
        except BeamformingError as e:
            logger.warning("Точка %d (PT/Ps=%g), %s: %s", index, ratio, column, e)
            rates[column] = None
            continue
        rates[column] = solution.secrecy_rate
        rank_gaps += int(solution.rank_gap)
    logger.info("af_sweep: точка %d (PT/Ps=%g) готова, решений: %d", index, ratio, beamformer.solves)
    return SweepRow(index=index, x=ratio, rates=rates, rank_gaps=rank_gaps, solves=beamformer.solves)


def df_sweep_point(config: ExperimentConfig, index: int) -> SweepRow:
    """Статистически робастный DF для каждого eps в точке сетки PT."""
    ch = sample_df_channel(config.seed, config.M, config.sigma_h, config.sigma_z, N0=config.N0)
    PT = config.power_grid[index]
    var_h, var_z = config.variance.variances(PT)
    constraint = PowerConstraint.equal_individual(PT, config.M)
    beamformer = DfBeamformer(config.solver, config.df)
    rates, rank_gaps = {}, 0
    for eps in config.eps:
        column = df_column(eps)
        params = StatisticalParams(var_h=var_h, var_z=var_z, eps=eps)
        try:
            solution = beamformer.optimize_df_statistical(ch.H, ch.Z, params, constraint, ch.N0)
        except BeamformingError as e:
            logger.warning("Точка %d (PT=%g), %s: %s", index, PT, column, e)
            rates[column] = None
            continue
        rates[column] = solution.secrecy_rate
        rank_gaps += int(solution.rank_gap)
    logger.info("df_robust_sweep: точка %d (PT=%g) готова, решений: %d", index, PT, beamformer.solves)
    return SweepRow(index=index, x=PT, rates=rates, rank_gaps=rank_gaps, solves=beamformer.solves)


class SweepRunner:
    """
    Оркестратор экспериментов: развёртки AF и робастного DF, одиночное решение, проверка неотказа.

    Attributes:
        config (ExperimentConfig): Конфигурация эксперимента

    Examples:
        >>> runner = SweepRunner(ExperimentConfig(M=2, power_grid=[1.0, 10.0], af=AfAlgorithmConfig(N=50)))
        >>> frame = runner.sync_run_af_sweep()
        >>> list(frame.columns)
        ['pt_over_ps', 'af_optimal_total', 'af_optimal_individual', 'af_achievable_total', 'af_achievable_individual', 'rank_gaps', 'solves']
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config

    def _frame(self, rows: Sequence[SweepRow], x_name: str, columns: Sequence[str]) -> pd.DataFrame:
        rows = sorted(rows, key=lambda row: row.index)
        data = {x_name: [row.x for row in rows]}
        for column in columns:
            data[column] = [np.nan if row.rates.get(column) is None else row.rates[column] for row in rows]
        data["rank_gaps"] = [row.rank_gaps for row in rows]
        data["solves"] = [row.solves for row in rows]
        return pd.DataFrame(data, columns=[x_name, *columns, "rank_gaps", "solves"])

    def _af_frame(self, rows: Sequence[SweepRow]) -> pd.DataFrame:
        return self._frame(rows, "pt_over_ps", AF_COLUMNS)

    def _df_frame(self, rows: Sequence[SweepRow]) -> pd.DataFrame:
        return self._frame(rows, "pt", [df_column(eps) for eps in self.config.eps])

    @staticmethod
    def to_csv(frame: pd.DataFrame) -> str:
        """CSV с фиксированным заголовком; сбойные ячейки - литерал FAIL."""
        return frame.to_csv(index=False, na_rep="FAIL", float_format=FLOAT_FORMAT, lineterminator="\n")

    def plot_script(self, frame: pd.DataFrame, csv_path: str) -> str:
        """
        Автономный matplotlib скрипт: все столбцы скоростей против первого столбца, вывод в PDF.

        Пакет matplotlib не импортирует; скрипт запускается отдельно рядом с CSV.
        """
        base = os.path.splitext(os.path.basename(csv_path))[0]
        rates = [c for c in frame.columns if c.startswith(("af_", "df_"))]
        xlabel = "P_T / P_s" if frame.columns[0] == "pt_over_ps" else "P_T"
        return "\n".join([
            "import csv",
            "import matplotlib.pyplot as plt",
            "",
            f"columns = {rates!r}",
            f"with open({os.path.basename(csv_path)!r}, newline='') as f:",
            "    rows = list(csv.DictReader(f))",
            f"x = [float(row[{frame.columns[0]!r}]) for row in rows]",
            "",
            "fig = plt.figure()",
            "ax = fig.add_subplot(1, 1, 1)",
            "for column in columns:",
            "    y = [float('nan') if row[column] == 'FAIL' else float(row[column]) for row in rows]",
            "    ax.plot(x, y, marker='o', label=column)",
            f"ax.set_xlabel({xlabel!r})",
            "ax.set_ylabel('secrecy rate, bits/symbol')",
            "ax.legend()",
            "ax.spines['right'].set_visible(False)",
            "ax.spines['top'].set_visible(False)",
            f"plt.savefig({base + '.pdf'!r}, bbox_inches='tight')",
            "",
        ])

    def _outputs(self, frame: pd.DataFrame) -> List[tuple]:
        if not self.config.out:
            return []
        outputs = [(self.config.out, self.to_csv(frame))]
        if self.config.plot_script:
            outputs.append((os.path.splitext(self.config.out)[0] + "_plot.py", self.plot_script(frame, self.config.out)))
        return outputs

    def _sync_write(self, frame: pd.DataFrame) -> None:
        for path, text in self._outputs(frame):
            os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
            with open(path, 'w', encoding='UTF-8', newline='') as f:
                f.write(text)
            logger.info("Записан %s", path)

    async def _async_write(self, frame: pd.DataFrame) -> None:
        for path, text in self._outputs(frame):
            os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
            async with aiofiles.open(path, 'w', encoding='UTF-8', newline='') as f:
                await f.write(text)
            logger.info("Записан %s", path)

    async def _async_map(self, point: Callable[[ExperimentConfig, int], SweepRow]) -> List[SweepRow]:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
            futures = [loop.run_in_executor(pool, point, self.config, i) for i in range(len(self.config.power_grid))]
            rows = await asyncio.gather(*futures)
        return sorted(rows, key=lambda row: row.index)

    def _check_mode(self, mode: ExperimentMode) -> None:
        if self.config.mode != mode:
            raise ConfigError(f"Режим конфигурации {self.config.mode.value}, ожидается {mode.value}")

    def sync_run_af_sweep(self) -> pd.DataFrame:
        """
        Развёртка AF по PT / Ps (синхронно).

        Returns:
            pd.DataFrame: Столбцы pt_over_ps, четыре AF стратегии, rank_gaps, solves

        Raises:
            ConfigError: Если mode != af_sweep
        """
        self._check_mode(ExperimentMode.AF_SWEEP)
        rows = [af_sweep_point(self.config, i) for i in range(len(self.config.power_grid))]
        frame = self._af_frame(rows)
        self._sync_write(frame)
        return frame

    async def async_run_af_sweep(self) -> pd.DataFrame:
        """
        Развёртка AF по PT / Ps (асинхронно, точки в пуле из config.workers процессов).

        Returns:
            pd.DataFrame: Та же таблица, что и у sync_run_af_sweep

        Raises:
            ConfigError: Если mode != af_sweep
        """
        self._check_mode(ExperimentMode.AF_SWEEP)
        frame = self._af_frame(await self._async_map(af_sweep_point))
        await self._async_write(frame)
        return frame

    def sync_run_df_robust_sweep(self) -> pd.DataFrame:
        """
        Развёртка статистически робастного DF по PT для каждого eps (синхронно).

        Returns:
            pd.DataFrame: Столбцы pt, df_statistical_eps_<eps>, rank_gaps, solves

        Raises:
            ConfigError: Если mode != df_robust_sweep
        """
        self._check_mode(ExperimentMode.DF_ROBUST_SWEEP)
        rows = [df_sweep_point(self.config, i) for i in range(len(self.config.power_grid))]
        frame = self._df_frame(rows)
        self._sync_write(frame)
        return frame

    async def async_run_df_robust_sweep(self) -> pd.DataFrame:
        """
        Развёртка статистически робастного DF по PT (асинхронно).

        Returns:
            pd.DataFrame: Та же таблица, что и у sync_run_df_robust_sweep

        Raises:
            ConfigError: Если mode != df_robust_sweep
        """
        self._check_mode(ExperimentMode.DF_ROBUST_SWEEP)
        frame = self._df_frame(await self._async_map(df_sweep_point))
        await self._async_write(frame)
        return frame

    def _constraint(self, M: int, PT: float) -> PowerConstraint:
        kind = self.config.constraint_kind
        p = self.config.p if self.config.p is not None else np.full(M, PT / M)
        if kind != PowerKind.TOTAL and len(p) != M:
            raise ConfigError(f"Длина p ({len(p)}) не совпадает с числом релеев M={M}")
        if kind == PowerKind.TOTAL:
            return PowerConstraint.total(PT)
        if kind == PowerKind.INDIVIDUAL:
            return PowerConstraint.individual(p)
        return PowerConstraint.both(PT, p)

    def solve_one(self, ch: ChannelState) -> BeamSolution:
        """
        Одиночное решение на фиксированной реализации канала при PT = power_grid[0].

        Args:
            ch (ChannelState): Реализация канала

        Returns:
            BeamSolution: Решение выбранной стратегии

        Raises:
            BeamformingError: При сбое решателя
        """
        PT = self.config.power_grid[0]
        constraint = self._constraint(ch.M, PT)
        strategy = self.config.strategy
        logger.info("solve: стратегия %s, ограничение %s, PT=%g", strategy.value, constraint.kind.value, PT)
        if strategy in (SolveStrategy.AF_OPTIMAL, SolveStrategy.AF_ACHIEVABLE):
            beamformer = AfBeamformer(self.config.solver, self.config.af)
            if strategy == SolveStrategy.AF_OPTIMAL:
                return beamformer.optimize_af(derive_af(ch), ch, constraint)
            return beamformer.af_achievable(derive_af(ch), ch, constraint)
        df_ch = ch.to_df_channel()
        beamformer = DfBeamformer(self.config.solver, self.config.df)
        if strategy == SolveStrategy.DF_PERFECT:
            return beamformer.optimize_df_perfect(df_ch, constraint)
        if self.config.robust is None:
            raise ConfigError("Для стратегии df_robust требуется поле robust")
        return beamformer.optimize_df(df_ch.H, df_ch.Z, self.config.robust, constraint, df_ch.N0)

    def solve_file(self, path: str) -> BeamSolution:
        return self.solve_one(load_channel(path))

    def validate_outage(self, eps: Optional[float] = None, PT: Optional[float] = None) -> OutageReport:
        """
        Решает статистически робастный DF в одной точке (PT, eps) и проверяет неотказ Monte Carlo.

        Проверяется уровень t = min(t*, 2^w_rate) для извлечённого w.

        Args:
            eps (float): Порог неотказа, по умолчанию первый из config.eps
            PT (float): Мощность, по умолчанию power_grid[0]

        Returns:
            OutageReport: {eps, t, empirical, trials, stderr}
        """
        eps = eps if eps is not None else self.config.eps[0]
        PT = PT if PT is not None else self.config.power_grid[0]
        ch = sample_df_channel(self.config.seed, self.config.M, self.config.sigma_h, self.config.sigma_z,
                               N0=self.config.N0)
        var_h, var_z = self.config.variance.variances(PT)
        params = StatisticalParams(var_h=var_h, var_z=var_z, eps=eps)
        beamformer = DfBeamformer(self.config.solver, self.config.df)
        solution = beamformer.optimize_df_statistical(ch.H, ch.Z, params,
                                                      PowerConstraint.equal_individual(PT, ch.M), ch.N0)
        t = min(solution.t1, 2.0 ** solution.w_rate)
        trials = self.config.outage_trials
        empirical = verify_outage(solution.w, ch.h, ch.z, params, t, trials=trials, seed=self.config.seed,
                                  N0=ch.N0)
        return OutageReport(eps=eps, t=t, empirical=empirical, trials=trials,
                            stderr=float(np.sqrt(eps * (1.0 - eps) / trials)))
