"""
Командная строка relay-secrecy.

Подкоманды: af-sweep, df-robust-sweep, solve, validate-outage. Коды выхода: 0 - успех,
1 - ошибка использования, конфигурации или разбора файлов, 2 - сбой решателя.
"""
import sys
import json
import asyncio
import logging
import argparse

from typing import Any, Dict, List, Optional
from pydantic import ValidationError
from .exceptions import BeamformingError, ConfigError
from .experiments import SweepRunner
from .models.channel_models import ChannelState, ChannelStateFile
from .models.experiment_models import ExperimentConfig, ExperimentMode

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: ошибка: {message}\n")


def _read_json(path: str) -> Any:
    try:
        with open(path, 'r', encoding='UTF-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: некорректный JSON, строка {e.lineno}, столбец {e.colno}: {e.msg}") from e


def load_config(path: Optional[str], mode: ExperimentMode, overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Конфигурация из JSON файла с переопределениями из флагов.

    Args:
        path (str): Путь к JSON или None (значения по умолчанию)
        mode (ExperimentMode): Режим подкоманды
        overrides (dict): Значения флагов; None пропускаются

    Returns:
        ExperimentConfig: Проверенная конфигурация

    Raises:
        ConfigError: При ошибке чтения или разбора JSON
        ValidationError: При недопустимых значениях
    """
    data = _read_json(path) if path else {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: ожидается JSON объект")
    data['mode'] = mode.value
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.model_validate(data)


def load_channel_file(path: str) -> ChannelState:
    return ChannelState.from_file_model(ChannelStateFile.model_validate(_read_json(path)))


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, 'w', encoding='UTF-8') as f:
            f.write(text if text.endswith("\n") else text + "\n")
        logger.info("Записан %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relay-secrecy", description="Секретная скорость релейного бимформинга (AF и DF)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Подробный журнал (DEBUG)")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Только ошибки")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON файл ExperimentConfig")
        p.add_argument("--seed", type=int, help="Зерно реализации канала")
        p.add_argument("--out", help="Выходной файл; по умолчанию stdout")

    for name in ("af-sweep", "df-robust-sweep"):
        p = sub.add_parser(name, help="Развёртка по мощности")
        common(p)
        p.add_argument("--workers", type=int, help="Число процессов; > 1 включает async развёртку")
        p.add_argument("--plot-script", action="store_true", default=None, help="Записать matplotlib скрипт построения графика рядом с CSV")

    p = sub.add_parser("solve", help="Одиночное решение на реализации канала из файла")
    common(p)
    p.add_argument("channel", help="JSON файл ChannelState")
    p.add_argument("--strategy", choices=["af_optimal", "af_achievable", "df_perfect", "df_robust"])
    p.add_argument("--constraint", dest="constraint_kind", choices=["total", "individual", "both"])
    p.add_argument("--pt", type=float, help="Суммарная мощность релеев PT")

    p = sub.add_parser("validate-outage", help="Monte Carlo проверка вероятности неотказа")
    common(p)
    p.add_argument("--eps", type=float, help="Порог вероятности неотказа")
    p.add_argument("--pt", type=float, help="Суммарная мощность релеев PT")
    p.add_argument("--trials", dest="outage_trials", type=int, help="Число испытаний (>= 10000)")
    return parser


def _run(args: argparse.Namespace) -> int:
    base = {"seed": args.seed, "out": args.out}
    if args.command in ("af-sweep", "df-robust-sweep"):
        mode = ExperimentMode.AF_SWEEP if args.command == "af-sweep" else ExperimentMode.DF_ROBUST_SWEEP
        config = load_config(args.config, mode, {**base, "workers": args.workers, "plot_script": args.plot_script})
        runner = SweepRunner(config)
        if config.workers > 1:
            run = runner.async_run_af_sweep if mode == ExperimentMode.AF_SWEEP else runner.async_run_df_robust_sweep
            frame = asyncio.run(run())
        else:
            run = runner.sync_run_af_sweep if mode == ExperimentMode.AF_SWEEP else runner.sync_run_df_robust_sweep
            frame = run()
        if not config.out:
            sys.stdout.write(runner.to_csv(frame))
        return EXIT_OK

    if args.command == "solve":
        overrides = {**base, "strategy": args.strategy, "constraint_kind": args.constraint_kind,
                     "power_grid": [args.pt] if args.pt is not None else None}
        config = load_config(args.config, ExperimentMode.SOLVE_ONE, overrides)
        ch = load_channel_file(args.channel)
        solution = SweepRunner(config).solve_one(ch)
        _emit(solution.to_json(), config.out)
        return EXIT_OK

    overrides = {**base, "outage_trials": args.outage_trials,
                 "power_grid": [args.pt] if args.pt is not None else None,
                 "eps": [args.eps] if args.eps is not None else None}
    config = load_config(args.config, ExperimentMode.SOLVE_ONE, overrides)
    report = SweepRunner(config).validate_outage()
    _emit(report.model_dump_json(indent=2), config.out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа консольной команды relay-secrecy.

    Args:
        argv (list): Аргументы командной строки; по умолчанию sys.argv[1:]

    Returns:
        int: Код выхода 0, 1 или 2
    """
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _run(args)
    except (ConfigError, ValidationError) as e:
        sys.stderr.write(f"Ошибка конфигурации: {e}\n")
        return EXIT_USAGE
    except BeamformingError as e:
        logger.error("Сбой решателя: %s", e)
        return EXIT_SOLVER


if __name__ == '__main__':
    sys.exit(main())
