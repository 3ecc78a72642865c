"""
Подкоманды mesorch: gen-data, train, prune, evaluate, robustness, flops, predict, ablation
"""
import argparse
import csv
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from pydantic import ValidationError

from src.config.settings import (
    RunConfig,
    configure_threads,
    derive_model_config,
    load_run_config,
    with_model_config,
    write_run_echo,
)
from src.errors import CheckpointError, MesorchError, TrainingDivergedError, UsageError
from src.metrics.cost import count_cost
from src.metrics.evaluator import evaluate_model
from src.metrics.robustness import run_robustness
from src.model.checkpoint import load_model, read_manifest, write_checkpoint
from src.model.config import ABLATION_BRANCHES, MesorchConfig
from src.model.mesorch import build_model
from src.pruning.pruner import prune, renormalize_and_finetune
from src.synthdata.builder import generate_dataset
from src.synthdata.dataset_store import MANIFEST_NAME, TamperDataset, load_image
from src.synthdata.perturbations import PerturbSpec
from src.training.state import load_checkpoint
from src.training.trainer import train_loop
from utils.logger import app_logger

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _run_config(args) -> RunConfig:
    return load_run_config(
        preset=getattr(args, "preset", "toy"),
        config_file=getattr(args, "config", None),
        overrides=getattr(args, "set", None),
        seed=getattr(args, "seed", None)
    )


def _require_dataset(path: Optional[str], flag: str) -> Path:
    if not path:
        raise UsageError(f"Не указан {flag}")
    root = Path(path)
    if not (root / MANIFEST_NAME).exists():
        raise UsageError(f"{flag}: датасет не найден ({root / MANIFEST_NAME})")
    return root


def _require_checkpoint(path: Optional[str]) -> Path:
    if not path or not Path(path).is_dir():
        raise UsageError(f"Чекпоинт не найден: {path}")
    return Path(path)


def _echo(out_dir, run_config: RunConfig, command: str, args) -> Path:
    arguments = {k: v for k, v in vars(args).items() if k != "handler"}
    write_run_echo(out_dir, run_config, command, arguments)
    return Path(out_dir)


def cmd_gen_data(args) -> int:
    """Генерация синтетического датасета"""
    if args.count is not None and args.count < 4:
        raise UsageError(f"--count должен быть не меньше 4, получено {args.count}")
    run_config = _run_config(args)
    data = run_config.data
    count = args.count if args.count is not None else data.count
    size = (args.size, args.size) if args.size else tuple(data.size)
    fractions = tuple(args.split_fractions) if args.split_fractions else tuple(data.split_fractions)

    out_dir = _echo(args.out, run_config, "gen-data", args)
    manifest = generate_dataset(out_dir, count, seed=run_config.seed, size=size,
                                split_fractions=fractions, workers=args.workers or data.workers)

    print(f"✅ Датасет записан в {out_dir}")
    print(f"📊 Образцов: {len(manifest.records)}, размер {size[0]}×{size[1]}, seed={run_config.seed}")
    for split, n in manifest.counts().items():
        print(f"   • {split}: {n}")
    return EXIT_OK


def cmd_train(args) -> int:
    """Обучение модели"""
    data_root = _require_dataset(args.data, "--data")
    run_config = _run_config(args)
    out_dir = _echo(args.out, run_config, "train", args)
    input_size = tuple(run_config.model.input_size)
    dataset = TamperDataset(data_root, "train", input_size=input_size)

    state = None
    if args.resume:
        state = load_checkpoint(_require_checkpoint(args.resume), run_config.train, expected_config=run_config.model)
        model = state.model
        print(f"🔄 Продолжение с эпохи {state.epoch}, шаг {state.step}")
    else:
        model = build_model(run_config.model, seed=run_config.seed)

    try:
        state = train_loop(model, dataset, run_config.train, out_dir=out_dir, state=state, run_name=str(out_dir))
    except TrainingDivergedError as e:
        print(f"❌ Обучение разошлось, снимок: {e.snapshot_path}")
        raise

    val = TamperDataset(data_root, "val", input_size=input_size)
    if len(val):
        report = evaluate_model(state.model, val, threshold=run_config.threshold)
        report.write_json(out_dir / "metrics_val.json")
        print(f"📊 Val F1={report.mean['f1']:.4f}")
    print(f"✅ Обучение завершено: шагов {state.step}, чекпоинты в {out_dir / 'checkpoints'}")
    return EXIT_OK


def cmd_prune(args) -> int:
    """Прунинг ветвей и дообучение"""
    checkpoint = _require_checkpoint(args.checkpoint)
    data_root = _require_dataset(args.calibration, "--calibration")
    overrides = list(args.set or [])
    if args.epsilon is not None:
        overrides.append(f"prune.epsilon={args.epsilon}")
    if args.finetune_epochs is not None:
        overrides.append(f"prune.finetune_epochs={args.finetune_epochs}")
    if args.frozen_weights:
        overrides.append("prune.retain_weighting=false")
    args.set = overrides
    run_config = _run_config(args)
    out_dir = _echo(args.out, run_config, "prune", args)

    model = load_model(checkpoint)
    input_size = tuple(model.config.input_size)
    calibration = TamperDataset(data_root, "calibration", input_size=input_size)
    pruned, report = prune(model, calibration, run_config.prune)

    finetune_epochs = run_config.prune.finetune_epochs
    if finetune_epochs > 0 and pruned.config.num_branches < len(model.active_branches):
        train_config = run_config.train.model_copy(update={"epochs": finetune_epochs, "input_size": input_size,
                                                          "warmup_epochs": min(run_config.train.warmup_epochs,
                                                                               finetune_epochs)})
        train_set = TamperDataset(data_root, "train", input_size=input_size)
        pruned = renormalize_and_finetune(pruned, train_set, train_config, out_dir=out_dir / "finetune")
        report.extra["finetune_epochs"] = finetune_epochs

    write_checkpoint(out_dir / "checkpoint", pruned, seed=run_config.seed, extra={"prune_report": report.to_dict()})
    report.write_json(out_dir / "prune_report.json")

    print(f"✂️ ε={report.epsilon:.4f}: удалены ветви {report.pruned_branches}, осталось {report.surviving_branches}")
    if report.guard_engaged:
        print("⚠️ Сработала защита min_surviving_branches")
    print(f"📉 Параметры {report.params_before} -> {report.params_after}, FLOPs {report.flops_before} -> {report.flops_after}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    """Метрики на сплите"""
    checkpoint = _require_checkpoint(args.checkpoint)
    data_root = _require_dataset(args.data, "--data")
    run_config = _run_config(args)
    out_dir = _echo(args.out, run_config, "evaluate", args)

    model = load_model(checkpoint)
    dataset = TamperDataset(data_root, args.split, input_size=tuple(model.config.input_size),
                            perturbation=PerturbSpec.parse(args.perturb), seed=run_config.seed)
    report = evaluate_model(model, dataset, threshold=run_config.threshold, aggregation=args.aggregation)
    report.write_json(out_dir / "metrics.json")
    report.write_csv(out_dir / "metrics.csv")

    print(f"📊 {args.split}: {report.sample_count} изображений, агрегация {args.aggregation}")
    for name, value in report.mean.items():
        print(f"   • {name}: {'n/a' if value is None else f'{value:.4f}'}")
    if report.auc_undefined:
        print(f"   • AUC не определён для {report.auc_undefined} изображений")
    return EXIT_OK


def cmd_robustness(args) -> int:
    """Сетка искажений: None + 3 вида × 6 уровней"""
    checkpoint = _require_checkpoint(args.checkpoint)
    data_root = _require_dataset(args.data, "--data")
    run_config = _run_config(args)
    out_dir = _echo(args.out, run_config, "robustness", args)

    model = load_model(checkpoint)
    report = run_robustness(model, data_root, split=args.split, input_size=tuple(model.config.input_size),
                            threshold=run_config.threshold, seed=run_config.seed, model_name=checkpoint.name)
    report.write_table_csv(out_dir / "robustness.csv")
    report.write_cells_csv(out_dir / "robustness_cells.csv")

    print(f"🛡️ Базовый F1: {report.baseline_f1:.4f}")
    for kind in ("gauss_noise", "gauss_blur", "jpeg"):
        print(f"   • {kind}: Avg.F1 {report.average_f1(kind):.4f} "
              f"(с None: {report.average_f1(kind, include_none=True):.4f})")
    return EXIT_OK


def cmd_flops(args) -> int:
    """Параметры и FLOPs при batch 1"""
    run_config = _run_config(args)
    if args.checkpoint:
        manifest = read_manifest(_require_checkpoint(args.checkpoint))
        try:
            config = MesorchConfig(**manifest["config"])
        except ValidationError as e:
            raise CheckpointError(f"Конфигурация в чекпоинте {args.checkpoint} некорректна: {e}")
        run_config = with_model_config(run_config, config)
    config = run_config.model
    size = (args.size, args.size) if args.size else tuple(config.input_size)
    report = count_cost(config, size)

    if args.out:
        _echo(args.out, run_config, "flops", args)
        report.write_json(Path(args.out) / "cost.json")
    print(f"🧮 {size[0]}×{size[1]}: параметров {report.params:,}, FLOPs {report.flops:,} ({report.gflops:.3f} G)")
    for name, part in report.breakdown.items():
        print(f"   • {name}: {part['params']:,} параметров, {part['flops']:,} FLOPs")
    return EXIT_OK


@torch.no_grad()
def predict_image(model, image: np.ndarray, threshold: float = 0.5):
    """
    Вероятности и бинарная маска в исходном разрешении изображения

    Returns:
        (вероятности H×W float32, маска H×W bool)
    """
    height, width = image.shape[:2]
    tensor = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1)))[None].float()
    model_size = tuple(model.config.input_size)
    if (height, width) != model_size:
        tensor = F.interpolate(tensor, size=model_size, mode="bilinear", align_corners=False)
    logits = model.eval()(tensor).final.full
    if (height, width) != model_size:
        logits = F.interpolate(logits, size=(height, width), mode="bilinear", align_corners=False)
    prob = torch.sigmoid(logits)[0, 0].numpy()
    return prob, prob >= threshold


def cmd_predict(args) -> int:
    """Карта вероятностей и бинарная маска для одного изображения"""
    checkpoint = _require_checkpoint(args.checkpoint)
    if not args.image or not Path(args.image).exists():
        raise UsageError(f"Изображение не найдено: {args.image}")
    run_config = _run_config(args)
    out_dir = _echo(args.out, run_config, "predict", args)

    model = load_model(checkpoint)
    prob, mask = predict_image(model, load_image(args.image), run_config.threshold)
    stem = Path(args.image).stem
    Image.fromarray(np.clip(np.round(prob * 255), 0, 255).astype(np.uint8), mode="L").save(out_dir / f"{stem}_prob.png")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(out_dir / f"{stem}_mask.png")

    print(f"🖼️ {stem}: {prob.shape[0]}×{prob.shape[1]}, доля подделки {mask.mean():.3f}")
    return EXIT_OK


def cmd_ablation(args) -> int:
    """Обучение вариантов с разными наборами ветвей и сравнение F1 на test"""
    data_root = _require_dataset(args.data, "--data")
    unknown = [v for v in args.variants if v not in ABLATION_BRANCHES]
    if unknown:
        raise UsageError(f"Неизвестные варианты {unknown}, доступны {list(ABLATION_BRANCHES)}")
    run_config = _run_config(args)
    out_dir = _echo(args.out, run_config, "ablation", args)
    input_size = tuple(run_config.model.input_size)
    train_set = TamperDataset(data_root, "train", input_size=input_size)
    test_set = TamperDataset(data_root, "test", input_size=input_size)

    rows = []
    for variant in args.variants:
        config = derive_model_config(run_config.model, active_branches=ABLATION_BRANCHES[variant])
        model = build_model(config, seed=run_config.seed)
        state = train_loop(model, train_set, run_config.train, out_dir=out_dir / variant, run_name=variant)
        report = evaluate_model(state.model, test_set, threshold=run_config.threshold)
        report.write_json(out_dir / variant / "metrics_test.json")
        rows.append([variant, config.num_branches, report.mean["f1"], report.mean["iou"], report.mean["auc"]])
        print(f"🔬 {variant}: F1={report.mean['f1']:.4f}")

    with open(out_dir / "ablation.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "branches", "f1", "iou", "auc"])
        writer.writerows(rows)
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--preset", choices=["toy", "paper"], default="toy", help="Встроенный пресет")
    parser.add_argument("--config", help="JSON-файл конфигурации")
    parser.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="Переопределение параметра")
    parser.add_argument("--seed", type=int, help="Зерно всего запуска")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mesorch", description="Mesorch Lab: локализация манипуляций на изображениях")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Сгенерировать синтетический датасет")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--split-fractions", type=float, nargs=4, metavar=("TRAIN", "VAL", "TEST", "CAL"))
    p.add_argument("--workers", type=int)
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="Обучить модель")
    _add_config_flags(p)
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="Каталог чекпоинта для продолжения")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("prune", help="Прунинг ветвей по средним весам")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--calibration", required=True, help="Датасет со сплитом calibration")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--finetune-epochs", type=int)
    p.add_argument("--frozen-weights", action="store_true", help="Удалить модуль весов, оставить постоянные веса")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_prune)

    p = sub.add_parser("evaluate", help="Метрики на сплите")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--aggregation", choices=["per_image", "micro"], default="per_image")
    p.add_argument("--perturb", default="none", help="none или kind:level, например jpeg:70")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("robustness", help="Сетка искажений")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_robustness)

    p = sub.add_parser("flops", help="Параметры и FLOPs")
    _add_config_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--size", type=int)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_flops)

    p = sub.add_parser("predict", help="Маска для одного изображения")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("ablation", help="Сравнение наборов ветвей")
    _add_config_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--variants", nargs="+", default=["hybrid", "local", "global"])
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ablation)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Разбирает аргументы и выполняет подкоманду

    Returns:
        0 - успех, 1 - ошибка выполнения, 2 - ошибка использования
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_threads()
    try:
        return args.handler(args)
    except UsageError as e:
        app_logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except MesorchError as e:
        app_logger.error(f"{args.command}: {e}")
        return EXIT_FAILURE
    except KeyboardInterrupt:
        print("\n⏹️ Операция прервана пользователем")
        return EXIT_FAILURE
