"""Command-line front end: ``train``, ``bench`` and ``eval``.

Examples:
    qmlforge train --config vqe_exact --out runs/vqe_exact
    qmlforge train --config my.cfg --seed 7 --jobs 4
    qmlforge bench --config bench --out bench.csv
    qmlforge eval --config regression_exact --params runs/x/params_000.json

``--config`` takes a path or the name of a shipped preset.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from .config import BenchConfig, ExperimentConfig
from .differentiation import get_engine
from .errors import ConfigError, QMLForgeError
from .models import Expectation, HardwareEfficient, QuantumModel
from .observables import sum_z
from .training import optimize, regression_dataset

log = logging.getLogger("qmlforge")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
EVAL_REPEATS = 20
RUNTIME_ERRORS = (QMLForgeError, ArithmeticError, np.linalg.LinAlgError, MemoryError)


def preset_names() -> list[str]:
    root = resources.files("qmlforge") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config(name: str) -> Path:
    """Path on disk, or the shipped preset of that name."""
    p = Path(name)
    if p.exists():
        return p
    stem = name[:-4] if name.endswith(".cfg") else name
    candidate = resources.files("qmlforge") / "presets" / f"{stem}.cfg"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"no config file or preset named {name!r}", field="--config")


def median_mad(values) -> tuple[float, float]:
    """Median and median absolute deviation (unscaled)."""
    values = [float(v) for v in values]
    med = statistics.median(values)
    return med, statistics.median(abs(v - med) for v in values)


# -- train -------------------------------------------------------------------


def run_single(doc: dict, seed: int, omit_timing: bool = False) -> dict:
    """One seeded training run. Module level so worker processes can pickle it."""
    cfg = ExperimentConfig.from_dict(doc)
    model = cfg.build_model()
    kwargs = {"init_range": tuple(cfg.model["init_range"])}
    if cfg.task == "regression":
        d = cfg.data
        kwargs["x"], kwargs["y"] = regression_dataset(d["npoints"], d["xmin"], d["xmax"], d["scale"])
    run = optimize(model, cfg.differentiation, cfg.epochs, cfg.optimizer["lr"], seed, **kwargs)
    lines = []
    for rec in run.records:
        row = rec.to_dict()
        if omit_timing:
            row["wall_ms"] = None
        lines.append(row)
    return {
        "seed": seed,
        "lines": lines,
        "params": run.params.tolist(),
        "initial_params": run.initial_params.tolist(),
        "initial_loss": run.initial_loss,
        "final_loss": run.final_loss,
    }


def summarize(results: list[dict], task: str) -> dict:
    epochs = []
    nep = min(len(r["lines"]) for r in results) if results else 0
    for e in range(nep):
        med, mad = median_mad(r["lines"][e]["loss"] for r in results)
        epochs.append({"epoch": e, "median": med, "mad": mad})
    fmed, fmad = median_mad(r["final_loss"] for r in results)
    imed, imad = median_mad(r["initial_loss"] for r in results)
    return {
        "task": task,
        "runs": len(results),
        "seeds": [r["seed"] for r in results],
        "initial_loss": {"median": imed, "mad": imad},
        "final_loss": {"median": fmed, "mad": fmad},
        "epochs": epochs,
    }


def _dump_line(row: dict) -> str:
    return json.dumps(row, separators=(", ", ": "))


def cmd_train(args) -> int:
    cfg = ExperimentConfig.load(resolve_config(args.config))
    base = cfg.seed if args.seed is None else args.seed
    out = Path(args.out or f"runs/{Path(args.config).stem}")
    out.mkdir(parents=True, exist_ok=True)
    doc = cfg.to_dict()
    seeds = [base + r for r in range(cfg.runs)]
    if args.run is not None:
        if not 0 <= args.run < cfg.runs:
            raise ConfigError(f"--run must be in [0, {cfg.runs})", field="--run")
        seeds = [base + args.run]

    if args.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(run_single, doc, s, args.omit_timing) for s in seeds]
            results = [f.result() for f in futures]
    else:
        results = [run_single(doc, s, args.omit_timing) for s in seeds]

    (out / "config.json").write_text(cfg.dumps() + "\n")
    (out / "circuit.json").write_text(cfg.build_model().circuit.to_json(indent=2) + "\n")
    for res in results:
        r = res["seed"] - base
        with open(out / f"run_{r:03d}.jsonl", "w") as fh:
            for row in res["lines"]:
                fh.write(_dump_line(row) + "\n")
        params = {k: res[k] for k in ("seed", "params", "initial_params", "initial_loss", "final_loss")}
        (out / f"params_{r:03d}.json").write_text(json.dumps(params, indent=2) + "\n")
    if args.run is None:
        summary = summarize(results, cfg.task)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        log.info(
            "%s: %d runs, final loss median %.6g (MAD %.3g)",
            cfg.task,
            len(results),
            summary["final_loss"]["median"],
            summary["final_loss"]["mad"],
        )
    print(out)
    return EXIT_OK


# -- bench -------------------------------------------------------------------

BENCH_FIELDS = [
    "engine",
    "nqubits",
    "nparams",
    "repeats",
    "mean_seconds",
    "std_seconds",
    "first_epoch_ms",
]


def bench_cell(cfg: BenchConfig, engine_name: str, n: int) -> dict:
    """Time ``repeats`` independent VQE trainings of one (engine, width) cell."""
    engine = get_engine(engine_name)
    totals, first = [], []
    nparams = 0
    for k in range(cfg.repeats):
        model = QuantumModel([HardwareEfficient(n, cfg.nlayers)], Expectation(sum_z(n)))
        nparams = model.nparams
        seed = cfg.seed + k
        if cfg.warmup:
            warm = np.random.default_rng(seed).uniform(-np.pi, np.pi, nparams)
            engine.gradient(model, None, np.random.default_rng(seed), params=warm)
        run = optimize(model, engine, cfg.epochs, cfg.lr, seed)
        totals.append(sum(r.wall_ms for r in run.records) / 1e3)
        first.append(run.records[0].wall_ms)
    return {
        "engine": engine_name,
        "nqubits": n,
        "nparams": nparams,
        "repeats": cfg.repeats,
        "mean_seconds": float(np.mean(totals)),
        "std_seconds": float(np.std(totals, ddof=1)) if len(totals) > 1 else 0.0,
        "first_epoch_ms": float(np.mean(first)),
    }


def cmd_bench(args) -> int:
    cfg = BenchConfig.load(resolve_config(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    rows = []
    for n in cfg.qubits:
        for engine in cfg.engines:
            row = bench_cell(cfg, engine, n)
            log.info("%s n=%d: %.4f s", engine, n, row["mean_seconds"])
            rows.append(row)
    out = Path(args.out or "bench.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    print(out)
    return EXIT_OK


# -- eval --------------------------------------------------------------------


def load_params(path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read params file {path}: {exc}", field="--params") from exc
    if isinstance(doc, dict):
        doc = doc.get("params")
    if not isinstance(doc, list):
        raise ConfigError("params file must hold a list or {'params': [...]}", field="--params")
    return np.array(doc, dtype=float)


def cmd_eval(args) -> int:
    cfg = ExperimentConfig.load(resolve_config(args.config))
    model = cfg.build_model()
    if args.params is None:
        params = np.zeros(model.nparams)
    else:
        params = load_params(args.params)
    if params.size != model.nparams:
        raise ConfigError(
            f"params file has {params.size} values, model expects {model.nparams}",
            field="--params",
        )
    seed = cfg.seed if args.seed is None else args.seed
    streams = np.random.default_rng(seed).spawn(EVAL_REPEATS)
    result = {"task": cfg.task, "evaluations": EVAL_REPEATS}
    if cfg.task == "vqe":
        energies = [float(model.forward(None, s, params=params)) for s in streams]
        med, mad = median_mad(energies)
        result["energy"] = {"median": med, "mad": mad}
    else:
        d = cfg.data
        x, _ = regression_dataset(d["npoints"], d["xmin"], d["xmax"], d["scale"])
        sub = [s.spawn(len(x)) for s in streams]
        rows = []
        for i, xi in enumerate(x):
            preds = [float(model.forward([xi], ss[i], params=params)) for ss in sub]
            med, mad = median_mad(preds)
            rows.append(
                {
                    "x": float(xi),
                    "prediction": med,
                    "mad": mad,
                    "denormalized": med * d["scale"],
                }
            )
        result["predictions"] = rows
    text = json.dumps(result, indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmlforge", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config path or preset name")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory or file")

    tr = sub.add_parser("train", help="train a model; writes JSON lines and a summary")
    common(tr)
    tr.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    tr.add_argument("--run", type=int, default=None, help="only run repetition R (seed base+R)")
    tr.add_argument(
        "--omit-timing",
        action="store_true",
        help="write wall_ms as null so reruns are byte-identical",
    )
    tr.set_defaults(func=cmd_train)

    be = sub.add_parser("bench", help="time VQE training per gradient engine; writes CSV")
    common(be)
    be.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; cells run serially")
    be.set_defaults(func=cmd_bench)

    ev = sub.add_parser("eval", help="re-evaluate trained parameters")
    common(ev)
    ev.add_argument("--params", default=None, help="params JSON (list or {'params': [...]})")
    ev.set_defaults(func=cmd_eval)

    sub.add_parser("presets", help="list shipped presets").set_defaults(
        func=lambda a: print("\n".join(preset_names())) or EXIT_OK
    )
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RUNTIME_ERRORS as exc:
        print(f"simulation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
