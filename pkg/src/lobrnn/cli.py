"""``lobrnn`` command line: simulate, featurize, train, evaluate, study, bench.

Settings resolve in three layers: the selected profile (``desk`` or
``full``), then an optional JSON config file, then explicit flags. A config
file may hold any of the sections ``simulator``, ``train``, ``split``,
``model``, ``logistic`` and ``study``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .artifacts import (
    MANIFEST,
    load_features,
    read_manifest,
    write_csv,
    write_features,
    write_manifest,
)
from .baselines import LogisticConfig
from .dataset import SplitPlan, sequences_from_table, split
from .errors import InvalidConfig, LobError
from .eval.metrics import auc_score, confusion, roc
from .eval.studies import (
    HOUR_NS,
    NSTEPS_T,
    cross_validate,
    horizon_rows,
    horizon_study,
    horizon_summary_rows,
    hourly_f1,
    nsteps_study,
    retraining_study,
)
from .features import DEFAULT_WINDOW, FeatureTable, featurize_session
from .market_data import format_event_stream, parse_event_stream
from .pipeline import ModelSpec, decisions, fit, score
from .rnn.model import forward, glorot_init
from .rnn.training import TrainConfig
from .serialize import load as load_model, save as save_model
from .simulator import SimConfig, simulate_session, session_regimes

log = logging.getLogger("lobrnn")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

PROFILES = {
    "desk": {
        "simulator": {"n_events": 50_000, "sessions": 4},
        "split": {"train_sessions": 3, "validation_size": 2_000, "per_class_target": 3_000},
        "train": {"epochs": 50, "batch_size": 50},
        "study": {"cv_splits": 20},
    },
    "full": {
        "simulator": {"n_events": 2_000_000, "sessions": 23},
        "split": {"train_sessions": 3, "validation_size": 200_000, "per_class_target": 33_000},
        "train": {"epochs": 1000, "batch_size": 500},
        "study": {"cv_splits": 20},
    },
}


class UsageError(Exception):
    """Bad command-line usage; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- configuration --------------------------------------------------------

def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(profile: str, config_path: Optional[str], overrides: dict) -> dict:
    if profile not in PROFILES:
        raise InvalidConfig(f"unknown profile {profile!r}")
    cfg = copy.deepcopy(PROFILES[profile])
    if config_path:
        try:
            doc = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise InvalidConfig("config file must hold a JSON object")
        cfg = _merge(cfg, doc)
    overrides = {k: {kk: vv for kk, vv in v.items() if vv is not None} for k, v in overrides.items()}
    return _merge(cfg, overrides)


def _build(cls, doc: dict, what: str):
    try:
        return cls(**doc)
    except TypeError as exc:
        raise InvalidConfig(f"bad {what} settings: {exc}") from exc
    except ValueError as exc:
        raise InvalidConfig(f"bad {what} settings: {exc}") from exc


def sim_config(cfg: dict) -> SimConfig:
    return SimConfig.from_dict(cfg.get("simulator", {}))


def split_plan(cfg: dict) -> SplitPlan:
    return _build(SplitPlan, cfg.get("split", {}), "split")


def model_spec(cfg: dict, kind: Optional[str] = None) -> ModelSpec:
    kind = kind or cfg.get("model", {}).get("kind", "rnn")
    train_doc = dict(cfg.get("train", {}))
    if kind == "ffwd":
        train_doc.setdefault("lr0", 0.01)
        train_doc.setdefault("l2", 0.1)
    tc = _build(TrainConfig, train_doc, "train")
    lc = _build(LogisticConfig, {"seed": tc.seed, **cfg.get("logistic", {})}, "logistic")
    hidden = cfg.get("model", {}).get("hidden_layers", (200, 100))
    return ModelSpec(kind, tc, tuple(hidden), lc)


# -- subcommands ----------------------------------------------------------

def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_simulate(args, cfg) -> int:
    sc = sim_config(cfg)
    out = _out_dir(args.out)
    ext = "jsonl" if args.format == "jsonl" else "csv"
    regimes = session_regimes(sc)
    files = []
    for s in range(sc.sessions):
        events = simulate_session(sc, s, regimes[s])
        path = out / f"session_{s:03d}.{ext}"
        path.write_text(format_event_stream(events, args.format))
        files.append(path)
        log.info("simulated session=%d events=%d file=%s", s, len(events), path.name)
    write_manifest(out, "simulate", {"simulator": sc.to_dict(), "format": args.format}, files, sessions=[f.name for f in files])
    return EXIT_OK


def cmd_featurize(args, cfg) -> int:
    src = Path(args.events)
    doc = read_manifest(src)
    names = doc.get("sessions") or sorted(doc.get("outputs", {}))
    fmt = doc.get("config", {}).get("format", "csv")
    window = args.window or cfg.get("features", {}).get("window_length", DEFAULT_WINDOW)
    tables = []
    for k, name in enumerate(names):
        events = parse_event_stream((src / name).read_bytes(), fmt)
        tables.append(featurize_session(events, k, window))
        log.info("featurized session=%d rows=%d", k, len(tables[-1]))
    table = FeatureTable.concat(tables)
    out = _out_dir(args.out)
    write_features(out, table, {"window_length": window, "events_manifest": doc.get("outputs", {})}, [src / MANIFEST])
    return EXIT_OK


def _split_for(table, spec: ModelSpec, plan: SplitPlan, offset: int, horizon_ns=None):
    samples = sequences_from_table(table, spec.T, horizon_ns)
    return samples, split(samples, plan, offset)


def cmd_train(args, cfg) -> int:
    table, fdoc = load_features(args.features)
    spec = model_spec(cfg, args.model)
    plan = split_plan(cfg)
    samples, (train, val, test) = _split_for(table, spec, plan, args.split)
    log.info("training kind=%s T=%d train=%d val=%d", spec.kind, spec.T, len(train), len(val))
    model, history = fit(spec, train, val)
    ids = samples.sessions()
    model.meta["split"] = {
        "offset": args.split,
        "train_sessions": ids[args.split : args.split + plan.train_sessions],
        "test_session": ids[args.split + plan.train_sessions],
        "validation_size": plan.validation_size,
    }
    out = _out_dir(args.out)
    outputs = [out / "model.json"]
    save_model(model, outputs[0])
    if history is not None:
        outputs.append(out / "history.csv")
        outputs[-1].write_text(history.to_csv())
        if args.plots:
            from .plotting import plot_history

            outputs.append(plot_history(history, out / "history.svg"))
    config = {"model": spec.to_dict(), "split": asdict(plan), "split_offset": args.split}
    write_manifest(out, "train", config, outputs, [Path(args.features) / MANIFEST])
    return EXIT_OK


def _metrics_rows(metrics) -> list[dict]:
    rows = []
    for i, tag in enumerate(("down", "stationary", "up")):
        rows.append({
            "class": tag,
            "tp": int(metrics.tp[i]), "fp": int(metrics.fp[i]), "fn": int(metrics.fn[i]), "tn": int(metrics.tn[i]),
            "precision": float(metrics.precision[i]), "recall": float(metrics.recall[i]), "f1": float(metrics.f1[i]),
        })
    return rows


def cmd_evaluate(args, cfg) -> int:
    model = load_model(args.model)
    table, _ = load_features(args.features)
    T = int(model.meta.get("T", 1))
    samples = sequences_from_table(table, T)
    info = model.meta.get("split")
    if args.all_sessions or not info:
        test = samples
    else:
        held = samples.for_sessions([info["test_session"]])
        test = held.subset(np.arange(min(info["validation_size"], len(held)), len(held)))
    probs = score(model, test)
    metrics = confusion(decisions(model, probs), test.y)
    out = _out_dir(args.out)
    outputs = [write_csv(out / "metrics.csv", _metrics_rows(metrics))]
    roc_rows, auc_rows = [], []
    for i, tag in ((0, "down"), (2, "up")):
        pos = test.y == (i - 1)
        curve = roc(probs[:, i], pos)
        roc_rows += [{"class": tag, "threshold": t, "tpr": a, "fpr": b} for t, a, b in curve.rows()]
        auc_rows.append({"class": tag, "auc": auc_score(probs[:, i], pos), "trapezoid_auc": curve.auc})
    outputs.append(write_csv(out / "roc.csv", roc_rows))
    outputs.append(write_csv(out / "auc.csv", auc_rows))
    write_manifest(out, "evaluate", {"all_sessions": bool(args.all_sessions), "n_test": len(test)}, outputs,
                   [Path(args.model), Path(args.features) / MANIFEST])
    for r in _metrics_rows(metrics):
        log.info("class=%s precision=%.4f recall=%.4f f1=%.4f", r["class"], r["precision"], r["recall"], r["f1"])
    return EXIT_OK


def _horizons(values: Sequence[str]):
    out = []
    for v in values:
        if str(v).lower() == "next":
            out.append(None)
        else:
            try:
                out.append(int(round(float(v) * 1e6)))  # milliseconds -> ns
            except ValueError as exc:
                raise InvalidConfig(f"bad horizon {v!r}") from exc
    return out


def cmd_study(args, cfg) -> int:
    from . import plotting

    table, _ = load_features(args.features)
    spec = model_spec(cfg, args.model)
    plan = split_plan(cfg)
    study = cfg.get("study", {})
    out = _out_dir(args.out)
    outputs = []
    kind = args.kind
    if kind == "cv20":
        samples = sequences_from_table(table, spec.T)
        cv = cross_validate(samples, spec, plan, study.get("cv_splits", 20))
        rows = cv.split_rows()
        outputs.append(write_csv(out / "cv_splits.csv", rows))
        summary = [dict(r, **cv.sizes()) for r in cv.aggregate_rows()]
        outputs.append(write_csv(out / "cv_summary.csv", summary))
        outputs.append(plotting.plot_cv(rows, out / "cv_f1.svg"))
    elif kind == "nsteps":
        T_values = study.get("T_values", list(NSTEPS_T))
        res = nsteps_study(table, spec, plan, T_values, max_splits=study.get("max_splits"))
        rows = res.rows()
        outputs.append(write_csv(out / "nsteps.csv", rows))
        outputs.append(plotting.plot_nsteps(rows, out / "nsteps.svg"))
    elif kind == "retrain":
        samples = sequences_from_table(table, spec.T)
        rows = retraining_study(samples, spec, plan).rows()
        outputs.append(write_csv(out / "retrain.csv", rows))
        outputs.append(plotting.plot_retraining(rows, out / "retrain.svg"))
    elif kind == "horizon":
        hs = _horizons(study.get("horizons_ms", ["next", 1, 10, 100]))
        res = horizon_study(table, spec, plan, hs, study.get("n_thresholds", 256))
        outputs.append(write_csv(out / "horizon_roc.csv", horizon_rows(res)))
        outputs.append(write_csv(out / "horizon_auc.csv", horizon_summary_rows(res)))
        outputs.append(plotting.plot_roc(res, out / "horizon_roc_up.svg", "up"))
        outputs.append(plotting.plot_roc(res, out / "horizon_roc_down.svg", "down"))
    elif kind == "hourly":
        samples = sequences_from_table(table, spec.T)
        train, val, test = split(samples, plan, 0)
        model, _ = fit(spec, train, val)
        preds = decisions(model, score(model, test))
        bucket = int(study.get("bucket_minutes", 60) * 60 * 10**9) if study.get("bucket_minutes") else HOUR_NS
        rows = [b.row() for b in hourly_f1(preds, test, bucket)]
        outputs.append(write_csv(out / "hourly.csv", rows))
        outputs.append(plotting.plot_hourly(rows, out / "hourly.svg"))
    config = {"kind": kind, "model": spec.to_dict(), "split": asdict(plan), "study": study}
    write_manifest(out, "study", config, outputs, [Path(args.features) / MANIFEST])
    return EXIT_OK


def bench_latency(model, T: int = 10, iterations: int = 100_000, warmup: int = 1_000, seed: int = 0,
                  float32: bool = False) -> dict:
    """Median and 99th-percentile wall time of single-sequence predictions."""
    rng = np.random.default_rng(seed)
    if model.model_kind == "rnn":
        P = model.dims[0]
        m = model
        if float32:
            m = type(model)(*(p.astype(np.float32) for p in model.params().values()), model.format_version, model.meta)
        x = rng.standard_normal((T, P)).astype(np.float32 if float32 else np.float64)

        def call():
            forward(m, x)
    else:
        P = model.meta.get("standardization", {}).get("shift")
        width = len(P) if P else 32
        x = rng.standard_normal((1, T, width))

        def call():
            model.predict_proba(x)

    for _ in range(warmup):
        call()
    times = np.empty(iterations, dtype=np.int64)
    clock = time.perf_counter_ns
    for i in range(iterations):
        t0 = clock()
        call()
        times[i] = clock() - t0
    return {
        "model_kind": model.model_kind,
        "T": T,
        "iterations": iterations,
        "float32": float32,
        "median_ns": float(np.median(times)),
        "p99_ns": float(np.percentile(times, 99)),
        "mean_ns": float(times.mean()),
    }


def cmd_bench(args, cfg) -> int:
    if args.model:
        model = load_model(args.model)
        T = int(model.meta.get("T", args.T))
    else:
        model = glorot_init(32, 20, 3, seed=0)
        T = args.T
    if args.iterations < 100_000:
        log.warning("fewer than 1e5 iterations requested (%d)", args.iterations)
    report = bench_latency(model, T, args.iterations, float32=args.float32)
    report["target_ns"] = 100_000
    report["internal_target_ns"] = 10_000
    text = json.dumps(report, sort_keys=True, indent=1)
    print(text)
    if args.out:
        out = _out_dir(args.out)
        (out / "bench.json").write_text(text + "\n")
    return EXIT_OK


# -- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lobrnn", description="Order-book price-flip classification toolkit")
    p.add_argument("--version", action="version", version=f"lobrnn {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--profile", default="desk", choices=sorted(PROFILES))
        sp.add_argument("--seed", type=int)

    def training(sp):
        sp.add_argument("--model", choices=("rnn", "ffwd", "logistic", "white"))
        sp.add_argument("--T", type=int, dest="T")
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--lr0", type=float)
        sp.add_argument("--l2", type=float)
        sp.add_argument("--dropout-keep", type=float)
        sp.add_argument("--per-class-target", type=int)
        sp.add_argument("--validation-size", type=int)

    s = sub.add_parser("simulate", help="write synthetic event streams")
    common(s)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.add_argument("--n-events", type=int)
    s.add_argument("--sessions", type=int)
    s.add_argument("--coupling", type=float, dest="imbalance_coupling")
    s.add_argument("--drift", type=float, dest="regime_drift")

    s = sub.add_parser("featurize", help="event streams to feature rows")
    common(s)
    s.add_argument("--events", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--window", type=int)

    s = sub.add_parser("train", help="fit a model on one walk-forward split")
    common(s)
    training(s)
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--split", type=int, default=0)
    s.add_argument("--plots", action="store_true", help="also render the loss curves")

    s = sub.add_parser("evaluate", help="score a model on its held-out test rows")
    common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--all-sessions", action="store_true")

    s = sub.add_parser("study", help="run a study and render its figures")
    common(s)
    training(s)
    s.add_argument("kind", choices=("cv20", "nsteps", "retrain", "horizon", "hourly"))
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("bench", help="single-prediction latency")
    common(s)
    s.add_argument("--model")
    s.add_argument("--T", type=int, default=10, dest="T")
    s.add_argument("--iterations", type=int, default=100_000)
    s.add_argument("--float32", action="store_true")
    s.add_argument("--out")
    return p


def _overrides(args) -> dict:
    g = lambda name: getattr(args, name, None)  # noqa: E731
    return {
        "simulator": {
            "seed": g("seed"), "n_events": g("n_events"), "sessions": g("sessions"),
            "imbalance_coupling": g("imbalance_coupling"), "regime_drift": g("regime_drift"),
        },
        "train": {
            "seed": g("seed"), "T": g("T"), "epochs": g("epochs"), "batch_size": g("batch_size"),
            "lr0": g("lr0"), "l2": g("l2"), "dropout_keep": g("dropout_keep"),
        },
        "split": {
            "seed": g("seed"), "per_class_target": g("per_class_target"), "validation_size": g("validation_size"),
        },
    }


COMMANDS = {
    "simulate": cmd_simulate,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "study": cmd_study,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"lobrnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="level=%(levelname)s logger=%(name)s msg=%(message)s", stream=sys.stderr)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    try:
        cfg = resolve_config(args.profile, args.config, _overrides(args))
        return COMMANDS[args.command](args, cfg)
    except InvalidConfig as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_USAGE
    except (LobError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
