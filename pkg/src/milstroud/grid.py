"""Config-driven experiment grid: every (scorer hyperparameters, aggregate) cell."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .aggregation import ALL_AGGREGATES, Aggregate
from .autoencoder import AeArchitecture, AeTrainingConfig
from .bags import Dataset, validate_dataset
from .data import BagCompositionSpec, SyntheticSpec, compose_bags, generate_synthetic, load_feature_csv, read_dataset
from .errors import ConfigurationError, DataError, ExperimentError
from .evaluation import confidence_levels, write_roc_csv, write_summary_json
from .lof import ProximityContext, Scope
from .mil import run_experiment
from .scorers import LofScorer, MseScorer
from .stroud import StroudRule, run_stroud

log = logging.getLogger(__name__)

_K_RANGE = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        {
            "type": "object",
            "properties": {"min": {"type": "integer", "minimum": 1}, "max": {"type": "integer", "minimum": 1}},
            "required": ["min", "max"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "data": {
            "type": "object",
            "properties": {
                "synthetic": {
                    "type": "object",
                    "properties": {
                        "feature_dim": {"type": "integer", "minimum": 1},
                        "n_train_bags": {"type": "integer", "minimum": 1},
                        "n_test_bags_per_class": {"type": "integer", "minimum": 0},
                        "bag_size": {"type": "integer", "minimum": 2},
                        "anomaly_shift": {"type": "number"},
                        "witness_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "label_noise": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                        "seed": {"type": "integer"},
                    },
                    "additionalProperties": False,
                },
                "train_csv": {"type": "string"},
                "test_csv": {"type": "string"},
                "instances_csv": {"type": "string"},
                "composition": {
                    "type": "object",
                    "properties": {
                        "normal_bag_size": {"type": "integer", "minimum": 2},
                        "anomalous_bag_size": {"type": "integer", "minimum": 2},
                        "insertion": {"enum": ["contiguous_by_label", "random_into_half"]},
                        "seed": {"type": "integer"},
                        "n_train_bags": {"type": "integer", "minimum": 1},
                        "n_test_bags": {"type": "integer", "minimum": 1},
                    },
                    "required": ["normal_bag_size"],
                    "additionalProperties": False,
                },
            },
            "oneOf": [
                {"required": ["synthetic"]},
                {"required": ["train_csv", "test_csv"]},
                {"required": ["instances_csv", "composition"]},
            ],
            "additionalProperties": False,
        },
        "lof": {
            "type": "object",
            "properties": {
                "k": _K_RANGE,
                "scope": {"enum": ["bag_local", "reference_global"]},
                "stroud_k": _K_RANGE,
            },
            "required": ["k"],
            "additionalProperties": False,
        },
        "mse": {
            "type": "object",
            "properties": {
                "architecture": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 3, "maxItems": 3},
                "dropout": {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}, "minItems": 2, "maxItems": 2},
                "epochs": {"type": "integer", "minimum": 0},
                "batch_size": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
            },
            "required": ["architecture"],
            "additionalProperties": False,
        },
        "aggregates": {"type": "array", "items": {"enum": [a.value for a in Aggregate]}, "minItems": 1},
        "stroud": {
            "type": "object",
            "properties": {
                "enabled": {"type": "boolean"},
                "rule": {"enum": [r.value for r in StroudRule]},
            },
            "additionalProperties": False,
        },
        "confidence_step": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "output_dir": {"type": "string"},
    },
    "required": ["data"],
    "anyOf": [{"required": ["lof"]}, {"required": ["mse"]}],
    "additionalProperties": False,
}


def load_config(path) -> dict:
    """Read and schema-check a JSON config; raises ConfigurationError."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigurationError(f"{path}: {where}: {exc.message}") from None
    try:
        confidence_levels(cfg.get("confidence_step", 0.001))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    cfg["_base"] = str(path.resolve().parent)
    return cfg


def _k_values(spec) -> list:
    if isinstance(spec, dict):
        return list(range(spec["min"], spec["max"] + 1))
    return list(spec)


def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def load_data(cfg) -> Dataset:
    """Build the dataset named by the config; raises DataError."""
    data = cfg["data"]
    if "synthetic" in data:
        return generate_synthetic(SyntheticSpec(**data["synthetic"]))
    if "train_csv" in data:
        return read_dataset(_resolve(cfg, data["train_csv"]), _resolve(cfg, data["test_csv"]))
    table = load_feature_csv(_resolve(cfg, data["instances_csv"]))
    return compose_bags(table.features, table.label_array, BagCompositionSpec(**data["composition"]),
                        run_ids=table.run_ids)


@dataclass
class Cell:
    name: str
    method: str  # "mil-stroud" | "stroud"
    strangeness: str
    scorer_key: tuple
    aggregate: Optional[str] = None
    result: object = None
    error: Optional[str] = None


def plan_cells(cfg) -> list:
    aggregates = cfg.get("aggregates", [a.value for a in ALL_AGGREGATES])
    stroud = cfg.get("stroud", {})
    stroud_on = stroud.get("enabled", True)
    rule = StroudRule(stroud.get("rule", StroudRule.ANY_INSTANCE.value))
    cells = []
    if "lof" in cfg:
        scope = cfg["lof"].get("scope", Scope.BAG_LOCAL.value)
        for k in _k_values(cfg["lof"]["k"]):
            for f in aggregates:
                cells.append(Cell(f"mil-lof-k{k}-{scope}-{f}", "mil-stroud", "lof", ("lof", k, scope), f))
        if stroud_on:
            for k in _k_values(cfg["lof"].get("stroud_k", cfg["lof"]["k"])):
                key = ("lof", k, Scope.REFERENCE_GLOBAL.value)
                if rule is StroudRule.AGGREGATE:
                    cells += [Cell(f"stroud-lof-k{k}-{f}", "stroud", "lof", key, f) for f in aggregates]
                else:
                    cells.append(Cell(f"stroud-lof-k{k}", "stroud", "lof", key))
    if "mse" in cfg:
        for f in aggregates:
            cells.append(Cell(f"mil-mse-{f}", "mil-stroud", "mse", ("mse",), f))
        if stroud_on:
            if rule is StroudRule.AGGREGATE:
                cells += [Cell(f"stroud-mse-{f}", "stroud", "mse", ("mse",), f) for f in aggregates]
            else:
                cells.append(Cell("stroud-mse", "stroud", "mse", ("mse",)))
    return cells


def _mse_scorer(cfg, dim):
    m = cfg["mse"]
    arch = AeArchitecture(dim, tuple(m["architecture"]), tuple(m.get("dropout", (0.2, 0.2))))
    train_cfg = AeTrainingConfig(
        epochs=m.get("epochs", 100), batch_size=m.get("batch_size", 32),
        learning_rate=m.get("learning_rate", 0.01), seed=m.get("seed", 0),
    )
    return MseScorer(arch, train_cfg)


def _fit_scorers(cfg, cells, dataset):
    """Fit each distinct scorer once on the training bags; failures are kept per scorer."""
    scorers, errors, shared = {}, {}, {}
    for key in dict.fromkeys(c.scorer_key for c in cells):
        try:
            if key[0] == "lof":
                _, k, scope = key
                ctx = None
                if scope == Scope.REFERENCE_GLOBAL.value:
                    if "ctx" not in shared:
                        shared["ctx"] = ProximityContext(dataset.training_instances())
                    ctx = shared["ctx"]
                scorer = LofScorer(k, scope, context=ctx)
            else:
                scorer = _mse_scorer(cfg, dataset.feature_dim)
            scorers[key] = scorer.fit(dataset.training_bags)
        except Exception as exc:  # infeasible hyperparameters, divergence, ...
            errors[key] = f"fit: {exc}"
    return scorers, errors


def _run_cell(cell, scorers, errors, dataset, levels, rule):
    if cell.scorer_key in errors:
        cell.error = errors[cell.scorer_key]
        return cell
    scorer = scorers[cell.scorer_key]
    try:
        if cell.method == "mil-stroud":
            cell.result = run_experiment(dataset, scorer, cell.aggregate, levels, refit=False)
        else:
            cell.result = run_stroud(dataset, scorer, rule, cell.aggregate, levels, refit=False)
    except ExperimentError as exc:
        cell.error = str(exc)
    return cell


def _write_cell(out_dir: Path, cell: Cell):
    d = out_dir / "results" / cell.name
    d.mkdir(parents=True, exist_ok=True)
    write_roc_csv(d / "roc.csv", cell.result.roc)
    with open(d / "verdicts.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bagId", "score", "pValue", "truth"])
        for v in cell.result.verdicts:
            w.writerow([v.bag_id, repr(v.score), repr(v.p_value), "" if v.truth is None else int(v.truth)])
    write_summary_json(d / "summary.json", _cell_summary(cell))


def _cell_summary(cell: Cell) -> dict:
    out = {"cell": cell.name, "method": cell.method, "strangeness": cell.strangeness}
    if cell.error is not None:
        out["error"] = cell.error
        return out
    roc = cell.result.roc
    out["auc"] = roc.auc if roc.defined else None
    out["auc_defined"] = roc.defined
    out["descriptor"] = cell.result.metadata
    return out


def run_grid(cfg: dict, out_dir=None, jobs: int = 1, dataset: Dataset = None) -> dict:
    """Run every grid cell, write per-cell artifacts plus summary.json; return the summary."""
    out_dir = Path(out_dir or _resolve(cfg, cfg.get("output_dir", "out")))
    dataset = load_data(cfg) if dataset is None else dataset
    problems = validate_dataset(dataset)
    if problems:
        raise DataError("invalid dataset: " + "; ".join(problems[:5]))
    levels = confidence_levels(cfg.get("confidence_step", 0.001))
    rule = StroudRule(cfg.get("stroud", {}).get("rule", StroudRule.ANY_INSTANCE.value))

    cells = plan_cells(cfg)
    scorers, errors = _fit_scorers(cfg, cells, dataset)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            cells = list(pool.map(lambda c: _run_cell(c, scorers, errors, dataset, levels, rule), cells))
    else:
        cells = [_run_cell(c, scorers, errors, dataset, levels, rule) for c in cells]

    best = {}
    for cell in cells:
        if cell.error is not None:
            log.warning("cell %s failed: %s", cell.name, cell.error)
            continue
        _write_cell(out_dir, cell)
        roc = cell.result.roc
        key = f"{cell.method}/{cell.strangeness}"
        if roc.defined and (key not in best or roc.auc > best[key]["auc"]):
            best[key] = {"cell": cell.name, "auc": roc.auc, "descriptor": cell.result.metadata}

    summary = {
        "best": best,
        "cells": [_cell_summary(c) for c in cells],
        "stroud_rule": rule.value,
        "n_training_bags": len(dataset.training_bags),
        "n_test_bags": len(dataset.test_bags),
        "confidence_step": cfg.get("confidence_step", 0.001),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    write_summary_json(out_dir / "summary.json", summary)
    return summary
