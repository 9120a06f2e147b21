# aldp_toolkit/commands/reports.py
"""Client and aggregator subcommands: perturb a dataset, estimate from reports."""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path

import pandas as pd

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import SchemaError
from aldp_toolkit.models.core import NumericMechanism, PrivacyBudget, Protocol, TieRule, parse_enum, validate_budget
from aldp_toolkit.services.categorical import build_protocol_params, estimate_frequencies, perturb_categorical_batch
from aldp_toolkit.services.codec import decode_batch, encode_batch
from aldp_toolkit.services.datasets import load_csv_dataset
from aldp_toolkit.services.experiments import manifest_path, write_manifest
from aldp_toolkit.services.numeric import perturb_numeric_batch
from aldp_toolkit.services.randomness import RandomSource

logger = logging.getLogger(__name__)

_NUMERIC_STREAM = 0
_CATEGORICAL_STREAM = 1


def perturb(args: argparse.Namespace) -> int:
    """Perturb every row of a CSV dataset.

    The numeric columns form one tuple perturbed by ``--mechanism``; each
    categorical column is perturbed separately by ``--protocol``, each with
    the full budget.
    """
    dataset = load_csv_dataset(args.input, args.schema)
    budget = validate_budget((args.eps or [1.0])[0], (args.delta or [1e-6])[0])
    tie_rule = parse_enum(args.tie_rule, TieRule)
    rng = RandomSource(args.seed)
    columns = {}
    manifest = {"n_users": dataset.n_users, "seed": args.seed, "numeric": None, "categorical": {}}

    if dataset.numeric_dims:
        mechanism = parse_enum(args.mechanism or "MECH1", NumericMechanism)
        noisy = perturb_numeric_batch(
            dataset.numeric, mechanism, budget, rng.derive(_NUMERIC_STREAM), tie_rule=tie_rule
        )
        for position, name in enumerate(dataset.numeric_columns):
            columns[name] = noisy[:, position]
        manifest["numeric"] = {
            "mechanism": mechanism.value,
            "columns": list(dataset.numeric_columns),
            "epsilon": budget.epsilon,
            "delta": budget.delta,
            "tie_rule": tie_rule.value,
        }

    protocol = parse_enum(args.protocol or "OLH", Protocol)
    for position, name in enumerate(dataset.categorical_columns):
        params = build_protocol_params(protocol, dataset.domain_sizes[position], budget, prr_q=args.prr_q)
        batch = perturb_categorical_batch(
            dataset.categorical[:, position], params, rng.derive(_CATEGORICAL_STREAM, position)
        )
        columns[name] = encode_batch(batch)
        manifest["categorical"][name] = {
            "protocol": protocol.value,
            "k": params.k,
            "g": params.g,
            "epsilon": budget.epsilon,
            "delta": budget.delta,
            "prr_q": args.prr_q,
            "labels": list(dataset.categories[position]) if dataset.categories else None,
        }

    path = Path(args.out) if args.out else settings.output_dir / "reports.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(columns).to_csv(path, index=False, lineterminator="\r\n")
    write_manifest(manifest, path)
    logger.info("wrote %d reports to %s", dataset.n_users, path)
    return 0


def _read_manifest(reports_path: Path) -> dict:
    target = manifest_path(reports_path)
    try:
        return json.loads(target.read_text())["config"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read report manifest {target}") from exc


def estimate(args: argparse.Namespace) -> int:
    reports_path = Path(args.reports)
    manifest = _read_manifest(reports_path)
    frame = pd.read_csv(reports_path, dtype=str, keep_default_na=False)
    rows = []

    numeric = manifest.get("numeric")
    if numeric:
        for name in numeric["columns"]:
            mean = float(frame[name].astype(float).mean())
            rows.append({"attribute": name, "value": "", "estimate": mean, "raw_estimate": mean})

    for name, info in manifest.get("categorical", {}).items():
        params = build_protocol_params(
            Protocol(info["protocol"]),
            info["k"],
            PrivacyBudget(info["epsilon"], info["delta"]),
            prr_q=info.get("prr_q"),
        )
        if params.g != info.get("g"):
            raise SchemaError(f"column '{name}': manifest hash range {info.get('g')} differs from {params.g}")
        batch = decode_batch(frame[name].tolist(), params.protocol, params.k, params.g)
        result = estimate_frequencies(batch, params)
        labels = info.get("labels") or [str(index + 1) for index in range(params.k)]
        for index in range(params.k):
            rows.append(
                {
                    "attribute": name,
                    "value": labels[index],
                    "estimate": float(result.frequencies[index]),
                    "raw_estimate": float(result.raw_frequencies[index]),
                }
            )

    path = Path(args.out) if args.out else reports_path.with_name(reports_path.stem + "_estimates.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=["attribute", "value", "estimate", "raw_estimate"]).to_csv(
        path, index=False, lineterminator="\r\n"
    )
    logger.info("wrote %d estimates to %s", len(rows), path)
    return 0
