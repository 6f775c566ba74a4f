"""Model persistence.

A model file is JSON carrying the format version, the hyperparameters it
was trained with, the feature descriptors (so raw rows can be re-encoded
at prediction time), and the rules as lists of feature names, ascending
within each rule. Names rather than indices keep files diffable and make
tampering obvious.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .dataset import FeatureDescriptor
from .objective import Hyperparams, RuleSet

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Model file is missing fields, inconsistent, or from another version."""


@dataclass
class LoadedModel:
    hyperparams: Hyperparams
    descriptors: list[FeatureDescriptor]
    rule_features: list[tuple[int, ...]]

    def rule_names(self) -> list[list[str]]:
        names = [d.name for d in self.descriptors]
        return [[names[j] for j in feats] for feats in self.rule_features]


def hyperparams_to_json(h: Hyperparams) -> dict:
    return {
        "beta0": h.beta0,
        "beta1": h.beta1,
        "beta2": h.beta2,
        "lambda": h.lam,
        "k": h.max_rules,
        "m": h.active_size,
    }


def hyperparams_from_json(obj: dict, require_all: bool = False) -> Hyperparams:
    """Hyperparams from a JSON dict; missing keys default unless required.

    Model files must carry every key; grid files may name only the knobs
    they sweep. Unknown keys are always rejected to catch typos.
    """
    defaults = hyperparams_to_json(Hyperparams())
    unknown = set(obj) - set(defaults)
    if unknown:
        raise ModelFormatError(f"unknown hyperparameter key(s): {sorted(unknown)}")
    if require_all:
        missing = set(defaults) - set(obj)
        if missing:
            raise ModelFormatError(
                f"hyperparams missing key(s): {sorted(missing)}"
            )
    merged = {**defaults, **obj}
    return Hyperparams(
        beta0=merged["beta0"],
        beta1=merged["beta1"],
        beta2=merged["beta2"],
        lam=merged["lambda"],
        max_rules=merged["k"],
        active_size=merged["m"],
    )


def save_model(
    path: str,
    S: RuleSet | Sequence[Sequence[int]],
    descriptors: Sequence[FeatureDescriptor],
    h: Hyperparams,
) -> None:
    feature_sets = S.feature_sets() if isinstance(S, RuleSet) else [tuple(f) for f in S]
    names = [d.name for d in descriptors]
    doc = {
        "format_version": FORMAT_VERSION,
        "hyperparams": hyperparams_to_json(h),
        "features": [
            {
                "name": d.name,
                "source_column": d.source_column,
                "source_name": d.source_name,
                "kind": d.kind,
                "operand": d.operand,
            }
            for d in descriptors
        ],
        "rules": [sorted(names[j] for j in feats) for feats in feature_sets],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> LoadedModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: expected a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {version!r}, expected {FORMAT_VERSION}"
        )
    for key in ("hyperparams", "features", "rules"):
        if key not in doc:
            raise ModelFormatError(f"{path}: missing {key!r}")
    h = hyperparams_from_json(doc["hyperparams"], require_all=True)
    descriptors = []
    for f in doc["features"]:
        try:
            descriptors.append(
                FeatureDescriptor(
                    name=f["name"],
                    source_column=f["source_column"],
                    source_name=f["source_name"],
                    kind=f["kind"],
                    operand=f["operand"],
                )
            )
        except (KeyError, TypeError) as e:
            raise ModelFormatError(f"{path}: bad feature entry ({e})") from None
    index = {d.name: j for j, d in enumerate(descriptors)}
    if len(index) != len(descriptors):
        raise ModelFormatError(f"{path}: duplicate feature names")
    rule_features = []
    for rule in doc["rules"]:
        feats = []
        for name in rule:
            if name not in index:
                raise ModelFormatError(f"{path}: rule uses unknown feature {name!r}")
            feats.append(index[name])
        rule_features.append(tuple(sorted(feats)))
    return LoadedModel(
        hyperparams=h, descriptors=descriptors, rule_features=rule_features
    )


def render_rules(
    rule_features: Sequence[Sequence[int]],
    descriptors: Sequence[FeatureDescriptor],
) -> str:
    """One human-readable line per rule: literals joined by ' AND '."""
    names = [d.name for d in descriptors]
    lines = []
    for feats in rule_features:
        lines.append(" AND ".join(names[j] for j in feats) if feats else "TRUE")
    return "\n".join(lines)
