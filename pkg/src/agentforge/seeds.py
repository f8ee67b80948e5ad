"""Hand-designed baseline agents shipped as source-text assets.

Two asset families share the seed ids: grid-domain variants drive the code
tools, question-answering variants answer directly. Seeds double as archive
initializers and as evaluation baselines.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Any, Callable, Optional

from .errors import DataError, ValidationError

FAMILIES = ("qa", "arc")

# Fixed seed order: this is the generation order used when the archive is
# initialized, so it must stay stable.
QA_SEED_ORDER = [
    "cot",
    "cot_sc",
    "self_refine",
    "llm_debate",
    "quality_diversity",
    "step_back",
    "role_assignment",
]
ARC_SEED_ORDER = ["cot", "cot_sc", "self_refine", "llm_debate", "quality_diversity"]


@dataclass(frozen=True)
class SeedSpec:
    seed_id: str
    display_name: str
    family: str
    source: str
    thought: str
    hyperparameters: dict[str, Any]
    reconstructed: bool = False


def _asset_root():
    return resources.files("agentforge") / "assets" / "seeds"


def _load_manifest() -> dict[str, Any]:
    manifest_path = _asset_root() / "manifest.json"
    try:
        return json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:  # pragma: no cover - packaging error
        raise DataError("seed manifest missing from package assets") from exc


def seed_family_for(domain_family: str) -> str:
    if domain_family not in FAMILIES:
        raise ValidationError(f"unknown domain family {domain_family!r}")
    return domain_family


def list_seeds(family: str) -> list[str]:
    """Seed ids for a domain family, in archive generation order.

    Raises:
        ValidationError: unknown family.
    """
    if family == "arc":
        return list(ARC_SEED_ORDER)
    if family == "qa":
        return list(QA_SEED_ORDER)
    raise ValidationError(f"unknown domain family {family!r}")


def default_seed_order(family: str) -> tuple[str, ...]:
    """list_seeds as an immutable tuple (handy for config defaults)."""
    return tuple(list_seeds(family))


def load_seed_spec(seed_id: str, family: str = "qa") -> SeedSpec:
    if family not in FAMILIES:
        raise ValidationError(f"unknown domain family {family!r}")
    manifest = _load_manifest()
    try:
        meta = manifest[seed_id]
    except KeyError as exc:
        raise DataError(f"unknown seed {seed_id!r}") from exc
    source_path = _asset_root() / family / f"{seed_id}.py"
    try:
        source = source_path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"seed {seed_id!r} has no {family} variant") from exc
    return SeedSpec(
        seed_id=seed_id,
        display_name=meta["display_name"],
        family=family,
        source=source,
        thought=meta["thought"],
        hyperparameters=meta.get("hyperparameters", {}),
        reconstructed=bool(meta.get("reconstructed", False)),
    )


def load_seed(seed_id: str, family: str = "qa"):
    """Load a seed as an archive-ready candidate (origin "seed")."""
    from .records import AgentCandidate

    spec = load_seed_spec(seed_id, family)
    return AgentCandidate(
        thought=spec.thought,
        name=spec.display_name,
        code=spec.source,
        origin="seed",
    )


def majority_vote(answers: list[str], normalize: Optional[Callable[[str], str]] = None) -> str:
    """Most frequent answer under `normalize`; ties break to first occurrence.

    Raises:
        ValidationError: empty answer list.
    """
    if not answers:
        raise ValidationError("majority_vote needs at least one answer")
    if normalize is None:
        normalize = lambda text: " ".join(str(text).strip().lower().split())  # noqa: E731
    counts: dict[str, int] = {}
    first_at: dict[str, int] = {}
    originals: dict[str, str] = {}
    for i, answer in enumerate(answers):
        key = normalize(answer)
        counts[key] = counts.get(key, 0) + 1
        if key not in first_at:
            first_at[key] = i
            originals[key] = answer
    best = max(counts, key=lambda key: (counts[key], -first_at[key]))
    return originals[best]
