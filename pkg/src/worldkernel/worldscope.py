"""World profiling: six binary dimensions, archetype assignment, applicability verdict.

A profile places a target domain on six dimensions, each with a
favorable and an unfavorable pole for engine-style shared-world
architectures.  The applicability verdict is the plain conjunction: it
holds exactly when every dimension sits at its favorable pole, and the
report lists each failing condition by name.  Archetypes label familiar
profile shapes; profiles matching none stay Unclassified rather than
being forced into the nearest bucket.
"""

from __future__ import annotations

from dataclasses import dataclass

DIMENSIONS: dict[str, tuple[str, str]] = {
    # field -> (favorable level, unfavorable level)
    "ontologicalExplicitness": ("explicit", "implicit"),
    "structuralStability": ("stable", "fluid"),
    "normativity": ("normative", "nonNormative"),
    "observability": ("stateAccessible", "partiallyObservable"),
    "semanticAmbition": ("unambitious", "ambitious"),
    "perceptionDeliberation": ("deliberationDominant", "perceptionDominant"),
}

CONDITIONS: dict[str, str] = {
    # dimension field -> applicability condition it underwrites
    "ontologicalExplicitness": "explicitOntology",
    "structuralStability": "structuralStability",
    "normativity": "explicitNorms",
    "observability": "shareableState",
    "semanticAmbition": "boundedGrowth",
    "perceptionDeliberation": "deliberationDominant",
}

ARCHETYPES = ("TypeI", "TypeII", "TypeIII", "TypeIV", "TypeV", "Unclassified")


@dataclass(frozen=True)
class WorldProfile:
    ontologicalExplicitness: str
    structuralStability: str
    normativity: str
    observability: str
    semanticAmbition: str
    perceptionDeliberation: str
    synthetic: bool = False

    def __post_init__(self) -> None:
        for fld, levels in DIMENSIONS.items():
            value = getattr(self, fld)
            if value not in levels:
                raise ValueError(f"{fld} must be one of {levels}, got {value!r}")

    def favorable(self, fld: str) -> bool:
        return getattr(self, fld) == DIMENSIONS[fld][0]

    def all_favorable(self) -> bool:
        return all(self.favorable(fld) for fld in DIMENSIONS)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "WorldProfile":
        if not isinstance(doc, dict):
            raise ValueError("profile must be an object")
        unknown = set(doc) - set(DIMENSIONS) - {"synthetic"}
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        missing = set(DIMENSIONS) - set(doc)
        if missing:
            raise ValueError(f"missing profile keys: {sorted(missing)}")
        synthetic = doc.get("synthetic", False)
        if not isinstance(synthetic, bool):
            raise ValueError("synthetic must be a boolean")
        return cls(**{fld: doc[fld] for fld in DIMENSIONS}, synthetic=synthetic)


@dataclass(frozen=True)
class ApplicabilityReport:
    verdict: str  # Appropriate | NotAppropriate
    failing_conditions: tuple[str, ...]
    archetype: str

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "failingConditions": list(self.failing_conditions),
            "archetype": self.archetype,
        }

    def render(self) -> str:
        lines = [f"verdict: {self.verdict}", f"archetype: {self.archetype}"]
        if self.failing_conditions:
            lines.append("failing conditions: " + ", ".join(self.failing_conditions))
        else:
            lines.append("failing conditions: none")
        return "\n".join(lines)


def classify_archetype(profile: WorldProfile) -> str:
    """Assign the archetype, or Unclassified for mixed profiles.

    An all-favorable profile is TypeI, or TypeII when tagged synthetic.
    TypeV (no stable meaning to build on: implicit, non-normative,
    ambitious) is checked before TypeIV (perception-bound: implicit,
    fluid, perception dominant); profiles matching both read as TypeV.
    TypeIII keeps an explicit normative core behind partial
    observability or perception pressure.
    """
    explicit = profile.favorable("ontologicalExplicitness")
    stable = profile.favorable("structuralStability")
    normative = profile.favorable("normativity")
    accessible = profile.favorable("observability")
    bounded = profile.favorable("semanticAmbition")
    deliberative = profile.favorable("perceptionDeliberation")

    if profile.all_favorable():
        return "TypeII" if profile.synthetic else "TypeI"
    if not explicit and not normative and not bounded:
        return "TypeV"
    if not explicit and not stable and not deliberative:
        return "TypeIV"
    if explicit and normative and (not accessible or not deliberative):
        return "TypeIII"
    return "Unclassified"


def assess_applicability(profile: WorldProfile) -> ApplicabilityReport:
    """Conjunction verdict over the six conditions, plus the archetype label."""
    failing = tuple(
        CONDITIONS[fld] for fld in DIMENSIONS if not profile.favorable(fld)
    )
    verdict = "Appropriate" if not failing else "NotAppropriate"
    return ApplicabilityReport(verdict, failing, classify_archetype(profile))
