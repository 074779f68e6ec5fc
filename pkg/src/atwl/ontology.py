"""Closed vocabularies of the workflow language and per-type field schemas.

Every enumeration here is a fixed set: artifact types, transform intents,
entity internal structures, embedments, feature value structures/types and
actors. Keywords are case-sensitive and use British spelling throughout
(``visualisation``, ``characterise``); no mechanism exists for extending the
vocabularies at runtime.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping


class UnknownKeywordError(ValueError):
    """A token did not match any value of a closed vocabulary.

    Carries the offending token and the legal keyword list so callers can
    produce a precise diagnostic.
    """

    def __init__(self, vocabulary: str, token: str, legal: tuple[str, ...]):
        self.vocabulary = vocabulary
        self.token = token
        self.legal = legal
        super().__init__(
            f"unknown {vocabulary} {token!r}; expected one of: {', '.join(legal)}"
        )


class Intent(enum.Enum):
    """The eight transform intents (analytical purpose, not implementation)."""

    DEFINE_UNIT = "define-unit"
    CHARACTERISE = "characterise"
    CONTEXTUALISE = "contextualise"
    VISUALISE = "visualise"
    ABSTRACT = "abstract"
    BUILD_MODEL = "build-model"
    GENERATE_KNOWLEDGE = "generate-knowledge"
    ASSESS = "assess"

    @property
    def keyword(self) -> str:
        return self.value


class ArtifactType(enum.Enum):
    """The eight artifact types, spanning data to epistemic outputs."""

    ENTITIES = "entities"
    FEATURE = "feature"
    ARRANGEMENT = "arrangement"
    VISUALISATION = "visualisation"
    PATTERN = "pattern"
    MODEL = "model"
    KNOWLEDGE = "knowledge"
    SPECIFICATION = "specification"

    @property
    def keyword(self) -> str:
        return self.value


class StructureCategory(enum.Enum):
    ATOMIC = "atomic"
    CONTAINER = "container"
    RELATIONAL = "relational"


class InternalStructure(enum.Enum):
    """How components inside each entity are organised."""

    ELEMENTARY = "elementary"
    GROUP = "group"
    EPISODE = "episode"
    REGION = "region"
    SEQUENCE = "sequence"
    FORMATION = "formation"

    @property
    def keyword(self) -> str:
        return self.value

    @property
    def category(self) -> StructureCategory:
        return _STRUCTURE_CATEGORY[self]


_STRUCTURE_CATEGORY = {
    InternalStructure.ELEMENTARY: StructureCategory.ATOMIC,
    InternalStructure.GROUP: StructureCategory.CONTAINER,
    InternalStructure.EPISODE: StructureCategory.CONTAINER,
    InternalStructure.REGION: StructureCategory.CONTAINER,
    InternalStructure.SEQUENCE: StructureCategory.RELATIONAL,
    InternalStructure.FORMATION: StructureCategory.RELATIONAL,
}


class Embedment(enum.Enum):
    """Shared environment in which a collection of entities resides."""

    SET = "set"
    SEQUENCE = "sequence"
    TIME = "time"
    SPACE = "space"
    RELATIONAL = "relational"

    @property
    def keyword(self) -> str:
        return self.value


class ValueStructure(enum.Enum):
    """Overall organisation of a feature's values."""

    ATOMIC = "atomic"
    LIST = "list"
    VECTOR = "vector"
    MATRIX = "matrix"
    RELATIONAL = "relational"

    @property
    def keyword(self) -> str:
        return self.value


class ValueType(enum.Enum):
    """Nature of a feature's atomic components (optional in declarations)."""

    NUMERIC = "numeric"
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"
    TEMPORAL = "temporal"
    SPATIAL = "spatial"
    TEXT = "text"
    REFERENCE = "reference"

    @property
    def keyword(self) -> str:
        return self.value


class Actor(enum.Enum):
    """Agency executing a transform."""

    HUMAN = "human"
    MACHINE = "machine"
    HYBRID = "hybrid"

    @property
    def keyword(self) -> str:
        return self.value


# Accepted surface spellings. "group/cluster" and "relational structure" are
# aliases that appear in declarations alongside the short keywords.
_INTENTS = {i.value: i for i in Intent}
_ARTIFACT_TYPES = {t.value: t for t in ArtifactType}
_STRUCTURES = {s.value: s for s in InternalStructure}
_STRUCTURES["group/cluster"] = InternalStructure.GROUP
_EMBEDMENTS = {e.value: e for e in Embedment}
_EMBEDMENTS["relational structure"] = Embedment.RELATIONAL
_VALUE_STRUCTURES = {v.value: v for v in ValueStructure}
_VALUE_STRUCTURES["relational configuration"] = ValueStructure.RELATIONAL
_VALUE_TYPES = {v.value: v for v in ValueType}
_ACTORS = {a.value: a for a in Actor}


def intent_from_keyword(token: str) -> Intent:
    """Resolve an intent keyword; exact, case-sensitive match."""
    try:
        return _INTENTS[token]
    except KeyError:
        raise UnknownKeywordError("intent", token, tuple(i.value for i in Intent)) from None


def artifact_type_from_keyword(token: str) -> ArtifactType:
    """Resolve an artifact type keyword; exact, case-sensitive match."""
    try:
        return _ARTIFACT_TYPES[token]
    except KeyError:
        raise UnknownKeywordError(
            "artifact type", token, tuple(t.value for t in ArtifactType)
        ) from None


def internal_structure_from_keyword(token: str) -> InternalStructure:
    try:
        return _STRUCTURES[token]
    except KeyError:
        raise UnknownKeywordError(
            "internal structure", token, tuple(s.value for s in InternalStructure)
        ) from None


def embedment_from_keyword(token: str) -> Embedment:
    try:
        return _EMBEDMENTS[token]
    except KeyError:
        raise UnknownKeywordError(
            "embedment", token, tuple(e.value for e in Embedment)
        ) from None


def value_structure_from_keyword(token: str) -> ValueStructure:
    try:
        return _VALUE_STRUCTURES[token]
    except KeyError:
        raise UnknownKeywordError(
            "value structure", token, tuple(v.value for v in ValueStructure)
        ) from None


def value_type_from_keyword(token: str) -> ValueType:
    try:
        return _VALUE_TYPES[token]
    except KeyError:
        raise UnknownKeywordError(
            "value type", token, tuple(v.value for v in ValueType)
        ) from None


def actor_from_keyword(token: str) -> Actor:
    try:
        return _ACTORS[token]
    except KeyError:
        raise UnknownKeywordError("actor", token, tuple(a.value for a in Actor)) from None


class Requiredness(enum.Enum):
    REQUIRED = "required"
    OPTIONAL = "optional"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class FieldSpec:
    """Schema entry for one declaration field of one artifact type."""

    name: str
    requiredness: Requiredness
    kind: str  # "enum" | "enum-set" | "text" | "identifier" | "feature-list" | "flag"


def _schema(*specs: tuple[str, Requiredness, str]) -> tuple[FieldSpec, ...]:
    return tuple(FieldSpec(n, r, k) for n, r, k in specs)


_REQ = Requiredness.REQUIRED
_OPT = Requiredness.OPTIONAL

# Field schemas per artifact type. "origin" and "description" are legal on
# every type; "origin" admits only the literal `given`. Embedment is optional
# because it is omitted for single-entity artifacts.
FIELD_SCHEMAS: Mapping[ArtifactType, tuple[FieldSpec, ...]] = {
    ArtifactType.ENTITIES: _schema(
        ("origin", _OPT, "flag"),
        ("internal structure", _REQ, "enum"),
        ("embedment", _OPT, "enum-set"),
        ("features", _OPT, "feature-list"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.FEATURE: _schema(
        ("origin", _OPT, "flag"),
        ("value structure", _REQ, "enum"),
        ("value type", _OPT, "enum-set"),
        ("representation form", _OPT, "text"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.ARRANGEMENT: _schema(
        ("origin", _OPT, "flag"),
        ("context", _REQ, "identifier"),
        ("principle", _REQ, "text"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.VISUALISATION: _schema(
        ("origin", _OPT, "flag"),
        ("layout", _REQ, "text"),
        ("form", _REQ, "text"),
        ("encoding", _OPT, "text"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.PATTERN: _schema(
        ("origin", _OPT, "flag"),
        ("representation form", _REQ, "text"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.MODEL: _schema(
        ("origin", _OPT, "flag"),
        ("model type", _REQ, "text"),
        ("representation form", _OPT, "text"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.KNOWLEDGE: _schema(
        ("origin", _OPT, "flag"),
        ("representation form", _REQ, "text"),
        ("description", _OPT, "text"),
    ),
    ArtifactType.SPECIFICATION: _schema(
        ("origin", _OPT, "flag"),
        ("representation form", _REQ, "text"),
        ("description", _OPT, "text"),
    ),
}

# Artifact types that never carry parenthesised references.
REFERENCE_FREE_TYPES = frozenset({ArtifactType.ENTITIES, ArtifactType.SPECIFICATION})


def field_schema(artifact_type: ArtifactType) -> tuple[FieldSpec, ...]:
    """Schema entry for an artifact type; total over all eight types."""
    return FIELD_SCHEMAS[artifact_type]


# Advisory map: artifact types each intent typically produces. Used for
# warnings only, never errors; the vocabulary deliberately does not restrict
# what a transform may output.
TYPICAL_OUTPUTS: Mapping[Intent, frozenset[ArtifactType]] = {
    Intent.DEFINE_UNIT: frozenset({ArtifactType.ENTITIES, ArtifactType.FEATURE}),
    Intent.CHARACTERISE: frozenset({ArtifactType.FEATURE}),
    Intent.CONTEXTUALISE: frozenset({ArtifactType.ARRANGEMENT}),
    Intent.VISUALISE: frozenset({ArtifactType.VISUALISATION}),
    Intent.ABSTRACT: frozenset({ArtifactType.PATTERN, ArtifactType.FEATURE}),
    Intent.BUILD_MODEL: frozenset({ArtifactType.MODEL}),
    Intent.GENERATE_KNOWLEDGE: frozenset(
        {ArtifactType.KNOWLEDGE, ArtifactType.SPECIFICATION}
    ),
    Intent.ASSESS: frozenset({ArtifactType.KNOWLEDGE, ArtifactType.SPECIFICATION}),
}
