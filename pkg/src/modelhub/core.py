"""Standardized representation of an annotated optimization model.

A model is a source file carved into named components (inputs, helpers,
variables, constraints, objectives, problems, solvers, executions, outputs).
Everything downstream -- the parser, the compute kernels, the REST service,
the clients -- exchanges the types defined here.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Optional


class ComponentKind(enum.Enum):
    """Closed set of annotation keywords.

    ``Model`` and ``Description`` are annotation keywords but never appear as
    standalone components: Model names the manifest, Description attaches to
    the preceding component.
    """

    MODEL = "Model"
    DESCRIPTION = "Description"
    INTERFACE_OBJECT = "InterfaceObject"
    INTERFACE_FILE = "InterfaceFile"
    HELPER_OBJECT = "HelperObject"
    VARIABLE = "Variable"
    FUNCTION = "Function"
    CONSTRAINT = "Constraint"
    OBJECTIVE = "Objective"
    PROBLEM = "Problem"
    SOLVER = "Solver"
    EXECUTION = "Execution"
    OUTPUT_OBJECT = "OutputObject"
    OUTPUT_FILE = "OutputFile"


# Kinds that may appear as components of a manifest.
COMPONENT_KINDS = tuple(
    k for k in ComponentKind if k not in (ComponentKind.MODEL, ComponentKind.DESCRIPTION)
)

INPUT_KINDS = (ComponentKind.INTERFACE_OBJECT, ComponentKind.INTERFACE_FILE)
OUTPUT_KINDS = (ComponentKind.OUTPUT_OBJECT, ComponentKind.OUTPUT_FILE)
SOLVE_CHAIN_KINDS = (ComponentKind.PROBLEM, ComponentKind.SOLVER, ComponentKind.EXECUTION)


@dataclass(frozen=True)
class SourceSpan:
    """Byte range [start, end) into the UTF-8 encoding of the source."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")


@dataclass(frozen=True)
class Diagnostic:
    """A validation or parse finding. Errors make a model non-runnable."""

    severity: str  # "error" | "warning"
    message: str
    line: Optional[int] = None  # 1-based, when tied to a source line
    component: Optional[str] = None

    def __post_init__(self):
        if self.severity not in ("error", "warning"):
            raise ValueError(f"unknown severity {self.severity!r}")

    def to_dict(self) -> dict:
        d = {"severity": self.severity, "message": self.message}
        if self.line is not None:
            d["line"] = self.line
        if self.component is not None:
            d["component"] = self.component
        return d


@dataclass(frozen=True)
class Component:
    """One annotated unit of a model."""

    kind: ComponentKind
    name: str
    description: Optional[str]
    span: SourceSpan
    order: int


@dataclass(frozen=True)
class ModelManifest:
    """Parsed shape of one annotated source file.

    Components are ordered by position in the file; spans are disjoint and
    stitching spans plus the unannotated gaps back together reproduces the
    source byte for byte.
    """

    name: str
    description: Optional[str]
    comment_tag: str
    source_digest: str
    components: tuple[Component, ...] = field(default_factory=tuple)

    def component_named(self, name: str) -> Optional[Component]:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def components_of_kind(self, *kinds: ComponentKind) -> list[Component]:
        return [c for c in self.components if c.kind in kinds]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "comment_tag": self.comment_tag,
            "source_digest": self.source_digest,
            "components": [
                {
                    "kind": c.kind.value,
                    "name": c.name,
                    "description": c.description,
                    "span": {"start": c.span.start, "end": c.span.end},
                    "order": c.order,
                }
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelManifest":
        components = tuple(
            Component(
                kind=ComponentKind(c["kind"]),
                name=c["name"],
                description=c.get("description"),
                span=SourceSpan(c["span"]["start"], c["span"]["end"]),
                order=c["order"],
            )
            for c in doc.get("components", [])
        )
        return cls(
            name=doc.get("name", ""),
            description=doc.get("description"),
            comment_tag=doc["comment_tag"],
            source_digest=doc["source_digest"],
            components=components,
        )


@dataclass(frozen=True)
class Recipe:
    """What a model needs (inputs), produces (outputs), and executes."""

    inputs: tuple[tuple[str, ComponentKind, Optional[str]], ...]
    outputs: tuple[tuple[str, ComponentKind, Optional[str]], ...]
    solve_chain: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "inputs": [
                {"name": n, "kind": k.value, "description": d} for n, k, d in self.inputs
            ],
            "outputs": [
                {"name": n, "kind": k.value, "description": d} for n, k, d in self.outputs
            ],
            "solve_chain": list(self.solve_chain),
        }


class ManifestValidationError(ValueError):
    """Raised when an operation requires an error-free manifest."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        msgs = "; ".join(d.message for d in diagnostics)
        super().__init__(f"manifest has validation errors: {msgs}")


def source_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def validate(manifest: ModelManifest) -> list[Diagnostic]:
    """Check whether a manifest is runnable-well-formed.

    Returns an empty list iff the model is runnable. Pure and deterministic:
    identical manifests yield identical diagnostic lists.
    """
    diags: list[Diagnostic] = []

    seen: dict[str, int] = {}
    flagged: set[str] = set()
    for c in manifest.components:
        if c.name in seen and c.name not in flagged:
            diags.append(
                Diagnostic(
                    "error",
                    f"duplicate component name {c.name!r}",
                    component=c.name,
                )
            )
            flagged.add(c.name)
        seen.setdefault(c.name, c.order)

    kinds = {c.kind for c in manifest.components}

    executions = manifest.components_of_kind(ComponentKind.EXECUTION)
    if executions and ComponentKind.PROBLEM not in kinds:
        diags.append(
            Diagnostic(
                "error",
                "execution declared but the model has no problem",
                component=executions[0].name,
            )
        )

    if not manifest.components:
        diags.append(Diagnostic("warning", "model has no annotated components"))

    objectives = manifest.components_of_kind(ComponentKind.OBJECTIVE)
    if objectives and ComponentKind.PROBLEM not in kinds:
        diags.append(
            Diagnostic(
                "warning",
                "objective declared but the model has no problem",
                component=objectives[0].name,
            )
        )

    solvers = manifest.components_of_kind(ComponentKind.SOLVER)
    if solvers and ComponentKind.EXECUTION not in kinds:
        diags.append(
            Diagnostic(
                "warning",
                "solver declared but the model has no execution",
                component=solvers[0].name,
            )
        )

    return diags


def validation_errors(manifest: ModelManifest) -> list[Diagnostic]:
    return [d for d in validate(manifest) if d.severity == "error"]


def build_recipe(manifest: ModelManifest) -> Recipe:
    """Summarize required inputs, produced outputs, and the solve chain.

    Rejects manifests with validation errors.
    """
    errors = validation_errors(manifest)
    if errors:
        raise ManifestValidationError(errors)
    inputs = tuple(
        (c.name, c.kind, c.description) for c in manifest.components_of_kind(*INPUT_KINDS)
    )
    outputs = tuple(
        (c.name, c.kind, c.description) for c in manifest.components_of_kind(*OUTPUT_KINDS)
    )
    chain = tuple(c.name for c in manifest.components_of_kind(*SOLVE_CHAIN_KINDS))
    return Recipe(inputs=inputs, outputs=outputs, solve_chain=chain)


def component_listing(manifest: ModelManifest) -> list[tuple[ComponentKind, str, Optional[str], int]]:
    """One (kind, name, description, order) row per component, in file order."""
    return [(c.kind, c.name, c.description, c.order) for c in manifest.components]
