"""Parser for annotated model source files.

An annotation is a comment line of the form ``<tag>@ Keyword: value`` whose
first non-whitespace content is the comment tag immediately followed by
``@``. Annotation keywords carve the file into named components; everything
else is opaque host-language code. Parsing is lossless: component spans plus
the unannotated gaps reassemble to the original bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    Component,
    ComponentKind,
    Diagnostic,
    ModelManifest,
    SourceSpan,
    source_digest,
)

# Canonical keyword spellings (case-sensitive, single internal spaces).
KEYWORD_SPELLINGS: dict[str, ComponentKind] = {
    "Model": ComponentKind.MODEL,
    "Description": ComponentKind.DESCRIPTION,
    "Interface Object": ComponentKind.INTERFACE_OBJECT,
    "Interface File": ComponentKind.INTERFACE_FILE,
    "Helper Object": ComponentKind.HELPER_OBJECT,
    "Variable": ComponentKind.VARIABLE,
    "Function": ComponentKind.FUNCTION,
    "Constraint": ComponentKind.CONSTRAINT,
    "Objective": ComponentKind.OBJECTIVE,
    "Problem": ComponentKind.PROBLEM,
    "Solver": ComponentKind.SOLVER,
    "Execution": ComponentKind.EXECUTION,
    "Output Object": ComponentKind.OUTPUT_OBJECT,
    "Output File": ComponentKind.OUTPUT_FILE,
}

SPELLING_BY_KIND = {kind: word for word, kind in KEYWORD_SPELLINGS.items()}

# Comment leader by file extension. Hash covers the scripting and modeling
# languages we accept out of the box; ".m" files use percent, ".gms" star.
HASH_EXTENSIONS = {".py", ".jl", ".r", ".rb", ".sh", ".pl", ".mhl"}
TAG_BY_EXTENSION = dict({ext: "#" for ext in HASH_EXTENSIONS}, **{".m": "%", ".gms": "*"})


class UnknownExtensionError(ValueError):
    """Comment tag not derivable from the filename."""


class SpanError(ValueError):
    """A manifest span does not fit the given source."""


@dataclass(frozen=True)
class ParserConfig:
    comment_tag: str
    known_keywords: dict[str, ComponentKind] = field(
        default_factory=lambda: dict(KEYWORD_SPELLINGS)
    )

    def __post_init__(self):
        if not self.comment_tag or any(ch.isspace() for ch in self.comment_tag):
            raise ValueError("comment tag must be non-empty and contain no whitespace")


def detect_comment_tag(filename: str) -> str:
    """Map a filename extension to its comment tag."""
    dot = filename.rfind(".")
    ext = filename[dot:].lower() if dot >= 0 else ""
    tag = TAG_BY_EXTENSION.get(ext)
    if tag is None:
        raise UnknownExtensionError(
            f"comment tag unknown for {ext or filename!r}; supply a ParserConfig explicitly"
        )
    return tag


def _iter_lines(data: bytes):
    """Yield (start, end) byte offsets of newline-delimited lines."""
    pos = 0
    while pos < len(data):
        nl = data.find(b"\n", pos)
        end = len(data) if nl < 0 else nl + 1
        yield pos, end
        pos = end


def _split_annotation(text: str, tag: str):
    """Return (keyword, value) if the line has annotation shape, else None.

    Shape: optional leading whitespace, the tag immediately followed by "@",
    then keyword, colon, value. Whitespace around keyword and value is
    tolerated; the keyword itself must be a canonical spelling.
    """
    stripped = text.lstrip(" \t")
    marker = tag + "@"
    if not stripped.startswith(marker):
        return None
    rest = stripped[len(marker):]
    if ":" not in rest:
        return ("", "")  # annotation-shaped but malformed
    keyword, _, value = rest.partition(":")
    return keyword.strip(), value.strip()


@dataclass
class _OpenComponent:
    kind: ComponentKind
    name: str
    start: int
    descriptions: list[str] = field(default_factory=list)


def parse(source: str, config: ParserConfig) -> tuple[ModelManifest, list[Diagnostic]]:
    """Parse annotated source into a manifest. Never aborts.

    Offsets are byte offsets into the UTF-8 encoding of ``source``. A
    component's span starts at its annotation line and runs to the start of
    the next component-opening or Model annotation (Description lines stay
    inside the block they document). Unknown keywords warn and leave the line
    as ordinary code.
    """
    tag = config.comment_tag
    data = source.encode("utf-8")
    diags: list[Diagnostic] = []
    closed: list[tuple[_OpenComponent, int]] = []
    open_comp: _OpenComponent | None = None
    last_comp: _OpenComponent | None = None
    model_name = ""
    model_descriptions: list[str] = []
    model_seen = False

    def close_open(end: int):
        nonlocal open_comp
        if open_comp is not None:
            closed.append((open_comp, end))
            open_comp = None

    for lineno, (start, end) in enumerate(_iter_lines(data), start=1):
        text = data[start:end].decode("utf-8", errors="replace")
        parts = _split_annotation(text, tag)
        if parts is None:
            continue  # ordinary code: stays in the open span or a gap
        keyword, value = parts
        if keyword == "" and value == "":
            diags.append(
                Diagnostic("warning", f"malformed annotation (no colon) on line {lineno}", line=lineno)
            )
            continue
        kind = config.known_keywords.get(keyword)
        if kind is None:
            diags.append(
                Diagnostic("warning", f"unknown annotation keyword {keyword!r}", line=lineno)
            )
            continue

        if kind is ComponentKind.DESCRIPTION:
            if last_comp is not None:
                last_comp.descriptions.append(value)
            elif model_seen:
                model_descriptions.append(value)
            else:
                diags.append(
                    Diagnostic(
                        "error",
                        "description has no preceding component",
                        line=lineno,
                    )
                )
            continue

        if kind is ComponentKind.MODEL:
            close_open(start)
            model_seen = True
            if value:
                model_name = value
            else:
                diags.append(Diagnostic("warning", "model annotation with empty name", line=lineno))
            continue

        # Component-opening keyword.
        close_open(start)
        if not value:
            diags.append(
                Diagnostic(
                    "error",
                    f"{keyword} annotation with empty component name",
                    line=lineno,
                )
            )
            continue
        open_comp = _OpenComponent(kind=kind, name=value, start=start)
        last_comp = open_comp

    close_open(len(data))

    # Freeze only now: Description lines may attach to a component whose span
    # a Model line already closed.
    finished = [
        Component(
            kind=oc.kind,
            name=oc.name,
            description=" ".join(oc.descriptions) or None,
            span=SourceSpan(oc.start, end),
            order=i,
        )
        for i, (oc, end) in enumerate(closed)
    ]

    manifest = ModelManifest(
        name=model_name,
        description=" ".join(model_descriptions) or None,
        comment_tag=tag,
        source_digest=source_digest(data),
        components=tuple(finished),
    )
    return manifest, diags


def reassemble(manifest: ModelManifest, source: str) -> str:
    """Stitch component spans and gaps back into the source text.

    For a manifest produced by :func:`parse` over the same source the result
    equals the input byte for byte.
    """
    data = source.encode("utf-8")
    pieces: list[bytes] = []
    cursor = 0
    for c in manifest.components:
        span = c.span
        if span.start < cursor or span.end > len(data):
            raise SpanError(
                f"component {c.name!r} span [{span.start}, {span.end}) out of bounds"
            )
        pieces.append(data[cursor:span.start])  # gap
        pieces.append(data[span.start:span.end])
        cursor = span.end
    pieces.append(data[cursor:])
    return b"".join(pieces).decode("utf-8")
