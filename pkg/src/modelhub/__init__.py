"""ModelHub: deploy annotated optimization models as callable services."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    Component,
    ComponentKind,
    Diagnostic,
    ManifestValidationError,
    ModelManifest,
    Recipe,
    SourceSpan,
    build_recipe,
    component_listing,
    validate,
)
from .annotations import ParserConfig, detect_comment_tag, parse, reassemble  # noqa: F401
