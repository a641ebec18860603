"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

CORPUS_DIR = Path(__file__).parent / "corpus"

COMPONENT_KEYWORDS = [
    "Interface Object",
    "Interface File",
    "Helper Object",
    "Variable",
    "Function",
    "Constraint",
    "Objective",
    "Problem",
    "Solver",
    "Execution",
    "Output Object",
    "Output File",
]

_CODE_SNIPPETS = [
    "x = a + b",
    "rows.append(v)",
    "    total += w[i] * 2",
    "",
    "value = lookup(name)",
    "print(result)",
    "  pairs = [(i, j) for i in r]",
    "coût = 3.5  # unicode ok",
    "λ = rate * 0.5",
    "done = True",
]


def corpus_text(name: str) -> str:
    return (CORPUS_DIR / name).read_text(encoding="utf-8")


def random_annotated_source(rng: random.Random) -> str:
    """Generate a random annotated file that parses without errors.

    Descriptions are only attached to the second and later components, so
    removing any single annotation line still leaves every remaining
    Description a preceding component.
    """
    tag = rng.choice(["#", "%", "//", "*"])
    lines: list[str] = []

    for _ in range(rng.randrange(0, 4)):
        lines.append(rng.choice(_CODE_SNIPPETS))

    if rng.random() < 0.5:
        lines.append(f"{tag}@ Model: model_{rng.randrange(100)}")

    n_components = rng.randrange(1, 9)
    for i in range(n_components):
        keyword = rng.choice(COMPONENT_KEYWORDS)
        pad = " " * rng.randrange(0, 3)
        lines.append(f"{pad}{tag}@ {keyword}: comp_{i}")
        if i >= 1 and rng.random() < 0.4:
            for _ in range(rng.randrange(1, 3)):
                lines.append(f"{tag}@ Description: notes about comp_{i} {rng.randrange(1000)}")
        if rng.random() < 0.1:
            lines.append(f"{tag}@ Widget: not_a_keyword_{i}")
        for _ in range(rng.randrange(0, 5)):
            lines.append(rng.choice(_CODE_SNIPPETS))

    text = "\n".join(lines)
    if rng.random() < 0.8:
        text += "\n"
    return text


def annotation_line_indices(text: str, tag: str) -> list[int]:
    """Indices of lines whose first non-blank content is the annotation marker."""
    out = []
    for i, line in enumerate(text.split("\n")):
        if line.lstrip(" \t").startswith(tag + "@"):
            out.append(i)
    return out


def drop_line(text: str, index: int) -> str:
    lines = text.split("\n")
    del lines[index]
    return "\n".join(lines)


def detect_tag_of_generated(text: str) -> str:
    for line in text.split("\n"):
        stripped = line.lstrip(" \t")
        for tag in ("#", "%", "//", "*"):
            if stripped.startswith(tag + "@"):
                return tag
    return "#"


def random_lp(rng: random.Random):
    """Random desk-scale LP with integer data, within the oracle's limits."""
    import numpy as np

    from modelhub.lp import EQ, GEQ, LEQ, MAXIMIZE, MINIMIZE, LPProblem, Row

    n = rng.randint(1, 4)
    m = rng.randint(1, 8)
    rows = [
        Row(
            a=np.array([rng.randint(-5, 5) for _ in range(n)], dtype=float),
            rel=rng.choice([LEQ, LEQ, GEQ, GEQ, EQ]),
            b=float(rng.randint(-5, 5)),
        )
        for _ in range(m)
    ]
    budget = 12 - m
    bounds = []
    for _ in range(n):
        lo = hi = None
        if budget > 0 and rng.random() < 0.6:
            lo = 0.0 if rng.random() < 0.7 else float(rng.randint(-5, 0))
            budget -= 1
        if budget > 0 and rng.random() < 0.25:
            hi = float(rng.randint(0, 6))
            if lo is not None and hi < lo:
                hi = lo
            budget -= 1
        bounds.append((lo, hi))
    return LPProblem(
        n=n,
        sense=rng.choice([MINIMIZE, MAXIMIZE]),
        c=np.array([rng.randint(-5, 5) for _ in range(n)], dtype=float),
        rows=rows,
        bounds=bounds,
    )


class LiveServer:
    """Runs a FastAPI app under uvicorn on an ephemeral port, in a thread."""

    def __init__(self, app):
        import threading

        import uvicorn

        self.config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(self.config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self) -> str:
        import time

        self.thread.start()
        deadline = time.time() + 10
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)
