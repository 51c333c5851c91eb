"""Plain-text matrix files.

A file is a sequence of blocks. Each block opens with a header line
``[label] rows cols`` followed by ``rows`` lines of ``cols`` whitespace
separated numbers. ``#`` starts a comment; blank lines are ignored. Lines of
the form ``@key value`` are directives (options such as ``@epsilon 1e-6``).
Vectors are single-column matrices.

Numbers are written with 17 significant digits so that every value
re-parses to the identical double.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ObslaeError


class ParseError(ObslaeError, ValueError):
    def __init__(self, source: str, line: int, column: int, message: str):
        self.source, self.line, self.column = source, line, column
        super().__init__(f"{source}:{line}:{column}: {message}")


@dataclass
class Block:
    label: str | None
    values: np.ndarray
    line: int


@dataclass
class Document:
    source: str
    blocks: list[Block] = field(default_factory=list)
    directives: dict[str, tuple[str, int]] = field(default_factory=dict)

    def labelled(self, *names: str) -> dict[str, Block]:
        """Map names to blocks, by label when present, else by position."""
        if all(b.label is None for b in self.blocks):
            if len(self.blocks) > len(names):
                raise ParseError(self.source, self.blocks[len(names)].line, 1,
                                 f"unexpected extra block (expected at most {len(names)})")
            return dict(zip(names, self.blocks))
        out: dict[str, Block] = {}
        for b in self.blocks:
            if b.label is None:
                raise ParseError(self.source, b.line, 1, "mix of labelled and unlabelled blocks")
            if b.label not in names:
                raise ParseError(self.source, b.line, 1, f"unknown block label {b.label!r}; expected one of {names}")
            if b.label in out:
                raise ParseError(self.source, b.line, 1, f"duplicate block {b.label!r}")
            out[b.label] = b
        return out

    def directive(self, key: str, cast=str, default=None):
        if key not in self.directives:
            return default
        text, line = self.directives[key]
        try:
            return cast(text)
        except ValueError as exc:
            raise ParseError(self.source, line, 1, f"bad value for @{key}: {text!r}") from exc


def _tokens(line: str) -> list[tuple[str, int]]:
    """Whitespace tokens with their 1-based column."""
    out = []
    i = 0
    while i < len(line):
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < len(line) and not line[j].isspace():
            j += 1
        out.append((line[i:j], i + 1))
        i = j
    return out


def _parse_float(tok: str, source: str, lineno: int, col: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(source, lineno, col, f"not a number: {tok!r}") from None
    if not math.isfinite(val):
        raise ParseError(source, lineno, col, f"non-finite value {tok!r}")
    return val


def _parse_dim(tok: str, source: str, lineno: int, col: int) -> int:
    try:
        val = int(tok)
    except ValueError:
        raise ParseError(source, lineno, col, f"expected a positive integer dimension, got {tok!r}") from None
    if val < 1:
        raise ParseError(source, lineno, col, f"dimension must be positive, got {val}")
    return val


def parse(text: str, source: str = "<string>") -> Document:
    doc = Document(source)
    lines = text.splitlines()
    i = 0
    current: tuple[str | None, int, int, int] | None = None  # label, rows, cols, header line
    rows: list[list[float]] = []

    def finish():
        label, nrows, ncols, at = current
        doc.blocks.append(Block(label, np.array(rows, dtype=np.float64).reshape(nrows, ncols), at))

    while i < len(lines):
        lineno = i + 1
        raw = lines[i].split("#", 1)[0]
        i += 1
        toks = _tokens(raw)
        if not toks:
            continue
        if current is None and toks[0][0].startswith("@"):
            key = toks[0][0][1:]
            if not key or len(toks) < 2:
                raise ParseError(source, lineno, toks[0][1], "directive needs a key and a value")
            doc.directives[key] = (" ".join(t for t, _ in toks[1:]), lineno)
            continue
        if current is None:
            label = None
            if len(toks) == 3:
                label = toks[0][0]
                toks = toks[1:]
            if len(toks) != 2:
                raise ParseError(source, lineno, toks[0][1], "expected a header '[label] rows cols'")
            nrows = _parse_dim(toks[0][0], source, lineno, toks[0][1])
            ncols = _parse_dim(toks[1][0], source, lineno, toks[1][1])
            current = (label, nrows, ncols, lineno)
            rows = []
            continue
        ncols = current[2]
        if len(toks) != ncols:
            col = toks[min(len(toks), ncols)][1] if len(toks) > ncols else len(raw.rstrip()) + 1
            raise ParseError(source, lineno, col, f"row has {len(toks)} values, expected {ncols}")
        rows.append([_parse_float(t, source, lineno, c) for t, c in toks])
        if len(rows) == current[1]:
            finish()
            current = None
    if current is not None:
        raise ParseError(source, len(lines) + 1, 1,
                         f"block starting at line {current[3]} has {len(rows)} rows, expected {current[1]}")
    return doc


def load(path) -> Document:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(path), 0, 0, f"cannot read file: {exc.strerror}") from exc
    return parse(text, str(path))


def load_matrix(path) -> np.ndarray:
    doc = load(path)
    if len(doc.blocks) != 1:
        raise ParseError(doc.source, 1, 1, f"expected exactly one matrix, found {len(doc.blocks)}")
    return doc.blocks[0].values


def load_vector(path) -> np.ndarray:
    m = load_matrix(path)
    if m.shape[1] != 1 and m.shape[0] != 1:
        raise DimensionError(f"{path}: expected a vector (one column), got {m.shape[0]}x{m.shape[1]}")
    return m.reshape(-1)


def format_number(x: float) -> str:
    return "%.17g" % x


def format_matrix(a, label: str | None = None) -> str:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    head = f"{a.shape[0]} {a.shape[1]}"
    lines = [f"{label} {head}" if label else head]
    lines.extend(" ".join(format_number(x) for x in row) for row in a)
    return "\n".join(lines) + "\n"


def write_matrix(path, a, label: str | None = None) -> None:
    Path(path).write_text(format_matrix(a, label))


# --- typed files ------------------------------------------------------------

@dataclass
class ProblemFile:
    g: np.ndarray
    y_d: np.ndarray
    gain: str | None = None
    epsilon: float | None = None
    residual_epsilon: float | None = None
    max_iters: int | None = None
    u0: np.ndarray | None = None


def load_problem(path) -> ProblemFile:
    doc = load(path)
    blocks = doc.labelled("G", "Y")
    if set(blocks) != {"G", "Y"}:
        raise ParseError(doc.source, 1, 1, "a problem file needs a G block and a Y block")
    g = blocks["G"].values
    y = blocks["Y"].values
    if y.shape[1] != 1:
        raise ParseError(doc.source, blocks["Y"].line, 1, f"Y must be a single column, got {y.shape[1]} columns")
    if y.shape[0] != g.shape[0]:
        raise ParseError(doc.source, blocks["Y"].line, 1, f"Y has {y.shape[0]} rows but G has {g.shape[0]}")
    u0 = doc.directive("u0", lambda s: np.array([float(t) for t in s.replace(",", " ").split()]))
    if u0 is not None and u0.shape[0] != g.shape[1]:
        _, line = doc.directives["u0"]
        raise ParseError(doc.source, line, 1, f"@u0 has {u0.shape[0]} entries, G has {g.shape[1]} columns")
    return ProblemFile(
        g=g,
        y_d=y.reshape(-1),
        gain=doc.directive("gain"),
        epsilon=doc.directive("epsilon", float),
        residual_epsilon=doc.directive("residual_epsilon", float),
        max_iters=doc.directive("max_iters", int),
        u0=u0,
    )


def format_problem(g, y_d, **directives) -> str:
    head = "".join(f"@{k} {v}\n" for k, v in directives.items() if v is not None)
    return head + format_matrix(g, "G") + format_matrix(np.asarray(y_d).reshape(-1, 1), "Y")


def load_plant(path):
    """Read blocks A, B, C, x0 (and optional w, v) plus ``@horizon N``."""
    from .ilc import LtiPlant

    doc = load(path)
    blocks = doc.labelled("A", "B", "C", "x0", "w", "v")
    missing = [k for k in ("A", "B", "C", "x0") if k not in blocks]
    if missing:
        raise ParseError(doc.source, 1, 1, f"plant file is missing block(s) {', '.join(missing)}")
    horizon = doc.directive("horizon", int)
    if horizon is None:
        raise ParseError(doc.source, 1, 1, "plant file needs an '@horizon N' directive")
    a, b, c = blocks["A"].values, blocks["B"].values, blocks["C"].values
    x0 = blocks["x0"].values
    if x0.shape[1] != 1:
        raise ParseError(doc.source, blocks["x0"].line, 1, "x0 must be a single column")
    n_s = a.shape[0]
    for name, shape_ok in (
        ("A", a.shape == (n_s, n_s)),
        ("B", b.shape[0] == n_s),
        ("C", c.shape[1] == n_s),
        ("x0", x0.shape[0] == n_s),
    ):
        if not shape_ok:
            raise ParseError(doc.source, blocks[name].line, 1, f"block {name} has incompatible shape {blocks[name].values.shape}")
    w = blocks["w"].values if "w" in blocks else None
    v = blocks["v"].values if "v" in blocks else None
    try:
        return LtiPlant(a, b, c, x0.reshape(-1), horizon, w=w, v=v)
    except (DimensionError, ValueError) as exc:
        raise ParseError(doc.source, 1, 1, str(exc)) from exc


def format_plant(plant) -> str:
    parts = [f"@horizon {plant.horizon_n}\n",
             format_matrix(plant.a, "A"), format_matrix(plant.b, "B"),
             format_matrix(plant.c, "C"), format_matrix(plant.x0, "x0")]
    if plant.w is not None:
        parts.append(format_matrix(plant.w, "w"))
    if plant.v is not None:
        parts.append(format_matrix(plant.v, "v"))
    return "".join(parts)
