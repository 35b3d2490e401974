"""Tab-separated readers and writers for datasets, networks and run outputs.

Readers raise :class:`~ripe.errors.ParseError` with the offending line
number; a missing file raises :class:`~ripe.errors.DataError` naming the
path.  Writers use a fixed float format so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ParseError
from .influence import ExpressionDataset, InfluenceMatrix, ScanRow
from .synth import WeightedNetwork


def fmt(x: float) -> str:
    """Shortest round-trip text for a float; ``-0.0`` is written as ``0``."""
    x = float(x)
    if x == 0.0:
        return "0"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _lines(path) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{p}: no such file")
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(p, 1, f"not valid UTF-8 text ({exc.reason})") from None
    return text.splitlines()


def _records(path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    for no, line in enumerate(_lines(path), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        yield no, line.rstrip("\r").split("\t")


def _float(path, no, text) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(path, no, f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(path, no, f"non-finite value {text!r}")
    return v


def write_lines(path, lines: Iterable[str]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    return p


# -- expression data ---------------------------------------------------------

def read_expression(path) -> ExpressionDataset:
    rows = _records(path)
    try:
        no, header = next(rows)
    except StopIteration:
        raise ParseError(path, 1, "empty file") from None
    if len(header) < 3 or header[0] != "sample_id" or header[1] != "condition":
        raise ParseError(path, no, "header must be 'sample_id<TAB>condition<TAB>gene...'")
    genes = header[2:]
    if len(set(genes)) != len(genes):
        raise ParseError(path, no, "duplicate gene labels in header")
    ids, conds, values = [], [], []
    for no, f in rows:
        if len(f) != len(header):
            raise ParseError(path, no, f"expected {len(header)} fields, found {len(f)}")
        ids.append(f[0])
        conds.append(f[1])
        values.append([_float(path, no, t) for t in f[2:]])
    if not values:
        raise ParseError(path, no, "no samples")
    try:
        return ExpressionDataset(np.array(values), genes, conds, ids)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_expression(path, data: ExpressionDataset) -> Path:
    head = "\t".join(["sample_id", "condition", *data.gene_labels])
    body = (
        "\t".join([sid, cond, *map(fmt, row)])
        for sid, cond, row in zip(data.sample_ids, data.conditions, data.values)
    )
    return write_lines(path, [head, *body])


# -- edge lists ----------------------------------------------------------------

def read_edge_list(path, weighted: bool = False):
    """Read a ``source<TAB>target[<TAB>weight]`` table.

    Returns ``(labels, edges, weights)``: labels in first-appearance order,
    edges as label pairs, and weights (``None`` unless ``weighted``).
    Extra columns are ignored, so consensus tables can be read back as
    plain edge lists.
    """
    rows = _records(path)
    try:
        no, header = next(rows)
    except StopIteration:
        raise ParseError(path, 1, "empty file") from None
    need = ["source", "target"] + (["weight"] if weighted else [])
    if [h.strip().lower() for h in header[: len(need)]] != need:
        raise ParseError(path, no, "header must start with " + "<TAB>".join(need))
    labels: dict[str, None] = {}
    edges, weights = [], []
    for no, f in rows:
        if len(f) < len(need):
            raise ParseError(path, no, f"expected at least {len(need)} fields, found {len(f)}")
        s, t = f[0].strip(), f[1].strip()
        if not s or not t:
            raise ParseError(path, no, "empty node label")
        labels.setdefault(s)
        labels.setdefault(t)
        edges.append((s, t))
        if weighted:
            weights.append(_float(path, no, f[2]))
    return list(labels), edges, (weights if weighted else None)


def write_edge_list(path, edges: Iterable[tuple[str, str]]) -> Path:
    return write_lines(path, ["source\ttarget", *(f"{a}\t{b}" for a, b in edges)])


def write_network(path, network: WeightedNetwork) -> Path:
    body = (f"{a}\t{b}\t{fmt(w)}" for a, b, w in network.weighted_edges())
    return write_lines(path, ["source\ttarget\tweight", *body])


def read_network(path, labels: Sequence[str] | None = None) -> WeightedNetwork:
    """Weighted network; ``labels`` fixes the node order (else first appearance)."""
    found, edges, weights = read_edge_list(path, weighted=True)
    names = list(labels) if labels is not None else found
    index = {g: i for i, g in enumerate(names)}
    missing = [g for g in found if g not in index]
    if missing:
        raise DataError(f"{path}: nodes not in the label set: {missing[:5]}")
    W = np.zeros((len(names), len(names)))
    for (a, b), w in zip(edges, weights):
        if a != b:
            W[index[a], index[b]] = w
    return WeightedNetwork(W, names)


# -- influence matrix ----------------------------------------------------------

def write_influence(path, infl: InfluenceMatrix) -> Path:
    head = "\t".join(["perturbed", *infl.gene_labels])
    body = (
        "\t".join([infl.gene_labels[g], *("1" if v else "0" for v in row)])
        for g, row in zip(infl.perturbed_ids, infl.entries)
    )
    return write_lines(path, [head, *body])


def read_influence(path) -> InfluenceMatrix:
    rows = _records(path)
    try:
        no, header = next(rows)
    except StopIteration:
        raise ParseError(path, 1, "empty file") from None
    if len(header) < 2 or header[0] != "perturbed":
        raise ParseError(path, no, "header must be 'perturbed<TAB>gene...'")
    genes = header[1:]
    if len(set(genes)) != len(genes):
        raise ParseError(path, no, "duplicate gene labels in header")
    index = {g: i for i, g in enumerate(genes)}
    ids, entries = [], []
    for no, f in rows:
        if len(f) != len(header):
            raise ParseError(path, no, f"expected {len(header)} fields, found {len(f)}")
        if f[0] not in index:
            raise ParseError(path, no, f"unknown gene {f[0]!r}")
        if index[f[0]] in ids:
            raise ParseError(path, no, f"gene {f[0]!r} listed twice")
        bad = [t for t in f[1:] if t not in ("0", "1")]
        if bad:
            raise ParseError(path, no, f"influence entries must be 0 or 1, found {bad[0]!r}")
        ids.append(index[f[0]])
        entries.append([t == "1" for t in f[1:]])
    if not ids:
        raise ParseError(path, no, "no rows")
    return InfluenceMatrix(np.array(entries, dtype=bool), ids, genes)


# -- orderings ----------------------------------------------------------------

def write_orderings(path, orderings: Iterable[Sequence[int]], labels: Sequence[str], meta: dict) -> Path:
    head = [f"# {k}={meta[k]}" for k in sorted(meta)]
    body = (",".join(labels[i] for i in o) for o in orderings)
    return write_lines(path, [*head, *body])


def read_orderings(path, labels: Sequence[str]) -> list[tuple[int, ...]]:
    """Orderings as gene-index tuples; every line must list the same gene set."""
    index = {g: i for i, g in enumerate(labels)}
    out = []
    expected = None
    for no, f in _records(path):
        names = [x.strip() for x in "\t".join(f).split(",")]
        unknown = [x for x in names if x not in index]
        if unknown:
            raise ParseError(path, no, f"unknown gene {unknown[0]!r}")
        seq = tuple(index[x] for x in names)
        if len(set(seq)) != len(seq):
            raise ParseError(path, no, "ordering repeats a gene")
        if expected is None:
            expected = frozenset(seq)
        elif frozenset(seq) != expected:
            raise ParseError(path, no, "ordering covers a different gene set than line one")
        out.append(seq)
    if not out:
        raise ParseError(path, 1, "no orderings")
    return out


# -- run outputs ----------------------------------------------------------------

def write_estimate(path, estimate, labels: Sequence[str], sidecar: dict) -> tuple[Path, Path]:
    rows = sorted(zip(estimate.sources.tolist(), estimate.targets.tolist(), estimate.values.tolist()))
    tsv = write_lines(path, ["source\ttarget\tweight", *(f"{labels[a]}\t{labels[b]}\t{fmt(w)}" for a, b, w in rows)])
    js = Path(path).with_suffix(".json")
    write_json(js, sidecar)
    return tsv, js


def write_consensus(path, net, labels: Sequence[str]) -> Path:
    body = (
        f"{labels[i]}\t{labels[j]}\t{fmt(c)}\t{s}\t{fmt(m)}"
        for i, j, c, s, m in net.rows()
    )
    return write_lines(path, ["source\ttarget\tconfidence\tsign\tmagnitude", *body])


def write_scan(path, rows: Sequence[ScanRow]) -> Path:
    body = (f"{fmt(r.cutoff)}\t{r.edges}\t{r.largest_scc}\t{r.largest_wcc}" for r in rows)
    return write_lines(path, ["cutoff\tedges\tlargest_scc\tlargest_wcc", *body])


def write_histogram(path, hist: Sequence[tuple[int, int]]) -> Path:
    return write_lines(path, ["tp\tcount", *(f"{a}\t{b}" for a, b in hist)])


def read_labels(path) -> list[str]:
    """One label per line (or tab/comma separated)."""
    out: list[str] = []
    for _, f in _records(path):
        for field in f:
            out.extend(x.strip() for x in field.split(",") if x.strip())
    if not out:
        raise ParseError(path, 1, "no labels")
    return out


def write_json(path, obj) -> Path:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    return write_lines(path, [text])


def read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{p}: no such file")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        line = getattr(exc, "lineno", 1)
        raise ParseError(p, line, f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError(p, 1, "top-level JSON value must be an object")
    return obj
