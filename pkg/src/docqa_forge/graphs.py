"""Spatial (per page) and logical (per document) relational graphs."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import CyclicParentInput, DanglingParent, UnknownElement
from .geometry import COARSE_ADMITS, SpatialRelation, spatial_relation
from .ingest import CAPTION_MAX_GAP
from .model import Document, ElementCategory, Page

ROOT = None  # parent value for elements attached directly to the document root


# ---------------------------------------------------------------------------
# Spatial graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpatialGraph:
    """Typed directional edges between every related pair on one page.

    An edge (src, dst, rel) reads "dst is <rel> of src"; the inverse edge is
    always present too.
    """

    page_index: int
    element_ids: frozenset[str]
    edges: dict[str, tuple[tuple[str, SpatialRelation], ...]] = field(default_factory=dict)

    def edge_set(self) -> set[tuple[str, str, SpatialRelation]]:
        return {(src, dst, rel) for src, outs in self.edges.items() for dst, rel in outs}

    def related(self, anchor_id: str, rel: SpatialRelation, coarse: bool = False) -> set[str]:
        if anchor_id not in self.element_ids:
            raise UnknownElement(f"{anchor_id!r} is not on page {self.page_index}")
        admitted = COARSE_ADMITS[rel] if coarse else {rel}
        return {dst for dst, r in self.edges.get(anchor_id, ()) if r in admitted}

    def dump(self) -> dict:
        rows = sorted([src, dst, rel.value] for src, dst, rel in self.edge_set())
        return {"page_index": self.page_index, "spatial_edges": rows}


def build_spatial_graph(page: Page) -> SpatialGraph:
    """Edge for every ordered pair with a defined relation; nothing else."""
    edges: dict[str, list[tuple[str, SpatialRelation]]] = {}
    for a in page.elements:
        for b in page.elements:
            if a.id == b.id:
                continue
            rel = spatial_relation(a.bbox, b.bbox)
            if rel is not None:
                edges.setdefault(a.id, []).append((b.id, rel))
    return SpatialGraph(
        page_index=page.index,
        element_ids=frozenset(el.id for el in page.elements),
        edges={src: tuple(sorted(outs)) for src, outs in edges.items()},
    )


def query_related(graph: SpatialGraph, anchor_id: str, rel: SpatialRelation,
                  coarse: bool = False) -> set[str]:
    return graph.related(anchor_id, rel, coarse)


# ---------------------------------------------------------------------------
# Logical graph
# ---------------------------------------------------------------------------

_NUMBER_PREFIX = re.compile(r"^\s*(\d+(?:\.\d+)*)\.?\s+")


def title_level(text: str) -> int:
    """Depth implied by a numbering prefix ("2.3 Foo" -> 2); flat titles are 1."""
    m = _NUMBER_PREFIX.match(text)
    if not m:
        return 1
    return m.group(1).count(".") + 1


@dataclass(frozen=True)
class LogicalGraph:
    """Parent-child forest over a document (virtual root = None)."""

    doc_id: str
    parent_of: dict[str, str | None]
    doc_order: dict[str, int]

    def _check(self, element_id: str) -> None:
        if element_id not in self.parent_of:
            raise UnknownElement(f"{element_id!r} is not in document {self.doc_id}")

    def parent(self, element_id: str) -> str | None:
        self._check(element_id)
        return self.parent_of[element_id]

    def children(self, element_id: str) -> tuple[str, ...]:
        self._check(element_id)
        kids = [c for c, p in self.parent_of.items() if p == element_id]
        return tuple(sorted(kids, key=lambda c: self.doc_order[c]))

    def ancestors(self, element_id: str) -> tuple[str, ...]:
        self._check(element_id)
        chain = []
        cursor = self.parent_of[element_id]
        while cursor is not None:
            chain.append(cursor)
            cursor = self.parent_of[cursor]
        return tuple(chain)

    def dump(self) -> dict:
        present = {c: p for c, p in sorted(self.parent_of.items()) if p is not None}
        return {"doc_id": self.doc_id, "parent_of": present}


def _pair_captions(doc: Document) -> dict[str, str]:
    """Re-derive which caption owns which float (float id -> caption id).

    Mirrors the caption-association geometry but runs over caption-labelled
    elements, so it also covers captions provided directly in the input.
    """
    owners: dict[str, tuple[float, int, str]] = {}  # caption id -> (gap, float ri, float id)
    for page in doc.pages:
        for anchor in page.elements:
            if not anchor.category.is_float:
                continue
            wanted = (ElementCategory.TABLE_CAPTION
                      if anchor.category == ElementCategory.TABLE
                      else ElementCategory.FIGURE_CAPTION)
            below, above = [], []
            for cap in page.elements:
                if cap.category != wanted:
                    continue
                gap = anchor.bbox.edge_gap(cap.bbox)
                if gap > CAPTION_MAX_GAP:
                    continue
                entry = (gap, cap.page_reading_index, cap)
                if cap.bbox.center[1] >= anchor.bbox.center[1]:
                    below.append(entry)
                else:
                    above.append(entry)
            group = below or above
            if not group:
                continue
            gap, _, cap = min(group, key=lambda t: (t[0], t[1]))
            held = owners.get(cap.id)
            if held is None or (gap, anchor.page_reading_index) < (held[0], held[1]):
                owners[cap.id] = (gap, anchor.page_reading_index, anchor.id)
    return {float_id: cap_id for cap_id, (_, _, float_id) in owners.items()}


def build_logical_graph(doc: Document) -> LogicalGraph:
    """Build the parent-child forest.

    Explicit parent_id fields, when any element carries one, are authoritative
    and used verbatim after validation. Otherwise section structure is
    inferred: titles nest by numbering level, body elements attach to the
    most recent title, captions parent their floats.
    """
    elements = doc.elements_in_doc_order()
    doc_order = {el.id: el.doc_reading_index for el in elements}
    known = set(doc_order)

    if any(el.parent_id is not None for el in elements):
        parent_of: dict[str, str | None] = {}
        for el in elements:
            if el.parent_id is not None and el.parent_id not in known:
                raise DanglingParent(f"{el.id!r} references unknown parent {el.parent_id!r}")
            parent_of[el.id] = el.parent_id
        _reject_cycles(parent_of)
        return LogicalGraph(doc.doc_id, parent_of, doc_order)

    caption_of = _pair_captions(doc)
    parent_of = {}
    title_stack: list[tuple[int, str]] = []  # (level, title id), innermost last
    last_title: str | None = None
    for el in elements:
        if el.category == ElementCategory.TITLE:
            level = title_level(el.text)
            while title_stack and title_stack[-1][0] >= level:
                title_stack.pop()
            parent_of[el.id] = title_stack[-1][1] if title_stack else ROOT
            title_stack.append((level, el.id))
            last_title = el.id
        elif el.id in caption_of:
            parent_of[el.id] = caption_of[el.id]
        else:
            # body, captions, and caption-less floats live inside the section
            parent_of[el.id] = last_title
    return LogicalGraph(doc.doc_id, parent_of, doc_order)


def _reject_cycles(parent_of: dict[str, str | None]) -> None:
    cleared: set[str] = set()
    for start in parent_of:
        seen: set[str] = set()
        cursor: str | None = start
        while cursor is not None and cursor not in cleared:
            if cursor in seen:
                raise CyclicParentInput(f"parent chain through {cursor!r} forms a cycle")
            seen.add(cursor)
            cursor = parent_of[cursor]
        cleared |= seen


# ---------------------------------------------------------------------------
# Graph bundle used by program execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphBundle:
    spatial: dict[int, SpatialGraph]
    logical: LogicalGraph


def build_graphs(doc: Document) -> GraphBundle:
    return GraphBundle(
        spatial={page.index: build_spatial_graph(page) for page in doc.pages},
        logical=build_logical_graph(doc),
    )
