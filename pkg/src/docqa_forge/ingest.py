"""Annotation parsing and document preprocessing.

The pipeline order is fixed: parse -> reading order -> caption association
-> document-wide reading indices -> mention index. Each step is a pure
transformation returning new objects; nothing mutates in place.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace

from .errors import DuplicateId, InvalidBBox, MalformedInput
from .geometry import BoundingBox
from .model import UNASSIGNED, Document, DocElement, ElementCategory, Page, TaskId

# Column clustering: a new column starts when an element's x-center sits more
# than this fraction of the page width away from the running column center.
COLUMN_GAP = 0.25

# Caption association: nearest Text within this fraction of the page height.
CAPTION_MAX_GAP = 0.08

# Element-count ceilings implied by the fixed answer index spaces.
PAGE_ELEMENT_LIMIT = 25
DOC_ELEMENT_LIMIT = 400

_CATEGORY_VALUES = {c.value for c in ElementCategory}

# Coordinates are quantized after normalization so that serialize -> parse
# round-trips exactly despite the float multiply/divide.
_QUANT = 9


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_document(raw: bytes | str | dict) -> Document:
    """Parse one annotation-JSON document and normalize its geometry.

    Reading indices are left unassigned; categories (including explicit
    caption labels) are taken as given.
    """
    if isinstance(raw, (bytes, str)):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"not valid JSON: {exc}") from exc
    else:
        data = raw
    if not isinstance(data, dict):
        raise MalformedInput("document must be a JSON object")

    doc_id = data.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise MalformedInput("doc_id must be a nonempty string")

    references = data.get("references", [])
    if not isinstance(references, list) or any(not isinstance(r, str) for r in references):
        raise MalformedInput("references must be a list of strings")

    pages_raw = data.get("pages")
    if not isinstance(pages_raw, list):
        raise MalformedInput("pages must be a list")

    seen_ids: set[str] = set()
    pages: list[Page] = []
    for position, page_raw in enumerate(pages_raw):
        if not isinstance(page_raw, dict):
            raise MalformedInput(f"page {position} must be an object")
        index = page_raw.get("index")
        if index != position:
            raise MalformedInput(f"page index {index!r} does not match position {position}")
        width = page_raw.get("width")
        height = page_raw.get("height")
        if not _is_positive_number(width) or not _is_positive_number(height):
            raise MalformedInput(f"page {position}: width/height must be positive numbers")
        elements_raw = page_raw.get("elements", [])
        if not isinstance(elements_raw, list):
            raise MalformedInput(f"page {position}: elements must be a list")

        elements = []
        for el_raw in elements_raw:
            el = _parse_element(el_raw, position, float(width), float(height))
            if el.id in seen_ids:
                raise DuplicateId(f"element id {el.id!r} appears more than once")
            seen_ids.add(el.id)
            elements.append(el)
        pages.append(Page(index=position, width=float(width), height=float(height),
                          elements=tuple(elements)))

    return Document(doc_id=doc_id, pages=tuple(pages), references=tuple(references))


def _is_positive_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _parse_element(raw, page_index: int, width: float, height: float) -> DocElement:
    if not isinstance(raw, dict):
        raise MalformedInput(f"page {page_index}: element must be an object")
    el_id = raw.get("id")
    if not isinstance(el_id, str) or not el_id:
        raise MalformedInput(f"page {page_index}: element id must be a nonempty string")
    category = raw.get("category")
    if category not in _CATEGORY_VALUES:
        raise MalformedInput(f"element {el_id!r}: unknown category {category!r}")
    bbox_raw = raw.get("bbox")
    if (not isinstance(bbox_raw, list) or len(bbox_raw) != 4
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in bbox_raw)):
        raise MalformedInput(f"element {el_id!r}: bbox must be four numbers")
    x0, y0, x1, y1 = (float(v) for v in bbox_raw)
    if not (x0 < x1 and y0 < y1):
        raise InvalidBBox(f"element {el_id!r}: degenerate bbox {bbox_raw}")
    if x0 < 0 or y0 < 0 or x1 > width or y1 > height:
        raise InvalidBBox(f"element {el_id!r}: bbox {bbox_raw} outside page {width}x{height}")
    text = raw.get("text", "")
    if not isinstance(text, str):
        raise MalformedInput(f"element {el_id!r}: text must be a string")
    parent_id = raw.get("parent_id")
    if parent_id is not None and not isinstance(parent_id, str):
        raise MalformedInput(f"element {el_id!r}: parent_id must be a string or null")
    bbox = BoundingBox(
        round(x0 / width, _QUANT),
        round(y0 / height, _QUANT),
        round(x1 / width, _QUANT),
        round(y1 / height, _QUANT),
    )
    return DocElement(id=el_id, page_index=page_index, bbox=bbox,
                      category=ElementCategory(category), text=text, parent_id=parent_id)


def serialize_document(doc: Document) -> dict:
    """Inverse of parse_document: annotation-schema dict in source units."""
    return {
        "doc_id": doc.doc_id,
        "references": list(doc.references),
        "pages": [
            {
                "index": page.index,
                "width": page.width,
                "height": page.height,
                "elements": [
                    {
                        "id": el.id,
                        "category": el.category.value,
                        "bbox": [
                            round(el.bbox.x0 * page.width, _QUANT),
                            round(el.bbox.y0 * page.height, _QUANT),
                            round(el.bbox.x1 * page.width, _QUANT),
                            round(el.bbox.y1 * page.height, _QUANT),
                        ],
                        "text": el.text,
                        "parent_id": el.parent_id,
                    }
                    for el in page.elements
                ],
            }
            for page in doc.pages
        ],
    }


# ---------------------------------------------------------------------------
# Reading order
# ---------------------------------------------------------------------------

def assign_reading_order(page: Page) -> Page:
    """Assign page_reading_index column-first, top-to-bottom.

    Elements cluster into columns by x-center (greedy 1-D clustering with a
    COLUMN_GAP threshold against the running column mean); columns read
    left to right, and within a column order is (y0, x0, id).
    """
    if not page.elements:
        return page
    by_center = sorted(page.elements, key=lambda e: (e.bbox.center[0], e.id))
    columns: list[list[DocElement]] = []
    means: list[float] = []
    for el in by_center:
        cx = el.bbox.center[0]
        if columns and cx - means[-1] <= COLUMN_GAP:
            columns[-1].append(el)
            n = len(columns[-1])
            means[-1] += (cx - means[-1]) / n
        else:
            columns.append([el])
            means.append(cx)

    ordered: list[DocElement] = []
    for column in columns:
        column.sort(key=lambda e: (e.bbox.y0, e.bbox.x0, e.id))
        ordered.extend(column)
    elements = tuple(replace(el, page_reading_index=i) for i, el in enumerate(ordered))
    # Keep storage order aligned with reading order; it is the page's canon.
    return replace(page, elements=elements)


def assign_document_order(doc: Document) -> Document:
    """Assign doc_reading_index following page order then page reading order."""
    pages = []
    counter = 0
    for page in doc.pages:
        ordered = sorted(page.elements, key=lambda e: e.page_reading_index)
        renumbered = []
        for el in ordered:
            renumbered.append(replace(el, doc_reading_index=counter))
            counter += 1
        pages.append(replace(page, elements=tuple(renumbered)))
    return replace(doc, pages=tuple(pages))


# ---------------------------------------------------------------------------
# Caption association
# ---------------------------------------------------------------------------

def associate_captions(page: Page) -> Page:
    """Relabel the Text nearest each Table/Figure as its caption.

    Candidates below the anchor win over candidates above; the edge-to-edge
    gap is capped at CAPTION_MAX_GAP. A Text claimed by several anchors goes
    to the nearest one (ties to the smaller anchor reading index); anchors
    that lose their only candidate get no caption.
    """
    anchors = sorted(
        (el for el in page.elements if el.category.is_float),
        key=lambda e: e.page_reading_index,
    )
    texts = [el for el in page.elements if el.category == ElementCategory.TEXT]
    if not anchors or not texts:
        return page

    proposals: list[tuple[str, float, int, DocElement]] = []  # (text_id, gap, anchor_ri, anchor)
    for anchor in anchors:
        _, acy = anchor.bbox.center
        below, above = [], []
        for text in texts:
            gap = anchor.bbox.edge_gap(text.bbox)
            if gap > CAPTION_MAX_GAP:
                continue
            entry = (gap, text.page_reading_index, text)
            (below if text.bbox.center[1] >= acy else above).append(entry)
        group = below or above
        if not group:
            continue
        gap, _, text = min(group, key=lambda t: (t[0], t[1]))
        proposals.append((text.id, gap, anchor.page_reading_index, anchor))

    winners: dict[str, tuple[float, int, DocElement]] = {}
    for text_id, gap, anchor_ri, anchor in proposals:
        held = winners.get(text_id)
        if held is None or (gap, anchor_ri) < (held[0], held[1]):
            winners[text_id] = (gap, anchor_ri, anchor)

    relabel = {
        text_id: (
            ElementCategory.TABLE_CAPTION
            if anchor.category == ElementCategory.TABLE
            else ElementCategory.FIGURE_CAPTION
        )
        for text_id, (_, _, anchor) in winners.items()
    }
    elements = tuple(
        el.with_category(relabel[el.id]) if el.id in relabel else el
        for el in page.elements
    )
    return replace(page, elements=elements)


# ---------------------------------------------------------------------------
# Mention index
# ---------------------------------------------------------------------------

# "Table 12" must not satisfy a query for "Table 1": both ends of a match are
# guarded against adjacent alphanumerics.
_FLOAT_MENTION = re.compile(r"(?<![A-Za-z0-9])(table|figure|fig\.)\s+(\d+)(?![A-Za-z0-9])",
                            re.IGNORECASE)


def canonical_float_label(word: str, number: str) -> str:
    kind = "Table" if word.lower().startswith("t") else "Figure"
    return f"{kind} {int(number)}"


def scan_float_mentions(text: str) -> set[str]:
    return {canonical_float_label(w, n) for w, n in _FLOAT_MENTION.findall(text)}


def mentions_key(text: str, key: str) -> bool:
    pattern = r"(?<![A-Za-z0-9])" + re.escape(key) + r"(?![A-Za-z0-9])"
    return re.search(pattern, text) is not None


def build_mention_index(doc: Document) -> Document:
    """Map float labels and citation keys to the Text/List elements naming them."""
    index: dict[str, list[str]] = {}
    for el in doc.elements_in_doc_order():
        if el.category not in (ElementCategory.TEXT, ElementCategory.LIST):
            continue
        for label in sorted(scan_float_mentions(el.text)):
            index.setdefault(label, []).append(el.id)
        for key in dict.fromkeys(doc.references):
            if mentions_key(el.text, key):
                index.setdefault(key, []).append(el.id)
    return replace(doc, mention_index={k: tuple(v) for k, v in sorted(index.items())})


# ---------------------------------------------------------------------------
# Pipeline and validation
# ---------------------------------------------------------------------------

def preprocess_document(doc: Document) -> Document:
    """Run the full preprocessing pipeline on a freshly parsed document."""
    pages = tuple(associate_captions(assign_reading_order(p)) for p in doc.pages)
    doc = assign_document_order(replace(doc, pages=pages))
    return build_mention_index(doc)


@dataclass(frozen=True)
class ExclusionEntry:
    scope: str  # "page" or "document"
    page_index: int | None
    reason: str

    def as_dict(self) -> dict:
        return {"scope": self.scope, "page_index": self.page_index, "reason": self.reason}


@dataclass(frozen=True)
class ValidationReport:
    task: TaskId
    doc_id: str
    excluded: tuple[ExclusionEntry, ...]
    eligible_pages: tuple[int, ...]
    document_eligible: bool


def validate_for_generation(doc: Document, task: TaskId) -> ValidationReport:
    """Flag over-limit pages/documents; never raises, only reports."""
    excluded: list[ExclusionEntry] = []
    if doc.element_count == 0:
        excluded.append(ExclusionEntry("document", None, "no elements"))
        return ValidationReport(task, doc.doc_id, tuple(excluded), (), False)

    if task == TaskId.C:
        if doc.element_count > DOC_ELEMENT_LIMIT:
            excluded.append(ExclusionEntry(
                "document", None,
                f"{doc.element_count} elements exceed limit {DOC_ELEMENT_LIMIT}"))
            return ValidationReport(task, doc.doc_id, tuple(excluded), (), False)
        return ValidationReport(task, doc.doc_id, (), tuple(p.index for p in doc.pages), True)

    eligible = []
    for page in doc.pages:
        if len(page.elements) > PAGE_ELEMENT_LIMIT:
            excluded.append(ExclusionEntry(
                "page", page.index,
                f"{len(page.elements)} elements exceed limit {PAGE_ELEMENT_LIMIT}"))
        else:
            eligible.append(page.index)
    return ValidationReport(task, doc.doc_id, tuple(excluded), tuple(eligible), True)


# ---------------------------------------------------------------------------
# Processed-corpus serialization (ingest output)
# ---------------------------------------------------------------------------

def document_to_processed(doc: Document) -> dict:
    data = serialize_document(doc)
    for page, page_raw in zip(doc.pages, data["pages"]):
        for el, el_raw in zip(page.elements, page_raw["elements"]):
            el_raw["page_reading_index"] = el.page_reading_index
            el_raw["doc_reading_index"] = el.doc_reading_index
    data["mention_index"] = {k: list(v) for k, v in doc.mention_index.items()}
    return data


def document_from_processed(data: dict) -> Document:
    doc = parse_document(data)
    pages = []
    for page, page_raw in zip(doc.pages, data["pages"]):
        elements = []
        for el, el_raw in zip(page.elements, page_raw["elements"]):
            pri = el_raw.get("page_reading_index", UNASSIGNED)
            dri = el_raw.get("doc_reading_index", UNASSIGNED)
            elements.append(replace(el, page_reading_index=pri, doc_reading_index=dri))
        pages.append(replace(page, elements=tuple(elements)))
    mention_index = {
        k: tuple(v) for k, v in sorted(data.get("mention_index", {}).items())
    }
    return replace(doc, pages=tuple(pages), mention_index=mention_index)
