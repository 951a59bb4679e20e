"""The built-in question pattern registry, binding enumeration, and rendering.

66 patterns ship with the package: 36 for Task A (22 existence + 14 counting),
15 for Task B (10 structural understanding + 5 object recognition), and 15 for
Task C (5 child relation + 10 parent relation). Pattern strings are stored
verbatim; surface morphology (pluralization, a/an, quoting, relation phrasing)
is applied at render time per slot.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import IncompleteBinding, TypeMismatch
from .geometry import REGION_NAMES, in_region
from .graphs import GraphBundle
from .hashing import stable_int
from .model import (
    QUESTION_LABELS,
    Document,
    ElementCategory,
    Page,
    TaskId,
    category_for_label,
)

# Phrasal surfaces for [R] slots; the first entry is the canonical phrase.
RELATION_PHRASES: dict[str, tuple[str, ...]] = {
    "top": ("above", "upper", "on the top of"),
    "bottom": ("below", "under", "on the bottom of"),
    "left": ("on the left of", "to the left of"),
    "right": ("on the right of", "to the right of"),
    "top-left": ("on the top-left of",),
    "top-right": ("on the top-right of",),
    "bottom-left": ("on the bottom-left of",),
    "bottom-right": ("on the bottom-right of",),
}

_PHRASE_TO_RELATION = {
    phrase: rel for rel, phrases in RELATION_PHRASES.items() for phrase in phrases
}

NUM_VALUES = (1, 2, 3, 4, 5)
TURN_VALUES = ("first", "last")


class QuestionType(str, Enum):
    EXISTENCE = "existence"
    COUNTING = "counting"
    STRUCTURAL_UNDERSTANDING = "structural_understanding"
    OBJECT_RECOGNITION = "object_recognition"
    PARENT_RELATION = "parent_relation"
    CHILD_RELATION = "child_relation"

    @property
    def task(self) -> TaskId:
        return _QTYPE_TASK[self]


_QTYPE_TASK = {
    QuestionType.EXISTENCE: TaskId.A,
    QuestionType.COUNTING: TaskId.A,
    QuestionType.STRUCTURAL_UNDERSTANDING: TaskId.B,
    QuestionType.OBJECT_RECOGNITION: TaskId.B,
    QuestionType.PARENT_RELATION: TaskId.C,
    QuestionType.CHILD_RELATION: TaskId.C,
}


@dataclass(frozen=True)
class SlotSpec:
    """How one slot enumerates and renders.

    kind decides the value pool; plural/quoted/article decide the surface.
    """

    name: str
    kind: str
    plural: bool = False
    quoted: bool = False
    article: bool = False


@dataclass(frozen=True)
class QuestionTemplate:
    template_id: str
    task: TaskId
    qtype: QuestionType
    group: str
    pattern: str
    slots: tuple[SlotSpec, ...]

    def slot(self, name: str) -> SlotSpec:
        for s in self.slots:
            if s.name == name:
                return s
        raise KeyError(name)


@dataclass(frozen=True)
class QuestionString:
    text: str
    template_id: str
    binding: dict


def canonical_binding(binding: dict) -> str:
    return ";".join(f"{k}={binding[k]}" for k in sorted(binding))


# ---------------------------------------------------------------------------
# Registry data
# ---------------------------------------------------------------------------

def _slots(*specs) -> tuple[SlotSpec, ...]:
    return tuple(specs)


_E = lambda kind, **kw: SlotSpec("E", kind, **kw)  # noqa: E731
_E1 = lambda **kw: SlotSpec("E1", "label", **kw)  # noqa: E731
_E2 = SlotSpec("E2", "page_title_anchor", quoted=True)
_R = SlotSpec("R", "relation")
_RW = SlotSpec("R", "relation_word")
_POS = SlotSpec("pos", "position")
_NUM = SlotSpec("num", "num")
_TURN = SlotSpec("turn", "turn")

_ROWS: tuple[tuple[str, QuestionType, str, str, tuple[SlotSpec, ...]], ...] = (
    # --- Task A: existence -------------------------------------------------
    ("A01", QuestionType.EXISTENCE, "exist_pos",
     "Is there any [E] on the [pos] of this page?", _slots(_E("label"), _POS)),
    ("A02", QuestionType.EXISTENCE, "exist_pos",
     "Can you find any [E] on the [pos] of this page?", _slots(_E("label"), _POS)),
    ("A03", QuestionType.EXISTENCE, "exist_pos",
     "On the [pos] of this page, is there a [E]?", _slots(_E("label"), _POS)),
    ("A04", QuestionType.EXISTENCE, "exist_pos_neg",
     "Is it correct that there is no [E] at the [pos]?", _slots(_E("label"), _POS)),
    ("A05", QuestionType.EXISTENCE, "exist_pos",
     "When you check the [pos] of this page, can you find any [E]?",
     _slots(_E("label"), _POS)),
    ("A06", QuestionType.EXISTENCE, "exist_rel",
     "Are there any [E1] are [R] the [E2]?", _slots(_E1(plural=True), _R, _E2)),
    ("A07", QuestionType.EXISTENCE, "exist_rel",
     "Can you find any [E1] [R] the [E2]?", _slots(_E1(), _R, _E2)),
    ("A08", QuestionType.EXISTENCE, "exist_rel",
     "Is there a [E1] found [R] the [E2]?", _slots(_E1(), _R, _E2)),
    ("A09", QuestionType.EXISTENCE, "exist_rel_neg",
     "Is it correct that there is no [E1] [R] the [E2]?", _slots(_E1(), _R, _E2)),
    ("A10", QuestionType.EXISTENCE, "exist_rel",
     "Confirm if there are any [E1] [R] the [E2]?", _slots(_E1(plural=True), _R, _E2)),
    ("A11", QuestionType.EXISTENCE, "exist_rel",
     "When you check the page, is there any [E1] [R] the [E2]?", _slots(_E1(), _R, _E2)),
    ("A12", QuestionType.EXISTENCE, "exist_bare",
     "Is there any [E]?", _slots(_E("label"))),
    ("A13", QuestionType.EXISTENCE, "exist_bare",
     "Are there any [E] on this page?", _slots(_E("label", plural=True))),
    ("A14", QuestionType.EXISTENCE, "exist_bare",
     "Is there a [E] in this page?", _slots(_E("label"))),
    ("A15", QuestionType.EXISTENCE, "exist_bare",
     "Can you find a [E] on this page?", _slots(_E("label"))),
    ("A16", QuestionType.EXISTENCE, "exist_bare",
     "When you check this page, can you find any [E]?", _slots(_E("label"))),
    ("A17", QuestionType.EXISTENCE, "exist_title",
     "Is there a [E] on this page?", _slots(_E("doc_title_text", quoted=True))),
    ("A18", QuestionType.EXISTENCE, "exist_title",
     "Can you find a [E] on this page?", _slots(_E("doc_title_text", quoted=True))),
    ("A19", QuestionType.EXISTENCE, "exist_title",
     "Does this page include a [E]?", _slots(_E("doc_title_text", quoted=True))),
    ("A20", QuestionType.EXISTENCE, "exist_title",
     "Can [E] be found on this page?", _slots(_E("doc_title_text", quoted=True))),
    ("A21", QuestionType.EXISTENCE, "exist_title",
     "When you check this page, can you find [E]?",
     _slots(_E("doc_title_text", quoted=True))),
    ("A22", QuestionType.EXISTENCE, "exist_title",
     "Confirm if there is [E] on this page.",
     _slots(_E("doc_title_text", quoted=True, article=True))),
    # --- Task A: counting ---------------------------------------------------
    ("A23", QuestionType.COUNTING, "count_rel",
     "How many [E1] are [R] the [E2]?", _slots(_E1(plural=True), _R, _E2)),
    ("A24", QuestionType.COUNTING, "count_rel",
     "What is the number of [E1] [R] the [E2]?", _slots(_E1(plural=True), _R, _E2)),
    ("A25", QuestionType.COUNTING, "count_rel",
     "How many [E1] can you find on the [R] of [E2]?", _slots(_E1(plural=True), _RW, _E2)),
    ("A26", QuestionType.COUNTING, "count_rel",
     "Count the number of [E1] on the [R] of [E2].", _slots(_E1(plural=True), _RW, _E2)),
    ("A27", QuestionType.COUNTING, "count_rel",
     "When you check this page, how many [E1] can you find on the [R] of [E2]?",
     _slots(_E1(plural=True), _RW, _E2)),
    ("A28", QuestionType.COUNTING, "count_verify",
     "Can you find [num] [E](s) on the page?", _slots(_NUM, _E("label"))),
    ("A29", QuestionType.COUNTING, "count_verify",
     "Does this page include [num] [E](s)", _slots(_NUM, _E("label"))),
    ("A30", QuestionType.COUNTING, "count_verify",
     "Confirm if there are [num] [E](s) on this page.", _slots(_NUM, _E("label"))),
    ("A31", QuestionType.COUNTING, "count_verify",
     "Are there [num] [E](s) on this page?", _slots(_NUM, _E("label"))),
    ("A32", QuestionType.COUNTING, "count_verify",
     "Is there only [num] [E](s) on this page?", _slots(_NUM, _E("label"))),
    ("A33", QuestionType.COUNTING, "count_bare",
     "How many [E]s on this page?", _slots(_E("label"))),
    ("A34", QuestionType.COUNTING, "count_bare",
     "When you check this page, how many [E]s are on this page?", _slots(_E("label"))),
    ("A35", QuestionType.COUNTING, "count_bare",
     "What is the number of [E]s on this page?", _slots(_E("label"))),
    ("A36", QuestionType.COUNTING, "count_bare",
     "How many [E]s can be found on this page?", _slots(_E("label"))),
    # --- Task B: structural understanding -----------------------------------
    ("B01", QuestionType.STRUCTURAL_UNDERSTANDING, "b_turn",
     "What is the [turn] section in this page?", _slots(_TURN)),
    ("B02", QuestionType.STRUCTURAL_UNDERSTANDING, "b_turn",
     "Can you describe the [turn] section of this page?", _slots(_TURN)),
    ("B03", QuestionType.STRUCTURAL_UNDERSTANDING, "b_turn",
     "What does the [turn] section include in this page?", _slots(_TURN)),
    ("B04", QuestionType.STRUCTURAL_UNDERSTANDING, "b_turn",
     "What is the main contents of the [turn] section in this page?", _slots(_TURN)),
    ("B05", QuestionType.STRUCTURAL_UNDERSTANDING, "b_turn",
     "When you check the [turn] section of this page, what information can you get?",
     _slots(_TURN)),
    ("B06", QuestionType.STRUCTURAL_UNDERSTANDING, "b_pos",
     "What is the [pos] section about?", _slots(_POS)),
    ("B07", QuestionType.STRUCTURAL_UNDERSTANDING, "b_pos",
     "What is the [pos] of the page about?", _slots(_POS)),
    ("B08", QuestionType.STRUCTURAL_UNDERSTANDING, "b_pos",
     "What is the topic of [pos] section?", _slots(_POS)),
    ("B09", QuestionType.STRUCTURAL_UNDERSTANDING, "b_pos",
     "Can you describe the main topic of the [pos] section?", _slots(_POS)),
    ("B10", QuestionType.STRUCTURAL_UNDERSTANDING, "b_pos",
     "When you check the [pos] of this page, what information can you get?", _slots(_POS)),
    # --- Task B: object recognition ------------------------------------------
    ("B11", QuestionType.OBJECT_RECOGNITION, "b_objrec",
     "What is the [E] on the [pos] of the page?", _slots(_E("label"), _POS)),
    ("B12", QuestionType.OBJECT_RECOGNITION, "b_objrec",
     "What is the [pos] [E] about?", _slots(_E("label"), _POS)),
    ("B13", QuestionType.OBJECT_RECOGNITION, "b_objrec",
     "Can you describe the [E] on the [pos] of the page?", _slots(_E("label"), _POS)),
    ("B14", QuestionType.OBJECT_RECOGNITION, "b_objrec",
     "What information does the [pos] [E] contain?", _slots(_E("label"), _POS)),
    ("B15", QuestionType.OBJECT_RECOGNITION, "b_objrec",
     "When you check the [pos] [E], what information can you get?",
     _slots(_E("label"), _POS)),
    # --- Task C: child relation ----------------------------------------------
    ("C01", QuestionType.CHILD_RELATION, "c_child",
     "What does the [E] include?", _slots(_E("doc_title_anchor"))),
    ("C02", QuestionType.CHILD_RELATION, "c_child",
     "What is the [E] about?", _slots(_E("doc_title_anchor"))),
    ("C03", QuestionType.CHILD_RELATION, "c_child",
     "What subsections are in the [E]?", _slots(_E("doc_title_anchor"))),
    ("C04", QuestionType.CHILD_RELATION, "c_child",
     "What subsections can be found in the [E]?", _slots(_E("doc_title_anchor"))),
    ("C05", QuestionType.CHILD_RELATION, "c_child",
     "When you check the [E], which subsections are included?", _slots(_E("doc_title_anchor"))),
    # --- Task C: parent relation ----------------------------------------------
    ("C06", QuestionType.PARENT_RELATION, "c_parent_float",
     "Which section does describe the [E] ?", _slots(_E("float_label"))),
    ("C07", QuestionType.PARENT_RELATION, "c_parent_float",
     "Which section does include the description of the [E]?", _slots(_E("float_label"))),
    ("C08", QuestionType.PARENT_RELATION, "c_parent_float",
     "Name out the section that include the [E].", _slots(_E("float_label"))),
    ("C09", QuestionType.PARENT_RELATION, "c_parent_float",
     "Where can you find the [E]?", _slots(_E("float_label"))),
    ("C10", QuestionType.PARENT_RELATION, "c_parent_float",
     "When you search for the description of [E], which sections do you need to check?",
     _slots(_E("float_label"))),
    ("C11", QuestionType.PARENT_RELATION, "c_parent_cite",
     "Which section does include the [E]?", _slots(_E("cite_key", quoted=True))),
    ("C12", QuestionType.PARENT_RELATION, "c_parent_cite",
     "Which section does cite the [E]?", _slots(_E("cite_key", quoted=True))),
    ("C13", QuestionType.PARENT_RELATION, "c_parent_cite",
     "Where is the [E] cited in the document?", _slots(_E("cite_key", quoted=True))),
    ("C14", QuestionType.PARENT_RELATION, "c_parent_cite",
     "Where can [E] be found in the document?", _slots(_E("cite_key", quoted=True))),
    ("C15", QuestionType.PARENT_RELATION, "c_parent_cite",
     "When you search for the citation of [E], which sections can you find it?",
     _slots(_E("cite_key", quoted=True))),
)


class TemplateRegistry:
    def __init__(self, templates: tuple[QuestionTemplate, ...]):
        self.templates = templates
        self._by_id = {t.template_id: t for t in templates}

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    def by_id(self, template_id: str) -> QuestionTemplate:
        return self._by_id[template_id]

    def for_task(self, task: TaskId) -> tuple[QuestionTemplate, ...]:
        return tuple(t for t in self.templates if t.task == task)

    def dump(self) -> list[dict]:
        return [
            {"template_id": t.template_id, "task": t.task.value,
             "qtype": t.qtype.value, "pattern": t.pattern}
            for t in sorted(self.templates, key=lambda t: t.template_id)
        ]


@lru_cache(maxsize=1)
def load_templates() -> TemplateRegistry:
    templates = tuple(
        QuestionTemplate(template_id=tid, task=qtype.task, qtype=qtype,
                         group=group, pattern=pattern, slots=slots)
        for tid, qtype, group, pattern, slots in _ROWS
    )
    return TemplateRegistry(templates)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_VOWELS = "aeiouAEIOU"


def _surface(slot: SlotSpec, value, tpl: QuestionTemplate, binding: dict, seed: int) -> str:
    if slot.kind == "label":
        text = f"{value}s" if slot.plural else str(value)
    elif slot.kind in ("position", "relation_word", "turn"):
        text = str(value)
    elif slot.kind == "relation":
        options = RELATION_PHRASES[value]
        pick = stable_int(seed, tpl.template_id, canonical_binding(binding), slot.name)
        text = options[pick % len(options)]
    elif slot.kind == "num":
        text = str(value)
    else:  # text-valued slots
        text = f"'{value}'" if slot.quoted else str(value)
        if slot.article:
            article = "an" if str(value)[:1] in _VOWELS else "a"
            text = f"{article} {text}"
    return text


def _check_value(slot: SlotSpec, value) -> None:
    ok = True
    if slot.kind == "label":
        ok = value in QUESTION_LABELS
    elif slot.kind in ("position",):
        ok = value in REGION_NAMES
    elif slot.kind in ("relation", "relation_word"):
        ok = value in RELATION_PHRASES
    elif slot.kind == "num":
        ok = value in NUM_VALUES
    elif slot.kind == "turn":
        ok = value in TURN_VALUES
    else:
        ok = isinstance(value, str) and bool(value)
    if not ok:
        raise TypeMismatch(f"slot [{slot.name}] cannot take value {value!r}")


def validate_binding(tpl: QuestionTemplate, binding: dict) -> None:
    """Raise IncompleteBinding / TypeMismatch unless the binding fits the template."""
    for slot in tpl.slots:
        if slot.name not in binding:
            raise IncompleteBinding(f"binding for {tpl.template_id} is missing [{slot.name}]")
        _check_value(slot, binding[slot.name])


def instantiate(tpl: QuestionTemplate, binding: dict, seed: int) -> QuestionString:
    """Render the pattern with the binding; deterministic in (tpl, binding, seed)."""
    validate_binding(tpl, binding)
    text = tpl.pattern
    for slot in tpl.slots:
        text = text.replace(f"[{slot.name}]", _surface(slot, binding[slot.name],
                                                       tpl, binding, seed), 1)
    return QuestionString(text=text, template_id=tpl.template_id, binding=dict(binding))


def _alternation(options) -> str:
    return "|".join(re.escape(o) for o in sorted(options, key=len, reverse=True))


@lru_cache(maxsize=None)
def _extraction_regex(template_id: str) -> re.Pattern:
    tpl = load_templates().by_id(template_id)
    pattern = tpl.pattern
    pieces = []
    cursor = 0
    token_at = sorted((pattern.index(f"[{s.name}]"), s) for s in tpl.slots)
    for pos, slot in token_at:
        pieces.append(re.escape(pattern[cursor:pos]))
        group = f"(?P<{slot.name}>%s)"
        if slot.kind == "label":
            alts = [f"{l}s" for l in QUESTION_LABELS] if slot.plural else QUESTION_LABELS
            body = group % _alternation(alts)
        elif slot.kind == "position" or slot.kind == "relation_word":
            body = group % _alternation(REGION_NAMES)
        elif slot.kind == "relation":
            body = group % _alternation(_PHRASE_TO_RELATION)
        elif slot.kind == "num":
            body = group % "[1-5]"
        elif slot.kind == "turn":
            body = group % _alternation(TURN_VALUES)
        elif slot.quoted:
            body = group % "[^']+"
            body = f"'{body}'"
            if slot.article:
                body = f"(?:an|a) {body}"
        else:
            body = group % ".+?"
        pieces.append(body)
        cursor = pos + len(f"[{slot.name}]")
    pieces.append(re.escape(pattern[cursor:]))
    return re.compile("".join(pieces))


def extract_binding(tpl: QuestionTemplate, text: str) -> dict | None:
    """Recover the binding from a rendered question, or None if it does not match."""
    m = _extraction_regex(tpl.template_id).fullmatch(text)
    if m is None:
        return None
    binding = {}
    for slot in tpl.slots:
        raw = m.group(slot.name)
        if slot.kind == "label" and slot.plural:
            binding[slot.name] = raw[:-1]
        elif slot.kind == "relation":
            binding[slot.name] = _PHRASE_TO_RELATION[raw]
        elif slot.kind == "num":
            binding[slot.name] = int(raw)
        else:
            binding[slot.name] = raw
    return binding


# ---------------------------------------------------------------------------
# Binding enumeration
# ---------------------------------------------------------------------------

def _page_title_anchors(page: Page) -> list[str]:
    """Title texts naming exactly one title element on the page."""
    counts: dict[str, int] = {}
    for el in page.elements:
        if el.category == ElementCategory.TITLE and el.text and "'" not in el.text:
            counts[el.text] = counts.get(el.text, 0) + 1
    return sorted(t for t, n in counts.items() if n == 1)


def _doc_title_texts(doc: Document) -> list[str]:
    texts = {
        el.text
        for el in doc.elements()
        if el.category == ElementCategory.TITLE and el.text and "'" not in el.text
    }
    return sorted(texts)


def _doc_title_anchors(doc: Document) -> dict[str, str]:
    """Unique title text -> element id over the whole document."""
    counts: dict[str, list[str]] = {}
    for el in doc.elements():
        if el.category == ElementCategory.TITLE and el.text and "'" not in el.text:
            counts.setdefault(el.text, []).append(el.id)
    return {t: ids[0] for t, ids in counts.items() if len(ids) == 1}


_FLOAT_KEY = re.compile(r"^(Table|Figure) \d+$")


def _region_members(page: Page, category: ElementCategory | None, region: str) -> int:
    n = 0
    for el in page.elements:
        if category is not None and el.category != category:
            continue
        if in_region(el.bbox, region):
            n += 1
    return n


def enumerate_bindings(tpl: QuestionTemplate, doc: Document,
                       page: Page | None = None,
                       graphs: GraphBundle | None = None) -> list[dict]:
    """All bindings whose referenced anchors exist (and are unique) in scope.

    Existence templates deliberately keep bindings with negative answers;
    referent-style templates (anchored titles, Task B region picks, Task C
    anchors) honor the unique-referent contract and skip ambiguous values.
    """
    if tpl.task in (TaskId.A, TaskId.B) and page is None:
        raise TypeMismatch(f"{tpl.template_id} needs a page scope")
    if tpl.task == TaskId.C and page is not None:
        raise TypeMismatch(f"{tpl.template_id} is document-scoped")

    pools: list[tuple[str, list]] = []
    for slot in tpl.slots:
        if slot.kind == "label":
            values: list = list(QUESTION_LABELS)
        elif slot.kind == "position":
            values = list(REGION_NAMES)
        elif slot.kind in ("relation", "relation_word"):
            values = list(REGION_NAMES)
        elif slot.kind == "num":
            values = list(NUM_VALUES)
        elif slot.kind == "turn":
            values = list(TURN_VALUES)
        elif slot.kind == "page_title_anchor":
            values = _page_title_anchors(page)
        elif slot.kind == "doc_title_text":
            values = _doc_title_texts(doc)
        elif slot.kind == "doc_title_anchor":
            anchors = _doc_title_anchors(doc)
            values = sorted(anchors)
            if graphs is not None:
                values = [
                    t for t in values
                    if _has_child_title(doc, graphs, anchors[t])
                ]
        elif slot.kind == "float_label":
            values = sorted(k for k in doc.mention_index if _FLOAT_KEY.match(k))
        elif slot.kind == "cite_key":
            values = sorted(k for k in doc.mention_index if k in doc.references)
        else:
            raise TypeMismatch(f"unknown slot kind {slot.kind!r}")
        pools.append((slot.name, values))

    names = [name for name, _ in pools]
    out = []
    for combo in itertools.product(*(vals for _, vals in pools)):
        binding = dict(zip(names, combo))
        if tpl.group == "b_pos":
            if _region_members(page, ElementCategory.TITLE, binding["pos"]) > 1:
                continue
        elif tpl.group == "b_objrec":
            cat = category_for_label(binding["E"])
            if _region_members(page, cat, binding["pos"]) > 1:
                continue
        out.append(binding)
    out.sort(key=canonical_binding)
    return out


def _has_child_title(doc: Document, graphs: GraphBundle, element_id: str) -> bool:
    categories = {el.id: el.category for el in doc.elements()}
    return any(
        categories.get(child) == ElementCategory.TITLE
        for child in graphs.logical.children(element_id)
    )
