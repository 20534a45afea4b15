"""AST-based first-order mutant generation for Python subject code.

The engine parses a subject module, walks its tree in depth-first source
order, and emits one mutant per (mutable node, transformation) pair across
six operator categories:

- AOR: arithmetic operator replacement on binary expressions
- ROR: relational operator replacement targeting boundary conditions
- LCR: logical connector replacement (and/or)
- ASR: augmented-assignment operator replacement
- CRP: constant replacement (booleans, numbers, strings)
- UOI: unary sign flips

Every emitted mutant is first-order (exactly one tree node differs), parses
on its own, and carries a stable id plus the line of the mutation in both
the original text and the regenerated source. Mutations that are provably
semantics-preserving (e.g. replacing a constant with its own value) are
filtered out before emission so the downstream kill accounting is not
polluted with unkillable targets.
"""

from __future__ import annotations

import ast
import copy
import difflib
import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Iterator

__all__ = [
    "CATEGORIES",
    "DEFAULT_WEIGHT_LAMBDA",
    "SourceUnit",
    "Mutant",
    "parse_source",
    "generate_mutants",
    "passes_equivalence_heuristics",
    "map_mutant_line",
    "assign_difficulty_weight",
    "mutants_to_manifest",
    "manifest_to_mutants",
]

CATEGORIES = ("AOR", "ROR", "LCR", "ASR", "CRP", "UOI")

DEFAULT_WEIGHT_LAMBDA = 0.25

_AOR_TABLE: dict[type, tuple[type, ...]] = {
    ast.Add: (ast.Sub, ast.Mult),
    ast.Sub: (ast.Add, ast.Mult),
    ast.Mult: (ast.Div, ast.Add, ast.Pow),
    ast.Div: (ast.Mult, ast.FloorDiv),
    ast.Mod: (ast.Mult, ast.Add),
}

# Each relational operator maps to its boundary-flipped counterpart, its
# full negation, and NotEq. Eq/Is/In only get their single hard counterpart.
_ROR_TABLE: dict[type, tuple[type, ...]] = {
    ast.Eq: (ast.NotEq,),
    ast.Lt: (ast.LtE, ast.GtE, ast.NotEq),
    ast.Gt: (ast.GtE, ast.LtE, ast.NotEq),
    ast.LtE: (ast.Lt, ast.Gt, ast.NotEq),
    ast.GtE: (ast.Gt, ast.Lt, ast.NotEq),
    ast.Is: (ast.IsNot,),
    ast.In: (ast.NotIn,),
}

_LCR_TABLE: dict[type, tuple[type, ...]] = {
    ast.And: (ast.Or,),
    ast.Or: (ast.And,),
}

_ASR_TABLE: dict[type, tuple[type, ...]] = {
    ast.Add: (ast.Sub,),
    ast.Mult: (ast.Div,),
}

_UOI_TABLE: dict[type, tuple[type, ...]] = {
    ast.USub: (ast.UAdd,),
    ast.UAdd: (ast.USub,),
}

_MUTATED_STRING = "MUTATED"

_CONTROL_FLOW_NODES = (ast.For, ast.AsyncFor, ast.While, ast.If, ast.ExceptHandler)

# (field_name, index_or_None) steps from the module root down to a node.
_NodePath = tuple[tuple[str, int | None], ...]


@dataclass(frozen=True)
class SourceUnit:
    """A parsed subject module: raw text, tree, and per-node source spans.

    Spans are keyed by ``id(node)`` and hold ``(start_line, start_col,
    end_line, end_col)`` with 1-based lines and 0-based columns.
    """

    text: str
    tree: ast.Module
    spans: dict[int, tuple[int, int, int, int]]

    def span_of(self, node: ast.AST) -> tuple[int, int, int, int] | None:
        return self.spans.get(id(node))


@dataclass(frozen=True)
class Mutant:
    """One first-order mutation of a subject module."""

    id: str
    category: str
    original_line: int
    mutated_line: int
    original_fragment: str
    mutated_fragment: str
    weight: float
    mutated_source: str

    def __post_init__(self) -> None:
        if self.weight < 1.0:
            raise ValueError(f"mutant weight must be >= 1.0, got {self.weight}")
        if self.original_line < 1 or self.mutated_line < 1:
            raise ValueError("mutant line numbers are 1-based and positive")


def parse_source(text: str) -> SourceUnit:
    """Parse subject source into a SourceUnit.

    Raises SyntaxError (with line/column info) when the text does not parse.
    """
    tree = ast.parse(text)
    spans: dict[int, tuple[int, int, int, int]] = {}
    for node in ast.walk(tree):
        lineno = getattr(node, "lineno", None)
        if lineno is None:
            continue
        spans[id(node)] = (
            lineno,
            node.col_offset,
            getattr(node, "end_lineno", None) or lineno,
            getattr(node, "end_col_offset", None) or node.col_offset,
        )
    return SourceUnit(text=text, tree=tree, spans=spans)


def passes_equivalence_heuristics(original_node: ast.AST, mutated_node: ast.AST) -> bool:
    """Return False when a mutation is guaranteed semantics-preserving.

    Covered cases: a constant replaced by an equal value (this subsumes
    ``n -> -n`` at ``n == 0``), and a unary sign flip on a literal zero.
    A True result does not promise the mutant is killable, only that the
    implemented heuristics could not prove it equivalent.
    """
    if isinstance(original_node, ast.Constant) and isinstance(mutated_node, ast.Constant):
        return not _constant_values_equal(original_node.value, mutated_node.value)
    if isinstance(original_node, ast.UnaryOp) and isinstance(mutated_node, ast.UnaryOp):
        sign_ops = (ast.UAdd, ast.USub)
        if isinstance(original_node.op, sign_ops) and isinstance(mutated_node.op, sign_ops):
            operand = original_node.operand
            if isinstance(operand, ast.Constant) and isinstance(operand.value, (int, float)):
                if operand.value == 0:
                    return False
    return True


def _constant_values_equal(a: object, b: object) -> bool:
    if type(a) is not type(b):
        return False
    try:
        return bool(a == b)
    except Exception:
        return False


def map_mutant_line(original_text: str, mutated_text: str, original_line: int) -> int:
    """Trace a 1-based line of the original text into the regenerated text.

    Uses a longest-common-subsequence line diff: lines inside equal blocks
    shift by the block offset; lines inside replace blocks map to the block
    start plus the within-block offset, clamped to the block end; deleted
    lines clamp to the nearest surviving position.
    """
    original_lines = original_text.splitlines()
    mutated_lines = mutated_text.splitlines()
    if not 1 <= original_line <= max(len(original_lines), 1):
        raise ValueError(
            f"line {original_line} outside original text ({len(original_lines)} lines)"
        )
    if not mutated_lines:
        return 1
    target = original_line - 1
    matcher = difflib.SequenceMatcher(a=original_lines, b=mutated_lines, autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "insert" or not i1 <= target < i2:
            continue
        if tag == "equal":
            return j1 + (target - i1) + 1
        if j2 > j1:
            return min(j1 + (target - i1), j2 - 1) + 1
        # Pure deletion: the block has no counterpart, clamp to its edge.
        return min(j1, len(mutated_lines) - 1) + 1
    return len(mutated_lines)


def assign_difficulty_weight(
    unit: SourceUnit, node: ast.AST, weight_lambda: float = DEFAULT_WEIGHT_LAMBDA
) -> float:
    """Weight a mutation site by its control-flow nesting depth.

    Returns ``1 + weight_lambda * depth`` where depth counts enclosing
    loops, conditionals, and exception handlers.
    """
    depth = _depth_from_parents(_parent_map(unit.tree), node)
    return 1.0 + weight_lambda * depth


def generate_mutants(
    unit: SourceUnit,
    categories: Iterable[str] | None = None,
    limit: int | None = None,
    weighted: bool = False,
    weight_lambda: float = DEFAULT_WEIGHT_LAMBDA,
) -> list[Mutant]:
    """Generate all first-order mutants of a subject module.

    Args:
        unit: parsed subject source.
        categories: operator categories to apply; defaults to all six.
        limit: keep only the first N mutants in traversal order.
        weighted: when True, assign nesting-depth difficulty weights;
            otherwise every mutant gets weight 1.0.
        weight_lambda: depth coefficient used when weighted is on.

    Returns:
        Mutants in deterministic depth-first traversal order. Stillborn
        variants (regenerated source fails to parse) and heuristically
        equivalent variants are discarded.
    """
    selected = _validate_categories(categories)
    if limit is not None and limit < 1:
        raise ValueError(f"limit must be positive, got {limit}")

    source_tag = hashlib.sha1(unit.text.encode("utf-8")).hexdigest()[:10]
    docstrings = _docstring_constants(unit.tree)
    parents = _parent_map(unit.tree)

    mutants: list[Mutant] = []
    for node, path in _walk_with_path(unit.tree):
        category = _category_of(node)
        if category is None or category not in selected:
            continue
        edits = _edits_for(node, docstrings)
        if not edits:
            continue
        weight = 1.0
        if weighted:
            weight = 1.0 + weight_lambda * _depth_from_parents(parents, node)
        seen_fragments: set[str] = set()
        original_fragment = ast.unparse(node)
        for variant_index, apply_edit in enumerate(edits):
            preview = copy.deepcopy(node)
            apply_edit(preview)
            if not passes_equivalence_heuristics(node, preview):
                continue
            mutated_fragment = ast.unparse(preview)
            if mutated_fragment == original_fragment or mutated_fragment in seen_fragments:
                continue
            seen_fragments.add(mutated_fragment)

            mutated_tree = ast.parse(unit.text)
            apply_edit(_resolve_path(mutated_tree, path))
            mutated_source = ast.unparse(mutated_tree) + "\n"
            try:
                ast.parse(mutated_source)
            except SyntaxError:
                continue  # stillborn: excluded from the pool entirely

            original_line = getattr(node, "lineno", 1)
            mutants.append(
                Mutant(
                    id=f"{source_tag}:{category}:{_path_str(path)}:{variant_index}",
                    category=category,
                    original_line=original_line,
                    mutated_line=map_mutant_line(unit.text, mutated_source, original_line),
                    original_fragment=original_fragment,
                    mutated_fragment=mutated_fragment,
                    weight=weight,
                    mutated_source=mutated_source,
                )
            )
            if limit is not None and len(mutants) >= limit:
                return mutants
    return mutants


def mutants_to_manifest(mutants: Iterable[Mutant]) -> str:
    """Serialize mutants to the JSON manifest format (UTF-8, LF endings)."""
    payload = [asdict(m) for m in mutants]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def manifest_to_mutants(text: str) -> list[Mutant]:
    """Parse a JSON mutant manifest back into Mutant records."""
    payload = json.loads(text)
    if not isinstance(payload, list):
        raise ValueError("mutant manifest must be a JSON array")
    return [Mutant(**entry) for entry in payload]


# ---------------------------------------------------------------------------
# traversal and edit construction


def _validate_categories(categories: Iterable[str] | None) -> set[str]:
    if categories is None:
        return set(CATEGORIES)
    selected = {c.upper() for c in categories}
    if not selected:
        raise ValueError("categories must be nonempty")
    unknown = selected - set(CATEGORIES)
    if unknown:
        raise ValueError(f"unknown mutation categories: {sorted(unknown)}")
    return selected


def _walk_with_path(
    node: ast.AST, path: _NodePath = ()
) -> Iterator[tuple[ast.AST, _NodePath]]:
    yield node, path
    for field, value in ast.iter_fields(node):
        if isinstance(value, ast.AST):
            yield from _walk_with_path(value, path + ((field, None),))
        elif isinstance(value, list):
            for index, item in enumerate(value):
                if isinstance(item, ast.AST):
                    yield from _walk_with_path(item, path + ((field, index),))


def _resolve_path(tree: ast.AST, path: _NodePath) -> ast.AST:
    node: ast.AST = tree
    for field, index in path:
        value = getattr(node, field)
        node = value if index is None else value[index]
    return node


def _path_str(path: _NodePath) -> str:
    return ".".join(f"{field}[{index}]" if index is not None else field for field, index in path)


def _parent_map(tree: ast.AST) -> dict[int, ast.AST]:
    return {
        id(child): parent
        for parent in ast.walk(tree)
        for child in ast.iter_child_nodes(parent)
    }


def _depth_from_parents(parents: dict[int, ast.AST], node: ast.AST) -> int:
    depth = 0
    current = parents.get(id(node))
    while current is not None:
        if isinstance(current, _CONTROL_FLOW_NODES):
            depth += 1
        current = parents.get(id(current))
    return depth


def _docstring_constants(tree: ast.AST) -> set[int]:
    """Ids of Constant nodes that serve as docstrings (never mutated)."""
    found: set[int] = set()
    holders = (ast.Module, ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)
    for node in ast.walk(tree):
        if not isinstance(node, holders) or not node.body:
            continue
        first = node.body[0]
        if (
            isinstance(first, ast.Expr)
            and isinstance(first.value, ast.Constant)
            and isinstance(first.value.value, str)
        ):
            found.add(id(first.value))
    return found


def _category_of(node: ast.AST) -> str | None:
    if isinstance(node, ast.BinOp) and type(node.op) in _AOR_TABLE:
        return "AOR"
    if isinstance(node, ast.Compare) and any(type(op) in _ROR_TABLE for op in node.ops):
        return "ROR"
    if isinstance(node, ast.BoolOp):
        return "LCR"
    if isinstance(node, ast.AugAssign) and type(node.op) in _ASR_TABLE:
        return "ASR"
    if isinstance(node, ast.Constant):
        return "CRP"
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UOI_TABLE:
        return "UOI"
    return None


def _edits_for(node: ast.AST, docstrings: set[int]) -> list[Callable[[ast.AST], None]]:
    """Concrete in-place transformations applicable to one node, table order."""
    if isinstance(node, ast.BinOp):
        return [_op_setter(cls) for cls in _AOR_TABLE.get(type(node.op), ())]
    if isinstance(node, ast.Compare):
        edits: list[Callable[[ast.AST], None]] = []
        for position, op in enumerate(node.ops):
            for cls in _ROR_TABLE.get(type(op), ()):
                edits.append(_compare_op_setter(position, cls))
        return edits
    if isinstance(node, ast.BoolOp):
        return [_op_setter(cls) for cls in _LCR_TABLE.get(type(node.op), ())]
    if isinstance(node, ast.AugAssign):
        return [_op_setter(cls) for cls in _ASR_TABLE.get(type(node.op), ())]
    if isinstance(node, ast.Constant):
        return [_constant_setter(value) for value in _constant_replacements(node, docstrings)]
    if isinstance(node, ast.UnaryOp):
        return [_op_setter(cls) for cls in _UOI_TABLE.get(type(node.op), ())]
    return []


def _constant_replacements(node: ast.Constant, docstrings: set[int]) -> list[object]:
    value = node.value
    if isinstance(value, bool):
        return [not value]
    if isinstance(value, (int, float)):
        return [value + 1, value - 1, -value, 0, 1]
    if isinstance(value, str):
        if id(node) in docstrings:
            return []
        return ["", _MUTATED_STRING]
    return []


def _op_setter(op_cls: type) -> Callable[[ast.AST], None]:
    def apply(target: ast.AST) -> None:
        target.op = op_cls()  # type: ignore[attr-defined]

    return apply


def _compare_op_setter(position: int, op_cls: type) -> Callable[[ast.AST], None]:
    def apply(target: ast.AST) -> None:
        target.ops[position] = op_cls()  # type: ignore[attr-defined]

    return apply


def _constant_setter(value: object) -> Callable[[ast.AST], None]:
    def apply(target: ast.AST) -> None:
        target.value = value  # type: ignore[attr-defined]
        target.kind = None  # type: ignore[attr-defined]

    return apply
