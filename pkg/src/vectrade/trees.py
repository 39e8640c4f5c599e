"""Expression trees: structure, prefix-notation round-trip, and typechecking.

Trees serialize to function-call prefix form, e.g.
``SUM_GT(close_w21, ema50_w21)``; terminal names are the feature name for
scalars and ``<feature>_w21`` for 21-day windows.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .primitives import BOOL, NUM, Kind, Primitive, PrimitiveSet, Terminal


class Node:
    """One tree node: a primitive applied to children, or a bare terminal."""

    __slots__ = ("op", "children")

    def __init__(self, op: str, children: tuple["Node", ...] = ()):
        self.op = op
        self.children = children

    def __repr__(self) -> str:
        return f"Node({to_string(self)!r})"


def tree_size(node: Node) -> int:
    return 1 + sum(tree_size(c) for c in node.children)


def tree_depth(node: Node) -> int:
    if not node.children:
        return 1
    return 1 + max(tree_depth(c) for c in node.children)


def iter_preorder(node: Node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def node_at(root: Node, index: int) -> Node:
    for i, n in enumerate(iter_preorder(root)):
        if i == index:
            return n
    raise IndexError(index)


def replace_at(root: Node, index: int, subtree: Node) -> Node:
    """New tree with the node at the given preorder index swapped out."""

    def rebuild(node: Node, pos: int) -> tuple[Node, int]:
        if pos == index:
            return subtree, pos + tree_size(node)
        if not node.children:
            return node, pos + 1
        end = pos + tree_size(node)
        if not (pos < index < end):
            return node, end
        nxt = pos + 1
        kids = []
        for c in node.children:
            new_c, nxt = rebuild(c, nxt)
            kids.append(new_c)
        return Node(node.op, tuple(kids)), end

    out, _ = rebuild(root, 0)
    return out


def to_string(node: Node) -> str:
    if not node.children:
        return node.op
    return f"{node.op}({', '.join(to_string(c) for c in node.children)})"


@dataclass(frozen=True)
class ExprTree:
    """A tree plus its cached metrics and serialized form."""

    root: Node
    size: int
    depth: int
    serial: str

    @classmethod
    def from_root(cls, root: Node) -> "ExprTree":
        return cls(root, tree_size(root), tree_depth(root), to_string(root))


class TreeParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|\(|\)|,)")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            rest = text[pos:].strip()
            if not rest:
                break
            raise TreeParseError(f"unexpected character at {text[pos:pos + 10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def parse(text: str, pset: PrimitiveSet) -> ExprTree:
    """Parse prefix notation against a primitive set, validating every name."""
    tokens = _tokenize(text)
    if not tokens:
        raise TreeParseError("empty expression")
    pos = 0

    def expect(tok: str) -> None:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != tok:
            got = tokens[pos] if pos < len(tokens) else "end of input"
            raise TreeParseError(f"expected {tok!r}, got {got!r}")
        pos += 1

    def parse_node() -> Node:
        nonlocal pos
        if pos >= len(tokens):
            raise TreeParseError("unexpected end of input")
        name = tokens[pos]
        pos += 1
        if pos < len(tokens) and tokens[pos] == "(":
            prim = pset.functions.get(name)
            if prim is None:
                raise TreeParseError(
                    f"unknown primitive {name!r} for variant {pset.variant}"
                )
            expect("(")
            children = [parse_node()]
            while pos < len(tokens) and tokens[pos] == ",":
                pos += 1
                children.append(parse_node())
            expect(")")
            if len(children) != prim.arity:
                raise TreeParseError(
                    f"{name} takes {prim.arity} arguments, got {len(children)}"
                )
            return Node(name, tuple(children))
        if name not in pset.terminals:
            raise TreeParseError(f"unknown terminal {name!r} for variant {pset.variant}")
        return Node(name)

    root = parse_node()
    if pos != len(tokens):
        raise TreeParseError(f"trailing input from token {tokens[pos]!r}")
    return ExprTree.from_root(root)


def coarse_kind(node: Node, pset: PrimitiveSet) -> str:
    ref = pset.lookup(node.op)
    return ref.result if isinstance(ref, Primitive) else NUM


def infer_kinds(root: Node, pset: PrimitiveSet) -> list[Kind]:
    """Fine (scalar/vector/bool) kind of every node, in preorder."""
    out: list[Kind] = []

    def walk(node: Node) -> Kind:
        idx = len(out)
        out.append(Kind.SCALAR)  # placeholder
        ref = pset.lookup(node.op)
        if isinstance(ref, Terminal):
            kind = ref.kind
        else:
            kind = ref.result_kind(tuple(walk(c) for c in node.children))
        out[idx] = kind
        return kind

    walk(root)
    return out


def typecheck(tree: ExprTree | Node, pset: PrimitiveSet) -> str | None:
    """None when the tree is well-typed for the set, else the first violation.

    For STVGP the root must be boolean and every argument must match its
    function's signature; the single-kinded variants only require every name
    to belong to the set.
    """
    root = tree.root if isinstance(tree, ExprTree) else tree

    def walk(node: Node, path: str) -> str | None:
        try:
            ref = pset.lookup(node.op)
        except KeyError as exc:
            return f"at {path}: {exc.args[0]}"
        if isinstance(ref, Terminal):
            if node.children:
                return f"at {path}: terminal {node.op} cannot take arguments"
            return None
        if len(node.children) != ref.arity:
            return (
                f"at {path}: {node.op} takes {ref.arity} arguments,"
                f" got {len(node.children)}"
            )
        for i, child in enumerate(node.children):
            got = coarse_kind(child, pset)
            if got != ref.arg_kinds[i]:
                return (
                    f"at {path}.{i}: argument {i} of {node.op} must be"
                    f" {ref.arg_kinds[i]}, got {got} ({child.op})"
                )
        for i, child in enumerate(node.children):
            err = walk(child, f"{path}.{i}")
            if err:
                return err
        return None

    root_kind = coarse_kind(root, pset) if _known(root, pset) else None
    if root_kind is not None and pset.root_kind == BOOL and root_kind != BOOL:
        return f"at root: {root.op} produces {root_kind}, STVGP trees must be boolean-rooted"
    return walk(root, "root")


def _known(node: Node, pset: PrimitiveSet) -> bool:
    try:
        pset.lookup(node.op)
        return True
    except KeyError:
        return False
