"""Static recovery of Keras model architectures from Python source files.

Nothing from the analyzed file is executed.  A single statement walker
propagates literal constants (folding ``+``, ``-``, ``*`` on numbers and
``+`` on strings), resolves import aliases, and recognizes three
construction forms:

* ``Sequential([...])`` with a literal list of layer calls,
* a sequential variable followed by ``.add(<layer>)`` calls,
* functional graphs of layer applications closed by ``Model(inputs, outputs)``.

``for`` loops over literal ranges or literal lists of at most
``UNROLL_LIMIT`` items are unrolled; calls to functions defined in the same
file are inlined.  ``.compile(...)`` supplies optimizer and loss.
"""

from __future__ import annotations

import ast
import json
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Union

from . import SUBJECT_GRAMMAR
from .vocab import LayerClass, UnknownLayer, Vocabulary, build_vocabulary

UNROLL_LIMIT = 64
INLINE_DEPTH_LIMIT = 8
STATEMENT_BUDGET = 200_000
INT_LIMIT = 10**18
TEXT_LIMIT = 10_000

INFO, WARNING, ERROR = "info", "warning", "error"


# --------------------------------------------------------------------------
# public value types


@dataclass(frozen=True)
class Opaque:
    """A value that does not fold to a literal; keeps the exact source text."""

    source: str

    def __str__(self) -> str:
        return self.source


@dataclass(frozen=True)
class _ClassRef(Opaque):
    """A keras class bound to a variable, e.g. ``OUTPUT = Dense``."""

    qualified: str = ""


LiteralValue = Union[str, int, float, bool, None, tuple, list, dict, Opaque]


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    line: int = 0
    col: int = 0

    def record(self, file: str) -> dict:
        return {
            "file": file,
            "line": self.line,
            "col": self.col,
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        }


@dataclass(frozen=True)
class ParseFailure:
    line: int
    col: int
    message: str

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(ERROR, "parse-failure", self.message, self.line, self.col)


@dataclass(frozen=True)
class SyntaxTree:
    module: ast.Module
    source: str
    diagnostics: tuple[Diagnostic, ...] = ()


@dataclass(frozen=True)
class ExtractedLayer:
    position: int
    layer_class: Union[LayerClass, UnknownLayer]
    positional_params: tuple = ()
    keywords: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        if isinstance(self.layer_class, LayerClass):
            return self.layer_class.canonical_name
        return self.layer_class.name


@dataclass
class ExtractedModel:
    source_file: str
    model_ordinal: int
    layers: list[ExtractedLayer] = field(default_factory=list)
    optimizer: Optional[str] = None
    loss_function: Optional[str] = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    variable: Optional[str] = None

    @property
    def layer_names(self) -> list[str]:
        return [layer.name for layer in self.layers]


@dataclass
class FileExtraction:
    source_file: str
    models: list[ExtractedModel]
    diagnostics: list[Diagnostic]
    parse_failure: Optional[ParseFailure] = None


class NotALayer:
    """Returned by :func:`extract_layer_call` for calls that build no layer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NotALayer"


NOT_A_LAYER = NotALayer()


# --------------------------------------------------------------------------
# parsing


def parse_subject_source(text: Union[str, bytes]) -> Union[SyntaxTree, ParseFailure]:
    diagnostics = []
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            text = text.decode("utf-8", errors="replace")
            diagnostics.append(Diagnostic(WARNING, "lossy-decode", f"invalid UTF-8 replaced: {exc.reason}"))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            module = ast.parse(text, feature_version=SUBJECT_GRAMMAR)
    except SyntaxError as exc:
        return ParseFailure(exc.lineno or 1, exc.offset or 0, exc.msg or "invalid syntax")
    except (ValueError, RecursionError, MemoryError, OverflowError) as exc:
        return ParseFailure(1, 0, f"{type(exc).__name__}: {exc}")
    return SyntaxTree(module, text, tuple(diagnostics))


class _Source:
    """Exact source segments for nodes (ast column offsets are UTF-8 byte offsets)."""

    def __init__(self, text: str):
        self.lines = text.splitlines(keepends=True)
        self._encoded: dict[int, bytes] = {}

    def _line(self, lineno: int) -> bytes:
        if lineno not in self._encoded:
            self._encoded[lineno] = self.lines[lineno - 1].encode("utf-8") if 0 < lineno <= len(self.lines) else b""
        return self._encoded[lineno]

    def segment(self, node: ast.AST) -> str:
        try:
            start, end = node.lineno, node.end_lineno
            c0, c1 = node.col_offset, node.end_col_offset
        except AttributeError:
            return ast.unparse(node)
        if end is None or c1 is None:
            return ast.unparse(node)
        if start == end:
            return self._line(start)[c0:c1].decode("utf-8", errors="replace")
        parts = [self._line(start)[c0:]]
        parts.extend(self._line(n) for n in range(start + 1, end))
        parts.append(self._line(end)[:c1])
        return b"".join(parts).decode("utf-8", errors="replace")


# --------------------------------------------------------------------------
# imports


@dataclass
class ImportTable:
    names: dict[str, str] = field(default_factory=dict)
    star_modules: list[str] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @classmethod
    def from_tree(cls, tree: Union[SyntaxTree, ast.AST]) -> "ImportTable":
        table = cls()
        root = tree.module if isinstance(tree, SyntaxTree) else tree
        for node in _walk_in_order(root):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    if alias.asname:
                        table._bind(alias.asname, alias.name, node)
                    else:
                        top = alias.name.split(".")[0]
                        table._bind(top, top, node)
            elif isinstance(node, ast.ImportFrom):
                module = "." * node.level + (node.module or "")
                for alias in node.names:
                    if alias.name == "*":
                        if module not in table.star_modules:
                            table.star_modules.append(module)
                        continue
                    table._bind(alias.asname or alias.name, f"{module}.{alias.name}", node)
        return table

    def _bind(self, local: str, qualified: str, node: ast.AST) -> None:
        previous = self.names.get(local)
        if previous is not None and previous != qualified:
            self.diagnostics.append(
                Diagnostic(INFO, "import-rebound", f"{local!r} rebound from {previous} to {qualified}", node.lineno, node.col_offset + 1)
            )
        self.names[local] = qualified

    def resolve(self, node: ast.AST) -> Optional[str]:
        """Qualified name of a Name/Attribute chain, if its base is imported."""
        parts = _dotted(node)
        if parts is None:
            return None
        base = self.names.get(parts[0])
        if base is None:
            return None
        return ".".join([base, *parts[1:]])

    def keras_star_module(self) -> Optional[str]:
        for module in self.star_modules:
            if "keras" in module.split("."):
                return module
        return None


def build_import_table(tree: SyntaxTree) -> ImportTable:
    return ImportTable.from_tree(tree)


def _walk_in_order(node: ast.AST):
    yield node
    for child in ast.iter_child_nodes(node):
        yield from _walk_in_order(child)


def _dotted(node: ast.AST) -> Optional[list[str]]:
    parts = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if not isinstance(node, ast.Name):
        return None
    parts.append(node.id)
    return parts[::-1]


def _is_keras(qualified: str) -> bool:
    return "keras" in qualified.split(".")


# --------------------------------------------------------------------------
# static environment


class StaticEnv:
    """Per-scope map from variable name to the literal (or Opaque) it holds.

    Scope ``""`` is the module; functions use their qualified name
    (``outer.inner``, ``Class.method``).
    """

    def __init__(self, scopes: dict[str, dict[str, LiteralValue]], source: str = ""):
        self.scopes = scopes
        self.source = source

    def lookup(self, name: str, scope: str = "") -> Any:
        """Value bound to ``name`` seen from ``scope``; raises KeyError if unbound."""
        while True:
            bindings = self.scopes.get(scope, {})
            if name in bindings:
                return bindings[name]
            if scope == "":
                raise KeyError(name)
            scope = scope.rpartition(".")[0]

    def __getitem__(self, name: str) -> LiteralValue:
        return self.scopes.get("", {})[name]

    def __contains__(self, name: str) -> bool:
        return name in self.scopes.get("", {})

    def as_dict(self, scope: str = "") -> dict[str, LiteralValue]:
        return dict(self.scopes.get(scope, {}))

    def __eq__(self, other) -> bool:
        return isinstance(other, StaticEnv) and self.scopes == other.scopes

    def __repr__(self) -> str:
        return f"StaticEnv({self.scopes!r})"


# internal object values that are not literals


@dataclass(frozen=True)
class _ModelRef:
    index: int


@dataclass(frozen=True)
class _LayerSpec:
    layer_class: Union[LayerClass, UnknownLayer]
    positional: tuple
    keywords: tuple  # of (name, value) pairs, call order
    line: int
    col: int


@dataclass(frozen=True)
class _Tensor:
    app: int


@dataclass(frozen=True)
class _OptimizerObj:
    name: str
    keywords: tuple


@dataclass(frozen=True)
class _LossObj:
    name: str


@dataclass
class _Function:
    node: Union[ast.FunctionDef, ast.AsyncFunctionDef]
    frame: "_Frame"
    qualname: str
    defaults: dict
    called: bool = False
    instance: Optional[dict] = None


@dataclass
class _App:
    spec: _LayerSpec
    inputs: tuple[int, ...]


@dataclass
class _Model:
    index: int
    kind: str
    variable: Optional[str]
    line: int
    col: int
    layers: list = field(default_factory=list)
    optimizer: Optional[str] = None
    loss: Optional[str] = None
    diagnostics: list = field(default_factory=list)


_REF_TYPES = (_ModelRef, _LayerSpec, _Tensor, _OptimizerObj, _LossObj, _Function)


def _is_literal(value: Any) -> bool:
    if value is None or isinstance(value, (str, int, float, bool, Opaque)):
        return True
    if isinstance(value, (list, tuple)):
        return all(_is_literal(v) for v in value)
    if isinstance(value, dict):
        return all(isinstance(k, (str, int, float, bool)) and _is_literal(v) for k, v in value.items())
    return False


def _opaque_sources(value: Any):
    if isinstance(value, Opaque):
        yield value.source
    elif isinstance(value, (list, tuple)):
        for v in value:
            yield from _opaque_sources(v)
    elif isinstance(value, dict):
        for v in value.values():
            yield from _opaque_sources(v)


def _contains_opaque(value: Any) -> bool:
    return next(_opaque_sources(value), None) is not None


def _numeric(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def fold_binop(op: ast.operator, left: Any, right: Any) -> Any:
    """Fold ``+``/``-``/``*`` on numbers and ``+`` on strings; None when not foldable."""
    if _numeric(left) and _numeric(right):
        if isinstance(op, ast.Add):
            result = left + right
        elif isinstance(op, ast.Sub):
            result = left - right
        elif isinstance(op, ast.Mult):
            result = left * right
        else:
            return None
        if isinstance(result, int) and abs(result) > INT_LIMIT:
            return None
        if isinstance(result, float) and (result != result or result in (float("inf"), float("-inf"))):
            return None
        return result
    if isinstance(left, str) and isinstance(right, str) and isinstance(op, ast.Add):
        if len(left) + len(right) > TEXT_LIMIT:
            return None
        return left + right
    return None


class _Frame:
    def __init__(self, scope: str, parent: Optional["_Frame"], self_name: Optional[str] = None, instance: Optional[dict] = None):
        self.scope = scope
        self.parent = parent
        self.bindings: dict[str, Any] = {}
        self.sources: dict[str, str] = {}
        self.self_name = self_name
        self.instance = instance
        self.return_value: Any = None
        self.returned = False
        self.functions: list[_Function] = []


class _Budget(Exception):
    pass


class _Walker:
    def __init__(self, tree: SyntaxTree, source_file: str = "<string>", vocab: Optional[Vocabulary] = None,
                 imports: Optional[ImportTable] = None):
        self.tree = tree
        self.src = _Source(tree.source)
        self.source_file = source_file
        self.vocab = vocab or build_vocabulary()
        self.imports = imports if imports is not None else ImportTable.from_tree(tree)
        self.module_frame = _Frame("", None)
        self.frames: list[_Frame] = [self.module_frame]
        self.env_scopes: dict[str, dict[str, Any]] = {"": self.module_frame.bindings}
        self.env_sources: dict[str, dict[str, str]] = {"": self.module_frame.sources}
        self.models: list[_Model] = []
        self.apps: list[_App] = []
        self.diagnostics: list[Diagnostic] = list(tree.diagnostics) + list(self.imports.diagnostics)
        self.cond_depth = 0
        self.call_stack: list[_Function] = []
        self.statements = 0

    # -- diagnostics ------------------------------------------------------

    def diag(self, severity: str, code: str, message: str, node: Optional[ast.AST] = None, model: Optional[_Model] = None):
        line = getattr(node, "lineno", 0) or 0
        col = (getattr(node, "col_offset", -1) or 0) + 1 if node is not None else 0
        d = Diagnostic(severity, code, message, line, col)
        (model.diagnostics if model is not None else self.diagnostics).append(d)

    # -- bindings ---------------------------------------------------------

    @property
    def frame(self) -> _Frame:
        return self.frames[-1]

    def _instance_key(self, name: str) -> Optional[tuple[dict, dict, str]]:
        base, dot, rest = name.partition(".")
        if not dot:
            return None
        frame = self.frame
        while frame is not None:
            if frame.self_name == base and frame.instance is not None:
                return frame.instance, frame.instance.setdefault("__sources__", {}), rest
            frame = frame.parent
        return None

    def bind(self, name: str, value: Any, source: str) -> None:
        inst = self._instance_key(name)
        if inst is not None:
            inst[0][inst[2]] = value
            inst[1][inst[2]] = source
            return
        self.frame.bindings[name] = value
        self.frame.sources[name] = source

    def unbind(self, name: str) -> None:
        self.frame.bindings.pop(name, None)
        self.frame.sources.pop(name, None)

    def lookup(self, name: str) -> tuple[bool, Any]:
        inst = self._instance_key(name)
        if inst is not None:
            if inst[2] in inst[0]:
                return True, inst[0][inst[2]]
            return False, None
        frame = self.frame
        while frame is not None:
            if name in frame.bindings:
                return True, frame.bindings[name]
            frame = frame.parent
        return False, None

    def is_shadowed(self, name: str) -> bool:
        return self.lookup(name)[0]

    # -- entry points -----------------------------------------------------

    def run(self) -> None:
        try:
            self.walk_block(self.tree.module.body)
            self.walk_uncalled(self.module_frame)
        except _Budget:
            self.diag(WARNING, "analysis-budget-exceeded", f"stopped after {STATEMENT_BUDGET} statements")

    def static_env(self) -> StaticEnv:
        scopes = {}
        for scope, bindings in self.env_scopes.items():
            sources = self.env_sources[scope]
            out = {}
            for name, value in bindings.items():
                if isinstance(value, _Function):
                    continue
                out[name] = value if _is_literal(value) else Opaque(sources.get(name, name))
            scopes[scope] = out
        return StaticEnv(scopes, self.tree.source)

    def finish_models(self) -> list[ExtractedModel]:
        out = []
        for ordinal, m in enumerate(self.models):
            layers = []
            diags = list(m.diagnostics)
            for pos, spec in enumerate(m.layers):
                layer = ExtractedLayer(pos, spec.layer_class, tuple(spec.positional), dict(spec.keywords))
                layers.append(layer)
                if isinstance(spec.layer_class, UnknownLayer):
                    diags.append(Diagnostic(WARNING, "unknown-layer", f"layer {spec.layer_class.name!r} is not in the vocabulary", spec.line, spec.col))
                opaque = [src for v in (*spec.positional, *(v for _, v in spec.keywords)) for src in _opaque_sources(v)]
                if opaque:
                    listed = ", ".join(repr(src) for src in opaque)
                    diags.append(Diagnostic(INFO, "opaque-value", f"{layer.name} has non-static arguments: {listed}", spec.line, spec.col))
            if not layers:
                diags.append(Diagnostic(INFO, "empty-model", "no layers recovered for this model", m.line, m.col))
            out.append(ExtractedModel(self.source_file, ordinal, layers, m.optimizer, m.loss, diags, m.variable))
        return out

    # -- statements -------------------------------------------------------

    def walk_block(self, stmts: Iterable[ast.stmt]) -> None:
        for stmt in stmts:
            self.statements += 1
            if self.statements > STATEMENT_BUDGET:
                raise _Budget()
            self.statement(stmt)
            if isinstance(stmt, ast.Return) or self.frame.returned and self.cond_depth == 0:
                break

    def walk_uncalled(self, frame: _Frame) -> None:
        for fn in frame.functions:
            if not fn.called:
                self.invoke(fn, [], {}, None, uncalled=True)

    def statement(self, stmt: ast.stmt) -> None:
        if isinstance(stmt, ast.Assign):
            value = self.eval(stmt.value)
            for target in stmt.targets:
                self.assign(target, value, stmt.value)
        elif isinstance(stmt, ast.AnnAssign):
            if stmt.value is not None:
                self.assign(stmt.target, self.eval(stmt.value), stmt.value)
        elif isinstance(stmt, ast.AugAssign):
            name = self.target_name(stmt.target)
            if name is None:
                return
            found, current = self.lookup(name)
            value = self.eval(stmt.value)
            folded = fold_binop(stmt.op, current, value) if found else None
            if folded is None:
                self.bind(name, Opaque(self.src.segment(stmt)), self.src.segment(stmt))
            else:
                self.bind(name, folded, self.src.segment(stmt))
        elif isinstance(stmt, ast.Expr):
            self.eval(stmt.value)
        elif isinstance(stmt, ast.If):
            self.if_statement(stmt)
        elif isinstance(stmt, ast.For):
            self.for_statement(stmt)
        elif isinstance(stmt, (ast.While, ast.AsyncFor)):
            self.while_statement(stmt)
        elif isinstance(stmt, (ast.With, ast.AsyncWith)):
            for item in stmt.items:
                value = self.eval(item.context_expr)
                if item.optional_vars is not None:
                    self.assign(item.optional_vars, value, item.context_expr)
            self.walk_block(stmt.body)
        elif isinstance(stmt, ast.Try):
            self.walk_block(stmt.body)
            self.walk_block(stmt.orelse)
            self.walk_block(stmt.finalbody)
        elif isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
            self.define_function(stmt)
        elif isinstance(stmt, ast.ClassDef):
            self.class_definition(stmt)
        elif isinstance(stmt, ast.Return):
            value = self.eval(stmt.value) if stmt.value is not None else None
            self.frame.return_value = value
            if self.cond_depth == 0:
                self.frame.returned = True
        elif isinstance(stmt, ast.Delete):
            for target in stmt.targets:
                name = self.target_name(target)
                if name:
                    self.unbind(name)
        elif hasattr(ast, "Match") and isinstance(stmt, ast.Match):
            self.cond_depth += 1
            for case in stmt.cases:
                self.walk_block(case.body)
            self.cond_depth -= 1

    def target_name(self, target: ast.AST) -> Optional[str]:
        parts = _dotted(target)
        return ".".join(parts) if parts else None

    def assign(self, target: ast.AST, value: Any, value_node: ast.AST) -> None:
        if isinstance(target, (ast.Tuple, ast.List)):
            elts = target.elts
            if isinstance(value, (tuple, list)) and len(value) == len(elts) and not any(isinstance(e, ast.Starred) for e in elts):
                value_nodes = value_node.elts if isinstance(value_node, (ast.Tuple, ast.List)) and len(value_node.elts) == len(elts) else [None] * len(elts)
                for elt, v, vn in zip(elts, value, value_nodes):
                    self.assign(elt, v, vn if vn is not None else value_node)
            else:
                source = self.src.segment(value_node)
                for elt in elts:
                    inner = elt.value if isinstance(elt, ast.Starred) else elt
                    name = self.target_name(inner)
                    if name:
                        self.bind(name, Opaque(source), source)
            return
        name = self.target_name(target)
        if name is None:
            return
        source = self.src.segment(value_node)
        if isinstance(value, _ModelRef) and self.models[value.index].variable is None:
            self.models[value.index].variable = name
        self.bind(name, value, source)

    def names_assigned(self, stmts: list[ast.stmt]) -> set[str]:
        names = set()
        for stmt in stmts:
            for node in _walk_in_order(stmt):
                if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Lambda)) and node is not stmt:
                    continue
                targets = []
                if isinstance(node, ast.Assign):
                    targets = node.targets
                elif isinstance(node, (ast.AugAssign, ast.AnnAssign)):
                    targets = [node.target]
                elif isinstance(node, (ast.For, ast.AsyncFor)):
                    targets = [node.target]
                for t in targets:
                    for sub in _walk_in_order(t):
                        name = self.target_name(sub) if isinstance(sub, (ast.Name, ast.Attribute)) else None
                        if name:
                            names.add(name)
        return names

    def if_statement(self, stmt: ast.If) -> None:
        test = self.eval(stmt.test)
        if _is_literal(test) and not _contains_opaque(test):
            self.walk_block(stmt.body if test else stmt.orelse)
            return
        if stmt.orelse:
            conflicts = self.names_assigned(stmt.body) & self.names_assigned(stmt.orelse)
            for name in sorted(conflicts):
                self.diag(INFO, "branch-conflict", f"{name!r} assigned in several branches; last assignment wins", stmt)
        self.cond_depth += 1
        self.walk_block(stmt.body)
        self.walk_block(stmt.orelse)
        self.cond_depth -= 1

    def loop_values(self, iterable: ast.expr) -> Optional[list]:
        if (
            isinstance(iterable, ast.Call)
            and isinstance(iterable.func, ast.Name)
            and iterable.func.id == "range"
            and not self.is_shadowed("range")
            and not iterable.keywords
            and 1 <= len(iterable.args) <= 3
        ):
            args = [self.eval(a) for a in iterable.args]
            if all(isinstance(a, int) and not isinstance(a, bool) for a in args):
                if len(args) == 3 and args[2] == 0:
                    return None
                r = range(*args)
                return list(r) if len(r) <= UNROLL_LIMIT else r
            return None
        if isinstance(iterable, (ast.List, ast.Tuple, ast.Name, ast.Attribute)):
            value = self.eval(iterable)
            if isinstance(value, (list, tuple)) and not isinstance(iterable, (ast.Name, ast.Attribute)) or (
                isinstance(value, (list, tuple)) and _is_literal(value)
            ):
                return list(value)
        return None

    def for_statement(self, stmt: ast.For) -> None:
        values = self.loop_values(stmt.iter)
        has_control = any(isinstance(n, (ast.Break, ast.Continue)) for s in stmt.body for n in _walk_in_order(s))
        if isinstance(values, list) and len(values) <= UNROLL_LIMIT:
            if has_control:
                self.diag(WARNING, "loop-control-ignored", "break/continue inside an unrolled loop are ignored", stmt)
            for v in values:
                self.assign(stmt.target, v, stmt.iter)
                self.walk_block(stmt.body)
            self.walk_block(stmt.orelse)
            return
        if values is not None:
            self.diag(WARNING, "loop-bound-exceeded", f"loop of {len(values)} iterations exceeds unroll limit {UNROLL_LIMIT}; body analyzed once", stmt)
        else:
            self.diag(INFO, "loop-not-unrolled", "loop iterable is not a literal range or list; body analyzed once", stmt)
        self.assign(stmt.target, Opaque(self.src.segment(stmt.iter)), stmt.iter)
        self.cond_depth += 1
        self.walk_block(stmt.body)
        self.walk_block(stmt.orelse)
        self.cond_depth -= 1

    def while_statement(self, stmt: ast.stmt) -> None:
        touches_models = any(
            isinstance(n, ast.Call) and isinstance(n.func, ast.Attribute) and n.func.attr in ("add", "compile")
            for s in stmt.body for n in _walk_in_order(s)
        )
        kind = "while loop" if isinstance(stmt, ast.While) else "async for loop"
        if touches_models:
            self.diag(WARNING, "unsupported-pattern", f"model construction inside a {kind} is not analyzed", stmt)
        else:
            self.diag(INFO, "loop-not-analyzed", f"{kind} body is not analyzed", stmt)
        source = self.src.segment(stmt)
        for name in self.names_assigned(stmt.body):
            self.bind(name, Opaque(name), source)

    def define_function(self, node: Union[ast.FunctionDef, ast.AsyncFunctionDef]) -> None:
        prefix = self.frame.scope
        qualname = f"{prefix}.{node.name}" if prefix else node.name
        args = node.args
        defaults = {}
        positional = [*args.posonlyargs, *args.args]
        for arg, default in zip(positional[len(positional) - len(args.defaults):], args.defaults):
            defaults[arg.arg] = self.eval(default)
        for arg, default in zip(args.kwonlyargs, args.kw_defaults):
            if default is not None:
                defaults[arg.arg] = self.eval(default)
        fn = _Function(node, self.frame, qualname, defaults)
        self.frame.functions.append(fn)
        self.bind(node.name, fn, node.name)

    def class_definition(self, node: ast.ClassDef) -> None:
        for base in node.bases:
            qualified = self.imports.resolve(base)
            parts = _dotted(base)
            last = parts[-1] if parts else None
            keras_base = (qualified is not None and _is_keras(qualified)) or (qualified is None and last in ("Model", "Layer"))
            if keras_base and last in ("Model", "Layer", "Sequential"):
                self.diag(WARNING, "unsupported-pattern", f"subclassed model/layer {node.name!r} is not analyzed as a model", node)
        prefix = self.frame.scope
        qualname = f"{prefix}.{node.name}" if prefix else node.name
        class_frame = _Frame(qualname, self.frame)
        self.register_scope(class_frame)
        instance: dict = {}
        self.frames.append(class_frame)
        try:
            for stmt in node.body:
                if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    self.define_function(stmt)
                    class_frame.functions[-1].instance = instance
                else:
                    self.statement(stmt)
            # methods do not see class-body names
            for fn in class_frame.functions:
                fn.frame = class_frame.parent
            self.walk_uncalled(class_frame)
        finally:
            self.frames.pop()
        self.bind(node.name, Opaque(node.name), node.name)

    def register_scope(self, frame: _Frame) -> None:
        self.env_scopes[frame.scope] = frame.bindings
        self.env_sources[frame.scope] = frame.sources

    def invoke(self, fn: _Function, args: list, kwargs: dict, call: Optional[ast.Call], uncalled: bool = False) -> Any:
        if fn in self.call_stack or len(self.call_stack) >= INLINE_DEPTH_LIMIT:
            if call is not None:
                self.diag(INFO, "inline-limit", f"call to {fn.qualname} not inlined (recursion or depth limit)", call)
            return Opaque(self.src.segment(call)) if call is not None else None
        fn.called = True
        node = fn.node
        params = [*node.args.posonlyargs, *node.args.args]
        self_name = params[0].arg if fn.instance is not None and params else None
        frame = _Frame(fn.qualname, fn.frame, self_name=self_name, instance=fn.instance)
        self.register_scope(frame)
        for i, param in enumerate(params):
            if i < len(args):
                value = args[i]
            elif param.arg in kwargs:
                value = kwargs[param.arg]
            elif param.arg in fn.defaults:
                value = fn.defaults[param.arg]
            else:
                value = Opaque(param.arg)
            frame.bindings[param.arg] = value
            frame.sources[param.arg] = param.arg
        for param in node.args.kwonlyargs:
            value = kwargs.get(param.arg, fn.defaults.get(param.arg, Opaque(param.arg)))
            frame.bindings[param.arg] = value
            frame.sources[param.arg] = param.arg
        for extra in (node.args.vararg, node.args.kwarg):
            if extra is not None:
                frame.bindings[extra.arg] = Opaque(extra.arg)
                frame.sources[extra.arg] = extra.arg
        self.frames.append(frame)
        self.call_stack.append(fn)
        saved_depth = self.cond_depth
        self.cond_depth = 0
        try:
            self.walk_block(node.body)
            self.walk_uncalled(frame)
        finally:
            self.cond_depth = saved_depth
            self.call_stack.pop()
            self.frames.pop()
        return frame.return_value

    # -- expressions ------------------------------------------------------

    def eval(self, node: Optional[ast.AST]) -> Any:
        if node is None:
            return None
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (str, int, float, bool)) or node.value is None:
                if isinstance(node.value, int) and not isinstance(node.value, bool) and abs(node.value) > INT_LIMIT:
                    return Opaque(self.src.segment(node))
                return node.value
            return Opaque(self.src.segment(node))
        if isinstance(node, ast.UnaryOp):
            operand = self.eval(node.operand)
            if isinstance(node.op, (ast.USub, ast.UAdd)) and _numeric(operand):
                return -operand if isinstance(node.op, ast.USub) else operand
            return Opaque(self.src.segment(node))
        if isinstance(node, ast.BinOp):
            left = self.eval(node.left)
            right = self.eval(node.right)
            folded = fold_binop(node.op, left, right)
            return Opaque(self.src.segment(node)) if folded is None else folded
        if isinstance(node, (ast.Name, ast.Attribute)):
            return self.eval_reference(node)
        if isinstance(node, (ast.Tuple, ast.List)):
            values = []
            for elt in node.elts:
                if isinstance(elt, ast.Starred):
                    values.append(Opaque(self.src.segment(elt)))
                else:
                    values.append(self.eval(elt))
            return tuple(values) if isinstance(node, ast.Tuple) else values
        if isinstance(node, ast.Dict):
            out = {}
            for k, v in zip(node.keys, node.values):
                key = self.eval(k) if k is not None else None
                if not isinstance(key, (str, int, float, bool)):
                    for value_node in node.values:
                        self.eval(value_node)
                    return Opaque(self.src.segment(node))
                out[key] = self.eval(v)
            return out
        if isinstance(node, ast.Call):
            return self.eval_call(node)
        if isinstance(node, (ast.ListComp, ast.GeneratorExp, ast.SetComp, ast.DictComp)):
            return Opaque(self.src.segment(node))
        if isinstance(node, ast.Subscript):
            self.eval(node.value)
            return Opaque(self.src.segment(node))
        if isinstance(node, ast.expr):
            for child in ast.iter_child_nodes(node):
                if isinstance(child, ast.Call):
                    self.eval(child)
            return Opaque(self.src.segment(node))
        return Opaque(self.src.segment(node))

    def eval_reference(self, node: ast.AST) -> Any:
        name = self.target_name(node)
        if name is not None:
            found, value = self.lookup(name)
            if found:
                return value
        qualified = self.qualify(node)
        if qualified and _is_keras(qualified):
            last = qualified.rsplit(".", 1)[-1]
            parts = qualified.split(".")
            if "losses" in parts or "metrics" in parts:
                loss = self.vocab.loss_term(last) if last else None
                if loss is not None:
                    return _LossObj(loss.canonical_name)
            if last[:1].isupper():
                return _ClassRef(self.src.segment(node), qualified)
        return Opaque(self.src.segment(node))

    def qualify(self, func: ast.AST) -> Optional[str]:
        """Qualified name of a callee if it refers to an import; None if locally bound or unknown."""
        parts = _dotted(func)
        if parts is None:
            return None
        found, value = self.lookup(parts[0])
        if found:
            return value.qualified if isinstance(value, _ClassRef) and len(parts) == 1 else None
        qualified = self.imports.resolve(func)
        if qualified is not None:
            return qualified
        if len(parts) == 1:
            star = self.imports.keras_star_module()
            if star is not None:
                return f"{star}.{parts[0]}"
        return None

    def callee_name(self, func: ast.AST) -> Optional[str]:
        """Constructor name of a callee with import aliases undone."""
        parts = _dotted(func)
        if parts is None:
            return None
        qualified = self.qualify(func)
        return (qualified or parts[-1]).rsplit(".", 1)[-1]

    def callee_kind(self, func: ast.AST) -> tuple[Optional[str], Optional[str]]:
        """Classify a callee as (kind, name); kind in sequential/model/input/layer/optimizer/loss."""
        parts = _dotted(func)
        if parts is None:
            return None, None
        last = parts[-1]
        qualified = self.qualify(func)
        if qualified is None and self.is_shadowed(parts[0]):
            return None, None
        if qualified is not None:
            if not _is_keras(qualified):
                return None, None
            module_parts = qualified.split(".")[:-1]
            last = qualified.rsplit(".", 1)[-1]
        else:
            if parts[0] in self.imports.names:
                return None, None
            module_parts = None
        if last == "Sequential":
            return "sequential", last
        if last in ("Model", "Functional"):
            return "model", last
        if last == "Input":
            return "input", last
        layer = self.vocab.resolve_layer_class(last) if last else None
        if isinstance(layer, LayerClass):
            return "layer", last
        if self.vocab.resolve_optimizer(last) is not None and last[:1].isupper():
            return "optimizer", last
        if self.vocab.loss_term(last) is not None and (module_parts is None or "losses" in module_parts or last[:1].isupper()):
            return "loss", last
        if module_parts is not None and "layers" in module_parts and last[:1].isupper():
            return "layer", last
        return None, None

    def layer_spec(self, call: ast.Call, name: str) -> _LayerSpec:
        positional = []
        for arg in call.args:
            if isinstance(arg, ast.Starred):
                positional.append(Opaque(self.src.segment(arg)))
                continue
            value = self.eval(arg)
            positional.append(value if _is_literal(value) else Opaque(self.src.segment(arg)))
        keywords = []
        for kw in call.keywords:
            value = self.eval(kw.value)
            if not _is_literal(value):
                value = Opaque(self.src.segment(kw.value))
            keywords.append((kw.arg if kw.arg is not None else "**", value))
        return _LayerSpec(self.vocab.resolve_layer_class(name), tuple(positional), tuple(keywords), call.lineno, call.col_offset + 1)

    def tensor_inputs(self, value: Any) -> tuple[int, ...]:
        if isinstance(value, _Tensor):
            return (value.app,)
        if isinstance(value, (list, tuple)):
            out = []
            for v in value:
                out.extend(self.tensor_inputs(v))
            return tuple(out)
        if isinstance(value, dict):
            out = []
            for v in value.values():
                out.extend(self.tensor_inputs(v))
            return tuple(out)
        return ()

    def apply_layer(self, spec: _LayerSpec, inputs: tuple[int, ...]) -> _Tensor:
        self.apps.append(_App(spec, inputs))
        return _Tensor(len(self.apps) - 1)

    def new_model(self, kind: str, call: ast.Call) -> _Model:
        model = _Model(len(self.models), kind, None, call.lineno, call.col_offset + 1)
        self.models.append(model)
        return model

    def eval_call(self, call: ast.Call) -> Any:
        func = call.func
        # method calls on models
        if isinstance(func, ast.Attribute):
            receiver = self.eval(func.value) if _dotted(func.value) is not None or isinstance(func.value, ast.Call) else None
            if isinstance(receiver, _ModelRef):
                return self.model_method(self.models[receiver.index], func.attr, call)
            if func.attr == "add" and receiver is not None and not isinstance(receiver, _REF_TYPES) and len(call.args) == 1:
                arg = call.args[0]
                if isinstance(arg, ast.Call):
                    kind, _ = self.callee_kind(arg.func)
                    if kind == "layer":
                        self.diag(WARNING, "unsupported-pattern", f"layer added to {self.src.segment(func.value)!r}, a model not constructed in this file", call)
        # layer object application, e.g. Dense(3)(x) or shared(x)
        if isinstance(func, ast.Call) or (_dotted(func) is not None and self.lookup(self.target_name(func))[0]):
            callee = self.eval(func)
            if isinstance(callee, _LayerSpec):
                inputs = self.tensor_inputs([self.eval(a) for a in call.args] + [self.eval(k.value) for k in call.keywords])
                return self.apply_layer(callee, inputs)
            if isinstance(callee, _Function):
                return self.call_function(callee, call)
            if isinstance(func, ast.Call) and isinstance(func.func, (ast.Name, ast.Attribute)) and callee is not None and isinstance(callee, Opaque):
                args = [self.eval(a) for a in call.args]
                inputs = self.tensor_inputs(args)
                if inputs:
                    return self.apply_layer(self.layer_spec(func, self.callee_name(func.func)), inputs)
            for a in call.args:
                self.eval(a)
            return Opaque(self.src.segment(call))

        kind, name = self.callee_kind(func)
        if kind == "sequential":
            return self.sequential(call)
        if kind == "model":
            return self.functional_model(call)
        if kind == "input":
            spec = self.layer_spec(call, "InputLayer")
            return self.apply_layer(spec, ())
        if kind == "layer":
            if name[:1].islower():
                # functional merge helpers: concatenate([a, b], axis=-1)
                first = self.eval(call.args[0]) if call.args else None
                rest = ast.Call(func=call.func, args=call.args[1:], keywords=call.keywords)
                ast.copy_location(rest, call)
                layer_class = self.vocab.resolve_layer_class(name)
                spec = self.layer_spec(rest, layer_class.canonical_name if isinstance(layer_class, LayerClass) else name)
                return self.apply_layer(spec, self.tensor_inputs(first))
            return self.layer_spec(call, name)
        if kind == "optimizer":
            opt = self.vocab.resolve_optimizer(name)
            keywords = []
            for kw in call.keywords:
                value = self.eval(kw.value)
                keywords.append((kw.arg or "**", value if _is_literal(value) else Opaque(self.src.segment(kw.value))))
            return _OptimizerObj(opt.canonical_name, tuple(keywords))
        if kind == "loss":
            return _LossObj(self.vocab.loss_term(name).canonical_name)
        # unknown callee: evaluate arguments for their side effects on models
        for a in call.args:
            self.eval(a)
        for k in call.keywords:
            self.eval(k.value)
        return Opaque(self.src.segment(call))

    def call_function(self, fn: _Function, call: ast.Call) -> Any:
        args = []
        for a in call.args:
            if isinstance(a, ast.Starred):
                args.append(Opaque(self.src.segment(a)))
            else:
                args.append(self.eval(a))
        kwargs = {k.arg: self.eval(k.value) for k in call.keywords if k.arg is not None}
        return self.invoke(fn, args, kwargs, call)

    def forced_layer(self, node: ast.AST, value: Any, model: _Model) -> Optional[_LayerSpec]:
        """Interpret an argument of ``.add`` or an element of a Sequential list as a layer."""
        if isinstance(value, _LayerSpec):
            return value
        if isinstance(value, _Tensor):
            spec = self.apps[value.app].spec
            if not self.apps[value.app].inputs and isinstance(spec.layer_class, LayerClass) and spec.layer_class.canonical_name == "InputLayer":
                return spec
        if isinstance(node, ast.Call) and isinstance(value, Opaque):
            name = self.callee_name(node.func)
            if name is not None:
                return self.layer_spec(node, name)
        if isinstance(node, (ast.ListComp, ast.GeneratorExp)):
            self.diag(WARNING, "unsupported-pattern", "comprehension-built layer list is not analyzed", node, model)
            return None
        self.diag(WARNING, "unresolved-layer", f"cannot resolve {self.src.segment(node)!r} to a layer", node, model)
        return None

    def add_layer(self, model: _Model, spec: _LayerSpec, node: ast.AST) -> None:
        if self.cond_depth > 0:
            self.diag(WARNING, "conditional-layer", f"layer {spec.layer_class.canonical_name if isinstance(spec.layer_class, LayerClass) else spec.layer_class.name} added under a non-static condition or loop", node, model)
        model.layers.append(spec)

    def sequential(self, call: ast.Call) -> _ModelRef:
        model = self.new_model("sequential", call)
        layers_node = call.args[0] if call.args else next((k.value for k in call.keywords if k.arg == "layers"), None)
        if layers_node is not None:
            value = self.eval(layers_node)
            if isinstance(layers_node, (ast.ListComp, ast.GeneratorExp)):
                self.diag(WARNING, "unsupported-pattern", "comprehension-built layer list is not analyzed", layers_node, model)
            elif isinstance(value, (list, tuple)):
                element_nodes = layers_node.elts if isinstance(layers_node, (ast.List, ast.Tuple)) and len(layers_node.elts) == len(value) else [layers_node] * len(value)
                for elt_node, v in zip(element_nodes, value):
                    spec = self.forced_layer(elt_node, v, model)
                    if spec is not None:
                        self.add_layer(model, spec, elt_node)
            elif value is not None:
                self.diag(WARNING, "unresolved-layer", f"Sequential layer list {self.src.segment(layers_node)!r} is not static", layers_node, model)
        return _ModelRef(model.index)

    def functional_model(self, call: ast.Call) -> _ModelRef:
        model = self.new_model("functional", call)
        kwargs = {k.arg: k.value for k in call.keywords if k.arg}
        inputs_node = kwargs.get("inputs", kwargs.get("input", call.args[0] if call.args else None))
        outputs_node = kwargs.get("outputs", kwargs.get("output", call.args[1] if len(call.args) > 1 else None))
        if inputs_node is not None:
            self.eval(inputs_node)
        outputs = self.tensor_inputs(self.eval(outputs_node)) if outputs_node is not None else ()
        if not outputs:
            self.diag(WARNING, "unresolved-graph", "model outputs do not resolve to layer applications", call, model)
            return _ModelRef(model.index)
        needed = set()
        stack = list(outputs)
        while stack:
            app = stack.pop()
            if app in needed:
                continue
            needed.add(app)
            stack.extend(self.apps[app].inputs)
        for app in sorted(needed):
            model.layers.append(self.apps[app].spec)
        return _ModelRef(model.index)

    def model_method(self, model: _Model, method: str, call: ast.Call) -> Any:
        if method == "add":
            if call.args:
                node = call.args[0]
                spec = self.forced_layer(node, self.eval(node), model)
                if spec is not None:
                    self.add_layer(model, spec, node)
            return None
        if method == "pop":
            if model.layers:
                model.layers.pop()
            return None
        if method == "compile":
            optimizer, loss, diags = self.compile_args(call)
            model.optimizer, model.loss = optimizer, loss
            model.diagnostics.extend(diags)
            return None
        for a in call.args:
            self.eval(a)
        return Opaque(self.src.segment(call))

    def compile_args(self, call: ast.Call) -> tuple[Optional[str], Optional[str], list[Diagnostic]]:
        kwargs = {k.arg: k.value for k in call.keywords if k.arg}
        opt_node = kwargs.get("optimizer", call.args[0] if call.args else None)
        loss_node = kwargs.get("loss", call.args[1] if len(call.args) > 1 else None)
        diags: list[Diagnostic] = []

        def where(node):
            return node.lineno, node.col_offset + 1

        optimizer = loss = None
        if opt_node is not None:
            value = self.eval(opt_node)
            if isinstance(value, str):
                optimizer = value
            elif isinstance(value, _OptimizerObj):
                optimizer = value.name
                if value.keywords:
                    rendered = ", ".join(f"{k}={render_value(v)}" for k, v in value.keywords)
                    diags.append(Diagnostic(INFO, "optimizer-config", f"{value.name} keywords: {rendered}", *where(opt_node)))
            else:
                diags.append(Diagnostic(WARNING, "unresolved-optimizer", f"optimizer {self.src.segment(opt_node)!r} is not static", *where(opt_node)))
        if loss_node is not None:
            value = self.eval(loss_node)
            if isinstance(value, str):
                loss = value
            elif isinstance(value, _LossObj):
                loss = value.name
            else:
                diags.append(Diagnostic(WARNING, "unresolved-loss", f"loss {self.src.segment(loss_node)!r} is not static", *where(loss_node)))
        return optimizer, loss, diags


def render_value(value: Any) -> str:
    """Text form of a literal value: strings raw, Opaque as source, everything else as JSON."""
    if isinstance(value, str):
        return value
    if isinstance(value, Opaque):
        return value.source
    return json.dumps(_jsonable(value), ensure_ascii=False, sort_keys=True)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Opaque):
        return value.source
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, float) and (value != value or value in (float("inf"), float("-inf"))):
        return repr(value)
    return value


def render_keywords(keywords: dict) -> str:
    """Canonical dictionary rendering of layer keywords (sorted keys)."""
    return json.dumps({str(k): _jsonable(v) for k, v in keywords.items()}, ensure_ascii=False, sort_keys=True)


# --------------------------------------------------------------------------
# public operations


def _as_tree(tree_or_text: Union[SyntaxTree, str]) -> SyntaxTree:
    if isinstance(tree_or_text, SyntaxTree):
        return tree_or_text
    parsed = parse_subject_source(tree_or_text)
    if isinstance(parsed, ParseFailure):
        raise ValueError(f"cannot parse source: {parsed.message}")
    return parsed


def build_static_environment(tree: Union[SyntaxTree, str]) -> StaticEnv:
    walker = _Walker(_as_tree(tree))
    try:
        walker.run()
    except RecursionError:
        pass
    return walker.static_env()


def _env_walker(env: StaticEnv, scope: str, imports: Optional[ImportTable] = None) -> _Walker:
    walker = _Walker(SyntaxTree(ast.Module(body=[], type_ignores=[]), env.source), imports=imports or ImportTable())
    frame = walker.module_frame
    frame.bindings.update(env.scopes.get("", {}))
    if scope:
        parts = scope.split(".")
        for i in range(1, len(parts) + 1):
            name = ".".join(parts[:i])
            child = _Frame(name, frame)
            child.bindings.update(env.scopes.get(name, {}))
            walker.frames.append(child)
            frame = child
    return walker


def resolve_expression(node: ast.AST, env: StaticEnv, scope: str = "") -> LiteralValue:
    """Fold ``node`` under ``env``; anything non-static becomes Opaque with its source text."""
    walker = _env_walker(env, scope)
    value = walker.eval(node)
    if _is_literal(value):
        return value
    return Opaque(walker.src.segment(node))


def extract_layer_call(call: ast.Call, env: StaticEnv, imports: ImportTable, scope: str = "") -> Union[ExtractedLayer, NotALayer]:
    if not isinstance(call, ast.Call):
        raise TypeError("extract_layer_call expects an ast.Call node")
    walker = _env_walker(env, scope, imports)
    kind, name = walker.callee_kind(call.func)
    if kind != "layer" and not (kind == "input"):
        return NOT_A_LAYER
    spec = walker.layer_spec(call, "InputLayer" if kind == "input" else name)
    return ExtractedLayer(0, spec.layer_class, spec.positional, dict(spec.keywords))


def extract_compile_config(tree: SyntaxTree, env: StaticEnv, imports: ImportTable, model_var: str) -> tuple[Optional[str], Optional[str], list[Diagnostic]]:
    """Optimizer and loss of the last ``<model_var>.compile(...)`` call in the file."""
    last = None
    for node in _walk_in_order(tree.module):
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Attribute)
            and node.func.attr == "compile"
            and _dotted(node.func.value) is not None
            and ".".join(_dotted(node.func.value)) == model_var
        ):
            last = node
    if last is None:
        return None, None, []
    walker = _env_walker(env, "", imports)
    walker.src = _Source(tree.source)
    return walker.compile_args(last)


def extract_file(text: Union[str, bytes], source_file: str, vocab: Optional[Vocabulary] = None) -> FileExtraction:
    """Extract every model in one file, keeping file-level diagnostics and parse failures."""
    tree = parse_subject_source(text)
    if isinstance(tree, ParseFailure):
        return FileExtraction(source_file, [], [tree.diagnostic()], tree)
    walker = _Walker(tree, source_file, vocab)
    try:
        walker.run()
    except RecursionError:
        walker.diag(ERROR, "analysis-too-deep", "source nesting exceeds analysis depth")
        return FileExtraction(source_file, [], walker.diagnostics)
    return FileExtraction(source_file, walker.finish_models(), walker.diagnostics)


def extract_models(text: Union[str, bytes], source_file: str, vocab: Optional[Vocabulary] = None) -> list[ExtractedModel]:
    return extract_file(text, source_file, vocab).models
