"""RDF term model, an in-memory triple set, and a deterministic Turtle codec.

The writer emits a canonical layout: prefixes sorted by name, triples sorted
by the N-Triples form of (subject, predicate, object), grouped per subject.
The reader accepts that layout plus the usual hand-written Turtle forms
(prefixed names, ``a``, ``;``/``,`` lists, short and long strings, numeric
and boolean shorthands).  Blank nodes and collections are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Union
from urllib.parse import urlsplit

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
OWL = "http://www.w3.org/2002/07/owl#"
DCTERMS = "http://purl.org/dc/terms/"
DOAP = "http://usefulinc.com/ns/doap#"
VOID = "http://rdfs.org/ns/void#"
CC = "http://creativecommons.org/ns#"
PIM = "http://www.w3.org/2000/10/swap/pim/doc#"
NNO = "https://w3id.org/nno/ontology#"
NNO_DATA = "https://w3id.org/nno/data#"

RDF_TYPE = RDF + "type"
XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"
XSD_DATETIME = XSD + "dateTime"

STANDARD_PREFIXES = {
    "cc": CC,
    "dcterms": DCTERMS,
    "doap": DOAP,
    "nno": NNO,
    "rdfs": RDFS,
    "void": VOID,
    "xsd": XSD,
}

_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|\\^`]')
_LANG_TAG = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")
_DATETIME = re.compile(
    r"^-?\d{4,}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})?$"
)


class IRI(str):
    """An absolute http(s) IRI.  Compared by exact string equality."""

    __slots__ = ()

    def __new__(cls, value: str) -> "IRI":
        if isinstance(value, IRI):
            return value
        if not isinstance(value, str) or _IRI_FORBIDDEN.search(value):
            raise ValueError(f"invalid IRI: {value!r}")
        parts = urlsplit(value)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"IRI must be absolute http(s): {value!r}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"IRI({str.__repr__(self)})"


def is_iri(value: str) -> bool:
    try:
        IRI(value)
    except ValueError:
        return False
    return True


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str
    datatype: Optional[IRI] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.datatype is not None and self.language is not None:
            raise ValueError("literal cannot have both datatype and language tag")
        if self.datatype is not None and not isinstance(self.datatype, IRI):
            object.__setattr__(self, "datatype", IRI(self.datatype))
        if self.datatype == XSD_STRING:
            # "x" and "x"^^xsd:string are the same RDF term
            object.__setattr__(self, "datatype", None)
        if self.language is not None:
            if not _LANG_TAG.match(self.language):
                raise ValueError(f"invalid language tag: {self.language!r}")
            object.__setattr__(self, "language", self.language.lower())
        if self.datatype == XSD_INTEGER and not re.fullmatch(r"[+-]?\d+", self.lexical):
            raise ValueError(f"not an integer lexical form: {self.lexical!r}")
        if self.datatype == XSD_DATETIME and not _DATETIME.match(self.lexical):
            raise ValueError(f"not a dateTime lexical form: {self.lexical!r}")

    @classmethod
    def integer(cls, value: int) -> "Literal":
        return cls(str(int(value)), IRI(XSD_INTEGER))

    @classmethod
    def datetime(cls, value: str) -> "Literal":
        return cls(value, IRI(XSD_DATETIME))

    def to_python(self):
        if self.datatype == XSD_INTEGER:
            return int(self.lexical)
        if self.datatype == XSD_BOOLEAN:
            return self.lexical == "true"
        if self.datatype in (XSD_DECIMAL, XSD_DOUBLE):
            return float(self.lexical)
        return self.lexical


Term = Union[IRI, Literal]


class Triple(NamedTuple):
    subject: IRI
    predicate: IRI
    object: Term


def nt_term(term: Term) -> str:
    """N-Triples form of a term; also the canonical sort key."""
    if isinstance(term, IRI):
        return f"<{term}>"
    text = f'"{escape_string(term.lexical)}"'
    if term.language:
        return f"{text}@{term.language}"
    if term.datatype:
        return f"{text}^^<{term.datatype}>"
    return text


def triple_key(t: Triple) -> tuple[str, str, str]:
    return (nt_term(t.subject), nt_term(t.predicate), nt_term(t.object))


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t", "\b": "\\b", "\f": "\\f"}


def escape_string(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


@dataclass
class KnowledgeGraph:
    triples: set[Triple] = field(default_factory=set)
    prefixes: dict[str, str] = field(default_factory=lambda: dict(STANDARD_PREFIXES))

    def add(self, subject: str, predicate: str, obj: Term) -> None:
        if not isinstance(obj, (IRI, Literal)):
            raise TypeError(f"object must be IRI or Literal, got {type(obj).__name__}")
        self.triples.add(Triple(IRI(subject), IRI(predicate), obj))

    def update(self, triples: Iterable[Triple]) -> None:
        for t in triples:
            self.add(*t)

    def union(self, other: "KnowledgeGraph") -> "KnowledgeGraph":
        prefixes = dict(self.prefixes)
        for name, ns in other.prefixes.items():
            prefixes.setdefault(name, ns)
        return KnowledgeGraph(self.triples | other.triples, prefixes)

    __or__ = union

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self.triples, key=triple_key))

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self.triples

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self.triples == other.triples

    def match(self, subject=None, predicate=None, obj=None) -> Iterator[Triple]:
        for t in self.triples:
            if subject is not None and t.subject != subject:
                continue
            if predicate is not None and t.predicate != predicate:
                continue
            if obj is not None and t.object != obj:
                continue
            yield t

    def objects(self, subject, predicate) -> list[Term]:
        return sorted((t.object for t in self.match(subject, predicate)), key=nt_term)

    def value(self, subject, predicate) -> Optional[Term]:
        objs = self.objects(subject, predicate)
        return objs[0] if objs else None

    def subjects(self, predicate=None, obj=None) -> list[IRI]:
        return sorted({t.subject for t in self.match(None, predicate, obj)})

    def by_subject(self) -> dict[IRI, dict[IRI, list[Term]]]:
        """subject -> predicate -> objects (sorted), built in one pass."""
        index: dict[IRI, dict[IRI, list[Term]]] = {}
        for t in self.triples:
            index.setdefault(t.subject, {}).setdefault(t.predicate, []).append(t.object)
        for preds in index.values():
            for objs in preds.values():
                objs.sort(key=nt_term)
        return index


# --------------------------------------------------------------------------
# writer

_PN_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


def _compact(iri: str, by_namespace: list[tuple[str, str]]) -> str:
    for ns, prefix in by_namespace:
        if iri.startswith(ns):
            local = iri[len(ns):]
            if local == "" or _PN_LOCAL.match(local):
                return f"{prefix}:{local}"
    return f"<{iri}>"


def _write_term(term: Term, by_namespace) -> str:
    if isinstance(term, IRI):
        return _compact(term, by_namespace)
    text = f'"{escape_string(term.lexical)}"'
    if term.language:
        return f"{text}@{term.language}"
    if term.datatype:
        return f"{text}^^{_compact(term.datatype, by_namespace)}"
    return text


def serialize_turtle(g: KnowledgeGraph) -> str:
    prefixes = sorted(g.prefixes.items())
    # longest namespace first so nested namespaces compact to the tighter prefix
    by_namespace = sorted(((ns, p) for p, ns in prefixes), key=lambda x: (-len(x[0]), x[1]))
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in prefixes]
    current = None
    for t in sorted(g.triples, key=triple_key):
        pred = "a" if t.predicate == RDF_TYPE else _compact(t.predicate, by_namespace)
        obj = _write_term(t.object, by_namespace)
        if t.subject != current:
            if current is not None:
                lines[-1] += " ."
            lines.append("")
            lines.append(_compact(t.subject, by_namespace))
            current = t.subject
        else:
            lines[-1] += " ;"
        lines.append(f"    {pred} {obj}")
    if current is not None:
        lines[-1] += " ."
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# reader


class TurtleSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# prefixed names per the Turtle grammar (PN_PREFIX ':' PN_LOCAL)
_PN_BASE = (
    "A-Za-z\u00C0-\u00D6\u00D8-\u00F6\u00F8-\u02FF\u0370-\u037D\u037F-\u1FFF\u200C-\u200D"
    "\u2070-\u218F\u2C00-\u2FEF\u3001-\uD7FF\uF900-\uFDCF\uFDF0-\uFFFD\U00010000-\U000EFFFF"
)
_PN_CHARS = _PN_BASE + "_\\-0-9\u00B7\u0300-\u036F\u203F-\u2040"
_PLX = r"%[0-9A-Fa-f]{2}|\\[_~.!$&'()*+,;=/?#@%-]"
_PN_PREFIX = f"[{_PN_BASE}](?:[{_PN_CHARS}.]*[{_PN_CHARS}])?"
_PN_LOCAL_RE = f"(?:[{_PN_BASE}_:0-9]|{_PLX})(?:(?:[{_PN_CHARS}.:]|{_PLX})*(?:[{_PN_CHARS}:]|{_PLX}))?"
_PNAME = f"(?:{_PN_PREFIX})?:(?:{_PN_LOCAL_RE})?"

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r'<(?:[^<>"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*>'),
    ("LONG_STRING", r'"""(?:[^"\\]|\\.|"(?!""))*"""' + r"|'''(?:[^'\\]|\\.|'(?!''))*'''"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"' + r"|'(?:[^'\\\n\r]|\\.)*'"),
    ("AT_KW", r"@(?:prefix|base)\b"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DTYPE", r"\^\^"),
    ("NUMBER", r"[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+|\d*\.\d+|\d+)"),
    ("SPARQL_KW", r"(?:PREFIX|BASE|prefix|base)(?=\s)"),
    ("PNAME", _PNAME),
    ("BOOL", r"(?:true|false)\b"),
    ("A", r"a(?=[\s<\"'])"),
    ("PUNCT", r"[.;,]"),
    ("BNODE", r"_:|\[|\("),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))

_STRING_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


class _Token(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise TurtleSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "BNODE":
            raise TurtleSyntaxError("blank nodes and collections are not supported", line, col)
        if kind not in ("WS", "COMMENT"):
            tokens.append(_Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    return tokens


def _unescape_string(body: str, tok: _Token) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1] if i + 1 < len(body) else ""
        if nxt in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            digits = body[i + 2:i + 2 + width]
            if len(digits) != width or not re.fullmatch(r"[0-9A-Fa-f]+", digits):
                raise TurtleSyntaxError("bad unicode escape", tok.line, tok.col)
            out.append(chr(int(digits, 16)))
            i += 2 + width
        else:
            raise TurtleSyntaxError(f"bad escape \\{nxt}", tok.line, tok.col)
    return "".join(out)


def _unescape_iri(body: str, tok: _Token) -> str:
    def repl(m):
        return chr(int(m.group(1) or m.group(2), 16))

    return re.sub(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})", repl, body)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.prefixes: dict[str, str] = {}
        self.base: Optional[str] = None
        self.graph = KnowledgeGraph(prefixes={})
        self._eof_line = text.count("\n") + 1

    def error(self, message: str, tok: Optional[_Token] = None) -> TurtleSyntaxError:
        tok = tok or self.peek()
        if tok is None:
            return TurtleSyntaxError(message, self._eof_line, 1)
        return TurtleSyntaxError(message, tok.line, tok.col)

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return tok

    def expect_punct(self, ch: str) -> None:
        tok = self.next()
        if tok.kind != "PUNCT" or tok.text != ch:
            raise self.error(f"expected {ch!r}, found {tok.text!r}", tok)

    def parse(self) -> KnowledgeGraph:
        while self.peek() is not None:
            tok = self.peek()
            if tok.kind == "AT_KW":
                self.directive(tok, sparql=False)
            elif tok.kind == "SPARQL_KW":
                self.directive(tok, sparql=True)
            else:
                self.triples()
        self.graph.prefixes = dict(self.prefixes)
        return self.graph

    def directive(self, tok: _Token, sparql: bool) -> None:
        self.next()
        keyword = tok.text.lstrip("@").lower()
        if keyword == "prefix":
            name_tok = self.next()
            if name_tok.kind != "PNAME" or not name_tok.text.endswith(":") or name_tok.text.count(":") != 1:
                raise self.error("malformed @prefix: expected 'name:'", tok)
            iri_tok = self.next()
            if iri_tok.kind != "IRIREF":
                raise self.error("malformed @prefix: expected <namespace>", tok)
            self.prefixes[name_tok.text[:-1]] = self.resolve(_unescape_iri(iri_tok.text[1:-1], iri_tok), iri_tok)
        else:
            iri_tok = self.next()
            if iri_tok.kind != "IRIREF":
                raise self.error("malformed @base: expected <iri>", tok)
            self.base = self.resolve(_unescape_iri(iri_tok.text[1:-1], iri_tok), iri_tok)
        if not sparql:
            nxt = self.peek()
            if nxt is None or nxt.kind != "PUNCT" or nxt.text != ".":
                raise self.error(f"malformed @{keyword}: missing '.'", tok)
            self.next()

    def resolve(self, iri: str, tok: _Token) -> str:
        if urlsplit(iri).scheme:
            return iri
        if self.base is None:
            raise self.error(f"relative IRI <{iri}> without @base", tok)
        from urllib.parse import urljoin

        return urljoin(self.base, iri)

    def iri(self, tok: _Token) -> IRI:
        if tok.kind == "IRIREF":
            value = self.resolve(_unescape_iri(tok.text[1:-1], tok), tok)
        elif tok.kind == "PNAME":
            prefix, _, local = tok.text.partition(":")
            if prefix not in self.prefixes:
                raise self.error(f"undeclared prefix {prefix!r}", tok)
            local = re.sub(r"\\(.)", r"\1", local)
            value = self.prefixes[prefix] + local
        else:
            raise self.error(f"expected IRI, found {tok.text!r}", tok)
        try:
            return IRI(value)
        except ValueError as exc:
            raise self.error(str(exc), tok) from None

    def triples(self) -> None:
        subject = self.iri(self.next())
        self.predicate_object_list(subject)
        self.expect_punct(".")

    def predicate_object_list(self, subject: IRI) -> None:
        while True:
            tok = self.next()
            predicate = IRI(RDF_TYPE) if tok.kind == "A" else self.iri(tok)
            while True:
                self.graph.add(subject, predicate, self.object())
                nxt = self.peek()
                if nxt is not None and nxt.kind == "PUNCT" and nxt.text == ",":
                    self.next()
                    continue
                break
            nxt = self.peek()
            if nxt is not None and nxt.kind == "PUNCT" and nxt.text == ";":
                while nxt is not None and nxt.kind == "PUNCT" and nxt.text == ";":
                    self.next()
                    nxt = self.peek()
                if nxt is None or (nxt.kind == "PUNCT" and nxt.text == "."):
                    return
                continue
            return

    def object(self) -> Term:
        tok = self.next()
        if tok.kind in ("IRIREF", "PNAME"):
            return self.iri(tok)
        if tok.kind in ("STRING", "LONG_STRING"):
            quote = 3 if tok.kind == "LONG_STRING" else 1
            lexical = _unescape_string(tok.text[quote:-quote], tok)
            nxt = self.peek()
            try:
                if nxt is not None and nxt.kind == "LANGTAG":
                    self.next()
                    return Literal(lexical, language=nxt.text[1:])
                if nxt is not None and nxt.kind == "DTYPE":
                    self.next()
                    return Literal(lexical, self.iri(self.next()))
                return Literal(lexical)
            except ValueError as exc:
                raise self.error(str(exc), tok) from None
        if tok.kind == "NUMBER":
            text = tok.text
            if re.fullmatch(r"[+-]?\d+", text):
                return Literal(text, IRI(XSD_INTEGER))
            if "e" in text.lower():
                return Literal(text, IRI(XSD_DOUBLE))
            return Literal(text, IRI(XSD_DECIMAL))
        if tok.kind == "BOOL":
            return Literal(tok.text, IRI(XSD_BOOLEAN))
        raise self.error(f"expected object, found {tok.text!r}", tok)


def parse_turtle(text: str) -> KnowledgeGraph:
    """Parse Turtle text into a graph; raises TurtleSyntaxError with line/column."""
    return _Parser(text).parse()
