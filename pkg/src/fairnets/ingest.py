"""Repository metadata: hosting-API documents to records, README link mining, live fetching."""

from __future__ import annotations

import base64
import enum
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Optional
from urllib.parse import quote, urlsplit

from .config import DEFAULT_SETTINGS, Settings
from .rdf import IRI

TOKEN_ENV = "FAIRNETS_GITHUB_TOKEN"
API_ROOT = "https://api.github.com"
SPDX_BASE = "https://spdx.org/licenses/"

# hosting-API field -> RepositoryRecord field, one row per mapped value
FIELD_MAPPING = (
    ("created_at", "created_at"),
    ("description, readme", "description_sources"),
    ("html_url", "html_url"),
    ("license", "license_iri"),
    ("owner.html_url", "owner_url"),
    ("updated_at", "updated_at"),
    ("watchers_count", "watchers_count"),
    ("name", "name"),
    ("topics", "topics"),
)


class IngestError(Exception):
    pass


class MappingError(IngestError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class FetchError(IngestError):
    pass


class RepoNotFound(FetchError):
    pass


class RateLimited(FetchError):
    def __init__(self, message: str, reset_at: Optional[float] = None):
        super().__init__(message)
        self.reset_at = reset_at


class TransportError(FetchError):
    pass


@dataclass(frozen=True)
class RawRepoDocument:
    metadata: dict
    readme_text: str = ""
    topics: tuple[str, ...] = ()
    license_id: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.metadata, dict) or not self.metadata.get("full_name"):
            raise IngestError("repository document lacks full_name")

    @classmethod
    def from_metadata(cls, metadata: dict, readme_text: str = "") -> "RawRepoDocument":
        license_doc = metadata.get("license")
        license_id = license_doc.get("spdx_id") if isinstance(license_doc, dict) else None
        topics = metadata.get("topics") or ()
        return cls(metadata, readme_text or "", tuple(topics), license_id)


@dataclass(frozen=True)
class RepositoryRecord:
    full_name: str
    owner_url: IRI
    html_url: IRI
    created_at: str
    updated_at: str
    name: str
    description: Optional[str] = None
    readme: Optional[str] = None
    license_iri: Optional[IRI] = None
    watchers_count: int = 0
    topics: tuple[str, ...] = ()

    def __post_init__(self):
        if self.full_name.count("/") != 1 or not all(self.full_name.split("/")):
            raise MappingError("full_name", f"expected owner/repo, got {self.full_name!r}")
        if self.watchers_count < 0:
            raise MappingError("watchers_count", "must be nonnegative")
        if _timestamp(self.created_at, "created_at") > _timestamp(self.updated_at, "updated_at"):
            raise MappingError("created_at", "later than updated_at")

    @property
    def description_sources(self) -> tuple[str, ...]:
        """Repository description first, README second; empty sources omitted."""
        return tuple(s for s in (self.description, self.readme) if s and s.strip())

    @property
    def owner(self) -> str:
        return self.full_name.split("/")[0]


def _timestamp(value, field_name: str) -> datetime:
    if not isinstance(value, str) or not value:
        raise MappingError(field_name, "missing timestamp")
    try:
        parsed = datetime.fromisoformat(value[:-1] + "+00:00" if value.endswith("Z") else value)
    except ValueError:
        raise MappingError(field_name, f"invalid timestamp {value!r}") from None
    if parsed.tzinfo is None or parsed.utcoffset().total_seconds() != 0:
        raise MappingError(field_name, f"timestamp {value!r} is not UTC")
    return parsed


def _https_iri(value, field_name: str) -> IRI:
    try:
        return IRI(value)
    except (ValueError, TypeError):
        raise MappingError(field_name, f"invalid IRI {value!r}") from None


@lru_cache(maxsize=1)
def spdx_identifiers() -> dict[str, str]:
    """Shipped SPDX license ids keyed by lowercase id."""
    text = resources.files("fairnets").joinpath("data/spdx_licenses.txt").read_text(encoding="utf-8")
    ids = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    return {i.lower(): i for i in ids}


def normalize_license(spdx_id: Optional[str]) -> Optional[IRI]:
    if spdx_id is None or not spdx_id.strip() or spdx_id.strip().upper() == "NOASSERTION":
        return None
    canonical = spdx_identifiers().get(spdx_id.strip().lower())
    return IRI(SPDX_BASE + canonical) if canonical else None


def map_repository(raw: RawRepoDocument) -> RepositoryRecord:
    meta = raw.metadata
    full_name = meta.get("full_name")
    if not isinstance(full_name, str):
        raise MappingError("full_name", "missing")
    owner = meta.get("owner") if isinstance(meta.get("owner"), dict) else {}
    watchers = meta.get("watchers_count")
    if isinstance(watchers, bool) or not isinstance(watchers, int):
        raise MappingError("watchers_count", f"expected integer, got {watchers!r}")
    description = meta.get("description")
    if description is not None and not isinstance(description, str):
        raise MappingError("description", "expected text")
    created, updated = meta.get("created_at"), meta.get("updated_at")
    _timestamp(created, "created_at")
    _timestamp(updated, "updated_at")
    topics = sorted({t.strip() for t in raw.topics if isinstance(t, str) and t.strip()})
    return RepositoryRecord(
        full_name=full_name,
        owner_url=_https_iri(owner.get("html_url"), "owner.html_url"),
        html_url=_https_iri(meta.get("html_url"), "html_url"),
        created_at=created,
        updated_at=updated,
        name=meta.get("name") or full_name.split("/")[-1],
        description=description or None,
        readme=raw.readme_text or None,
        license_iri=normalize_license(raw.license_id),
        watchers_count=watchers,
        topics=tuple(topics),
    )


# --------------------------------------------------------------------------
# README references


class RefKind(str, enum.Enum):
    SCHOLARLY = "Scholarly"
    SEE_ALSO = "SeeAlso"


@dataclass(frozen=True)
class Reference:
    url: IRI
    kind: RefKind

    def __post_init__(self):
        object.__setattr__(self, "url", IRI(self.url))
        object.__setattr__(self, "kind", RefKind(self.kind))


_URL = re.compile(r"""https?://[^\s<>"'{}|\\^\[\]()`]+""")
_TRAILING = ".,;:!?*"
_ARXIV = re.compile(
    r"^https?://(?:www\.|export\.)?arxiv\.org/(?:abs|pdf)/"
    r"(\d{4}\.\d{4,5}(?:v\d+)?|[a-z][a-z\-]*(?:\.[A-Z]{2})?/\d{7}(?:v\d+)?)(?:\.pdf)?/?$"
)
_DOI_URL = re.compile(r"^https?://(?:dx\.)?doi\.org/(10\.\d{4,9}/\S+)$", re.IGNORECASE)
_DOI = re.compile(r"^10\.\d{4,9}/\S+$")
_MD_IMAGE = re.compile(r"!\[[^\]]*\]\(\s*<?(https?://[^\s)>]+)")
_HTML_IMG = re.compile(r"<img\b[^>]*>", re.IGNORECASE)
_BIB_START = re.compile(r"@([A-Za-z]+)\s*\{")
_BIB_FIELD = re.compile(r"([A-Za-z][A-Za-z_-]*)\s*=\s*")


def _strip_trailing(url: str) -> str:
    return url.rstrip(_TRAILING)


def classify_url(url: str) -> tuple[str, RefKind]:
    """Normalized form and kind: arXiv abstracts and DOI links are scholarly."""
    m = _ARXIV.match(url)
    if m:
        return f"https://arxiv.org/abs/{m.group(1)}", RefKind.SCHOLARLY
    m = _DOI_URL.match(url)
    if m:
        return "https://doi.org/" + m.group(1), RefKind.SCHOLARLY
    return url, RefKind.SEE_ALSO


def is_scholarly_url(url: str) -> bool:
    return bool(re.match(r"^https://arxiv\.org/abs/", url) and _ARXIV.match(url)) or bool(
        url.startswith("https://doi.org/") and _DOI_URL.match(url)
    )


def _excluded(url: str, settings: Settings) -> bool:
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    host_path = host + parts.path.lower()
    for entry in settings.badge_hosts:
        if "/" in entry:
            if host_path.startswith(entry):
                return True
        elif host == entry or host.endswith("." + entry):
            return True
    return parts.path.lower().endswith(settings.image_suffixes)


def _balanced(text: str, start: int) -> int:
    """Index just past the brace group opening at ``start``; len(text) if unclosed."""
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return len(text)


def _bibtex_fields(text: str):
    """(offset, name, value) for every field of every ``@type{...}`` entry."""
    pos = 0
    while True:
        m = _BIB_START.search(text, pos)
        if m is None:
            return
        open_brace = m.end() - 1
        end = _balanced(text, open_brace)
        body_start = m.end()
        i = body_start
        while True:
            f = _BIB_FIELD.search(text, i, end)
            if f is None:
                break
            j = f.end()
            if j < end and text[j] == "{":
                close = min(_balanced(text, j), end)
                value = text[j + 1 : close - 1]
                i = close
            elif j < end and text[j] == '"':
                close = text.find('"', j + 1, end)
                close = end if close < 0 else close
                value = text[j + 1 : close]
                i = close + 1
            else:
                v = re.match(r"[^,}\s]*", text[j:end])
                value = v.group(0)
                i = j + len(value) + 1
            yield f.start(), f.group(1).lower(), value.strip()
        pos = max(end, m.end())


def _doi_url(doi: str) -> Optional[str]:
    doi = re.sub(r"\s+", "", doi)
    m = _DOI_URL.match(doi)
    if m:
        doi = m.group(1)
    doi = _strip_trailing(doi)
    if not _DOI.match(doi):
        return None
    return "https://doi.org/" + quote(doi, safe="/:;=+$@&-_.!~*,")


def extract_references(readme: Optional[str], settings: Settings = DEFAULT_SETTINGS) -> list[Reference]:
    if not readme:
        return []
    found: list[tuple[int, str]] = []
    image_spans = [m.span(1) for m in _MD_IMAGE.finditer(readme)]
    image_spans += [m.span() for m in _HTML_IMG.finditer(readme)]

    def in_image(pos: int) -> bool:
        return any(a <= pos < b for a, b in image_spans)

    for m in _URL.finditer(readme):
        if not in_image(m.start()):
            found.append((m.start(), _strip_trailing(m.group(0))))
    fields = list(_bibtex_fields(readme))
    eprint_arxiv = {}
    for offset, name, value in fields:
        if name == "archiveprefix" and value.lower() == "arxiv":
            eprint_arxiv[offset] = True
    for offset, name, value in fields:
        if name == "doi":
            url = _doi_url(value)
            if url:
                found.append((offset, url))
        elif name == "eprint":
            ident = value.strip()
            if re.fullmatch(r"\d{4}\.\d{4,5}(v\d+)?|[a-z][a-z\-]*(\.[A-Z]{2})?/\d{7}(v\d+)?", ident):
                found.append((offset, f"https://arxiv.org/abs/{ident}"))
    found.sort(key=lambda item: item[0])

    out: list[Reference] = []
    seen = set()
    for _, raw in found:
        url, kind = classify_url(raw)
        if url in seen or _excluded(url, settings):
            continue
        try:
            iri = IRI(url)
        except ValueError:
            continue
        seen.add(url)
        out.append(Reference(iri, kind))
    return out


# --------------------------------------------------------------------------
# corpus entries on disk


def find_readme(repo_dir: Path) -> Optional[Path]:
    candidates = sorted(p for p in repo_dir.iterdir() if p.is_file() and p.name.lower().startswith("readme"))
    for preferred in ("readme.md", "readme.rst", "readme.txt", "readme"):
        for p in candidates:
            if p.name.lower() == preferred:
                return p
    return candidates[0] if candidates else None


def load_raw_document(repo_dir: Path) -> RawRepoDocument:
    repo_dir = Path(repo_dir)
    meta_path = repo_dir / "metadata.json"
    if not meta_path.is_file():
        raise IngestError(f"{repo_dir}: missing metadata.json")
    try:
        metadata = json.loads(meta_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IngestError(f"{meta_path}: {exc}") from None
    if not isinstance(metadata, dict):
        raise IngestError(f"{meta_path}: expected a JSON object")
    readme_path = find_readme(repo_dir)
    readme = readme_path.read_bytes().decode("utf-8", errors="replace") if readme_path else ""
    return RawRepoDocument.from_metadata(metadata, readme)


# --------------------------------------------------------------------------
# live fetching


class TokenBucket:
    """Thread-safe request budget shared by concurrent fetches."""

    def __init__(self, rate: float = 10.0, capacity: float = 10.0, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = rate
        self.capacity = capacity
        self.tokens = capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            self.sleep(wait)


_GLOBAL_BUCKET = TokenBucket()


@dataclass
class GitHubClient:
    token: Optional[str] = None
    session: object = None
    base_url: str = API_ROOT
    wait_on_rate_limit: bool = True
    max_retries: int = 3
    backoff: float = 1.0
    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], float] = time.time
    bucket: TokenBucket = field(default_factory=lambda: _GLOBAL_BUCKET)
    max_rate_limit_waits: int = 5

    def __post_init__(self):
        if self.session is None:
            import requests

            self.session = requests.Session()
        if self.token is None:
            self.token = os.environ.get(TOKEN_ENV) or None

    def _headers(self) -> dict:
        headers = {"Accept": "application/vnd.github+json", "User-Agent": "fairnets"}
        if self.token:
            headers["Authorization"] = f"token {self.token}"
        return headers

    def request(self, path: str, allow_missing: bool = False):
        import requests

        url = path if path.startswith("http") else self.base_url + path
        attempt = 0
        waits = 0
        while True:
            self.bucket.acquire()
            try:
                resp = self.session.get(url, headers=self._headers(), timeout=30)
            except requests.RequestException as exc:
                if attempt < self.max_retries:
                    self.sleep(self.backoff * 2**attempt)
                    attempt += 1
                    continue
                raise TransportError(f"GET {url}: {exc}") from None
            status = resp.status_code
            remaining = resp.headers.get("X-RateLimit-Remaining")
            if status == 429 or (status == 403 and remaining == "0"):
                reset = resp.headers.get("X-RateLimit-Reset")
                reset_at = float(reset) if reset and reset.isdigit() else None
                if not self.wait_on_rate_limit or waits >= self.max_rate_limit_waits:
                    raise RateLimited(f"rate limit exhausted for {url}", reset_at)
                delay = max(0.0, reset_at - self.clock()) + 1 if reset_at else self.backoff * 60
                self.sleep(delay)
                waits += 1
                continue
            if 500 <= status < 600:
                if attempt < self.max_retries:
                    self.sleep(self.backoff * 2**attempt)
                    attempt += 1
                    continue
                raise TransportError(f"GET {url}: HTTP {status} after {attempt} retries")
            if status == 404:
                if allow_missing:
                    return None
                raise RepoNotFound(f"not found: {url}")
            if status >= 400:
                raise TransportError(f"GET {url}: HTTP {status}")
            return resp

    def json(self, path: str, allow_missing: bool = False):
        resp = self.request(path, allow_missing)
        if resp is None:
            return None
        try:
            return resp.json()
        except ValueError:
            raise TransportError(f"GET {path}: response is not JSON") from None

    def fetch_repository(self, full_name: str) -> RawRepoDocument:
        if full_name.count("/") != 1 or not all(full_name.split("/")):
            raise IngestError(f"expected owner/repo, got {full_name!r}")
        repo_path = "/repos/" + quote(full_name, safe="/")
        metadata = self.json(repo_path)
        if not isinstance(metadata, dict) or "full_name" not in metadata:
            raise TransportError(f"unexpected repository document for {full_name}")
        readme_doc = self.json(repo_path + "/readme", allow_missing=True)
        readme = ""
        if isinstance(readme_doc, dict) and readme_doc.get("content"):
            try:
                readme = base64.b64decode(readme_doc["content"]).decode("utf-8", errors="replace")
            except (ValueError, TypeError):
                readme = ""
        topics_doc = self.json(repo_path + "/topics", allow_missing=True)
        topics = topics_doc.get("names") if isinstance(topics_doc, dict) else None
        if topics is None:
            topics = metadata.get("topics") or []
        metadata = dict(metadata, topics=list(topics))
        return RawRepoDocument.from_metadata(metadata, readme)

    def python_files(self, full_name: str, ref: Optional[str] = None) -> list[str]:
        repo_path = "/repos/" + quote(full_name, safe="/")
        if ref is None:
            ref = self.json(repo_path).get("default_branch", "master")
        tree = self.json(f"{repo_path}/git/trees/{quote(ref, safe='')}?recursive=1")
        entries = tree.get("tree", []) if isinstance(tree, dict) else []
        return sorted(e["path"] for e in entries if e.get("type") == "blob" and str(e.get("path", "")).endswith(".py"))

    def file_bytes(self, full_name: str, path: str, ref: Optional[str] = None) -> bytes:
        repo_path = "/repos/" + quote(full_name, safe="/")
        suffix = f"?ref={quote(ref, safe='')}" if ref else ""
        doc = self.json(f"{repo_path}/contents/{quote(path, safe='/')}{suffix}")
        if not isinstance(doc, dict) or "content" not in doc:
            raise TransportError(f"unexpected contents document for {path}")
        try:
            return base64.b64decode(doc["content"])
        except (ValueError, TypeError):
            raise TransportError(f"undecodable contents for {path}") from None


def fetch_repository(full_name: str, auth: Optional[str] = None, **options) -> RawRepoDocument:
    return GitHubClient(token=auth, **options).fetch_repository(full_name)
