"""Corpus driver: per-repository extraction, parallel graph builds, manifest pairing."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .audit import ArchComparison, ManifestError, compare_architecture, load_manifest
from .config import DEFAULT_SETTINGS, Settings
from .extractor import ERROR, WARNING, Diagnostic, ExtractedModel, extract_file
from .graph import NetworkDescriptor, assemble_descriptor, build_graph, void_graph
from .inference import infer_network_type
from .ingest import IngestError, extract_references, load_raw_document, map_repository
from .rdf import IRI, KnowledgeGraph
from .vocab import Vocabulary, build_vocabulary

SOURCE_DIR = "src"
MANIFEST_DIR = "manifests"
MANIFEST_SUFFIX = ".model_config.json"
DATASET_SIDECAR = "dataset.txt"


@dataclass
class RepoResult:
    repo_dir: Path
    descriptors: list[NetworkDescriptor] = field(default_factory=list)
    models: list[ExtractedModel] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    error: Optional[str] = None


def python_sources(repo_dir: Path) -> list[Path]:
    root = repo_dir / SOURCE_DIR
    if not root.is_dir():
        return []
    return sorted(p for p in root.rglob("*.py") if p.is_file())


def read_dataset_sidecar(repo_dir: Path) -> tuple[Optional[str], Optional[Diagnostic]]:
    path = repo_dir / DATASET_SIDECAR
    if not path.is_file():
        return None, None
    lines = [line.strip() for line in path.read_text(encoding="utf-8", errors="replace").splitlines() if line.strip()]
    if not lines:
        return None, None
    try:
        return IRI(lines[0]), None
    except ValueError:
        return None, Diagnostic(WARNING, "invalid-dataset", f"{DATASET_SIDECAR} does not hold an http(s) IRI")


def process_repository(repo_dir: Union[str, Path], settings: Settings = DEFAULT_SETTINGS,
                       vocab: Optional[Vocabulary] = None) -> RepoResult:
    """Map metadata, extract every source file and assemble one descriptor per model.

    Raises IngestError when the metadata document is missing or malformed.
    """
    repo_dir = Path(repo_dir)
    vocab = vocab or build_vocabulary()
    record = map_repository(load_raw_document(repo_dir))
    refs = extract_references(record.readme, settings)
    result = RepoResult(repo_dir)
    dataset, problem = read_dataset_sidecar(repo_dir)
    if problem is not None:
        result.diagnostics.append(problem.record(DATASET_SIDECAR))
    for path in python_sources(repo_dir):
        rel = path.relative_to(repo_dir).as_posix()
        fx = extract_file(path.read_bytes(), rel, vocab)
        result.diagnostics.extend(d.record(rel) for d in fx.diagnostics)
        for model in fx.models:
            result.diagnostics.extend(d.record(rel) for d in model.diagnostics)
        result.models.extend(fx.models)
    for model in result.models:
        result.descriptors.append(
            assemble_descriptor(record, model, refs, infer_network_type(model), len(result.models), dataset, settings.data_namespace)
        )
    return result


def _safe_process(repo_dir: Path, settings: Settings, vocab: Vocabulary) -> RepoResult:
    try:
        return process_repository(repo_dir, settings, vocab)
    except IngestError as exc:
        diag = Diagnostic(ERROR, "repository-skipped", str(exc))
        return RepoResult(repo_dir, diagnostics=[diag.record(repo_dir.name)], error=str(exc))


def discover_repositories(corpus_dir: Union[str, Path]) -> list[Path]:
    corpus_dir = Path(corpus_dir)
    return sorted(p for p in corpus_dir.iterdir() if p.is_dir() and (p / "metadata.json").is_file())


def process_corpus(corpus_dir: Union[str, Path], jobs: int = 1, settings: Settings = DEFAULT_SETTINGS) -> list[RepoResult]:
    vocab = build_vocabulary()
    repos = discover_repositories(corpus_dir)
    if jobs <= 1:
        return [_safe_process(r, settings, vocab) for r in repos]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda r: _safe_process(r, settings, vocab), repos))


@dataclass
class BuildResult:
    graph: KnowledgeGraph
    void: KnowledgeGraph
    repos: list[RepoResult]

    @property
    def networks(self) -> int:
        return sum(len(r.descriptors) for r in self.repos)

    @property
    def merged(self) -> KnowledgeGraph:
        return self.graph | self.void


def build_corpus(corpus_dir: Union[str, Path], jobs: int = 1, settings: Settings = DEFAULT_SETTINGS) -> BuildResult:
    """Graph and VoID description of a whole corpus; raises IriCollision on clashing IRIs."""
    repos = process_corpus(corpus_dir, jobs, settings)
    graph = build_graph((d for r in repos for d in r.descriptors))
    return BuildResult(graph, void_graph(graph, settings.dataset_iri, settings), repos)


# --------------------------------------------------------------------------
# evaluation against manifests


def manifest_path(repo_dir: Path, model: ExtractedModel, models_in_file: int) -> Path:
    stem = Path(model.source_file).stem
    name = stem if models_in_file == 1 else f"{stem}_{model.model_ordinal}"
    return repo_dir / MANIFEST_DIR / f"{name}{MANIFEST_SUFFIX}"


@dataclass
class EvalPair:
    repo: str
    source_file: str
    model_ordinal: int
    manifest: str
    comparison: ArchComparison


@dataclass
class EvalResult:
    pairs: list[EvalPair] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def evaluate_corpus(corpus_dir: Union[str, Path], jobs: int = 1, settings: Settings = DEFAULT_SETTINGS) -> EvalResult:
    out = EvalResult()
    for repo in process_corpus(corpus_dir, jobs, settings):
        if repo.error:
            out.errors.append(repo.error)
            continue
        per_file: dict[str, int] = {}
        for m in repo.models:
            per_file[m.source_file] = per_file.get(m.source_file, 0) + 1
        for m in repo.models:
            path = manifest_path(repo.repo_dir, m, per_file[m.source_file])
            rel = path.relative_to(repo.repo_dir.parent).as_posix()
            if not path.is_file():
                out.missing.append(rel)
                continue
            try:
                manifest = load_manifest(path.read_bytes(), rel)
            except ManifestError as exc:
                out.errors.append(f"{rel}: {exc}")
                continue
            out.pairs.append(EvalPair(repo.repo_dir.name, m.source_file, m.model_ordinal, rel, compare_architecture(m, manifest)))
    return out
