import base64
import json
import threading

import pytest
import requests
from hypothesis import given, settings, strategies as st

from fairnets.config import DEFAULT_SETTINGS, parse_settings
from fairnets.graph import RECORD_PREDICATES
from fairnets.ingest import (
    FIELD_MAPPING,
    GitHubClient,
    MappingError,
    RateLimited,
    RawRepoDocument,
    RefKind,
    Reference,
    RepoNotFound,
    TokenBucket,
    TransportError,
    extract_references,
    fetch_repository,
    find_readme,
    is_scholarly_url,
    load_raw_document,
    map_repository,
    normalize_license,
    spdx_identifiers,
)

from conftest import CORPUS, MAPPING as MAPPING_DIR, FakeResponse, ReplaySession, load_routes

BASE_META = json.loads((MAPPING_DIR / "metadata.json").read_text())


def raw(**changes) -> RawRepoDocument:
    meta = dict(BASE_META)
    for key, value in changes.items():
        if value is None:
            meta.pop(key, None)
        else:
            meta[key] = value
    return RawRepoDocument.from_metadata(meta, "readme text")


# ---------------------------------------------------------------- mapping


def test_map_repository_example():
    record = map_repository(raw())
    assert record.full_name == "dmnelson/sentiment-analysis-imdb"
    assert record.created_at == "2015-09-14T10:08:58Z"
    assert record.watchers_count == 5
    assert record.owner_url == "https://github.com/dmnelson"
    assert record.html_url == "https://github.com/dmnelson/sentiment-analysis-imdb"
    assert record.license_iri == "https://spdx.org/licenses/MIT"
    assert record.name == "sentiment-analysis-imdb"


def test_missing_license_is_absent():
    assert map_repository(raw(license=None)).license_iri is None


def test_topics_sorted():
    assert map_repository(raw(topics=["nlp", "lstm"])).topics == ("lstm", "nlp")


def test_description_sources_order():
    record = map_repository(raw())
    assert record.description_sources == ('Sentiment analysis on the "IMDB" reviews', "readme text")
    assert map_repository(raw(description="")).description_sources == ("readme text",)


@pytest.mark.parametrize("field", ["created_at", "updated_at"])
@pytest.mark.parametrize("value", [None, "yesterday", "2015-13-40T00:00:00Z", 17])
def test_bad_timestamp_names_field(field, value):
    doc = raw(**{field: value}) if value is not None else raw(**{field: None})
    with pytest.raises(MappingError) as info:
        map_repository(doc)
    assert info.value.field == field


def test_created_after_updated_rejected():
    with pytest.raises(MappingError):
        map_repository(raw(created_at="2021-01-01T00:00:00Z", updated_at="2020-01-01T00:00:00Z"))


def test_negative_watchers_rejected():
    with pytest.raises(MappingError):
        map_repository(raw(watchers_count=-1))


def test_full_name_needs_one_slash():
    with pytest.raises(MappingError):
        map_repository(raw(full_name="a/b/c"))


# one row per mapped field: API field, record attribute, emitted predicate
MAPPING_ROWS = [
    ("created_at", "created_at", "http://purl.org/dc/terms/created"),
    ("description, readme", "description_sources", "http://purl.org/dc/terms/description"),
    ("html_url", "html_url", "https://w3id.org/nno/ontology#hasRepositoryLink"),
    ("license", "license_iri", "http://purl.org/dc/terms/license"),
    ("owner.html_url", "owner_url", "http://purl.org/dc/terms/creator"),
    ("updated_at", "updated_at", "http://purl.org/dc/terms/modified"),
    ("watchers_count", "watchers_count", "https://w3id.org/nno/ontology#stars"),
    ("name", "name", "http://www.w3.org/2000/01/rdf-schema#label"),
    ("topics", "topics", "http://usefulinc.com/ns/doap#category"),
]


@pytest.mark.parametrize("api_field, attribute, predicate", MAPPING_ROWS)
def test_mapping_row(api_field, attribute, predicate):
    assert (api_field, attribute) in FIELD_MAPPING
    assert RECORD_PREDICATES[attribute] == predicate
    record = map_repository(raw())
    assert getattr(record, attribute) not in (None, (), "")


def test_mapping_has_nine_rows():
    assert len(FIELD_MAPPING) == 9
    assert len(set(RECORD_PREDICATES.values())) == 9


# ---------------------------------------------------------------- licenses


def test_normalize_license_examples():
    assert normalize_license("MIT") == "https://spdx.org/licenses/MIT"
    assert normalize_license("NOASSERTION") is None
    assert normalize_license(None) is None
    assert normalize_license("") is None
    assert normalize_license("not-a-license") is None


def test_spdx_snapshot_matches_packaging_list():
    spdx = pytest.importorskip("packaging.licenses._spdx")
    assert spdx_identifiers() == {k: v["id"] for k, v in spdx.LICENSES.items()}


@given(st.sampled_from(sorted(spdx_identifiers().values())))
def test_every_spdx_id_maps_to_its_page(spdx_id):
    assert normalize_license(spdx_id) == f"https://spdx.org/licenses/{spdx_id}"


# ---------------------------------------------------------------- references


def refs(text, **kw):
    return [(r.url, r.kind) for r in extract_references(text, **kw)]


S, A = RefKind.SCHOLARLY, RefKind.SEE_ALSO


def test_reference_examples():
    assert refs("see https://arxiv.org/pdf/1512.03385") == [("https://arxiv.org/abs/1512.03385", S)]
    assert refs("@article{x, url={https://doi.org/10.1000/x}}") == [("https://doi.org/10.1000/x", S)]
    assert refs("docs: https://example.com/guide") == [("https://example.com/guide", A)]


def test_pdf_suffix_and_version_normalized():
    assert refs("http://arxiv.org/pdf/1409.1556v6.pdf") == [("https://arxiv.org/abs/1409.1556v6", S)]


def test_bibtex_doi_and_url_fields():
    text = "@inproceedings{k,\n  title={T},\n  doi={10.1109/5.726791},\n  url={https://www.aclweb.org/anthology/P11-1015}\n}"
    assert refs(text) == [("https://doi.org/10.1109/5.726791", S), ("https://www.aclweb.org/anthology/P11-1015", A)]


def test_bibtex_eprint_is_arxiv():
    text = "@article{s, eprint={1409.1556}, archivePrefix={arXiv}}"
    assert refs(text) == [("https://arxiv.org/abs/1409.1556", S)]


def test_duplicates_removed_first_wins():
    text = "https://arxiv.org/abs/1512.03385 and https://arxiv.org/pdf/1512.03385.pdf then https://a.example/x https://a.example/x"
    assert refs(text) == [("https://arxiv.org/abs/1512.03385", S), ("https://a.example/x", A)]


def test_badges_and_images_excluded():
    text = (
        "[![Build](https://travis-ci.org/u/r.svg)](https://travis-ci.org/u/r)\n"
        "![img](https://example.org/pic.png)\n"
        '<img src="https://example.org/figure.jpg">\n'
        "https://img.shields.io/badge/x-y-z.svg\n"
        "real: https://keras.io/\n"
    )
    assert refs(text) == [("https://keras.io/", A)]


def test_trailing_punctuation_trimmed():
    assert refs("(see https://example.com/guide).") == [("https://example.com/guide", A)]


def test_badge_denylist_is_configurable():
    settings = parse_settings('[links]\nextra_badge_hosts = ["keras.io"]\n')
    assert refs("https://keras.io/ https://example.com/", settings=settings) == [("https://example.com/", A)]


def test_reference_coerces_fields():
    r = Reference("https://example.com/", "SeeAlso")
    assert r.kind is RefKind.SEE_ALSO
    with pytest.raises(ValueError):
        Reference("not a url", RefKind.SEE_ALSO)


arxiv_ids = st.builds(lambda a, b: f"{a:04d}.{b:05d}", st.integers(1501, 2312), st.integers(0, 99999))
dois = st.builds(lambda a, b: f"10.{a}/{b}", st.integers(1000, 99999), st.from_regex(r"[a-z0-9.]{1,12}", fullmatch=True))
hosts = st.sampled_from(["example.com", "keras.io", "github.com", "ai.stanford.edu"])
paths = st.from_regex(r"[a-z0-9_/-]{0,20}", fullmatch=True)
links = st.one_of(
    st.builds(lambda i, v: f"https://arxiv.org/abs/{i}{v}", arxiv_ids, st.sampled_from(["", "v2"])),
    st.builds(lambda i: f"http://arxiv.org/pdf/{i}.pdf", arxiv_ids),
    st.builds(lambda d: f"https://doi.org/{d}", dois),
    st.builds(lambda h, p: f"https://{h}/{p}", hosts, paths),
)
fillers = st.sampled_from([" ", "\n", " see ", ", and ", "\n\n- ", " (", ") "])


@given(st.lists(st.tuples(fillers, links), max_size=10))
@settings(max_examples=200)
def test_references_partition_and_idempotence(parts):
    text = "".join(f + l for f, l in parts)
    out = extract_references(text)
    for r in out:
        assert (r.kind is S) == is_scholarly_url(r.url)
    again = extract_references(" ".join(r.url for r in out))
    assert again == out


# ---------------------------------------------------------------- local corpus documents


def test_load_raw_document_reads_readme():
    repo = CORPUS / "dmnelson__sentiment-analysis-imdb"
    doc = load_raw_document(repo)
    assert doc.metadata["full_name"] == "dmnelson/sentiment-analysis-imdb"
    assert doc.readme_text.startswith("# Sentiment analysis")
    assert find_readme(repo).name == "README.md"


def test_offline_mapping_never_opens_network(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("network touched")

    monkeypatch.setattr(requests.Session, "get", boom)
    monkeypatch.setattr(requests, "get", boom)
    repo = CORPUS / "ken-r__mnist-cnn"
    record = map_repository(load_raw_document(repo))
    assert extract_references(record.readme)


# ---------------------------------------------------------------- replayed API


def client(session, **kw):
    kw.setdefault("bucket", TokenBucket(rate=1e9, capacity=1e9))
    kw.setdefault("sleep", lambda s: None)
    return GitHubClient(session=session, **kw)


def test_fetch_replay(replay):
    session = replay("dmnelson__sentiment-analysis-imdb.json")
    doc = client(session).fetch_repository("dmnelson/sentiment-analysis-imdb")
    assert doc.metadata["full_name"] == "dmnelson/sentiment-analysis-imdb"
    assert doc.topics == ["sentiment", "nlp"] or list(doc.topics) == ["sentiment", "nlp"]
    assert "arxiv.org/abs/1412.6980" in doc.readme_text
    record = map_repository(doc)
    assert record.topics == ("nlp", "sentiment")


def test_fetch_replay_is_deterministic(replay):
    a = client(replay("dmnelson__sentiment-analysis-imdb.json")).fetch_repository("dmnelson/sentiment-analysis-imdb")
    b = client(replay("dmnelson__sentiment-analysis-imdb.json")).fetch_repository("dmnelson/sentiment-analysis-imdb")
    assert a == b


def test_module_level_fetch_with_options(replay):
    doc = fetch_repository("dmnelson/sentiment-analysis-imdb", session=replay("dmnelson__sentiment-analysis-imdb.json"),
                           bucket=TokenBucket(rate=1e9, capacity=1e9))
    assert doc.metadata["watchers_count"] == 5


def test_source_listing_and_contents(replay):
    c = client(replay("dmnelson__sentiment-analysis-imdb.json"))
    files = c.python_files("dmnelson/sentiment-analysis-imdb", "master")
    assert files == ["sentiment/model.py"]
    assert b"Sequential" in c.file_bytes("dmnelson/sentiment-analysis-imdb", files[0], "master")


def test_not_found(replay):
    with pytest.raises(RepoNotFound):
        client(replay("not_found.json")).fetch_repository("nobody/missing-repo")


def test_rate_limit_waits_until_reset(replay):
    slept = []
    session = replay("rate_limited.json")
    doc = client(session, sleep=slept.append, clock=lambda: 1_000_000.0).fetch_repository("dmnelson/sentiment-analysis-imdb")
    assert doc.metadata["full_name"] == "dmnelson/sentiment-analysis-imdb"
    assert slept and slept[0] == pytest.approx(61.0)


def test_rate_limit_without_wait_raises(replay):
    with pytest.raises(RateLimited) as info:
        client(replay("rate_limited.json"), wait_on_rate_limit=False).fetch_repository("dmnelson/sentiment-analysis-imdb")
    assert info.value.reset_at == 1000060.0


class FlakySession:
    def __init__(self, failures, final):
        self.failures = failures
        self.final = final
        self.calls = 0

    def get(self, url, headers=None, timeout=None):
        self.calls += 1
        if self.calls <= self.failures:
            return FakeResponse(502, {"message": "bad gateway"})
        return self.final


def test_transient_failures_retry_with_backoff():
    slept = []
    session = FlakySession(3, FakeResponse(200, {"ok": True}))
    assert client(session, sleep=slept.append, backoff=1.0).json("/x") == {"ok": True}
    assert slept == [1.0, 2.0, 4.0]


def test_retries_exhausted_is_transport_error():
    session = FlakySession(4, FakeResponse(200, {}))
    with pytest.raises(TransportError):
        client(session).json("/x")


def test_token_header_sent():
    seen = {}

    class Capture:
        def get(self, url, headers=None, timeout=None):
            seen.update(headers)
            return FakeResponse(200, {})

    client(Capture(), token="abc").json("/x")
    assert seen["Authorization"] == "token abc"


def test_token_from_environment(monkeypatch):
    monkeypatch.setenv("FAIRNETS_GITHUB_TOKEN", "envtoken")
    assert client(ReplaySession({})).token == "envtoken"


def test_bad_full_name_rejected(replay):
    with pytest.raises(Exception):
        client(replay("not_found.json")).fetch_repository("no-slash")


def test_token_bucket_shared_budget():
    now = [0.0]
    waits = []

    def sleep(s):
        waits.append(s)
        now[0] += s

    bucket = TokenBucket(rate=2.0, capacity=2.0, clock=lambda: now[0], sleep=sleep)
    lock = threading.Lock()

    def worker():
        for _ in range(3):
            with lock:
                bucket.acquire()

    threads = [threading.Thread(target=worker) for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    # 6 requests at 2/s with a burst of 2: at least 2 seconds of waiting
    assert sum(waits) == pytest.approx(2.0)
