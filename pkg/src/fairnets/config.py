"""Toolchain settings: data namespace, dataset IRI and the README link denylist."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .rdf import IRI, NNO_DATA

DEFAULT_BADGE_HOSTS = (
    "img.shields.io",
    "shields.io",
    "badge.fury.io",
    "badges.gitter.im",
    "travis-ci.org",
    "travis-ci.com",
    "api.travis-ci.org",
    "codecov.io",
    "coveralls.io",
    "circleci.com",
    "ci.appveyor.com",
    "readthedocs.org",
    "pepy.tech",
    "badgen.net",
    "app.codacy.com",
    "api.codacy.com",
    "mybinder.org",
    "colab.research.google.com/assets",
)
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".gif", ".svg", ".webp", ".bmp", ".ico")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Settings:
    data_namespace: str = NNO_DATA
    dataset_iri: str = "https://w3id.org/nno/data"
    badge_hosts: tuple[str, ...] = DEFAULT_BADGE_HOSTS
    image_suffixes: tuple[str, ...] = IMAGE_SUFFIXES
    dataset_title: str = "FAIRnets knowledge graph"
    dataset_description: str = (
        "Neural networks mined from public source repositories, described with "
        "their architecture, training configuration and repository metadata."
    )
    extra: dict = field(default_factory=dict, compare=False)


DEFAULT_SETTINGS = Settings()


def parse_settings(text: str) -> Settings:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    unknown = sorted(set(doc) - {"namespace", "links", "dataset"})
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
    updates = {}
    namespaces = doc.get("namespace", {})
    if not isinstance(namespaces, dict):
        raise ConfigError("[namespace] must be a table")
    if "data" in namespaces:
        data = namespaces["data"]
        if not isinstance(data, str) or not data.endswith(("#", "/")):
            raise ConfigError("namespace.data must be an IRI ending in '#' or '/'")
        try:
            IRI(data)
        except ValueError as exc:
            raise ConfigError(f"namespace.data: {exc}") from None
        updates["data_namespace"] = data
    if "dataset" in namespaces:
        try:
            updates["dataset_iri"] = str(IRI(namespaces["dataset"]))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"namespace.dataset: {exc}") from None
    links = doc.get("links", {})
    if not isinstance(links, dict):
        raise ConfigError("[links] must be a table")
    if "badge_hosts" in links:
        hosts = links["badge_hosts"]
        if not isinstance(hosts, list) or not all(isinstance(h, str) for h in hosts):
            raise ConfigError("links.badge_hosts must be a list of strings")
        updates["badge_hosts"] = tuple(h.lower() for h in hosts)
    if "extra_badge_hosts" in links:
        hosts = links["extra_badge_hosts"]
        if not isinstance(hosts, list) or not all(isinstance(h, str) for h in hosts):
            raise ConfigError("links.extra_badge_hosts must be a list of strings")
        base = updates.get("badge_hosts", DEFAULT_BADGE_HOSTS)
        updates["badge_hosts"] = base + tuple(h.lower() for h in hosts)
    dataset = doc.get("dataset", {})
    if isinstance(dataset, dict):
        for key in ("title", "description"):
            if key in dataset:
                updates[f"dataset_{key}"] = str(dataset[key])
    return replace(DEFAULT_SETTINGS, **updates)


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """Settings from ``path``, or from ``./fairnets.toml`` when present, else defaults."""
    if path is None:
        candidate = Path("fairnets.toml")
        if not candidate.is_file():
            return DEFAULT_SETTINGS
        path = candidate
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_settings(text)
