"""Model registry: manifest of CNN + classifier artifact pairs, referenced
by content SHA-256 and verified before anything is served.

Manifest is a JSON file next to the artifacts. Entries with a missing file
may carry a source URL; the file is then fetched once and checksummed.
Entries that fail verification are excluded from listings and logged.
"""
from __future__ import annotations

import datetime
import hashlib
import json
import logging
import pathlib
import threading
import urllib.request
from dataclasses import dataclass, field
from typing import Optional

from .. import classifiers as clf
from .. import cnn

log = logging.getLogger(__name__)


class HashMismatch(RuntimeError):
    """Artifact content does not match the manifest checksum."""


@dataclass
class ManifestEntry:
    model_id: str
    kind: str
    bands: tuple[int, ...]
    cnn_file: str
    cnn_sha256: str
    classifier_file: str
    classifier_sha256: str
    created_at: str
    source_url: Optional[str] = None

    def public_fields(self) -> dict:
        return {
            "model_id": self.model_id,
            "kind": self.kind,
            "bands": list(self.bands),
            "cnn_sha256": self.cnn_sha256,
            "classifier_sha256": self.classifier_sha256,
            "created_at": self.created_at,
        }


@dataclass
class LoadedModel:
    entry: ManifestEntry
    extractor: cnn.CnnModel
    classifier: clf.TrainedClassifier


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


class ModelRegistry:
    """Verified model entries with lazy, cached artifact loading."""

    def __init__(self, models_dir: str | pathlib.Path,
                 manifest_name: str = "manifest.json"):
        self.models_dir = pathlib.Path(models_dir)
        self.manifest_path = self.models_dir / manifest_name
        self._entries: dict[str, ManifestEntry] = {}
        self._loaded: dict[str, LoadedModel] = {}
        self._lock = threading.Lock()
        if self.manifest_path.exists():
            self.reload()

    def reload(self) -> None:
        doc = json.loads(self.manifest_path.read_text())
        verified: dict[str, ManifestEntry] = {}
        for raw in doc.get("models", []):
            entry = ManifestEntry(
                model_id=raw["model_id"], kind=raw["kind"],
                bands=tuple(raw["bands"]),
                cnn_file=raw["cnn_file"], cnn_sha256=raw["cnn_sha256"],
                classifier_file=raw["classifier_file"],
                classifier_sha256=raw["classifier_sha256"],
                created_at=raw.get("created_at", ""),
                source_url=raw.get("source_url"))
            try:
                self._verify_entry(entry)
            except (OSError, HashMismatch) as exc:
                log.warning("excluding model %s: %s", entry.model_id, exc)
                continue
            verified[entry.model_id] = entry
        with self._lock:
            self._entries = verified
            self._loaded.clear()

    def _artifact_bytes(self, entry: ManifestEntry, name: str,
                        expected_sha: str) -> bytes:
        path = self.models_dir / name
        if not path.exists() and entry.source_url:
            url = entry.source_url.rstrip("/") + "/" + name
            log.info("fetching %s from %s", name, url)
            with urllib.request.urlopen(url, timeout=30) as resp:
                data = resp.read()
            if sha256_hex(data) != expected_sha:
                raise HashMismatch(f"fetched {name} hashes to {sha256_hex(data)[:12]}, "
                                   f"manifest says {expected_sha[:12]}")
            path.write_bytes(data)
        data = path.read_bytes()
        if sha256_hex(data) != expected_sha:
            raise HashMismatch(f"{name} hashes to {sha256_hex(data)[:12]}, "
                               f"manifest says {expected_sha[:12]}")
        return data

    def _verify_entry(self, entry: ManifestEntry) -> None:
        self._artifact_bytes(entry, entry.cnn_file, entry.cnn_sha256)
        self._artifact_bytes(entry, entry.classifier_file, entry.classifier_sha256)

    def list_models(self) -> list[dict]:
        with self._lock:
            return [e.public_fields() for e in self._entries.values()]

    def get_entry(self, model_id: str) -> Optional[ManifestEntry]:
        with self._lock:
            return self._entries.get(model_id)

    def load(self, model_id: str) -> Optional[LoadedModel]:
        """Load (or return cached) verified artifacts; raises HashMismatch
        when an artifact changed since verification."""
        with self._lock:
            cached = self._loaded.get(model_id)
            if cached is not None:
                return cached
            entry = self._entries.get(model_id)
        if entry is None:
            return None
        extractor = cnn.load_cnn(self._artifact_bytes(entry, entry.cnn_file,
                                                      entry.cnn_sha256))
        classifier = clf.load_classifier(self._artifact_bytes(
            entry, entry.classifier_file, entry.classifier_sha256))
        loaded = LoadedModel(entry=entry, extractor=extractor, classifier=classifier)
        with self._lock:
            self._loaded[model_id] = loaded
        return loaded


def register_model(models_dir: str | pathlib.Path, model_id: str,
                   kind: clf.ClassifierKind, bands,
                   extractor: cnn.CnnModel,
                   classifier: clf.TrainedClassifier,
                   manifest_name: str = "manifest.json") -> ManifestEntry:
    """Write artifacts plus manifest entry (creating or extending the manifest)."""
    models_dir = pathlib.Path(models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    cnn_blob = cnn.save_cnn(extractor)
    clf_blob = clf.save_classifier(classifier)
    cnn_name = f"{model_id}.cnn1"
    clf_name = f"{model_id}.clf1"
    (models_dir / cnn_name).write_bytes(cnn_blob)
    (models_dir / clf_name).write_bytes(clf_blob)
    entry = ManifestEntry(
        model_id=model_id, kind=kind.value, bands=tuple(int(b) for b in bands),
        cnn_file=cnn_name, cnn_sha256=sha256_hex(cnn_blob),
        classifier_file=clf_name, classifier_sha256=sha256_hex(clf_blob),
        created_at=_utcnow())
    manifest_path = models_dir / manifest_name
    doc = {"models": []}
    if manifest_path.exists():
        doc = json.loads(manifest_path.read_text())
    doc["models"] = [m for m in doc.get("models", [])
                     if m.get("model_id") != model_id]
    doc["models"].append({
        "model_id": entry.model_id, "kind": entry.kind, "bands": list(entry.bands),
        "cnn_file": entry.cnn_file, "cnn_sha256": entry.cnn_sha256,
        "classifier_file": entry.classifier_file,
        "classifier_sha256": entry.classifier_sha256,
        "created_at": entry.created_at,
        **({"source_url": entry.source_url} if entry.source_url else {}),
    })
    manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return entry
