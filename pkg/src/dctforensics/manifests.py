"""Dataset manifests and run configuration."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import DataError, FormatError
from .features import NORMALIZATION_MODES
from .image_io import LUMINANCE_MODES

SPLITS = ("train", "test", "unassigned")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str = "unassigned"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DataError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass
class DatasetManifest:
    name: str
    entries: list = field(default_factory=list)
    labels: tuple = ()
    created_at: str = ""

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise DataError(f"manifest {self.name!r} has duplicate paths")
        if self.labels:
            declared = set(self.labels)
            bad = {e.label for e in self.entries} - declared
            if bad:
                raise DataError(f"labels outside the declared set {sorted(declared)}: {sorted(bad)}")

    def save(self, path) -> None:
        payload = {
            "name": self.name,
            "created_at": self.created_at,
            "labels": list(self.labels),
            "entries": [asdict(e) for e in self.entries],
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from exc
        try:
            entries = [ManifestEntry(**e) for e in data["entries"]]
            return cls(
                name=data.get("name", Path(path).stem),
                entries=entries,
                labels=tuple(data.get("labels", ())),
                created_at=data.get("created_at", ""),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: malformed manifest ({exc})") from exc


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    train_fraction: float = 0.10
    folds: int = 5
    k: int = 3000
    classifier: str = "boosted"
    normalization: str = "joint"
    luminance: str = "bt601"
    binary_collapse: bool = False
    real_label: str = "real"

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.folds < 2:
            raise DataError(f"folds must be >= 2, got {self.folds}")
        if self.classifier not in ("boosted", "logistic"):
            raise DataError(f"classifier must be 'boosted' or 'logistic', got {self.classifier!r}")
        if self.normalization not in NORMALIZATION_MODES:
            raise DataError(f"normalization must be one of {NORMALIZATION_MODES}")
        if self.luminance not in LUMINANCE_MODES:
            raise DataError(f"luminance must be one of {LUMINANCE_MODES}")

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]
