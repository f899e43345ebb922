"""Read-only access to model records (the JSON format the server bundles)."""

from __future__ import annotations

import json
from pathlib import Path


class LibraryNotFound(Exception):
    pass


class RecordNotFound(Exception):
    pass


class ModelRecord:
    def __init__(self, entry: dict):
        self.name: str = entry["name"]
        self.mesh_uri: str = entry["mesh_uri"]
        self.scale_factor: float = float(entry.get("scale_factor", 1.0))
        self.wcategory: str = entry.get("wcategory", "object")
        self.density: float = float(entry.get("density", 1000.0))
        self.audio_material: str = entry.get("audio_material", "wood")

    def get_url(self) -> str:
        return f"file://{self.mesh_uri}"


def _bundled_library() -> Path:
    """The server package ships the canonical records file; reuse it."""
    try:
        from importlib.resources import files
        path = Path(str(files("deskworld") / "assets" / "library.json"))
    except (ImportError, ModuleNotFoundError) as exc:
        raise LibraryNotFound(
            "no library path given and the bundled deskworld records are "
            "not installed") from exc
    if not path.is_file():
        raise LibraryNotFound(str(path))
    return path


class ModelLibrarian:
    """Loads a records file; any non-file argument falls back to the bundle."""

    def __init__(self, library: str | Path | None = None):
        path = Path(library) if library else None
        if path is None or not path.is_file():
            path = _bundled_library()
        self.library_path = path
        raw = json.loads(path.read_text())
        self.records = [ModelRecord(entry) for entry in raw]
        self._by_name = {r.name: r for r in self.records}

    def get_record(self, name: str) -> ModelRecord:
        try:
            return self._by_name[name]
        except KeyError:
            raise RecordNotFound(name) from None

    def get_model_names(self) -> list[str]:
        return sorted(self._by_name)
