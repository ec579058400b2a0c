"""In-memory cube store with an LRU cap and optional disk spill."""
from __future__ import annotations

import datetime
import pathlib
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

from ..cube import HyperCube, Stage
from ..hsio import parse_hsc, write_hsc


@dataclass
class CubeHandle:
    cube_id: str
    cube: HyperCube
    uploaded_at: str
    filename: str


class CubeStore:
    """Holds up to ``cap`` cubes in memory; evicted cubes go to the spill
    directory (when configured) and reload transparently."""

    def __init__(self, cap: int = 64, spill_dir: Optional[str] = None):
        self.cap = cap
        self.spill_dir = pathlib.Path(spill_dir) if spill_dir else None
        if self.spill_dir:
            self.spill_dir.mkdir(parents=True, exist_ok=True)
        self._handles: OrderedDict[str, CubeHandle] = OrderedDict()
        self._meta: dict[str, tuple[str, str]] = {}  # id -> (uploaded_at, filename)
        self._lock = threading.Lock()

    def put(self, cube: HyperCube, filename: str) -> CubeHandle:
        handle = CubeHandle(
            cube_id=uuid.uuid4().hex,
            cube=cube,
            uploaded_at=datetime.datetime.now(datetime.timezone.utc)
            .isoformat(timespec="seconds"),
            filename=filename)
        with self._lock:
            self._handles[handle.cube_id] = handle
            self._meta[handle.cube_id] = (handle.uploaded_at, handle.filename)
            while len(self._handles) > self.cap:
                evicted_id, evicted = self._handles.popitem(last=False)
                if self.spill_dir:
                    path = self.spill_dir / f"{evicted_id}.hsc"
                    path.write_bytes(write_hsc(evicted.cube))
        return handle

    def get(self, cube_id: str) -> Optional[CubeHandle]:
        with self._lock:
            handle = self._handles.get(cube_id)
            if handle is not None:
                self._handles.move_to_end(cube_id)
                return handle
        if self.spill_dir:
            path = self.spill_dir / f"{cube_id}.hsc"
            if path.exists():
                cube = parse_hsc(path.read_bytes(), stage=Stage.TRIMMED)
                uploaded_at, filename = self._meta.get(cube_id, ("", ""))
                handle = CubeHandle(cube_id=cube_id, cube=cube,
                                    uploaded_at=uploaded_at, filename=filename)
                with self._lock:
                    self._handles[cube_id] = handle
                    while len(self._handles) > self.cap:
                        evicted_id, evicted = self._handles.popitem(last=False)
                        path = self.spill_dir / f"{evicted_id}.hsc"
                        path.write_bytes(write_hsc(evicted.cube))
                return handle
        return None

    def __len__(self) -> int:
        with self._lock:
            return len(self._handles)
