"""Single-session TCP server running the lock-step simulation cycle.

One controller connection is served at a time; concurrent connection
attempts receive a protocol error blob and are closed immediately.  The
``terminate`` command (or SIGINT) shuts the server down cleanly with exit
code 0.
"""

from __future__ import annotations

import logging
import socket
import threading
import time

from .audio import MaterialModeTable
from .dispatch import Dispatcher
from .errors import DeskworldError, MalformedFrame, PortInUse
from .physics.solver import SolverConfig
from .protocol import (
    DEFAULT_PORT, canonical_json, decode_command_list, encode_frame,
    encode_response, recv_frame,
)
from .schema import builtin_registry
from .world import ModelLibrary, World

log = logging.getLogger("deskworld.server")


class Server:
    def __init__(self, port: int = DEFAULT_PORT, seed: int = 0,
                 dt: float | None = None, library: str | None = None,
                 audio_materials: str | None = None, host: str = "127.0.0.1"):
        solver = SolverConfig()
        if dt is not None:
            solver.dt = dt
        lib = ModelLibrary(library) if library else None
        world = World(lib, seed=seed, solver_config=solver)
        table = MaterialModeTable(audio_materials) if audio_materials else None
        self.dispatcher = Dispatcher(world, builtin_registry(), table)
        self.host = host
        self.port = port
        self._sock: socket.socket | None = None
        self._busy = threading.Lock()
        self._shutdown = threading.Event()

    def bind(self) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((self.host, self.port))
        except OSError as exc:
            sock.close()
            raise PortInUse(f"cannot bind {self.host}:{self.port}: {exc}") from exc
        sock.listen(4)
        self._sock = sock
        self.port = sock.getsockname()[1]
        log.info("listening on %s:%d", self.host, self.port)

    def serve_forever(self) -> None:
        if self._sock is None:
            self.bind()
        try:
            while not self._shutdown.is_set():
                self._sock.settimeout(0.2)
                try:
                    conn, addr = self._sock.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not self._busy.acquire(blocking=False):
                    self._reject(conn)
                    continue
                log.info("session from %s:%d", *addr)
                thread = threading.Thread(
                    target=self._run_session, args=(conn,), daemon=True)
                thread.start()
        finally:
            self.close()

    def _reject(self, conn: socket.socket) -> None:
        try:
            blob = {"$type_id": "erro", "index": -1, "command": "",
                    "error": "ProtocolError",
                    "message": "another controller session is active"}
            conn.sendall(encode_frame(canonical_json([blob, -1])))
        except OSError:
            pass
        finally:
            conn.close()

    def _run_session(self, conn: socket.socket) -> None:
        try:
            self._session(conn)
        finally:
            self._busy.release()

    def _session(self, conn: socket.socket) -> None:
        d = self.dispatcher
        try:
            while not self._shutdown.is_set():
                try:
                    frame = recv_frame(conn)
                except MalformedFrame:
                    break
                if not frame:
                    break
                try:
                    envelopes = decode_command_list(frame, d.registry)
                except DeskworldError as exc:
                    blob = {"$type_id": "erro", "index": -1, "command": "",
                            "error": type(exc).__name__, "message": str(exc)}
                    conn.sendall(encode_response([blob], d.world.frame))
                    continue
                conn.sendall(d.execute_wire(envelopes))
                if d.terminated:
                    self._shutdown.set()
        except OSError:
            pass
        finally:
            conn.close()

    def close(self) -> None:
        self._shutdown.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None


def run_bench(seed: int = 0, bodies: int = 10, steps: int = 2000) -> float:
    """Steps/s for an n-body scene with transforms output each step."""
    world = World(seed=seed)
    world.create_empty_room(8, 8)
    rng_positions = [((i % 4) * 0.5 - 0.75, 0.3 + (i // 4) * 0.35, (i % 3) * 0.4 - 0.4)
                     for i in range(bodies)]
    for i, pos in enumerate(rng_positions):
        world.add_object("steel_ball" if i % 2 else "rubber_ball", i + 1, position=pos)
    d = Dispatcher(world)
    d._cmd_send_transforms("always")
    t0 = time.perf_counter()
    for _ in range(steps):
        d.execute([])
    elapsed = time.perf_counter() - t0
    return steps / elapsed
