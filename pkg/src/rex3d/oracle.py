"""Black-box classifier interface: in-process synthetic oracles and a
subprocess wire-protocol client, plus the model-call budget meter."""
from __future__ import annotations

import json
import math
import select
import shlex
import subprocess
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExhausted,
    OracleTimeout,
    OracleUnavailable,
    ProtocolError,
)
from .partition import Region
from .volume import VoxelGrid


@dataclass(frozen=True)
class OracleVerdict:
    label: int
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class Target:
    """Label of the unmodified input; fixed once per explanation run."""

    label: int


@dataclass
class QueryBudget:
    """Counts model invocations against a hard limit (a batch may finish)."""

    limit: int
    used: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False,
                                  compare=False)

    def check(self) -> None:
        if self.used >= self.limit:
            raise BudgetExhausted(f"{self.used} calls used, limit {self.limit}")

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit

    def charge(self, n: int) -> None:
        with self._lock:
            self.used += n


def _squash(stat: float, tau: float) -> float:
    return 1.0 / (1.0 + math.exp(-10.0 * (stat - tau)))


class SyntheticOracle:
    """Pure deterministic classifier: label 1 iff the predicate holds.

    reads: the region(s) of the input the predicate depends on, or None for
    the whole volume. Used by the locality audit.
    """

    def __init__(self, fn, reads: Region | None, name: str):
        self._fn = fn
        self.reads = reads
        self.name = name

    def classify(self, data: np.ndarray) -> OracleVerdict:
        return self._fn(data)

    def classify_batch(self, volumes: list[np.ndarray]) -> list[OracleVerdict]:
        return [self._fn(v) for v in volumes]

    def close(self) -> None:
        pass


def region_mean_oracle(region: Region, tau: float) -> SyntheticOracle:
    """Label 1 iff the mean intensity over `region` exceeds tau (strict)."""
    sl = region.slices()

    def fn(data: np.ndarray) -> OracleVerdict:
        stat = float(data[sl].mean(dtype=np.float64))
        return OracleVerdict(int(stat > tau), _squash(stat, tau))

    return SyntheticOracle(fn, region, f"region-mean(tau={tau})")


def sphere_oracle(center, radius: float, tau: float,
                  dims=None) -> SyntheticOracle:
    """Label 1 iff the mean intensity inside the Euclidean ball exceeds tau."""
    center = tuple(float(c) for c in center)
    lo = [max(0, math.ceil(c - radius)) for c in center]
    hi = [math.floor(c + radius) for c in center]
    if dims is not None:
        hi = [min(h, d - 1) for h, d in zip(hi, dims)]
    reads = Region(*(tuple((l, h + 1)) for l, h in zip(lo, hi)))
    ball_mask = None

    def fn(data: np.ndarray) -> OracleVerdict:
        nonlocal ball_mask
        if ball_mask is None:
            xs = np.arange(data.shape[0])[:, None, None]
            ys = np.arange(data.shape[1])[None, :, None]
            zs = np.arange(data.shape[2])[None, None, :]
            dist2 = ((xs - center[0]) ** 2 + (ys - center[1]) ** 2
                     + (zs - center[2]) ** 2)
            ball_mask = dist2 <= radius * radius
        stat = float(data[ball_mask].mean(dtype=np.float64))
        return OracleVerdict(int(stat > tau), _squash(stat, tau))

    return SyntheticOracle(fn, reads, f"sphere(c={center},r={radius},tau={tau})")


def conjunction_oracle(members: list[tuple[Region, float]]) -> SyntheticOracle:
    """Label 1 iff every (region, tau) mean-threshold predicate holds."""
    if not members:
        raise ValueError("conjunction needs at least one member")
    rows = [r.row for r, _ in members]
    cols = [r.col for r, _ in members]
    deps = [r.depth for r, _ in members]
    bbox = Region(
        (min(s for s, _ in rows), max(e for _, e in rows)),
        (min(s for s, _ in cols), max(e for _, e in cols)),
        (min(s for s, _ in deps), max(e for _, e in deps)),
    )

    def fn(data: np.ndarray) -> OracleVerdict:
        confs, labels = [], []
        for region, tau in members:
            stat = float(data[region.slices()].mean(dtype=np.float64))
            labels.append(stat > tau)
            confs.append(_squash(stat, tau))
        return OracleVerdict(int(all(labels)), min(confs))

    return SyntheticOracle(fn, bbox, f"conjunction({len(members)})")


def make_synthetic_oracle(kind: str, **kwargs) -> SyntheticOracle:
    if kind == "region-mean-threshold":
        return region_mean_oracle(kwargs["region"], kwargs["tau"])
    if kind == "sphere-lesion":
        return sphere_oracle(kwargs["center"], kwargs["radius"], kwargs["tau"],
                             kwargs.get("dims"))
    if kind == "conjunction":
        return conjunction_oracle(kwargs["members"])
    raise ValueError(f"unknown oracle kind {kind!r}")


def parse_oracle(text: str, dims) -> SyntheticOracle:
    """Parse CLI oracle syntax.

    "sphere:cx,cy,cz,r,tau" | "region:rs,re,cs,ce,ds,de,tau"
    | "conj:<region args>;<region args>;..."
    """
    def region_member(args: str) -> tuple[Region, float]:
        vals = [float(v) for v in args.split(",")]
        if len(vals) != 7:
            raise ValueError(f"region oracle needs 7 numbers, got {args!r}")
        region = Region((int(vals[0]), int(vals[1])),
                        (int(vals[2]), int(vals[3])),
                        (int(vals[4]), int(vals[5])))
        return region, vals[6]

    kind, _, rest = text.partition(":")
    if kind == "sphere":
        vals = [float(v) for v in rest.split(",")]
        if len(vals) != 5:
            raise ValueError(f"sphere oracle needs 5 numbers, got {rest!r}")
        return sphere_oracle(vals[:3], vals[3], vals[4], dims)
    if kind == "region":
        region, tau = region_member(rest)
        return region_mean_oracle(region, tau)
    if kind == "conj":
        return conjunction_oracle([region_member(m) for m in rest.split(";")])
    raise ValueError(f"unrecognized oracle spec {text!r}")


def classify_batch(oracle, mutants: list, budget: QueryBudget | None = None
                   ) -> list[OracleVerdict]:
    """Query the oracle on a batch; order-preserving; charges the budget."""
    if not mutants:
        raise ValueError("empty batch")
    arrays = [m.data if isinstance(m, VoxelGrid) else m for m in mutants]
    dims = arrays[0].shape
    for a in arrays:
        if a.shape != dims:
            raise ValueError(f"batch dims mismatch: {a.shape} != {dims}")
    if budget is not None:
        budget.check()
        budget.charge(len(arrays))
    return oracle.classify_batch(arrays)


class ExternalOracle:
    """Client side of the stdin/stdout wire protocol.

    Handshake: {"proto":1,"shape":[x,y,z],"dtype":"f32le"}; per batch a
    {"id":n,"count":k} line followed by k*x*y*z*4 bytes of little-endian
    f32 voxel data, x-fastest; reply {"id":n,"labels":[...],"confidences":[...]}.
    {"id":-1} terminates the server.
    """

    def __init__(self, command: str, dims, timeout: float = 120.0):
        self.dims = tuple(int(d) for d in dims)
        self.timeout = timeout
        self.reads = None
        self.name = f"external({command})"
        self._next_id = 0
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise OracleUnavailable(f"cannot spawn {command!r}: {exc}") from exc
        self._handshake()

    def _send_line(self, obj: dict) -> None:
        try:
            self._proc.stdin.write((json.dumps(obj) + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise OracleUnavailable(f"oracle process died: {exc}") from exc

    def _read_line(self) -> dict:
        line = self._read_with_timeout()
        if not line:
            raise OracleUnavailable("oracle process closed its stdout")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(
                f"malformed JSON from oracle: {line!r}") from exc

    def _read_with_timeout(self) -> bytes:
        fd = self._proc.stdout
        ready, _, _ = select.select([fd], [], [], self.timeout)
        if not ready:
            self._proc.kill()
            raise OracleTimeout(f"no reply within {self.timeout} s")
        return fd.readline()

    def _handshake(self) -> None:
        self._send_line({"proto": 1, "shape": list(self.dims), "dtype": "f32le"})
        reply = self._read_line()
        if not reply.get("ok"):
            raise ProtocolError(f"handshake rejected: {reply}")

    def classify_batch(self, volumes: list[np.ndarray]) -> list[OracleVerdict]:
        with self._lock:
            batch_id = self._next_id
            self._next_id += 1
            self._send_line({"id": batch_id, "count": len(volumes)})
            try:
                for v in volumes:
                    self._proc.stdin.write(
                        np.asarray(v, dtype=np.float32).ravel(order="F")
                        .astype("<f4").tobytes())
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise OracleUnavailable(f"oracle process died: {exc}") from exc
            reply = self._read_line()
        if "error" in reply:
            raise ProtocolError(f"oracle error: {reply['error']}")
        if reply.get("id") != batch_id:
            raise ProtocolError(
                f"reply id {reply.get('id')} != request id {batch_id}")
        labels = reply.get("labels")
        confs = reply.get("confidences")
        if (not isinstance(labels, list) or not isinstance(confs, list)
                or len(labels) != len(volumes) or len(confs) != len(volumes)):
            raise ProtocolError(f"bad verdict payload: {reply}")
        return [OracleVerdict(int(l), float(c)) for l, c in zip(labels, confs)]

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send_line({"id": -1})
                self._proc.wait(timeout=10)
            except Exception:
                self._proc.kill()
        for stream in (self._proc.stdin, self._proc.stdout):
            if stream:
                stream.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def spawn_external_oracle(command: str, dims, timeout: float = 120.0
                          ) -> ExternalOracle:
    return ExternalOracle(command, dims, timeout)
