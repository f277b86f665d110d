"""Snapshot acquisition: random measurement directions, simulated single-qubit
measurements with optional readout error, and the compact 3MN-number store.

One snapshot records, for every qubit, an outcome m in {-1,+1} and the
measurement direction angles (theta, phi).  The collection of M snapshots is
the approximate state 𝒮 from which all estimators are computed.

Randomness is counter based: the uniforms feeding snapshot j are a pure
function of (seed, j), so acquisition order and batch size never change the
result and any subrange can be regenerated independently.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import Philox

from .statevector import Statevector, Circuit, run_circuit

__all__ = [
    "Direction",
    "SnapshotRecord",
    "NoiseModel",
    "ApproximateState",
    "SnapshotFormatError",
    "sample_direction",
    "measurement_unitary",
    "kernel_matrix",
    "acquire_snapshot",
    "snapshots_from_state",
    "build_approximate_state",
    "serialize",
    "deserialize",
    "save_snapshots",
    "load_snapshots",
    "state_to_json_dict",
    "state_from_json_dict",
]

_MAGIC = b"AQST"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")  # magic, version, n_qubits, n_snapshots
_RECORD_DTYPE = np.dtype([("m", "<i1"), ("theta", "<f8"), ("phi", "<f8")])


class SnapshotFormatError(ValueError):
    """Raised on bad magic, version mismatch, or truncated snapshot data."""


@dataclass(frozen=True)
class Direction:
    """Measurement direction on the unit sphere, stored as angles."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta {self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    def unit_vector(self) -> np.ndarray:
        sin_t = math.sin(self.theta)
        return np.array(
            [math.cos(self.phi) * sin_t, math.sin(self.phi) * sin_t, math.cos(self.theta)]
        )


@dataclass(frozen=True)
class SnapshotRecord:
    """Per-qubit (outcome, direction) pairs for one snapshot."""

    outcomes: tuple[int, ...]
    directions: tuple[Direction, ...]

    def __post_init__(self):
        if len(self.outcomes) != len(self.directions):
            raise ValueError("outcomes and directions must have equal length")
        if any(m not in (-1, 1) for m in self.outcomes):
            raise ValueError("outcomes must be -1 or +1")

    def __len__(self):
        return len(self.outcomes)


@dataclass(frozen=True)
class NoiseModel:
    """Independent per-qubit readout flip probabilities."""

    p_err: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.p_err)
        if any(not 0.0 <= p < 1.0 for p in probs):
            raise ValueError("flip probabilities must lie in [0, 1)")
        object.__setattr__(self, "p_err", probs)

    @classmethod
    def uniform(cls, p: float, n_qubits: int) -> "NoiseModel":
        return cls((p,) * n_qubits)

    @classmethod
    def none(cls, n_qubits: int) -> "NoiseModel":
        return cls((0.0,) * n_qubits)

    def array(self) -> np.ndarray:
        return np.array(self.p_err)


class ApproximateState:
    """M snapshots of an N-qubit state: three numbers per qubit per snapshot.

    Arrays are read only; slicing helpers share the underlying buffers.
    Equality covers the persisted payload (arrays, noise, seed); the circuit
    hash is advisory metadata carried only by the JSON export.
    """

    __slots__ = ("n_qubits", "outcomes", "thetas", "phis", "p_err", "seed",
                 "circuit_hash", "_weights")

    def __init__(
        self,
        outcomes: np.ndarray,
        thetas: np.ndarray,
        phis: np.ndarray,
        p_err: np.ndarray | Sequence[float] | None = None,
        seed: int = 0,
        circuit_hash: str | None = None,
    ):
        outcomes = np.asarray(outcomes, dtype=np.int8)
        thetas = np.asarray(thetas, dtype=np.float64)
        phis = np.asarray(phis, dtype=np.float64)
        if outcomes.ndim != 2 or outcomes.shape != thetas.shape or outcomes.shape != phis.shape:
            raise ValueError("outcomes/thetas/phis must share shape (M, N)")
        if outcomes.shape[0] < 1 or outcomes.shape[1] < 1:
            raise ValueError("need at least one snapshot of at least one qubit")
        if not np.all(np.abs(outcomes) == 1):
            raise ValueError("outcomes must be -1 or +1")
        n = outcomes.shape[1]
        p = np.zeros(n) if p_err is None else np.asarray(p_err, dtype=np.float64)
        if p.shape != (n,):
            raise ValueError("p_err must have one entry per qubit")
        for arr in (outcomes, thetas, phis, p):
            arr.setflags(write=False)
        self.n_qubits = n
        self.outcomes = outcomes
        self.thetas = thetas
        self.phis = phis
        self.p_err = p
        self.seed = int(seed)
        self.circuit_hash = circuit_hash
        self._weights = None

    @property
    def n_snapshots(self) -> int:
        return self.outcomes.shape[0]

    def __len__(self):
        return self.n_snapshots

    def record(self, index: int) -> SnapshotRecord:
        return SnapshotRecord(
            tuple(int(m) for m in self.outcomes[index]),
            tuple(
                Direction(float(t), float(p))
                for t, p in zip(self.thetas[index], self.phis[index])
            ),
        )

    def prefix(self, n_snapshots: int) -> "ApproximateState":
        """First ``n_snapshots`` snapshots, sharing the underlying arrays."""
        if not 1 <= n_snapshots <= self.n_snapshots:
            raise ValueError("prefix length out of range")
        sub = ApproximateState(
            self.outcomes[:n_snapshots],
            self.thetas[:n_snapshots],
            self.phis[:n_snapshots],
            self.p_err,
            self.seed,
            self.circuit_hash,
        )
        if self._weights is not None:
            sub._weights = self._weights[:n_snapshots]
        return sub

    def __eq__(self, other):
        if not isinstance(other, ApproximateState):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.seed == other.seed
            and np.array_equal(self.outcomes, other.outcomes)
            and np.array_equal(self.thetas, other.thetas)
            and np.array_equal(self.phis, other.phis)
            and np.array_equal(self.p_err, other.p_err)
        )

    def __repr__(self):
        return (
            f"ApproximateState(n_qubits={self.n_qubits}, "
            f"n_snapshots={self.n_snapshots}, seed={self.seed})"
        )


def sample_direction(rng: np.random.Generator) -> Direction:
    """Uniform direction on the unit sphere: phi ~ U[0,2pi), cos(theta) ~ U[-1,1]."""
    u_phi, u_cos = rng.random(2)
    return Direction(math.acos(2.0 * u_cos - 1.0), 2.0 * math.pi * u_phi)


def measurement_unitary(direction: Direction) -> np.ndarray:
    """Unitary rotating the sigma.n eigenbasis onto the computational basis.

    U = exp(i*theta/2 * sigma.n_perp) with n_perp = (-sin phi, cos phi, 0),
    so that U (sigma.n) U^dag = sigma_z.
    """
    half = 0.5 * direction.theta
    c, s = math.cos(half), math.sin(half)
    phase = complex(math.cos(direction.phi), math.sin(direction.phi))
    return np.array([[c, s * phase.conjugate()], [-s * phase, c]])


def kernel_matrix(m: int, direction: Direction) -> np.ndarray:
    """Single-qubit reconstruction kernel (I + 3*m*sigma.n)/2."""
    if m not in (-1, 1):
        raise ValueError("m must be -1 or +1")
    nx, ny, nz = direction.unit_vector()
    f = 1.5 * m
    return np.array(
        [
            [0.5 + f * nz, f * (nx - 1j * ny)],
            [f * (nx + 1j * ny), 0.5 - f * nz],
        ]
    )


def acquire_snapshot(
    psi: Statevector,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
    directions: Sequence[Direction] | None = None,
) -> SnapshotRecord:
    """Measure every qubit of ``psi`` once along random (or given) directions.

    The state itself is never mutated; rotation and sampling happen on a
    working copy, which simulates a fresh preparation per snapshot.
    """
    n = psi.n_qubits
    if directions is None:
        directions = [sample_direction(rng) for _ in range(n)]
    elif len(directions) != n:
        raise ValueError("need one direction per qubit")
    work = psi.amps.copy()
    for qubit, direction in enumerate(directions):
        view = work.reshape(-1, 2, 1 << qubit)
        u = measurement_unitary(direction)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
        view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    probs = np.abs(work) ** 2
    probs /= probs.sum()
    z = int(rng.choice(probs.size, p=probs))
    outcomes = np.array([1 - 2 * ((z >> k) & 1) for k in range(n)], dtype=np.int8)
    p_err = (noise or NoiseModel.none(n)).array()
    flips = rng.random(n) < p_err
    outcomes = np.where(flips, -outcomes, outcomes)
    return SnapshotRecord(tuple(int(m) for m in outcomes), tuple(directions))


def _row_blocks(n_qubits: int) -> int:
    # 4N uniforms per snapshot (phi, cos theta, per-qubit outcome picks,
    # flips), an exact whole number of Philox blocks of 4 words.
    return n_qubits


def _snapshot_uniforms(seed: int, start: int, count: int, n_qubits: int) -> np.ndarray:
    """Uniform table for snapshots [start, start+count), shape (count, 4N).

    Row j is a pure function of (seed, start + j): each snapshot owns a fixed
    range of Philox counter blocks keyed by the seed.
    """
    blocks = _row_blocks(n_qubits)
    bits = Philox(key=seed, counter=start * blocks).random_raw(count * blocks * 4)
    words = bits.reshape(count, blocks * 4)
    return (words >> np.uint64(11)) * (2.0**-53)


def snapshots_from_state(
    psi: Statevector,
    n_snapshots: int,
    seed: int,
    noise: NoiseModel | None = None,
    batch_size: int | None = None,
    circuit_hash: str | None = None,
) -> ApproximateState:
    """Acquire ``n_snapshots`` independent snapshots of a known pure state.

    Rotation, sampling, and readout flips are vectorized over snapshot
    batches; the result is independent of ``batch_size`` (None picks a size
    that keeps the working buffer around 128 MiB).
    """
    if n_snapshots < 1:
        raise ValueError("n_snapshots must be at least 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    n = psi.n_qubits
    dim = 1 << n
    if batch_size is None:
        batch_size = min(1024, max(8, (1 << 23) // dim))
    p_err = (noise or NoiseModel.none(n)).array()
    if p_err.shape != (n,):
        raise ValueError("noise model does not match the qubit count")

    outcomes = np.empty((n_snapshots, n), dtype=np.int8)
    thetas = np.empty((n_snapshots, n))
    phis = np.empty((n_snapshots, n))

    for start in range(0, n_snapshots, batch_size):
        rows = min(batch_size, n_snapshots - start)
        u = _snapshot_uniforms(seed, start, rows, n)
        phi = 2.0 * math.pi * u[:, :n]
        theta = np.arccos(2.0 * u[:, n : 2 * n] - 1.0)
        picks = u[:, 2 * n : 3 * n]
        flip_u = u[:, 3 * n :]

        half = 0.5 * theta
        cos_h, sin_h = np.cos(half), np.sin(half)
        phase = np.exp(1j * phi)
        bits = np.empty((rows, n), dtype=np.int8)

        # Rotate the highest remaining qubit, sample its bit from the row
        # marginal, project onto that branch, and recurse on half the
        # amplitudes; equivalent to sampling the jointly rotated state.
        work = np.broadcast_to(psi.amps, (rows, dim)).copy()
        for k in range(n - 1, -1, -1):
            view = work.reshape(rows, 2, -1)
            a0, a1 = view[:, 0, :], view[:, 1, :]
            u00 = cos_h[:, k, None]
            u01 = (sin_h[:, k] * phase[:, k].conj())[:, None]
            u10 = (-sin_h[:, k] * phase[:, k])[:, None]
            branch0 = u00 * a0 + u01 * a1
            branch1 = u10 * a0 + u00 * a1
            f0 = branch0.view(np.float64)
            f1 = branch1.view(np.float64)
            p0 = np.einsum("rh,rh->r", f0, f0)
            p1 = np.einsum("rh,rh->r", f1, f1)
            take1 = picks[:, k] * (p0 + p1) >= p0
            bits[:, k] = take1
            work = np.where(take1[:, None], branch1, branch0)

        m = 1 - 2 * bits
        m = np.where(flip_u < p_err[None, :], -m, m)

        outcomes[start : start + rows] = m
        thetas[start : start + rows] = theta
        phis[start : start + rows] = phi

    return ApproximateState(outcomes, thetas, phis, p_err, seed, circuit_hash)


def build_approximate_state(
    circuit: Circuit,
    n_snapshots: int,
    seed: int,
    noise: NoiseModel | None = None,
    batch_size: int | None = None,
) -> ApproximateState:
    """Prepare the circuit's state once and collect M independent snapshots.

    Pure-state simulation permits reusing the prepared amplitudes; each
    snapshot is semantically a fresh preparation.
    """
    psi = run_circuit(circuit)
    return snapshots_from_state(
        psi, n_snapshots, seed, noise, batch_size, circuit_hash=circuit.content_hash()
    )


# --- binary format ----------------------------------------------------------
#
# Little endian: magic "AQST", version u16, N u32, M u64, p_err N x f64,
# seed u64, then M*N records of (m i8, theta f64, phi f64) in snapshot-major
# order.  Payload size = (26 + 8N) + 17*M*N bytes.


def serialize(state: ApproximateState) -> bytes:
    buf = io.BytesIO()
    buf.write(_HEADER.pack(_MAGIC, _FORMAT_VERSION, state.n_qubits, state.n_snapshots))
    buf.write(state.p_err.astype("<f8").tobytes())
    buf.write(struct.pack("<Q", state.seed))
    records = np.empty(state.n_snapshots * state.n_qubits, dtype=_RECORD_DTYPE)
    records["m"] = state.outcomes.reshape(-1)
    records["theta"] = state.thetas.reshape(-1)
    records["phi"] = state.phis.reshape(-1)
    buf.write(records.tobytes())
    return buf.getvalue()


def deserialize(data: bytes) -> ApproximateState:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, version, n, m = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != _FORMAT_VERSION:
        raise SnapshotFormatError(f"unsupported format version {version}")
    offset = _HEADER.size
    expected = offset + 8 * n + 8 + _RECORD_DTYPE.itemsize * m * n
    if len(data) != expected:
        raise SnapshotFormatError(
            f"payload size {len(data)} does not match header ({expected} expected)"
        )
    p_err = np.frombuffer(data, dtype="<f8", count=n, offset=offset).copy()
    offset += 8 * n
    (seed,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, count=m * n, offset=offset)
    return ApproximateState(
        records["m"].reshape(m, n).copy(),
        records["theta"].reshape(m, n).copy(),
        records["phi"].reshape(m, n).copy(),
        p_err,
        seed,
    )


def save_snapshots(state: ApproximateState, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(state))


def load_snapshots(path) -> ApproximateState:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def state_to_json_dict(state: ApproximateState) -> dict:
    """JSON export for interop and debugging; carries full metadata."""
    return {
        "format_version": _FORMAT_VERSION,
        "n_qubits": state.n_qubits,
        "n_snapshots": state.n_snapshots,
        "seed": state.seed,
        "p_err": state.p_err.tolist(),
        "circuit_hash": state.circuit_hash,
        "outcomes": state.outcomes.tolist(),
        "thetas": state.thetas.tolist(),
        "phis": state.phis.tolist(),
    }


def state_from_json_dict(data: dict) -> ApproximateState:
    try:
        return ApproximateState(
            np.array(data["outcomes"], dtype=np.int8),
            np.array(data["thetas"]),
            np.array(data["phis"]),
            np.array(data["p_err"]),
            int(data["seed"]),
            data.get("circuit_hash"),
        )
    except (KeyError, TypeError) as exc:
        raise SnapshotFormatError(f"malformed snapshot JSON: {exc}") from exc
