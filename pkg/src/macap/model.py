"""Channel, input-distribution, and face types plus the channel file format.

Index convention used everywhere in this package: an input tuple
``(i_1, ..., i_N)`` maps to the flat column index with user 1 slowest and
user N fastest, i.e. the same block structure as the Kronecker product of
the per-user probability vectors.  Faces are masks over symbol indices;
probability vectors always keep their full length, with zeros at masked-out
positions.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ChannelFormatError, DegenerateInputError

_SUM_TOL = 1e-12
_FILE_SUM_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    # always copy: freezing a caller's buffer in place would be a surprise
    a = np.array(a, dtype=np.float64, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MacType:
    """Type ``(n_1, ..., n_N; m)`` of a multiple-access channel."""

    n: tuple[int, ...]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "m", int(self.m))
        if len(self.n) < 1:
            raise ValueError("need at least one user")
        if any(v < 2 for v in self.n):
            raise ValueError(f"every input alphabet size must be >= 2, got {self.n}")
        if self.m < 2:
            raise ValueError(f"output alphabet size must be >= 2, got {self.m}")

    @property
    def num_users(self) -> int:
        return len(self.n)

    @property
    def num_inputs(self) -> int:
        return math.prod(self.n)

    def __str__(self) -> str:
        return " ".join(str(v) for v in self.n) + f" : {self.m}"


def canonical_index(symbols: Sequence[int], mac_type: MacType) -> int:
    """Flat column index of the input tuple, user 1 slowest, user N fastest."""
    if len(symbols) != mac_type.num_users:
        raise ValueError(f"expected {mac_type.num_users} symbols, got {len(symbols)}")
    idx = 0
    for k, (i, n) in enumerate(zip(symbols, mac_type.n)):
        i = int(i)
        if not 0 <= i < n:
            raise ValueError(f"symbol {i} of user {k + 1} out of range [0, {n})")
        idx = idx * n + i
    return idx


def index_tuple(idx: int, mac_type: MacType) -> tuple[int, ...]:
    """Inverse of :func:`canonical_index`."""
    if not 0 <= idx < mac_type.num_inputs:
        raise ValueError(f"index {idx} out of range [0, {mac_type.num_inputs})")
    out = []
    for n in reversed(mac_type.n):
        out.append(idx % n)
        idx //= n
    return tuple(reversed(out))


@dataclass(frozen=True)
class ChannelMatrix:
    """Transmission probabilities as a dense ``m x prod(n_k)`` table.

    Column ``canonical_index(i_1, ..., i_N)`` holds the output distribution
    ``P(. | i_1, ..., i_N)``.  Columns sum to one, no output row is all zero.
    """

    mac_type: MacType
    probs: np.ndarray

    def __post_init__(self):
        probs = _readonly(self.probs)
        object.__setattr__(self, "probs", probs)
        m, cols = probs.shape
        if m != self.mac_type.m or cols != self.mac_type.num_inputs:
            raise ValueError(
                f"table shape {probs.shape} does not match type ({self.mac_type})"
            )
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("transmission probabilities must lie in [0, 1]")
        colsums = probs.sum(axis=0)
        worst = int(np.argmax(np.abs(colsums - 1.0)))
        if abs(colsums[worst] - 1.0) > _SUM_TOL:
            raise ValueError(
                f"column {index_tuple(worst, self.mac_type)} sums to {colsums[worst]!r}"
            )
        zero_rows = np.flatnonzero(~(probs > 0.0).any(axis=1))
        if zero_rows.size:
            raise ValueError(f"output row {zero_rows[0]} is all zero")

    @cached_property
    def log_probs(self) -> np.ndarray:
        """log P with zeros where P is zero (those entries are never read)."""
        with np.errstate(divide="ignore"):
            lp = np.where(self.probs > 0.0, np.log(self.probs), 0.0)
        return _readonly(lp)

    @cached_property
    def column_entropy_terms(self) -> np.ndarray:
        """Per column: sum_j P log P (the 0 log 0 terms dropped)."""
        return _readonly(np.sum(self.probs * self.log_probs, axis=0))

    @cached_property
    def tensor(self) -> np.ndarray:
        """The table reshaped to ``(m, n_1, ..., n_N)``."""
        return _readonly(self.probs.reshape((self.mac_type.m, *self.mac_type.n)))


@dataclass(frozen=True)
class IpdProduct:
    """One probability vector per user, each on its own simplex."""

    parts: tuple[np.ndarray, ...]

    def __post_init__(self):
        parts = tuple(_readonly(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        for k, p in enumerate(parts):
            if p.ndim != 1 or p.size < 2:
                raise ValueError(f"user {k + 1} vector must be 1-D with length >= 2")
            if np.any(p < 0.0):
                raise ValueError(f"user {k + 1} vector has a negative entry")
            if abs(float(p.sum()) - 1.0) > _SUM_TOL:
                raise ValueError(f"user {k + 1} vector sums to {float(p.sum())!r}")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(p.size for p in self.parts)

    def matches(self, mac_type: MacType) -> bool:
        return self.sizes == mac_type.n

    def require_type(self, mac_type: MacType) -> None:
        if not self.matches(mac_type):
            raise ValueError(
                f"input distribution sizes {self.sizes} do not match type ({mac_type})"
            )

    def joint_weights(self) -> np.ndarray:
        """Kronecker product of the per-user vectors (user N fastest)."""
        w = self.parts[0]
        for p in self.parts[1:]:
            w = np.kron(w, p)
        return w

    def concat(self) -> np.ndarray:
        return np.concatenate(self.parts)

    @classmethod
    def from_concat(cls, flat: np.ndarray, sizes: Sequence[int]) -> "IpdProduct":
        parts, off = [], 0
        for n in sizes:
            parts.append(np.asarray(flat[off : off + n], dtype=np.float64))
            off += n
        return cls(tuple(parts))

    @classmethod
    def uniform(cls, mac_type: MacType) -> "IpdProduct":
        return cls(tuple(np.full(n, 1.0 / n) for n in mac_type.n))

    @classmethod
    def vertex(cls, mac_type: MacType, symbols: Sequence[int]) -> "IpdProduct":
        parts = []
        for k, (i, n) in enumerate(zip(symbols, mac_type.n)):
            if not 0 <= int(i) < n:
                raise ValueError(f"symbol {i} of user {k + 1} out of range [0, {n})")
            v = np.zeros(n)
            v[int(i)] = 1.0
            parts.append(v)
        if len(parts) != mac_type.num_users:
            raise ValueError("wrong number of symbols for the channel type")
        return cls(tuple(parts))

    @classmethod
    def random(cls, mac_type: MacType, rng: np.random.Generator) -> "IpdProduct":
        return cls(tuple(rng.dirichlet(np.ones(n)) for n in mac_type.n))


@dataclass(frozen=True)
class FaceProduct:
    """Per-user sorted symbol subsets defining a sub-domain F_1 x ... x F_N."""

    supports: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        supports = tuple(tuple(int(i) for i in s) for s in self.supports)
        object.__setattr__(self, "supports", supports)
        for k, s in enumerate(supports):
            if not s:
                raise ValueError(f"user {k + 1} support is empty")
            if list(s) != sorted(set(s)):
                raise ValueError(f"user {k + 1} support must be sorted and duplicate-free")
            if s[0] < 0:
                raise ValueError(f"user {k + 1} support has a negative index")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.supports)

    def validate_for(self, mac_type: MacType) -> None:
        if len(self.supports) != mac_type.num_users:
            raise ValueError("face has the wrong number of users")
        for k, (s, n) in enumerate(zip(self.supports, mac_type.n)):
            if s[-1] >= n:
                raise ValueError(f"user {k + 1} support {s} exceeds alphabet size {n}")

    def is_full(self, mac_type: MacType) -> bool:
        return all(s == tuple(range(n)) for s, n in zip(self.supports, mac_type.n))

    def masks(self, mac_type: MacType) -> tuple[np.ndarray, ...]:
        self.validate_for(mac_type)
        out = []
        for s, n in zip(self.supports, mac_type.n):
            mask = np.zeros(n, dtype=bool)
            mask[list(s)] = True
            out.append(mask)
        return tuple(out)

    def barycenter(self, mac_type: MacType) -> IpdProduct:
        self.validate_for(mac_type)
        parts = []
        for s, n in zip(self.supports, mac_type.n):
            v = np.zeros(n)
            v[list(s)] = 1.0 / len(s)
            parts.append(v)
        return IpdProduct(tuple(parts))

    @classmethod
    def full(cls, mac_type: MacType) -> "FaceProduct":
        return cls(tuple(tuple(range(n)) for n in mac_type.n))

    def __str__(self) -> str:
        return " ".join(
            "user%d={%s}" % (k + 1, ",".join(str(i) for i in s))
            for k, s in enumerate(self.supports)
        )


def minimum_face(p: IpdProduct, zero_tol: float = 1e-12) -> FaceProduct:
    """Smallest face containing ``p``: per user, the symbols with mass > zero_tol."""
    supports = []
    for k, part in enumerate(p.parts):
        s = tuple(int(i) for i in np.flatnonzero(part > zero_tol))
        if not s:
            raise DegenerateInputError(
                f"user {k + 1} has no mass above {zero_tol!r}"
            )
        supports.append(s)
    return FaceProduct(tuple(supports))


def restrict(p: IpdProduct, face: FaceProduct, tol: float = 1e-12) -> IpdProduct:
    """Check that ``p`` lives on ``face`` and return it unchanged (embedding).

    Faces never change vector lengths; this merely validates that the mass
    outside each support is below ``tol``.
    """
    if len(face.supports) != len(p.parts):
        raise ValueError("face has the wrong number of users")
    for k, (part, s) in enumerate(zip(p.parts, face.supports)):
        if s[-1] >= part.size:
            raise ValueError(f"user {k + 1} support {s} exceeds vector length {part.size}")
        outside = 1.0 - float(part[list(s)].sum())
        if outside > tol:
            raise ValueError(
                f"user {k + 1} has mass {outside!r} outside support {s}"
            )
    return p


# ---------------------------------------------------------------------------
# Channel file format
#
#   line 1: `type n_1 n_2 ... n_N : m`
#   then exactly prod(n_k) lines in canonical index order, each
#   `i_1 ... i_N : P(0|.) ... P(m-1|.)`.
#   Lines starting with `#` are comments.
# ---------------------------------------------------------------------------


def _tokenize(line: str) -> list[str]:
    return line.replace(":", " : ").split()


def load_channel(source: bytes | str | IO) -> ChannelMatrix:
    """Parse and validate a channel in the text format described above.

    Column sums are accepted within 1e-9 of one and renormalized; the
    renormalization is skipped when a column is already exact so that
    save/load round-trips are bit-exact.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines.append((lineno, stripped))
    if not lines:
        raise ChannelFormatError("empty channel file")

    lineno, header = lines[0]
    tokens = _tokenize(header)
    if tokens[0] != "type" or ":" not in tokens:
        raise ChannelFormatError(f"line {lineno}: expected `type n_1 ... n_N : m`")
    sep = tokens.index(":")
    try:
        n = tuple(int(t) for t in tokens[1:sep])
        m = int(tokens[sep + 1])
        if len(tokens) != sep + 2:
            raise ValueError
    except (ValueError, IndexError):
        raise ChannelFormatError(f"line {lineno}: malformed type line {header!r}") from None
    try:
        mac_type = MacType(n, m)
    except ValueError as exc:
        raise ChannelFormatError(f"line {lineno}: {exc}") from None

    body = lines[1:]
    if len(body) != mac_type.num_inputs:
        raise ChannelFormatError(
            f"expected {mac_type.num_inputs} probability lines, found {len(body)}"
        )

    probs = np.empty((mac_type.m, mac_type.num_inputs))
    for pos, (lineno, line) in enumerate(body):
        tokens = _tokenize(line)
        expected = index_tuple(pos, mac_type)
        nu = mac_type.num_users
        if len(tokens) != nu + 1 + mac_type.m or tokens[nu] != ":":
            raise ChannelFormatError(f"line {lineno}: malformed probability line {line!r}")
        try:
            prefix = tuple(int(t) for t in tokens[:nu])
            values = [float(t) for t in tokens[nu + 1 :]]
        except ValueError:
            raise ChannelFormatError(f"line {lineno}: malformed probability line {line!r}") from None
        if prefix != expected:
            raise ChannelFormatError(
                f"line {lineno}: input tuple {prefix} out of order, expected {expected}"
            )
        probs[:, pos] = values

    if np.any(probs < -1e-12) or np.any(probs > 1.0 + _FILE_SUM_TOL):
        j, c = np.unravel_index(int(np.argmax(np.abs(probs - 0.5))), probs.shape)
        raise ChannelFormatError(
            f"probability {probs[j, c]!r} for output {j}, input {index_tuple(int(c), mac_type)} "
            "outside [0, 1]"
        )
    probs = np.clip(probs, 0.0, 1.0)

    colsums = probs.sum(axis=0)
    worst = int(np.argmax(np.abs(colsums - 1.0)))
    if abs(colsums[worst] - 1.0) > _FILE_SUM_TOL:
        raise ChannelFormatError(
            f"column for input {index_tuple(worst, mac_type)} sums to {colsums[worst]!r}, "
            f"further than {_FILE_SUM_TOL} from 1"
        )
    # Renormalize only the columns that need it, keeping exact files bit-exact.
    needs = np.abs(colsums - 1.0) > 1e-15
    if np.any(needs):
        probs[:, needs] /= colsums[needs]

    zero_rows = np.flatnonzero(~(probs > 0.0).any(axis=1))
    if zero_rows.size:
        raise ChannelFormatError(f"output row {zero_rows[0]} is all zero")

    return ChannelMatrix(mac_type, probs)


def save_channel(channel: ChannelMatrix, comment: str | None = None) -> str:
    """Render a channel in the text format at 17 significant digits."""
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(f"type {channel.mac_type}\n")
    for c in range(channel.mac_type.num_inputs):
        prefix = " ".join(str(i) for i in index_tuple(c, channel.mac_type))
        values = " ".join("%.17g" % v for v in channel.probs[:, c])
        buf.write(f"{prefix} : {values}\n")
    return buf.getvalue()


def read_channel(path: str) -> ChannelMatrix:
    with open(path, "rb") as fh:
        return load_channel(fh)


def parse_mac_type(text: str) -> MacType:
    """Parse ``"n_1 ... n_N : m"`` (the file header without the `type` word)."""
    tokens = _tokenize(text)
    if ":" not in tokens:
        raise ValueError(f"malformed type {text!r}, expected `n_1 ... n_N : m`")
    sep = tokens.index(":")
    if sep == 0 or len(tokens) != sep + 2:
        raise ValueError(f"malformed type {text!r}, expected `n_1 ... n_N : m`")
    return MacType(tuple(int(t) for t in tokens[:sep]), int(tokens[sep + 1]))
