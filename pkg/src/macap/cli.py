"""Command-line front end.

Subcommands: capacity, kt-check, faces, verify, region, oracle.  Every
command emits a ``mac-report/1`` structured-text report: fixed key order,
numeric results in both nats and bits, inputs echoed.  Reports carry no
timestamps and are byte-reproducible given the same inputs and seed.

Exit codes: 0 success, 1 validation error, 2 guard refusal,
3 verification-suite failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys

import numpy as np

from . import __version__, backend, elementary, info, optimize, region, suites, verify
from .errors import GuardExceeded
from .model import (
    ChannelMatrix,
    FaceProduct,
    IpdProduct,
    minimum_face,
    parse_mac_type,
    read_channel,
)

SCHEMA = "mac-report/1"
_LN2 = math.log(2.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


class Report:
    """Ordered key/value document with nats+bits numeric pairs."""

    def __init__(self, command: str, argv: list[str]):
        self.lines: list[str] = [
            f"schema: {SCHEMA}",
            f"artifact: macap {__version__}",
            f"backend: {backend.BACKEND}",
            f"command: {command}",
            "argv: " + " ".join(argv),
        ]
        self._diagnostics: list[str] = []

    def kv(self, key: str, value) -> None:
        self.lines.append(f"{key}: {_fmt(value)}")

    def rate(self, key: str, nats: float) -> None:
        self.kv(f"{key}-nats", float(nats))
        self.kv(f"{key}-bits", float(nats) / _LN2)

    def ipd(self, key: str, p: IpdProduct) -> None:
        for k, part in enumerate(p.parts):
            body = ", ".join(repr(float(v)) for v in part)
            self.lines.append(f"{key}-user{k + 1}: [{body}]")

    def raw(self, line: str) -> None:
        self.lines.append(line)

    def diagnostic(self, line: str) -> None:
        self._diagnostics.append(line)

    def render(self) -> str:
        out = list(self.lines)
        out.append("diagnostics: " + (str(len(self._diagnostics)) if self._diagnostics else "0"))
        out.extend(f"  {d}" for d in self._diagnostics)
        return "\n".join(out) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str, report: Report) -> ChannelMatrix:
    channel = read_channel(path)
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    report.kv("channel-file", path)
    report.kv("channel-sha256", digest)
    report.kv("channel-type", channel.mac_type)
    return channel


def _parse_ipd(spec: str, channel: ChannelMatrix) -> IpdProduct:
    mac_type = channel.mac_type
    if spec == "uniform":
        return IpdProduct.uniform(mac_type)
    if spec.startswith("vertex:"):
        symbols = [int(t) for t in spec[len("vertex:") :].split(",")]
        return IpdProduct.vertex(mac_type, symbols)
    parts = []
    for k, chunk in enumerate(spec.split(";")):
        values = np.array([float(t) for t in chunk.split(",")])
        parts.append(values)
    p = IpdProduct(tuple(parts))
    p.require_type(mac_type)
    return p


def _parse_face(spec: str) -> FaceProduct:
    supports = tuple(
        tuple(int(t) for t in chunk.split(",")) for chunk in spec.split(";")
    )
    return FaceProduct(supports)


def build_parser() -> _Parser:
    parser = _Parser(prog="macap", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out", default=None, help="write the report to this path")

    p = sub.add_parser("capacity", help="channel capacity over the master face set")
    p.add_argument("file")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.add_argument("--kt-tol", type=float, default=1e-6)
    p.add_argument("--max-sweeps", type=int, default=10_000)
    p.add_argument("--inner", choices=["fixed-point", "pg"], default="fixed-point")
    p.add_argument("--face-cap", type=int, default=elementary.DEFAULT_FACE_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--oracle", type=int, default=None, metavar="RESOLUTION",
                   help="cross-check against the brute-force lattice")
    common(p)

    p = sub.add_parser("kt-check", help="Kuhn-Tucker report for a given distribution")
    p.add_argument("file")
    p.add_argument("--ipd", required=True,
                   help="uniform | vertex:i1,...,iN | p1,...;p2,...")
    p.add_argument("--kt-tol", type=float, default=1e-6)
    common(p)

    p = sub.add_parser("faces", help="enumerate the master elementary faces")
    p.add_argument("file")
    p.add_argument("--face-cap", type=int, default=elementary.DEFAULT_FACE_CAP)
    common(p)

    p = sub.add_parser("verify", help="run a randomized verification suite")
    p.add_argument("--suite", required=True, choices=sorted(suites.SUITES))
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--resolution", type=int, default=51)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("region", help="sample the capacity region")
    p.add_argument("file")
    p.add_argument("--resolution", type=int, default=33)
    p.add_argument("--orders", choices=["all", "1"], default="all")
    p.add_argument("--format", choices=["report", "csv"], default="report")
    common(p)

    p = sub.add_parser("oracle", help="brute-force lattice capacity")
    p.add_argument("file")
    p.add_argument("--resolution", type=int, default=51)
    p.add_argument("--face", default=None, help="restrict to a face: 0,1;0,2")
    common(p)

    return parser


def _cmd_capacity(args, argv) -> int:
    report = Report("capacity", argv)
    channel = _load(args.file, report)
    opts = optimize.OptimizeOptions(
        max_sweeps=args.max_sweeps,
        rel_tol=args.rel_tol,
        kt_tol=args.kt_tol,
        starts=args.starts,
        seed=args.seed,
        inner=args.inner,
    )
    report.kv("seed", args.seed)
    report.kv("starts", args.starts)
    report.kv("threads", args.threads if args.threads else 1)
    result = optimize.capacity(channel, opts, cap=args.face_cap, threads=args.threads)
    report.rate("capacity", result.capacity_nats)
    if result.truncated:
        report.kv("capacity-is-lower-bound", True)
        report.diagnostic("face enumeration truncated at the cap; the capacity is a lower bound")
    report.kv("achieving-face", result.achieving_face)
    report.ipd("optimal-ipd", result.optimal_ipd)
    kt = next(
        fr for fr in result.per_face if fr.face == result.achieving_face
    ).kt_report
    report.kv("kt-satisfied", kt.satisfied)
    report.kv("kt-max-equality-residual", kt.max_equality_residual)
    report.kv("kt-max-inequality-violation", kt.max_inequality_violation)
    report.kv("faces-optimized", len(result.per_face))
    report.kv("co-achievers", len(result.co_achievers))
    report.raw("per-face:")
    for fr in result.per_face:
        flags = []
        if not fr.kt_report.diagnostics.get("converged", True):
            flags.append("non-converged")
        suffix = (" [" + ",".join(flags) + "]") if flags else ""
        report.raw(
            f"  {fr.face} value-nats={_fmt(fr.value)} "
            f"value-bits={_fmt(fr.value / _LN2)} kt={_fmt(fr.kt_report.satisfied)}{suffix}"
        )
        if not fr.kt_report.diagnostics.get("converged", True):
            report.diagnostic(f"face {fr.face} did not converge within the sweep budget")
    if args.oracle:
        grid = verify.GridSpec.for_type(channel.mac_type, args.oracle)
        oracle = verify.grid_capacity(channel, grid)
        report.rate("oracle-value", oracle.value)
        report.kv("oracle-resolution", args.oracle)
        report.kv("oracle-bound", oracle.bound)
        report.kv("oracle-consistent", result.capacity_nats >= oracle.value - 1e-12)
    _emit(report.render(), args.out)
    return 0


def _cmd_kt_check(args, argv) -> int:
    report = Report("kt-check", argv)
    channel = _load(args.file, report)
    p = _parse_ipd(args.ipd, channel)
    kt = optimize.kt_check(channel, p, kt_tol=args.kt_tol)
    report.kv("ipd", args.ipd)
    report.rate("mutual-information", kt.capacity_estimate)
    report.kv("kt-tol", args.kt_tol)
    report.kv("kt-satisfied", kt.satisfied)
    report.kv("kt-max-equality-residual", kt.max_equality_residual)
    report.kv("kt-max-inequality-violation", kt.max_inequality_violation)
    report.raw("scores:")
    for k, J in enumerate(kt.scores):
        body = ", ".join(_fmt(float(v)) for v in J)
        report.raw(f"  user{k + 1}: [{body}]")
    _emit(report.render(), args.out)
    return 0


def _cmd_faces(args, argv) -> int:
    report = Report("faces", argv)
    channel = _load(args.file, report)
    es = elementary.enumerate_master_faces(channel.mac_type, cap=args.face_cap)
    report.kv("elementary", elementary.is_elementary(channel.mac_type))
    report.kv("face-count", len(es.faces))
    report.kv("truncated", es.truncated)
    if es.truncated:
        report.diagnostic("enumeration hit the cap; face list is incomplete")
    report.raw("faces:")
    for face in es.faces:
        report.raw(f"  {face}")
    _emit(report.render(), args.out)
    return 0


def _cmd_verify(args, argv) -> int:
    report = Report("verify", argv)
    result = suites.run_suite(args.suite, args.trials, args.resolution, args.seed)
    report.kv("suite", result.name)
    report.kv("trials", args.trials)
    report.kv("resolution", args.resolution)
    report.kv("seed", args.seed)
    report.kv("passed", result.passed)
    report.raw("checks:")
    for line in result.lines:
        report.raw(f"  {line}")
    _emit(report.render(), args.out)
    return 0 if result.passed else 3


def _cmd_region(args, argv) -> int:
    report = Report("region", argv)
    channel = _load(args.file, report)
    grid = verify.GridSpec.for_type(channel.mac_type, args.resolution)
    if args.orders == "all":
        estimate = region.capacity_region(channel, grid)
    else:
        order = tuple(range(channel.mac_type.num_users))
        samples = region.sample_subregion(channel, order, grid)
        cloud = region._dedupe(np.array([s.user_rates() for s in samples]))
        vertices, facets, equations, diagnostics = region._build_hull(cloud)
        estimate = region.RegionEstimate(
            tuple(samples), vertices, facets, equations, tuple(diagnostics)
        )
    if args.format == "csv":
        n = channel.mac_type.num_users
        lines = ["order," + ",".join(f"R{k + 1}" for k in range(n))]
        for s in estimate.samples:
            tag = "-".join(str(u + 1) for u in s.order)
            lines.append(tag + "," + ",".join(repr(float(r)) for r in s.user_rates()))
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    report.kv("resolution", args.resolution)
    report.kv("orders", args.orders)
    report.kv("samples", len(estimate.samples))
    report.rate("max-sum-rate", estimate.max_sum_rate())
    report.kv("hull-vertex-count", len(estimate.hull_vertices))
    report.raw("hull-vertices:")
    for row in estimate.hull_vertices:
        body = ", ".join(repr(float(v)) for v in row)
        report.raw(f"  [{body}]")
    if estimate.hull_facets:
        report.raw("hull-facets:")
        for facet in estimate.hull_facets:
            report.raw("  " + " ".join(str(i) for i in facet))
    for d in estimate.diagnostics:
        report.diagnostic(d)
    _emit(report.render(), args.out)
    return 0


def _cmd_oracle(args, argv) -> int:
    report = Report("oracle", argv)
    channel = _load(args.file, report)
    face = _parse_face(args.face) if args.face else None
    grid = verify.GridSpec.for_type(channel.mac_type, args.resolution, face)
    result = verify.grid_capacity(channel, grid)
    report.kv("resolution", args.resolution)
    report.kv("grid-points", grid.total_points)
    report.rate("oracle-value", result.value)
    report.kv("oracle-bound", result.bound)
    report.ipd("oracle-argmax", result.argmax)
    _emit(report.render(), args.out)
    return 0


_DISPATCH = {
    "capacity": _cmd_capacity,
    "kt-check": _cmd_kt_check,
    "faces": _cmd_faces,
    "verify": _cmd_verify,
    "region": _cmd_region,
    "oracle": _cmd_oracle,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 64
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 64
    try:
        return _DISPATCH[args.command](args, argv)
    except GuardExceeded as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return 2
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
