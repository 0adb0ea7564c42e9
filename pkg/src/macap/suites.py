"""Randomized verification suites behind the CLI ``verify`` subcommand.

Each suite draws seeded random channels, exercises one structural claim and
returns a pass/fail table.  The claims: stationary values on elementary
channels are unique (kt), stationary points are local maxima (localmax),
superlevel sets are grid-connected (connect), stationary points solve the
boundary equations while generic points do not (boundary), and the
optimizer dominates the brute-force lattice (oracle).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import info, verify
from .model import FaceProduct, IpdProduct, MacType, minimum_face
from .optimize import OptimizeOptions, kt_check, maximize_on_face, start_results, capacity
from .verify import GridSpec, all_multi_indices, boundary_determinant

_ELEMENTARY_TYPES = (MacType((2, 2), 2), MacType((2, 3), 3), MacType((3, 3), 3))


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    lines: tuple[str, ...]


def _mark(ok: bool) -> str:
    return "pass" if ok else "FAIL"


def suite_kt(trials: int, resolution: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    opts = OptimizeOptions(seed=seed)
    lines = []
    passed = True
    for t in range(trials):
        mac_type = _ELEMENTARY_TYPES[t % len(_ELEMENTARY_TYPES)]
        P = verify.random_channel(mac_type, rng)
        results = start_results(P, FaceProduct.full(mac_type), opts)
        good = [
            r.value for r in results if kt_check(P, r.ipd, opts.kt_tol).satisfied
        ]
        ok = bool(good) and (max(good) - min(good) < 1e-8)
        passed &= ok
        spread = max(good) - min(good) if good else float("nan")
        lines.append(
            f"{_mark(ok)} kt ({mac_type}): {len(good)}/{len(results)} starts "
            f"stationary, value spread {spread:.3e}"
        )
    return SuiteResult("kt", passed, tuple(lines))


def suite_localmax(trials: int, resolution: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    opts = OptimizeOptions(seed=seed)
    lines = []
    passed = True
    for t in range(trials):
        mac_type = _ELEMENTARY_TYPES[t % len(_ELEMENTARY_TYPES)]
        P = verify.random_channel(mac_type, rng)
        ipd, _, report = maximize_on_face(P, FaceProduct.full(mac_type), opts)
        if not report.satisfied:
            passed = False
            lines.append(f"FAIL localmax ({mac_type}): optimizer left no stationary point")
            continue
        lm = verify.check_local_max(P, ipd, radius=0.05, samples=500, seed=seed + t)
        passed &= lm.passed
        lines.append(
            f"{_mark(lm.passed)} localmax ({mac_type}): worst gap {lm.worst_gap:.3e} "
            f"over {lm.samples} perturbations"
        )
    return SuiteResult("localmax", passed, tuple(lines))


def suite_connect(trials: int, resolution: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    opts = OptimizeOptions(seed=seed)
    mac_type = MacType((2, 2), 2)
    grid = GridSpec.for_type(mac_type, resolution)
    lines = []
    passed = True
    for t in range(trials):
        P = verify.random_channel(mac_type, rng)
        _, cval, _ = maximize_on_face(P, FaceProduct.full(mac_type), opts)
        counts = []
        for frac in (0.25, 0.5, 0.75, 0.95):
            rep = verify.level_set_connected(P, frac * cval, grid)
            counts.append(rep.component_count)
        ok = all(c == 1 for c in counts)
        passed &= ok
        lines.append(
            f"{_mark(ok)} connect: components {counts} at thresholds "
            "(0.25, 0.5, 0.75, 0.95) x capacity"
        )
    return SuiteResult("connect", passed, tuple(lines))


def suite_boundary(trials: int, resolution: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    opts = OptimizeOptions(seed=seed)
    lines = []
    passed = True
    # stationary points solve the boundary equations
    checked = 0
    worst = 0.0
    for t in range(trials):
        mac_type = _ELEMENTARY_TYPES[t % len(_ELEMENTARY_TYPES)]
        P = verify.random_channel(mac_type, rng)
        ipd, _, report = maximize_on_face(P, FaceProduct.full(mac_type), opts)
        if not report.satisfied:
            continue
        if not minimum_face(ipd, 1e-6).is_full(mac_type):
            continue
        checked += 1
        for order in itertools.permutations(range(mac_type.num_users)):
            for idx in all_multi_indices(mac_type):
                worst = max(worst, abs(boundary_determinant(P, ipd, order, idx)))
    ok = checked > 0 and worst <= 1e-8
    passed &= ok
    lines.append(
        f"{_mark(ok)} boundary: {checked} interior stationary points, "
        f"worst |det| {worst:.3e} (limit 1e-8)"
    )
    # generic interior points do not
    mac_type = MacType((2, 2), 2)
    nonzero = 0
    total = max(trials, 20)
    for _ in range(total):
        P = verify.random_channel(mac_type, rng)
        p = verify.random_ipd(mac_type, rng)
        det = boundary_determinant(P, p, (0, 1), (0, 0))
        if abs(det) > 1e-6:
            nonzero += 1
    ok = nonzero >= int(0.95 * total)
    passed &= ok
    lines.append(
        f"{_mark(ok)} boundary: |det| > 1e-6 at {nonzero}/{total} random points"
    )
    return SuiteResult("boundary", passed, tuple(lines))


def suite_oracle(trials: int, resolution: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    opts = OptimizeOptions(seed=seed)
    types = (MacType((3, 2), 2), MacType((2, 2), 3))
    lines = []
    passed = True
    for t in range(trials):
        mac_type = types[t % len(types)]
        P = verify.random_channel(mac_type, rng)
        result = capacity(P, opts)
        grid = verify.grid_capacity(P, GridSpec.for_type(mac_type, resolution))
        dominance = result.capacity_nats >= grid.value - 1e-12
        close = result.capacity_nats - grid.value <= grid.bound
        ok = dominance and close
        passed &= ok
        lines.append(
            f"{_mark(ok)} oracle ({mac_type}): optimizer {result.capacity_nats:.9f}, "
            f"lattice {grid.value:.9f} (+bound {grid.bound:.3e})"
        )
    return SuiteResult("oracle", passed, tuple(lines))


SUITES = {
    "kt": suite_kt,
    "localmax": suite_localmax,
    "connect": suite_connect,
    "boundary": suite_boundary,
    "oracle": suite_oracle,
}


def run_suite(name: str, trials: int, resolution: int, seed: int) -> SuiteResult:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}, expected one of {sorted(SUITES)}")
    return fn(trials, resolution, seed)
