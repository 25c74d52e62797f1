"""Command line front end: generate benchmarks, detect, evaluate, benchmark.

File formats
------------
Matrix: CSV of N rows by N columns (17 significant digits, lossless for
doubles), or a binary container selected by a ``.bin`` output suffix and
recognized on input by its magic: 8 bytes ``BIDICOM1``, then N as a 64-bit
little-endian unsigned integer, then the N*N row-major weights as 64-bit
little-endian floats.

Communities (ground truth and detections): plain text, one community per
line, space-separated zero-based node ids in ascending order.

Config: ``key = value`` lines; ``n`` and ``seed`` at top level, then one
``[community]`` section per planted community with keys ``size``,
``symmetry``, ``sigma`` and optional ``overlap_prev``.

Exit codes: 0 success, 1 usage error, 2 malformed input, 3 infeasible spec.
Every flag default can also be supplied via an environment variable named
``BIDICOM_<FLAG>`` (dashes as underscores, upper case), e.g.
``BIDICOM_THETA_C=0.8 bidicom detect ...``; explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .detect import detect_communities
from .evaluation import (
    DEFAULT_RECOGNITION_FRACTION,
    AggregateReport,
    MatchReport,
    aggregate,
    match_communities,
)
from .genbench import (
    CommunitySpec,
    GroundTruth,
    InfeasibleSpecError,
    NetworkSpec,
    generate_network,
    pair_bidir_probability,
)
from .metrics import (
    DEFAULT_COMMUNITY_FRACTION,
    DEFAULT_SYMMETRY_THRESHOLD,
    ConnectivityMatrix,
    DetectionConfig,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MALFORMED = 2
EXIT_INFEASIBLE = 3

MATRIX_MAGIC = b"BIDICOM1"
ENV_PREFIX = "BIDICOM_"


class MalformedInputError(ValueError):
    """An input file failed to parse or violated its format contract."""


# ---------------------------------------------------------------------------
# file formats


def write_matrix(path: str, W: ConnectivityMatrix) -> None:
    """CSV by default; the binary container when the path ends in .bin."""
    if path.endswith(".bin"):
        with open(path, "wb") as fh:
            fh.write(MATRIX_MAGIC)
            fh.write(np.uint64(W.n).tobytes())
            fh.write(W.w.astype("<f8").tobytes())
    else:
        np.savetxt(path, W.w, fmt="%.17g", delimiter=",")


def read_matrix(path: str) -> ConnectivityMatrix:
    """Load either matrix format, sniffing the binary magic."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(len(MATRIX_MAGIC))
            if head == MATRIX_MAGIC:
                n = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
                data = np.frombuffer(fh.read(), dtype="<f8")
                if data.size != n * n:
                    raise MalformedInputError(
                        f"{path}: binary matrix promises {n}x{n} values, holds {data.size}"
                    )
                w = data.reshape(n, n).copy()
            else:
                w = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as e:
        raise MalformedInputError(f"{path}: {e.strerror or e}") from e
    except ValueError as e:
        raise MalformedInputError(f"{path}: {e}") from e
    try:
        return ConnectivityMatrix.from_array(w)
    except ValueError as e:
        raise MalformedInputError(f"{path}: {e}") from e


def write_communities(path: str, communities: list) -> None:
    with open(path, "w") as fh:
        for c in communities:
            members = getattr(c, "members", c)
            fh.write(" ".join(str(int(i)) for i in members) + "\n")


def read_communities(path: str) -> list[tuple[int, ...]]:
    out = []
    try:
        with open(path) as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    ids = tuple(int(tok) for tok in line.split())
                except ValueError as e:
                    raise MalformedInputError(f"{path}:{ln}: {e}") from e
                if any(i < 0 for i in ids):
                    raise MalformedInputError(f"{path}:{ln}: node ids must be non-negative")
                out.append(ids)
    except OSError as e:
        raise MalformedInputError(f"{path}: {e.strerror or e}") from e
    return out


def read_config(path: str) -> NetworkSpec:
    """Parse the key=value network config into a NetworkSpec.

    Spec-level violations (thresholds, overlap chains, node budget) surface
    as ValueError/InfeasibleSpecError from the spec constructors; this
    function raises MalformedInputError only for syntax problems.
    """
    top: dict[str, str] = {}
    sections: list[dict[str, str]] = []
    current = top
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise MalformedInputError(f"{path}: {e.strerror or e}") from e
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[community]":
            sections.append({})
            current = sections[-1]
            continue
        if line.startswith("["):
            raise MalformedInputError(f"{path}:{ln}: unknown section {line!r}")
        key, sep, value = line.partition("=")
        if not sep:
            raise MalformedInputError(f"{path}:{ln}: expected key = value, got {raw.strip()!r}")
        current[key.strip()] = value.strip()

    def take(d: dict, key: str, conv, default=None):
        if key not in d:
            if default is not None:
                return default
            raise MalformedInputError(f"{path}: missing required key {key!r}")
        try:
            return conv(d.pop(key))
        except ValueError as e:
            raise MalformedInputError(f"{path}: bad value for {key!r}: {e}") from e

    n = take(top, "n", int)
    seed = take(top, "seed", int, default=0)
    if top:
        raise MalformedInputError(f"{path}: unknown top-level keys {sorted(top)}")
    specs = []
    for sec in sections:
        size = take(sec, "size", int)
        symmetry = take(sec, "symmetry", float)
        sigma = take(sec, "sigma", float)
        overlap = take(sec, "overlap_prev", float, default=0.0)
        if sec:
            raise MalformedInputError(f"{path}: unknown community keys {sorted(sec)}")
        specs.append(
            CommunitySpec(size=size, symmetry=symmetry, sigma=sigma, overlap_prev=overlap)
        )
    return NetworkSpec(n=n, communities=tuple(specs), seed=seed)


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_match_report(path: str, report: MatchReport) -> None:
    """Single-run evaluation CSV: one row per planted community, then totals."""
    with open(path, "w") as fh:
        fh.write("community_index,size,matched,detected_index,good_pct,false_pct,unresolved\n")
        for k, m in enumerate(report.matches):
            det = "" if m.detected_index is None else str(m.detected_index)
            good = "" if m.good_fraction is None else _fmt(100.0 * m.good_fraction)
            false = "" if m.false_fraction is None else _fmt(100.0 * m.false_fraction)
            fh.write(
                f"{k},{m.real_size},{int(m.matched)},{det},{good},{false},{int(m.unresolved)}\n"
            )
        fh.write(f"false_communities,{report.false_communities}\n")
        if report.runtime_per_node is not None:
            fh.write(f"runtime_per_node,{_fmt(report.runtime_per_node)}\n")


def write_aggregate_report(path: str, report: AggregateReport) -> None:
    """Benchmark CSV: per-community aggregate rows, then the global rows."""
    with open(path, "w") as fh:
        fh.write(
            "community_index,size,success_count,unresolved_count,good_pct_mean,false_pct_mean\n"
        )
        for k, c in enumerate(report.per_community):
            fh.write(
                f"{k},{c.real_size},{c.resolved_count},{c.unresolved_count},"
                f"{_fmt(c.good_pct_mean)},{_fmt(c.false_pct_mean)}\n"
            )
        fh.write(f"false_communities_mean,{_fmt(report.false_communities_mean)}\n")
        fh.write(f"time_per_node_mean,{_fmt(report.time_per_node_mean)}\n")
        fh.write(f"time_per_node_stderr,{_fmt(report.time_per_node_stderr)}\n")


# ---------------------------------------------------------------------------
# commands


@dataclass
class RunArtifacts:
    """Bookkeeping for one benchmark run (paths are None for in-memory runs)."""

    matrix_path: str | None
    truth_path: str | None
    detected_path: str | None
    report_path: str | None
    seed: int
    generate_seconds: float = 0.0
    detect_seconds: float = 0.0


def _usage_fail(message: str) -> SystemExit:
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(EXIT_USAGE)


def _detection_config(args) -> DetectionConfig:
    try:
        return DetectionConfig(
            symmetry_threshold=args.s_b,
            community_fraction=args.theta_c,
            pool_min_pairs=args.n_min_pool,
            min_community_size=args.theta_noise,
            merge_overlap=args.theta_omega,
            seed=args.seed if args.seed is not None else 0,
        )
    except ValueError as e:  # bad flag values are usage errors, not data errors
        raise _usage_fail(str(e)) from e


def _check_recognition(theta_recog: float) -> None:
    if not 0.0 < theta_recog <= 1.0:
        raise _usage_fail(f"recognition fraction must lie in (0, 1], got {theta_recog}")


def cmd_generate(args) -> int:
    spec = read_config(args.config)
    if args.seed is not None:
        spec = NetworkSpec(n=spec.n, communities=spec.communities, seed=args.seed)
    z_b = 1.0 - DEFAULT_SYMMETRY_THRESHOLD
    for k, c in enumerate(spec.communities, 1):
        p = pair_bidir_probability(c.symmetry, c.sigma, z_b)
        print(f"community {k}: size {c.size}, bidirectional pair probability {p:.4f}")
    W, truth = generate_network(spec)
    write_matrix(args.matrix, W)
    write_communities(args.truth, truth.communities)
    print(f"wrote {W.n}x{W.n} matrix to {args.matrix}, truth to {args.truth}")
    return EXIT_OK


def cmd_detect(args) -> int:
    W = read_matrix(args.matrix)
    if W.n < 2:
        print(f"matrix of {W.n} node(s) cannot hold a community", file=sys.stderr)
        return EXIT_USAGE
    cfg = _detection_config(args)
    t0 = time.perf_counter()
    communities = detect_communities(W, cfg)
    elapsed = time.perf_counter() - t0
    write_communities(args.out, communities)
    print(f"{len(communities)} communities")
    for c in communities:
        print(f"  size {len(c.members)}, symmetry {c.symmetry:.4f}")
    print(f"wall time per node: {elapsed / W.n:.6f} s")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _check_recognition(args.theta_recog)
    detected = read_communities(args.detected)
    truth = GroundTruth(communities=tuple(read_communities(args.truth)))
    if not truth.communities:
        raise MalformedInputError(f"{args.truth}: ground truth holds no communities")
    report = match_communities(detected, truth, theta_recog=args.theta_recog)
    write_match_report(args.out, report)
    identified = sum(report.identified(k) for k in range(len(report.matches)))
    print(
        f"{identified}/{len(report.matches)} communities identified, "
        f"{report.false_communities} false"
    )
    return EXIT_OK


def run_benchmark(
    spec: NetworkSpec,
    cfg: DetectionConfig,
    runs: int,
    master_seed: int,
    theta_recog: float = DEFAULT_RECOGNITION_FRACTION,
    timing: bool = True,
) -> AggregateReport:
    """Generate, detect, and evaluate ``runs`` times with derived seeds.

    Each run draws an independent (generation, detection) seed pair from the
    master seed, so any run can be reproduced in isolation; with ``timing``
    off the per-node runtime is omitted, making reports byte-stable.
    """
    if runs < 1:
        raise ValueError(f"need at least one run, got {runs}")
    reports = []
    for i in range(runs):
        gen_seed, det_seed = (
            int(x) for x in np.random.SeedSequence([master_seed, i]).generate_state(2, np.uint64)
        )
        run_spec = NetworkSpec(n=spec.n, communities=spec.communities, seed=gen_seed)
        run_cfg = DetectionConfig(
            symmetry_threshold=cfg.symmetry_threshold,
            community_fraction=cfg.community_fraction,
            pool_min_pairs=cfg.pool_min_pairs,
            min_community_size=cfg.min_community_size,
            merge_overlap=cfg.merge_overlap,
            seed=det_seed,
        )
        W, truth = generate_network(run_spec)
        t0 = time.perf_counter()
        communities = detect_communities(W, run_cfg)
        elapsed = time.perf_counter() - t0
        report = match_communities(communities, truth, theta_recog=theta_recog)
        if timing:
            report = MatchReport(
                matches=report.matches,
                unresolved_detected=report.unresolved_detected,
                false_communities=report.false_communities,
                runtime_per_node=elapsed / W.n,
            )
        reports.append(report)
    return aggregate(reports)


def cmd_bench(args) -> int:
    _check_recognition(args.theta_recog)
    if args.runs < 1:
        raise _usage_fail(f"need at least one run, got {args.runs}")
    spec = read_config(args.config)
    master = args.seed if args.seed is not None else spec.seed
    cfg = _detection_config(args)
    report = run_benchmark(
        spec,
        cfg,
        runs=args.runs,
        master_seed=master,
        theta_recog=args.theta_recog,
        timing=not args.no_timing,
    )
    write_aggregate_report(args.out, report)
    print(f"aggregated {args.runs} runs into {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _env_default(flag: str, conv, fallback):
    raw = os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))
    if raw is None:
        return fallback
    try:
        return conv(raw)
    except ValueError as e:
        print(f"bad {ENV_PREFIX}{flag.upper().replace('-', '_')}: {e}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from e


def _add_detection_flags(p: _Parser) -> None:
    p.add_argument(
        "--theta-c",
        type=float,
        default=_env_default("theta-c", float, DEFAULT_COMMUNITY_FRACTION),
        help="fraction of fellow members a node must pair with (default %(default)s)",
    )
    p.add_argument(
        "--theta-noise",
        type=int,
        default=_env_default("theta-noise", int, 30),
        help="minimum community size kept (default %(default)s)",
    )
    p.add_argument(
        "--theta-omega",
        type=float,
        default=_env_default("theta-omega", float, 0.25),
        help="overlap fraction beyond which communities may merge (default %(default)s)",
    )
    p.add_argument(
        "--s-b",
        type=float,
        default=_env_default("s-b", float, DEFAULT_SYMMETRY_THRESHOLD),
        help="symmetry threshold separating structure from noise (default %(default)s)",
    )
    p.add_argument(
        "--n-min-pool",
        type=int,
        default=_env_default("n-min-pool", int, 1),
        help="bidirectional pairs required to stay in the pool (default %(default)s)",
    )


def _seed_flag(p: _Parser) -> None:
    p.add_argument(
        "--seed",
        type=int,
        default=_env_default("seed", int, None),
        help="random seed (generate/bench: overrides the config seed)",
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="bidicom",
        description="Detection of overlapping bidirectional communities in "
        "dense directed weighted networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a benchmark network")
    g.add_argument("--config", required=True, help="network spec file")
    g.add_argument("--matrix", required=True, help="output weight matrix (.bin for binary)")
    g.add_argument("--truth", required=True, help="output ground-truth communities")
    _seed_flag(g)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="find communities in a weight matrix")
    d.add_argument("--matrix", required=True, help="input weight matrix")
    d.add_argument("--out", required=True, help="output communities file")
    _seed_flag(d)
    _add_detection_flags(d)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("evaluate", help="score detections against ground truth")
    e.add_argument("--detected", required=True, help="detected communities file")
    e.add_argument("--truth", required=True, help="ground-truth communities file")
    e.add_argument("--out", required=True, help="output report CSV")
    e.add_argument(
        "--theta-recog",
        type=float,
        default=_env_default("theta-recog", float, DEFAULT_RECOGNITION_FRACTION),
        help="fraction of a community that must be recovered (default %(default)s)",
    )
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="run generate-detect-evaluate cycles")
    b.add_argument("--config", required=True, help="network spec file")
    b.add_argument("--out", required=True, help="output aggregate report CSV")
    b.add_argument(
        "--runs",
        type=int,
        default=_env_default("runs", int, 20),
        help="number of seeded repetitions (default %(default)s)",
    )
    b.add_argument(
        "--theta-recog",
        type=float,
        default=_env_default("theta-recog", float, DEFAULT_RECOGNITION_FRACTION),
        help="recognition fraction for evaluation (default %(default)s)",
    )
    b.add_argument(
        "--no-timing",
        action="store_true",
        help="omit wall-clock rows so identical seeds give byte-identical reports",
    )
    _seed_flag(b)
    _add_detection_flags(b)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except InfeasibleSpecError as e:
        print(f"infeasible spec: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as e:
        print(f"invalid parameters: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
