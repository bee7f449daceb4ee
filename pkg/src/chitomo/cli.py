"""Batch command-line front-end.

Subcommands::

    chitomo estimate-diag    --channel spec.json --m XI --M 10000 --seed 1
    chitomo estimate-offdiag --channel spec.json --m I --n-label X --M 10000
    chitomo triplets         --channel spec.json --M 2000 --seed 1 --out t.log
    chitomo diag-from-log    --log t.log --m II --m XI [--channel spec.json]
    chitomo sieve            --log t.log --threshold 0.08 [--channel spec.json]
    chitomo verify           --n 2 --verify-level full

Reports are JSON on stdout (or --out); triplet logs always need --out.
Every run is fully determined by its flags and --seed.  Errors are emitted
as one JSON object on stderr with a stable exit code:

    1 verification failure      4 dense cap exceeded
    2 malformed spec or log     5 channel hash mismatch
    3 invalid Pauli label       6 sieve needs more than one base
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .channels import (
    ChannelSpecError,
    channel_factory,
    channel_spec_sha256,
    load_channel_spec,
)
from .estimator import (
    EstimatorConfig,
    TripletLogError,
    estimate_chi_diag,
    estimate_chi_offdiag,
    estimate_diag_from_triplets,
    estimation_report,
    read_triplet_log,
    run_triplet_experiments,
    sieve_large_diagonals,
    write_triplet_log,
)
from .mub import design_average_survival, design_basis
from .oracle import (
    ORACLE_QUBIT_CAP,
    exact_chi,
    haar_closed_form,
    oracle_report,
    random_label,
    trace_identity_residual,
)
from .pauli import (
    DENSE_QUBIT_CAP,
    DenseCapError,
    PauliLabel,
    mub_classes,
    pauli_mul,
    symplectic_product,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_MALFORMED = 2
EXIT_BAD_LABEL = 3
EXIT_DENSE_CAP = 4
EXIT_HASH_MISMATCH = 5
EXIT_SINGLE_BASE = 6


class CliError(Exception):
    def __init__(self, exit_code: int, kind: str, message: str):
        super().__init__(message)
        self.exit_code = exit_code
        self.kind = kind


def _manifest(command: str, channel_hash: str | None, config: dict) -> dict:
    return {
        "command": command,
        "channel_sha256": channel_hash,
        "config": config,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _emit(document: dict, out_path: str | None) -> None:
    text = json.dumps(document, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_channel(path: str):
    spec = load_channel_spec(path)
    return spec, channel_factory(spec)


def _parse_label(text: str, n: int) -> PauliLabel:
    try:
        label = PauliLabel.from_string(text)
    except ValueError as exc:
        raise CliError(EXIT_BAD_LABEL, "invalid_label", str(exc)) from exc
    if label.n != n:
        raise CliError(
            EXIT_BAD_LABEL,
            "invalid_label",
            f"label {text!r} has {label.n} qubits, expected {n}",
        )
    return label


def _config_from_args(args) -> EstimatorConfig:
    if args.mode == "exact":
        return EstimatorConfig(seed=args.seed, mode="exact", enumerate_design=True)
    if args.M is None and args.epsilon is None:
        raise CliError(
            EXIT_MALFORMED, "bad_arguments", "sampled mode needs --M or --epsilon"
        )
    return EstimatorConfig(M=args.M, epsilon=args.epsilon, seed=args.seed)


def _oracle_chi(channel):
    return exact_chi(channel) if channel.n <= ORACLE_QUBIT_CAP else None


def cmd_estimate_diag(args) -> int:
    spec, channel = _load_channel(args.channel)
    m = _parse_label(args.m, channel.n)
    cfg = _config_from_args(args)
    est = estimate_chi_diag(channel, m, cfg)
    chi = _oracle_chi(channel)
    oracles = [None if chi is None else complex(chi.entry(m, m).real)]
    report = estimation_report(cfg.echo(), [("diag", m, None, est)], oracles)
    report["manifest"] = _manifest("estimate-diag", channel_spec_sha256(spec), cfg.echo())
    _emit(report, args.out)
    return EXIT_OK


def cmd_estimate_offdiag(args) -> int:
    spec, channel = _load_channel(args.channel)
    m = _parse_label(args.m, channel.n)
    n_label = _parse_label(args.n_label, channel.n)
    cfg = _config_from_args(args)
    est = estimate_chi_offdiag(channel, m, n_label, cfg)
    chi = _oracle_chi(channel)
    oracles = [None if chi is None else chi.entry(m, n_label)]
    report = estimation_report(cfg.echo(), [("offdiag", m, n_label, est)], oracles)
    report["manifest"] = _manifest(
        "estimate-offdiag", channel_spec_sha256(spec), cfg.echo()
    )
    _emit(report, args.out)
    return EXIT_OK


def cmd_triplets(args) -> int:
    spec, channel = _load_channel(args.channel)
    cfg = EstimatorConfig(M=args.M, epsilon=args.epsilon, seed=args.seed)
    triplets = run_triplet_experiments(channel, cfg)
    write_triplet_log(args.out, triplets, args.seed, channel_spec_sha256(spec))
    return EXIT_OK


def _load_log_with_optional_channel(args):
    triplets, meta = read_triplet_log(args.log)
    chi = None
    if args.channel is not None:
        spec, channel = _load_channel(args.channel)
        digest = channel_spec_sha256(spec)
        if digest != meta["channel"]:
            raise CliError(
                EXIT_HASH_MISMATCH,
                "hash_mismatch",
                f"log was produced for channel {meta['channel'][:12]}..., "
                f"spec hashes to {digest[:12]}...",
            )
        chi = _oracle_chi(channel)
    return triplets, meta, chi


def cmd_diag_from_log(args) -> int:
    triplets, meta, chi = _load_log_with_optional_channel(args)
    labels = [
        _parse_label(text, meta["n"]) for arg in args.m for text in arg.split(",")
    ]
    entries = []
    oracles = []
    for m in labels:
        entries.append(("triplet_diag", m, None, estimate_diag_from_triplets(triplets, m)))
        oracles.append(None if chi is None else complex(chi.entry(m, m).real))
    config = {"log": args.log, **meta}
    report = estimation_report(config, entries, oracles)
    report["manifest"] = _manifest("diag-from-log", meta["channel"], config)
    _emit(report, args.out)
    return EXIT_OK


def cmd_sieve(args) -> int:
    triplets, meta, chi = _load_log_with_optional_channel(args)
    stats: dict = {}
    try:
        found = sieve_large_diagonals(triplets, args.threshold, stats=stats)
    except ValueError as exc:
        if "distinct bases" in str(exc):
            raise CliError(EXIT_SINGLE_BASE, "single_base", str(exc)) from exc
        raise
    entries = [("sieve", m, None, est) for m, est in found]
    oracles = [
        None if chi is None else complex(chi.entry(m, m).real) for m, _ in found
    ]
    config = {"log": args.log, "threshold": args.threshold, **meta}
    report = estimation_report(config, entries, oracles)
    report["manifest"] = _manifest("sieve", meta["channel"], config)
    report["sieve_stats"] = stats
    _emit(report, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Verification suites

def _verify_rows(n: int, level: str, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    d = 2**n
    rows = []

    def add(name: str, residual: float, tol: float):
        rows.append(
            {"check": name, "residual": residual, "tol": tol, "ok": residual <= tol}
        )

    violations = 0
    seen: set[PauliLabel] = set()
    for cls in mub_classes(n):
        for i, a in enumerate(cls.generators):
            for b in cls.generators[i + 1 :]:
                violations += symplectic_product(a, b)
        # the 2^n - 1 non-identity products of the generators
        for mask in range(1, 2**n):
            label = PauliLabel.identity(n)
            for i in range(n):
                if (mask >> i) & 1:
                    label, _ = pauli_mul(label, cls.generators[i])
            if label in seen:
                violations += 1
            seen.add(label)
    if len(seen) != 4**n - 1:
        violations += 1
    add("mub classes commute, disjoint, cover", float(violations), 0.0)

    bases = [design_basis(n, j) for j in range(d + 1)]
    ortho = max(
        float(np.max(np.abs(b.conj().T @ b - np.eye(d)))) for b in bases
    )
    add("within-base orthonormality", ortho, 1e-10)
    unbiased = 0.0
    for j in range(d + 1):
        for jp in range(j + 1, d + 1):
            ov = np.abs(bases[j].conj().T @ bases[jp]) ** 2
            unbiased = max(unbiased, float(np.max(np.abs(ov - 1 / d))))
    add("cross-base unbiasedness", unbiased, 1e-10)

    design = 0.0
    for _ in range(5):
        o1 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        o2 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        design = max(design, abs(design_average_survival(o1, o2) - haar_closed_form(o1, o2)))
    add("design average matches Haar closed form", design, 1e-9)

    if level == "full":
        suite = {
            "depolarizing": {"n": n, "kind": "depolarizing", "p": 0.3},
            "rotation": {
                "n": n,
                "kind": "unitary",
                "generator": "X" + "I" * (n - 1),
                "theta": 1.0471975511965976,
            },
            "amplitude_damping": {"n": n, "kind": "amplitude_damping", "gamma": 0.25},
        }
        for name, spec in suite.items():
            channel = channel_factory(spec)
            rep = oracle_report(channel, samples=3, seed=seed)
            add(f"{name}: design identity", rep.design_residual, 1e-9)
            add(f"{name}: diagonal fidelity identity", rep.fidelity_residual, 1e-9)
            add(f"{name}: off-diagonal identity", rep.offdiag_residual, 1e-9)
            add(f"{name}: ancilla polarization identity", rep.ancilla_residual, 1e-9)
            if n <= 2:
                pairs = None
            else:
                pairs = [
                    (random_label(n, rng), random_label(n, rng)) for _ in range(30)
                ]
            add(
                f"{name}: trace-preservation identity",
                trace_identity_residual(channel, pairs),
                1e-8,
            )
    return rows


def cmd_verify(args) -> int:
    if args.n > DENSE_QUBIT_CAP or (args.verify_level == "full" and args.n > ORACLE_QUBIT_CAP):
        raise CliError(
            EXIT_DENSE_CAP,
            "dense_cap",
            f"verify level {args.verify_level!r} is dense-only; n={args.n} exceeds the cap",
        )
    rows = _verify_rows(args.n, args.verify_level, args.seed)
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        status = "ok  " if r["ok"] else "FAIL"
        print(f"{status} {r['check']:<{width}} residual {r['residual']:.3e} (tol {r['tol']:.1e})")
    failed = [r for r in rows if not r["ok"]]
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed (n={args.n}, {args.verify_level})")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------

def _add_sampling_flags(p: argparse.ArgumentParser, mode: bool = True) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--M", type=int, help="number of experiments")
    group.add_argument("--epsilon", type=float, help="target precision (derives M)")
    p.add_argument("--seed", type=int, default=0, help="campaign seed (default 0)")
    if mode:
        p.add_argument(
            "--mode",
            choices=("sampled", "exact"),
            default="sampled",
            help="sampled outcomes or exact design enumeration",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chitomo",
        description="Selective chi-matrix estimation over the MUB state design",
    )
    parser.add_argument("--version", action="version", version=f"chitomo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-diag", help="estimate one diagonal coefficient")
    p.add_argument("--channel", required=True, help="channel-spec JSON path")
    p.add_argument("--m", required=True, help="Pauli label, e.g. XI")
    _add_sampling_flags(p)
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_estimate_diag)

    p = sub.add_parser("estimate-offdiag", help="estimate one off-diagonal coefficient")
    p.add_argument("--channel", required=True)
    p.add_argument("--m", required=True)
    p.add_argument("--n-label", required=True, dest="n_label")
    _add_sampling_flags(p)
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_estimate_offdiag)

    p = sub.add_parser("triplets", help="run experiments and write a triplet log")
    p.add_argument("--channel", required=True)
    _add_sampling_flags(p, mode=False)
    p.add_argument("--out", required=True, help="triplet log path")
    p.set_defaults(func=cmd_triplets)

    p = sub.add_parser("diag-from-log", help="estimate diagonals from a triplet log")
    p.add_argument("--log", required=True)
    p.add_argument("--m", required=True, action="append", help="label (repeatable, comma-separable)")
    p.add_argument("--channel", help="optional spec for hash check + oracle columns")
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_diag_from_log)

    p = sub.add_parser("sieve", help="find all heavy diagonal coefficients in a log")
    p.add_argument("--log", required=True)
    p.add_argument("--threshold", required=True, type=float)
    p.add_argument("--channel", help="optional spec for hash check + oracle columns")
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("verify", help="run the identity verification suites")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--verify-level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _print_error(exc.kind, str(exc))
        return exc.exit_code
    except (ChannelSpecError, TripletLogError) as exc:
        _print_error("malformed_input", str(exc))
        return EXIT_MALFORMED
    except DenseCapError as exc:
        _print_error("dense_cap", str(exc))
        return EXIT_DENSE_CAP


def _print_error(kind: str, message: str) -> None:
    json.dump({"error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
