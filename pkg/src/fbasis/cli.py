"""Command-line driver: verification suites and single DWPF evaluations.

Usage::

    fbasis <suite> [--model del-pezzo|perk-schultz|custom] [--seed N] [--lmax N]
                   [--tol X] [--out PATH] [--format json|csv] [--custom-table PATH]
                   [--corrupt X,Y:KIND]
    fbasis dwpf --kind C2 --L 3 --seed 7

Suites are ``weights-check``, ``factorization``, ``twist-compare``,
``dwpf-agree`` and ``all``.  The exit status is 0 when every report passes,
1 when a report fails or a module error is raised, and 2 for configuration
errors.  Random parameters come from numpy's PCG64 generator seeded with
``--seed``; equal configurations produce byte-identical reports.
``FBASIS_THREADS`` caps the number of worker threads.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .dwpf import (
    MIXED_KINDS,
    SINGLE_KINDS,
    DwpfInstance,
    agreement_reports,
    commute_check,
    compute_dwpf,
    route_values,
)
from .errors import ConfigError, FBasisError
from .fmatrix import (
    build_f_bundle,
    curly_r_global_unitarity,
    verify_factorization,
    verify_hat_form,
    verify_n_ratio,
)
from .monodromy import TWISTED_KINDS, check_kappa_zeros, check_twisted
from .relations import (
    check_all_weights,
    check_matrix_relations,
    check_weight_invariants,
)
from .reports import DEFAULT_TOL, ResidualReport, all_passed, summarize, to_csv, to_json
from .rng import make_rng, sample_annulus
from .weights import (
    RapiditySet,
    WeightTable,
    build_perk_schultz,
    import_custom,
    random_del_pezzo,
)

SUITES = ("weights-check", "factorization", "twist-compare", "dwpf-agree", "all")
MODELS = ("del-pezzo", "perk-schultz", "custom")
PROVEN_TWIST_L = 4
MIXED_MAX_L = 4
EXCHANGE_MAX_L = 3
MATRIX_MAX_L = 4
DWPF_TOL = 1e-8
KAPPA_TOL = 1e-10

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    model: str = "del-pezzo"
    seed: int = 0
    lmax: int = 4
    tol: float = DEFAULT_TOL
    out: str | None = None
    fmt: str = "json"
    custom_table: str | None = None
    corrupt: str | None = None

    def __post_init__(self) -> None:
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 1 <= self.lmax <= 6:
            raise ConfigError("lmax must lie in [1, 6]")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        if (self.model == "custom") != (self.custom_table is not None):
            raise ConfigError("--custom-table is required with, and only with, --model custom")

    def meta(self) -> dict:
        out = {"suite": self.suite, "model": self.model, "seed": self.seed, "lmax": self.lmax, "tol": self.tol}
        if self.corrupt:
            out["corrupt"] = self.corrupt
        return out


def thread_count() -> int:
    raw = os.environ.get("FBASIS_THREADS")
    if raw is None or raw == "":
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FBASIS_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"FBASIS_THREADS must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------------------
# models


def standard_rapidities(L: int) -> RapiditySet:
    """Sites ``xi1..xiL`` and auxiliary ``mu1..muL, nu1..nuL``."""
    aux = tuple(f"mu{k}" for k in range(1, L + 1)) + tuple(f"nu{k}" for k in range(1, L + 1))
    return RapiditySet.standard(L, aux)


def split_labels(labels: Sequence[str]) -> RapiditySet:
    """Custom tables: labels starting with ``mu`` or ``nu`` are auxiliary, the rest are sites."""
    aux = tuple(l for l in labels if l.startswith(("mu", "nu")))
    return RapiditySet(tuple(l for l in labels if l not in aux), aux)


def parse_corruption(text: str) -> tuple[tuple[str, str], str]:
    try:
        pair, kind = text.split(":")
        x, y = pair.split(",")
    except ValueError:
        raise ConfigError(f"--corrupt expects X,Y:KIND, got {text!r}") from None
    return (x.strip(), y.strip()), kind.strip()


def build_model(cfg: SuiteConfig) -> tuple[WeightTable, RapiditySet]:
    """Weight table and rapidity layout selected by the configuration."""
    if cfg.model == "custom":
        path = Path(cfg.custom_table)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read custom table {str(path)!r}: {exc.strerror}") from None
        try:
            table = import_custom(text)
        except FBasisError as exc:
            raise ConfigError(f"custom table {path.name!r}: {exc}") from None
        raps = split_labels(table.labels)
    else:
        raps = standard_rapidities(cfg.lmax)
        if cfg.model == "del-pezzo":
            table, _ = random_del_pezzo(raps, cfg.seed)
        else:
            rng = make_rng(cfg.seed)
            q = complex(sample_annulus(rng, 1)[0])
            vals = sample_annulus(rng, len(raps.labels))
            raps = RapiditySet(raps.inhomogeneities, raps.auxiliary, dict(zip(raps.labels, map(complex, vals))))
            table = build_perk_schultz(q, raps)
    if cfg.corrupt:
        pair, kind = parse_corruption(cfg.corrupt)
        try:
            table = table.with_entry(pair, kind, 2 * table.weight(pair, kind))
        except FBasisError as exc:
            raise ConfigError(f"--corrupt {cfg.corrupt!r}: {exc}") from None
    return table, raps


# ---------------------------------------------------------------------------
# suites

Task = tuple[str, Callable[[], list[ResidualReport]]]


def weights_tasks(cfg: SuiteConfig, table: WeightTable, raps: RapiditySet) -> list[Task]:
    tasks: list[Task] = [("weights.relations", lambda: check_all_weights(table, cfg.tol))]
    if table.rank == 3:
        tasks.append(("weights.invariants", lambda: check_weight_invariants(table, cfg.tol)))
    sub = RapiditySet(raps.inhomogeneities[:MATRIX_MAX_L], raps.auxiliary[:1] + raps.auxiliary[-1:])
    tasks.append(("weights.matrix", lambda: check_matrix_relations(table, sub, cfg.tol)))
    return tasks


def factorization_tasks(cfg: SuiteConfig, table: WeightTable, raps: RapiditySet) -> list[Task]:
    def run(L: int) -> list[ResidualReport]:
        xs = raps.inhomogeneities[:L]
        return (
            verify_factorization(table, xs, tol=cfg.tol)
            + verify_n_ratio(table, xs, cfg.tol)
            + verify_hat_form(table, xs, cfg.tol)
            + [curly_r_global_unitarity(table, xs, cfg.tol)]
        )

    top = min(cfg.lmax, len(raps.inhomogeneities))
    return [(f"factorization:L={L}", lambda L=L: run(L)) for L in range(2, top + 1)]


def _require_rank3(table: WeightTable, suite: str) -> None:
    if table.rank != 3:
        raise ConfigError(f"suite {suite!r} needs a rank-3 table, got rank {table.rank}")


def twist_tasks(cfg: SuiteConfig, table: WeightTable, raps: RapiditySet) -> list[Task]:
    _require_rank3(table, "twist-compare")
    if not raps.auxiliary:
        raise ConfigError("twist-compare needs an auxiliary rapidity")
    mu = raps.auxiliary[0]

    def run(L: int) -> list[ResidualReport]:
        xs = raps.inhomogeneities[:L]
        bundle = build_f_bundle(table, xs)
        out = []
        for r in check_twisted(table, mu, xs, bundle, TWISTED_KINDS, cfg.tol):
            conjectural = L > PROVEN_TWIST_L and not r.relation.startswith("twist.D:")
            out.append(r.as_advisory() if conjectural else r)
        if L == 2:
            out += check_kappa_zeros(table, mu, xs, bundle, KAPPA_TOL)
        return out

    top = min(cfg.lmax, len(raps.inhomogeneities))
    return [(f"twist:L={L}", lambda L=L: run(L)) for L in range(1, top + 1)]


def _dwpf_labels(raps: RapiditySet, kind: str, L: int) -> DwpfInstance | None:
    prefix = "nu" if kind in ("C2", "C1", "mixedC") else "mu"
    aux = tuple(f"{prefix}{k}" for k in range(1, L + 1))
    if not set(aux) <= set(raps.auxiliary) or L > len(raps.inhomogeneities):
        return None
    return DwpfInstance(kind, aux, raps.inhomogeneities[:L])


def dwpf_tasks(cfg: SuiteConfig, table: WeightTable, raps: RapiditySet) -> list[Task]:
    _require_rank3(table, "dwpf-agree")
    tol = max(cfg.tol, DWPF_TOL)
    tasks: list[Task] = []

    def single(inst: DwpfInstance) -> list[ResidualReport]:
        return agreement_reports(inst, route_values(inst, table), tol)

    def mixed(kind: str, L: int) -> list[ResidualReport]:
        base = _dwpf_labels(raps, kind, L)
        out = []
        for M in range(L + 1):
            for q in itertools.combinations(range(1, L + 1), M):
                inst = DwpfInstance(kind, base.aux, base.inhomogeneities, M, q)
                out += agreement_reports(inst, route_values(inst, table), tol)
        return out

    for kind in SINGLE_KINDS:
        for L in range(1, cfg.lmax + 1):
            inst = _dwpf_labels(raps, kind, L)
            if inst is not None:
                tasks.append((f"dwpf.{kind}:L={L}", lambda inst=inst: single(inst)))
    for kind in MIXED_KINDS:
        for L in range(2, min(cfg.lmax, MIXED_MAX_L) + 1):
            if _dwpf_labels(raps, kind, L) is not None:
                tasks.append((f"dwpf.{kind}:L={L}", lambda kind=kind, L=L: mixed(kind, L)))
    if {"mu1", "nu1"} <= set(raps.auxiliary):
        for L in range(1, min(cfg.lmax, EXCHANGE_MAX_L, len(raps.inhomogeneities)) + 1):
            xs = raps.inhomogeneities[:L]
            for kind in ("CC", "BB"):
                tasks.append(
                    (
                        f"exchange.{kind}:L={L}",
                        lambda kind=kind, xs=xs: [
                            commute_check(kind, table, "mu1", "nu1", xs, cfg.tol),
                            commute_check(kind, table, "nu1", "mu1", xs, cfg.tol),
                        ],
                    )
                )
    if not tasks:
        raise ConfigError("dwpf-agree found no usable nu*/mu* auxiliary labels")
    return tasks


SUITE_BUILDERS = {
    "weights-check": weights_tasks,
    "factorization": factorization_tasks,
    "twist-compare": twist_tasks,
    "dwpf-agree": dwpf_tasks,
}


def collect_tasks(cfg: SuiteConfig, table: WeightTable, raps: RapiditySet) -> list[Task]:
    if cfg.suite != "all":
        return SUITE_BUILDERS[cfg.suite](cfg, table, raps)
    tasks: list[Task] = []
    for name, builder in SUITE_BUILDERS.items():
        if table.rank != 3 and name in ("twist-compare", "dwpf-agree"):
            continue
        tasks += builder(cfg, table, raps)
    return tasks


def _guarded_run(task: Task) -> list[ResidualReport]:
    name, fn = task
    try:
        return fn()
    except FBasisError as exc:
        return [ResidualReport.failure(name, f"{type(exc).__name__}: {exc}")]


def run_suite(cfg: SuiteConfig, threads: int | None = None) -> list[ResidualReport]:
    """Every report of the configured suite, in a fixed order."""
    table, raps = build_model(cfg)
    tasks = collect_tasks(cfg, table, raps)
    threads = thread_count() if threads is None else threads
    if threads == 1 or len(tasks) == 1:
        chunks = [_guarded_run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_guarded_run, tasks))
    return [r for chunk in chunks for r in chunk]


def render(cfg: SuiteConfig, reports: list[ResidualReport]) -> str:
    if cfg.fmt == "csv":
        return to_csv(reports)
    return to_json(reports, **cfg.meta()) + "\n"


# ---------------------------------------------------------------------------
# entry point


def _fmt_complex(z: complex) -> str:
    return f"{z.real:+.17g}{z.imag:+.17g}j"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbasis", description="F-basis verification suites and DWPF evaluation.")
    p.add_argument("--version", action="version", version=f"fbasis {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUITES:
        s = sub.add_parser(name, help=f"run the {name} suite")
        s.add_argument("--model", default="del-pezzo", choices=MODELS)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--lmax", type=int, default=4)
        s.add_argument("--tol", type=float, default=DEFAULT_TOL)
        s.add_argument("--out", default=None, help="write the report here instead of stdout")
        s.add_argument("--format", dest="fmt", default="json", choices=("json", "csv"))
        s.add_argument("--custom-table", default=None, help="weight-table JSON document")
        s.add_argument("--corrupt", default=None, metavar="X,Y:KIND", help="double one weight before checking")
    d = sub.add_parser("dwpf", help="evaluate one DWPF by every route")
    d.add_argument("--kind", default="C2", choices=SINGLE_KINDS + MIXED_KINDS)
    d.add_argument("--L", type=int, default=3)
    d.add_argument("--M", type=int, default=0)
    d.add_argument("--q", default="", help="comma-separated positions of |1> (mixed kinds)")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--tol", type=float, default=DWPF_TOL)
    d.add_argument("--instance", default=None, help="instance JSON document (overrides --kind/--L/--M/--q/--seed)")
    d.add_argument("--format", dest="fmt", default="text", choices=("text", "json"))
    return p


def _dwpf_command(args) -> int:
    if args.instance:
        try:
            doc = json.loads(Path(args.instance).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load instance {args.instance!r}: {exc}") from None
    else:
        if not 1 <= args.L <= 7:
            raise ConfigError("--L must lie in [1, 7]")
        try:
            q = [int(t) for t in args.q.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"--q expects comma-separated integers, got {args.q!r}") from None
        doc = {"kind": args.kind, "L": args.L, "seed": args.seed}
        if args.kind in MIXED_KINDS:
            doc.update(M=args.M, q=q)
    try:
        DwpfInstance.from_document(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid instance: {exc}") from None
    result = compute_dwpf(doc, tol=args.tol)
    if args.fmt == "json":
        print(json.dumps({"schema": 1, **result}, sort_keys=True, indent=1))
    else:
        inst = result["instance"]
        head = f"kind={inst['kind']} L={inst['L']}"
        if "M" in inst:
            head += f" M={inst['M']} q={','.join(map(str, inst['q']))}"
        print(head + f" seed={inst.get('seed')}")
        for route, (re, im) in result["routes"].items():
            print(f"{route:<11s} {_fmt_complex(complex(re, im))}")
        for route, rel in sorted(result["residuals"].items()):
            print(f"residual {route:<11s} {rel:.3e}")
    return EXIT_OK if result["passed"] else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        if args.command == "dwpf":
            return _dwpf_command(args)
        cfg = SuiteConfig(
            args.command, args.model, args.seed, args.lmax, args.tol, args.out, args.fmt, args.custom_table, args.corrupt
        )
        reports = run_suite(cfg)
        text = render(cfg, reports)
        if cfg.out:
            try:
                Path(cfg.out).write_text(text)
            except OSError as exc:
                raise ConfigError(f"cannot write {cfg.out!r}: {exc.strerror}") from None
        else:
            sys.stdout.write(text)
        s = summarize(reports)
        status = "PASS" if all_passed(reports) else "FAIL"
        print(f"{status}: {s['count']} checks, {s['failed']} failed, worst relative {s['worst_relative']:.2e}", file=sys.stderr)
        if s["failing_relations"]:
            print("failing: " + ", ".join(s["failing_relations"]), file=sys.stderr)
        return EXIT_OK if all_passed(reports) else EXIT_FAIL
    except ConfigError as exc:
        print(f"fbasis: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FBasisError as exc:
        print(f"fbasis: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
