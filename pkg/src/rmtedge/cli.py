"""Command line front end: ``rmtedge <command> [--config FILE] [flags]``.

Commands: ``sample``, ``moments``, ``verify``, ``scaling``, ``decoupling`` and
``kernel-table``.  A run writes ``<out>.json`` (report with the full manifest)
and ``<out>.csv`` (flat table).  The config file is JSON with the same keys as
the long flags (``n``, ``K``, ``z``, ``seed``, ...); flags override it.

Exit status: 0 all cells pass (or carry a non-failing verdict such as
``scaling-only``), 1 some verdict is ``fail`` or some cells hit a numerical
error, 2 configuration error, 3 every cell hit a numerical error.

Example::

    rmtedge verify --theorem WishartReal --n 2 4 --nu 1 --t 1 --K 1 --K 0,1 \\
        --samples 100000 --seed 7 --out runs/wr
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import kernels
from .decoupling import OBSERVABLES, gaussian_decoupling_check, truncated_expansion_residual
from .ensembles import ConfigurationError, EnsembleKind, EnsembleSpec, EntryLaw
from .recursions import TheoremId, scaling_study, verify_cells
from .spectra import Edge, NumericalError, edge_spectrum, spectra_block
from .statistics import DomainError, EvaluationPoint, MomentAccumulator, MultiIndex, ObservableTable, merge
from ._parallel import chunk_bounds, chunk_size, run_chunks

SCHEMA_VERSION = 1
COMMANDS = ("sample", "moments", "verify", "scaling", "decoupling", "kernel-table")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

VERIFY_COLUMNS = ["theorem", "K", "n", "nu", "point", "samples", "residual_re", "residual_im",
                  "stderr_re", "stderr_im", "z_re", "z_im", "verdict"]


@dataclass
class ExperimentManifest:
    """Everything a run depends on; stored verbatim in the JSON report."""

    command: str
    seed: Optional[int] = None
    ensemble: Optional[str] = None
    n: List[int] = field(default_factory=list)
    nu: Optional[int] = None
    K: List[str] = field(default_factory=list)
    z: List[str] = field(default_factory=list)
    t: List[float] = field(default_factory=list)
    samples: int = 1000
    workers: int = 1
    out: str = "report"
    theorem: List[str] = field(default_factory=list)
    form: str = "derived"
    sampler: Optional[str] = None
    law: str = "gaussian"
    observable: List[str] = field(default_factory=list)
    entry: str = "0,1"
    part: str = "re"
    p: int = 2
    x: str = "-5:5:11"
    kernel_nu: int = 0
    schema_version: int = SCHEMA_VERSION

    # -- derived views --
    def multi_indices(self) -> List[MultiIndex]:
        return [MultiIndex.parse(str(k)) for k in self.K]

    def points(self, edge: Edge) -> List[EvaluationPoint]:
        if edge is Edge.SOFT:
            if self.t:
                raise ConfigurationError("--t applies to Wishart (hard-edge) runs")
            return [EvaluationPoint.soft(parse_complex(z)) for z in (self.z or ["1j"])]
        if self.z:
            raise ConfigurationError("--z applies to Wigner (soft-edge) runs")
        return [EvaluationPoint.hard(float(t)) for t in (self.t or [1.0])]

    def spec(self, n: int, kind: Optional[EnsembleKind] = None) -> EnsembleSpec:
        kind = kind or _kind(self.ensemble)
        law = EntryLaw.parse(self.law) if kind is EnsembleKind.WIGNER_CUSTOM else None
        nu = self.nu if kind.is_wishart else None
        if kind.is_wishart and nu is None:
            raise ConfigurationError("Wishart ensembles need --nu")
        return EnsembleSpec(kind, int(n), nu=nu, entry_law=law)


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    try:
        return complex(str(text).strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigurationError(f"malformed complex number {text!r}") from None


def _kind(name: Optional[str]) -> EnsembleKind:
    if name is None:
        raise ConfigurationError("no ensemble given (--ensemble or --theorem)")
    try:
        return EnsembleKind(name)
    except ValueError:
        raise ConfigurationError(f"unknown ensemble {name!r}; choose from "
                                 f"{[k.value for k in EnsembleKind]}") from None


# -- argument handling ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rmtedge", description="Edge statistics of random matrices: "
                                 "sampling, joint moments, recursion checks and kernels.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=str, help="JSON file with the same keys as the flags")
    ap.add_argument("--ensemble", choices=[k.value for k in EnsembleKind])
    ap.add_argument("--n", type=int, nargs="+", help="matrix size(s); the grid for 'scaling'")
    ap.add_argument("--nu", type=int, help="Wishart N - n")
    ap.add_argument("--K", action="append", help="multi-index 'k1,k2,...' (repeatable)")
    ap.add_argument("--z", action="append", help="soft-edge point, e.g. 1+1i (repeatable)")
    ap.add_argument("--t", action="append", type=float, help="hard-edge point (repeatable)")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seed", type=int, help="master seed (required)")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", type=str, help="output basename; writes .json and .csv")
    ap.add_argument("--theorem", action="append", choices=[t.value for t in TheoremId])
    ap.add_argument("--form", choices=["derived", "printed"],
                    help="Wishart coefficient variant")
    ap.add_argument("--sampler", choices=["dense", "banded"])
    ap.add_argument("--law", choices=["gaussian", "rademacher", "uniform"],
                    help="entry law for WignerCustom")
    ap.add_argument("--observable", action="append", choices=list(OBSERVABLES))
    ap.add_argument("--entry", type=str, help="0-based matrix entry 'i,j'")
    ap.add_argument("--part", choices=["re", "im"])
    ap.add_argument("--p", type=int, help="truncation order of the cumulant expansion")
    ap.add_argument("--x", type=str, help="kernel-table grid 'start:stop:count'")
    ap.add_argument("--kernel-nu", type=int, dest="kernel_nu", help="Bessel kernel order")
    return ap


def load_manifest(argv=None) -> ExperimentManifest:
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigurationError("config file must hold a JSON object")
        if "manifest" in values and "rows" in values:
            # a previous report: rerun its manifest
            values = values["manifest"]
        known = {f.name for f in fields(ExperimentManifest)}
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if values.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported schema_version {values['schema_version']}")
    for key, val in vars(args).items():
        if key == "config" or val is None:
            continue
        values[key] = val
    return make_manifest(values)


def make_manifest(values: dict) -> ExperimentManifest:
    values = dict(values)
    for key in ("n", "K", "z", "t", "theorem", "observable"):
        if key in values and not isinstance(values[key], list):
            values[key] = [values[key]]
    values["K"] = [str(k) for k in values.get("K", [])]
    values["z"] = [str(z) for z in values.get("z", [])]
    m = ExperimentManifest(**values)
    if m.command not in COMMANDS:
        raise ConfigurationError(f"unknown command {m.command!r}")
    if m.command != "kernel-table":
        if m.seed is None:
            raise ConfigurationError("a master seed is required (--seed)")
        if not 0 <= int(m.seed) < 2**64:
            raise ConfigurationError("seed must fit in 64 bits")
        if not m.n:
            raise ConfigurationError("at least one --n is required")
    if m.samples < 1 or m.workers < 1:
        raise ConfigurationError("samples and workers must be positive")
    if m.theorem and m.ensemble is None:
        m.ensemble = TheoremId(m.theorem[0]).kind.value
    m.multi_indices()  # fail early on malformed K
    return m


# -- commands -------------------------------------------------------------------------

def _moments_chunk(task):
    spec, seed, start, stop, sampler, cells = task
    eigs = spectra_block(spec, seed, start, stop, sampler)
    spec_pts = edge_spectrum(spec, eigs)
    out = []
    for point, K in cells:
        out.append(MomentAccumulator().add_many(ObservableTable(spec_pts, point).product(K)))
    return out


def run_moments(m: ExperimentManifest):
    rows, errors = [], []
    Ks = m.multi_indices() or [MultiIndex.of(1)]
    for n in m.n:
        spec = m.spec(n)
        edge = Edge.HARD if spec.kind.is_wishart else Edge.SOFT
        cells = [(p, K) for p in m.points(edge) for K in Ks]
        sampler = m.sampler or "dense"
        tasks = [(spec, m.seed, a, b, sampler, cells)
                 for a, b in chunk_bounds(m.samples, chunk_size(spec, sampler))]
        try:
            totals = [MomentAccumulator() for _ in cells]
            for accs in run_chunks(_moments_chunk, tasks, m.workers):
                totals = [merge(a, b) for a, b in zip(totals, accs)]
        except NumericalError as exc:
            errors.append(str(exc))
            rows.extend({"n": n, "point": p.label, "K": str(K), "verdict": "error",
                         "message": str(exc)} for p, K in cells)
            continue
        for (p, K), acc in zip(cells, totals):
            est = acc.estimate()
            rows.append({"n": n, "nu": "" if spec.nu is None else spec.nu, "point": p.label,
                         "K": str(K), "samples": m.samples, "mean_re": est.mean.real,
                         "mean_im": est.mean.imag, "stderr_re": est.stderr_re,
                         "stderr_im": est.stderr_im, "verdict": "measured"})
    return rows, errors


def run_sample(m: ExperimentManifest):
    rows = []
    for n in m.n:
        spec = m.spec(n)
        sampler = m.sampler or "dense"
        eigs = spectra_block(spec, m.seed, 0, m.samples, sampler)
        pts = edge_spectrum(spec, eigs)
        for i in range(m.samples):
            rows.append({"n": n, "index": i, "lambda_min": eigs[i, 0], "lambda_max": eigs[i, -1],
                         "xi_edge": pts.xi[i, 0], "trace": float(np.sum(eigs[i])),
                         "verdict": "measured"})
    return rows, []


def _verify_theorems(m: ExperimentManifest) -> List[TheoremId]:
    if m.theorem:
        ths = [TheoremId(t) for t in m.theorem]
    else:
        ths = [t for t in TheoremId if t.kind is _kind(m.ensemble) and t.exact]
    kind = _kind(m.ensemble)
    for t in ths:
        if t.kind is not kind:
            raise ConfigurationError(f"theorem {t.value} does not apply to {kind.value}")
    return ths


def run_verify(m: ExperimentManifest):
    rows, errors = [], []
    ths = _verify_theorems(m)
    Ks = m.multi_indices() or [MultiIndex.of(1)]
    for n in m.n:
        spec = m.spec(n)
        cells = []
        for th in ths:
            for p in m.points(th.edge):
                for K in ([MultiIndex()] if th.is_boundary else Ks):
                    cells.append((th, K, p))
        try:
            reports = verify_cells(spec, cells, m.samples, m.seed, m.workers,
                                   m.sampler or "dense", m.form)
        except NumericalError as exc:
            errors.append(str(exc))
            for th, K, p in cells:
                rows.append({"theorem": th.value, "K": str(K), "n": n,
                             "nu": "" if spec.nu is None else spec.nu, "point": p.label,
                             "samples": m.samples, "verdict": "error", "message": str(exc)})
            continue
        rows.extend(r.row() for r in reports)
    return rows, errors


def run_scaling(m: ExperimentManifest):
    rows = []
    ths = [TheoremId(t) for t in m.theorem] or [TheoremId.GOE_BOUNDARY_LEADING]
    Ks = m.multi_indices()
    studies = []
    for th in ths:
        for p in m.points(th.edge):
            for K in ([MultiIndex()] if th.is_boundary else (Ks or [MultiIndex.of(1)])):
                rep = scaling_study(th, K, p, m.n, m.samples, m.seed, m.workers,
                                    m.sampler or "banded")
                studies.append(rep)
                for r in rep.rows:
                    rows.append({"theorem": th.value, "K": str(K), "n": r.n, "point": p.label,
                                 "samples": r.samples, "residual_re": r.residual.mean.real,
                                 "residual_im": r.residual.mean.imag,
                                 "stderr_re": r.residual.stderr_re,
                                 "stderr_im": r.residual.stderr_im,
                                 "abs_residual": abs(r.residual.mean),
                                 "centered_re": r.centered_mean.mean.real,
                                 "centered_im": r.centered_mean.mean.imag,
                                 "exponent": rep.exponent, "monotone": rep.monotone,
                                 "centered_bounded": rep.centered_bounded,
                                 "verdict": rep.verdict})
    return rows, []


def run_decoupling(m: ExperimentManifest):
    rows = []
    kind = _kind(m.ensemble)
    Ks = m.multi_indices()
    for n in m.n:
        spec = m.spec(n)
        for p in m.points(Edge.SOFT):
            if kind is EnsembleKind.WIGNER_CUSTOM:
                rep = truncated_expansion_residual(spec.entry_law, n, p.z, m.p, m.samples,
                                                   m.seed, m.workers)
                row = {"law": rep.law, "n": n, "point": p.label, "p": rep.p,
                       "samples": rep.samples, "c3": rep.cumulants[2], "c4": rep.cumulants[3]}
                for name in ("lhs", "gaussian", "third_cumulant", "remainder"):
                    est = getattr(rep, name)
                    row[f"{name}_re"] = est.mean.real
                    row[f"{name}_im"] = est.mean.imag
                    row[f"{name}_stderr"] = est.stderr
                row["verdict"] = rep.verdict
                rows.append(row)
                continue
            entry = tuple(int(v) for v in m.entry.split(","))
            if len(entry) != 2:
                raise ConfigurationError(f"entry must be 'i,j', got {m.entry!r}")
            for obs in (m.observable or list(OBSERVABLES)):
                for K in ((Ks or [MultiIndex.of(1)]) if obs == "G_ji_PK" else [None]):
                    rep = gaussian_decoupling_check(spec, obs, entry, p, m.samples, m.seed,
                                                    K=K, part=m.part, workers=m.workers)
                    rows.append({"observable": obs, "entry": m.entry, "part": m.part, "n": n,
                                 "point": p.label, "K": "" if K is None else str(K),
                                 "samples": m.samples,
                                 "lhs_re": rep.lhs.mean.real, "lhs_im": rep.lhs.mean.imag,
                                 "rhs_re": rep.rhs.mean.real, "rhs_im": rep.rhs.mean.imag,
                                 "stderr_re": rep.difference.stderr_re,
                                 "stderr_im": rep.difference.stderr_im,
                                 "z_re": rep.z_re, "z_im": rep.z_im, "verdict": rep.verdict})
    return rows, []


def run_kernel_table(m: ExperimentManifest):
    try:
        start, stop, count = m.x.split(":")
        grid = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise ConfigurationError(f"grid must be 'start:stop:count', got {m.x!r}") from None
    rows = []
    for x in grid:
        x = float(x)
        rows.append({
            "x": x,
            "airy_ai": kernels.airy_ai(x),
            "airy_ai_prime": kernels.airy_ai_prime(x),
            "airy_kernel_diag": kernels.airy_kernel(x, x),
            "bessel_kernel_diag": kernels.bessel_kernel(m.kernel_nu, x, x) if x > 0 else "",
            "semicircle": kernels.semicircle_density(x),
            "mp": kernels.mp_density(x),
            "verdict": "measured",
        })
    return rows, []


RUNNERS = {
    "sample": run_sample,
    "moments": run_moments,
    "verify": run_verify,
    "scaling": run_scaling,
    "decoupling": run_decoupling,
    "kernel-table": run_kernel_table,
}


# -- reports --------------------------------------------------------------------------

def _columns(command: str, rows: List[dict]) -> List[str]:
    if command == "verify":
        extra = [k for r in rows for k in r if k not in VERIFY_COLUMNS]
        return VERIFY_COLUMNS + list(dict.fromkeys(extra))
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def _plain(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def write_report(manifest: ExperimentManifest, rows: List[dict], errors: List[str],
                 status: int) -> tuple:
    base = Path(manifest.out)
    if base.parent != Path("."):
        base.parent.mkdir(parents=True, exist_ok=True)
    rows = [{k: _plain(v) for k, v in r.items()} for r in rows]
    report = {"schema_version": SCHEMA_VERSION, "manifest": asdict(manifest),
              "columns": _columns(manifest.command, rows), "rows": rows,
              "errors": errors, "exit_status": status}
    json_path = base.with_name(base.name + ".json")
    csv_path = base.with_name(base.name + ".csv")
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=1)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=report["columns"], restval="")
        writer.writeheader()
        for r in rows:
            # repr keeps the shortest round-trip form of every float
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return json_path, csv_path


def read_report(path) -> dict:
    """Load a JSON report; floats come back bit-identical to what was written."""
    with open(path) as fh:
        report = json.load(fh)
    report["manifest"] = make_manifest(report["manifest"])
    return report


def exit_status(rows: List[dict], errors: List[str]) -> int:
    verdicts = [r.get("verdict") for r in rows]
    if verdicts and all(v == "error" for v in verdicts):
        return EXIT_NUMERICAL
    if errors or any(v in ("fail", "error") for v in verdicts):
        return EXIT_FAIL
    return EXIT_OK


def run(manifest: ExperimentManifest) -> int:
    """Execute a manifest, write both report files, return the exit status."""
    try:
        rows, errors = RUNNERS[manifest.command](manifest)
    except NumericalError as exc:
        rows, errors = [], [str(exc)]
        write_report(manifest, rows, errors, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    status = exit_status(rows, errors)
    write_report(manifest, rows, errors, status)
    return status


def main(argv=None) -> int:
    try:
        manifest = load_manifest(argv)
        status = run(manifest)
    except (ConfigurationError, DomainError, TypeError) as exc:
        print(f"rmtedge: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"rmtedge: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"rmtedge {manifest.command}: wrote {manifest.out}.json, {manifest.out}.csv "
          f"(exit {status})")
    return status


if __name__ == "__main__":
    sys.exit(main())
