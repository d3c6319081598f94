"""Command-line front end: ``hperc {percolate,sweep,fit,concentration,selftest}``.

Every option can also come from a JSON file given with ``--config``; flags
on the command line win. Each command writes a ``*_manifest.json`` holding
the resolved configuration, which can be fed back through ``--config`` to
regenerate the outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clusters import build_clusters, oracle_boolean_clusters
from .concentration import MIN_PAIRS, empirical_tail, sample_fidelities
from .errors import HpercError, InsufficientDataError, InvalidDataError, ResourceLimitError
from .fitting import fit_A_law, fit_B_law, fit_power_law
from .metric import HALF_PI, distance_matrix
from .percolation import (
    DEFAULT_MEMORY_BUDGET,
    DEFAULT_TOL,
    check_budget,
    critical_threshold,
    default_workers,
    log_spaced_counts,
    msc_indicator,
    msc_report,
    run_sweep,
)
from .states import qubits_to_dim, sample_ensemble

log = logging.getLogger("hperc")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_RESOURCE = 4
EXIT_DATA = 5

SWEEP_HEADER = ["dim", "n_states", "n_samples", "mean_delta_s", "std_err", "seed", "tol"]
SAMPLES_HEADER = ["dim", "n_states", "sample_index", "delta_s"]
FITS_HEADER = ["dim", "A", "se_A", "B", "se_B", "r2"]
CONC_HEADER = ["dim", "epsilon", "analytic_bound", "empirical_tail", "ci99", "n_pairs", "seed"]


class UsageError(HpercError):
    pass


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def parse_int_list(text) -> list[int]:
    """'7-10' -> [7, 8, 9, 10]; '2,5,9' -> [2, 5, 9]; lists pass through."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def parse_state_counts(text) -> list[int]:
    """Explicit list, range, or 'log:MIN:MAX:COUNT' for log-spaced values."""
    if isinstance(text, str) and text.startswith("log:"):
        _, lo, hi, n = text.split(":")
        return log_spaced_counts(int(lo), int(hi), int(n))
    return parse_int_list(text)


def parse_float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(p) for p in str(text).split(",") if p.strip()]


DEFAULTS = {
    "percolate": {
        "qubits": None, "states": None, "seed": 0, "sample_index": 0, "tol": DEFAULT_TOL,
        "epsilon": None, "out": ".", "memory_budget": DEFAULT_MEMORY_BUDGET,
    },
    "sweep": {
        "qubits": None, "states": "log:2:200:25", "samples": 100, "seed": 0, "tol": DEFAULT_TOL,
        "epsilon": None, "out": ".", "resume": False, "per_sample": False,
        "memory_budget": DEFAULT_MEMORY_BUDGET, "workers": None,
    },
    "fit": {
        "input": None, "out": ".", "m_min": 2, "m_max": 200, "n_min": 7, "n_max": 14, "weighted": False,
    },
    "concentration": {
        "qubits": None, "epsilon": None, "epsilon_inverse_dim": False, "pairs": 100000, "seed": 0,
        "out": ".", "workers": None,
    },
    "selftest": {"instances": 200, "seed": 12345},
}

# options that change nothing in the outputs; kept out of manifests
NON_SEMANTIC = {"workers", "out", "resume"}


def resolve(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
        data = data.get("config", data)
        unknown = set(data) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(data)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


def manifest(command: str, cfg: dict, outputs: list[str]) -> dict:
    return {
        "tool": "hperc",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(cfg.items()) if k not in NON_SEMANTIC},
        "outputs": outputs,
    }


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def out_dir(cfg: dict) -> Path:
    p = Path(cfg["out"])
    p.mkdir(parents=True, exist_ok=True)
    if not os.access(p, os.W_OK):
        raise OSError(f"output directory {p} is not writable")
    return p


def resolve_workers(cfg: dict) -> int:
    w = cfg.get("workers")
    return int(w) if w else default_workers()


def cmd_percolate(cfg: dict) -> int:
    if cfg["qubits"] is None or cfg["states"] is None:
        raise UsageError("--qubits and --states are required")
    N, M = int(cfg["qubits"]), int(cfg["states"])
    if N < 1:
        raise UsageError(f"--qubits must be >= 1, got {N}")
    if M < 2:
        raise UsageError(f"--states must be >= 2, got {M}")
    if cfg["tol"] <= 0:
        raise UsageError("--tol must be > 0")
    dim = qubits_to_dim(N)
    check_budget([dim], [M], int(cfg["memory_budget"]))
    ens = sample_ensemble(M, dim, int(cfg["seed"]), int(cfg["sample_index"]))
    dm = distance_matrix(ens)
    eps = cfg["epsilon"]
    res = critical_threshold(
        dm, float(cfg["tol"]), eps, dim=dim, seed=int(cfg["seed"]), sample_index=int(cfg["sample_index"])
    )
    partition, report = msc_report(dm, res.critical_delta_s, eps)
    eps_used = res.critical_delta_s if eps is None else eps

    out = out_dir(cfg)
    clusters = partition.to_dict(eps_used)
    clusters["msc_cluster_id"] = report.msc_cluster_id
    write_json(out / "clusters.json", clusters)
    result = res.to_dict()
    result["n_qubits"] = N
    write_json(out / "result.json", result)
    write_json(out / "percolate_manifest.json", manifest("percolate", cfg, ["clusters.json", "result.json"]))
    print(fmt(res.critical_delta_s))
    return EXIT_OK


def read_sweep_csv(path: Path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SWEEP_HEADER:
            raise InvalidDataError(f"{path}:1: expected header {','.join(SWEEP_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if len(row) != len(SWEEP_HEADER):
                    raise ValueError(f"expected {len(SWEEP_HEADER)} fields, got {len(row)}")
                rows.append({
                    "dim": int(row[0]), "n_states": int(row[1]), "n_samples": int(row[2]),
                    "mean_delta_s": float(row[3]), "std_err": float(row[4]),
                    "seed": int(row[5]), "tol": float(row[6]), "raw": row,
                })
            except ValueError as exc:
                raise InvalidDataError(f"{path}:{lineno}: malformed row {row!r}: {exc}") from exc
    return rows


def cmd_sweep(cfg: dict) -> int:
    if cfg["qubits"] is None:
        raise UsageError("--qubits is required")
    qubits = parse_int_list(cfg["qubits"])
    counts = parse_state_counts(cfg["states"])
    if not qubits or not counts:
        raise UsageError("qubit and state grids must be non-empty")
    if min(qubits) < 1:
        raise UsageError("every qubit count must be >= 1")
    if min(counts) < 2:
        raise UsageError("every state count must be >= 2")
    if int(cfg["samples"]) < 1:
        raise UsageError("--samples must be >= 1")
    dims = [qubits_to_dim(n) for n in qubits]
    seed, tol, n_samples = int(cfg["seed"]), float(cfg["tol"]), int(cfg["samples"])
    workers = resolve_workers(cfg)
    out = out_dir(cfg)
    sweep_path = out / "sweep.csv"
    samples_path = out / "sweep_samples.csv"

    existing: dict[tuple[int, int], list[str]] = {}
    existing_samples: dict[tuple[int, int], list[list[str]]] = {}
    if cfg["resume"] and sweep_path.exists():
        for r in read_sweep_csv(sweep_path):
            if r["seed"] == seed and r["tol"] == tol and r["n_samples"] == n_samples:
                existing[(r["dim"], r["n_states"])] = r["raw"]
        if cfg["per_sample"]:
            if samples_path.exists():
                with open(samples_path, newline="") as fh:
                    reader = csv.reader(fh)
                    next(reader, None)
                    for row in reader:
                        existing_samples.setdefault((int(row[0]), int(row[1])), []).append(row)
            existing = {k: v for k, v in existing.items() if len(existing_samples.get(k, [])) == n_samples}
        log.info("resuming: %d grid points already present", len(existing))

    check_budget(dims, counts, int(cfg["memory_budget"]), workers)
    records = run_sweep(
        dims, counts, n_samples, seed, tol, epsilon=cfg["epsilon"], workers=workers,
        memory_budget=int(cfg["memory_budget"]), skip=frozenset(existing),
    ) if len(existing) < len(dims) * len(counts) else []
    fresh = {(r.dim, r.n_states): r for r in records}

    rows, sample_rows = [], []
    for d in dims:
        for m in counts:
            if (d, m) in fresh:
                r = fresh[(d, m)]
                rows.append([fmt(d), fmt(m), fmt(r.n_samples), fmt(r.mean_critical_delta_s),
                             fmt(r.std_error), fmt(seed), fmt(tol)])
                sample_rows.extend([fmt(d), fmt(m), fmt(k), fmt(v)] for k, v in enumerate(r.samples))
            else:
                rows.append(existing[(d, m)])
                sample_rows.extend(existing_samples.get((d, m), []))

    with open(sweep_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        w.writerows(rows)
    outputs = ["sweep.csv"]
    if cfg["per_sample"]:
        with open(samples_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SAMPLES_HEADER)
            w.writerows(sample_rows)
        outputs.append("sweep_samples.csv")
    write_json(out / "sweep_manifest.json", manifest("sweep", cfg, outputs))
    print(f"wrote {len(rows)} grid points to {sweep_path} ({len(fresh)} computed)")
    return EXIT_OK


def cmd_fit(cfg: dict) -> int:
    if cfg["input"] is None:
        raise UsageError("--input is required")
    rows = read_sweep_csv(Path(cfg["input"]))
    n_lo, n_hi = int(cfg["n_min"]), int(cfg["n_max"])
    m_lo, m_hi = int(cfg["m_min"]), int(cfg["m_max"])
    by_dim: dict[int, list[dict]] = {}
    for r in rows:
        n_qubits = round(math.log2(r["dim"]))
        if n_lo <= n_qubits <= n_hi and m_lo <= r["n_states"] <= m_hi:
            by_dim.setdefault(r["dim"], []).append(r)
    if not by_dim:
        raise InsufficientDataError(f"no rows with N in [{n_lo}, {n_hi}] and M in [{m_lo}, {m_hi}]")

    fits = []
    for d in sorted(by_dim):
        pts = [(r["n_states"], r["mean_delta_s"]) for r in by_dim[d]]
        weights = [r["std_err"] for r in by_dim[d]] if cfg["weighted"] else None
        fits.append(fit_power_law(pts, weights, dim=d))

    out = out_dir(cfg)
    with open(out / "fits.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FITS_HEADER)
        for f in fits:
            w.writerow([fmt(f.dim), fmt(f.A), fmt(f.se_A), fmt(f.B), fmt(f.se_B), fmt(f.r_squared)])
    outputs = ["fits.csv"]

    print(f"{'N':>3} {'D':>6} {'A':>12} {'se_A':>10} {'B':>12} {'se_B':>10} {'r2':>8}")
    for f in fits:
        print(f"{round(math.log2(f.dim)):>3} {f.dim:>6} {f.A:>12.6f} {f.se_A:>10.2e} "
              f"{f.B:>12.6f} {f.se_B:>10.2e} {f.r_squared:>8.5f}")

    meta: dict = {"dims_used": [f.dim for f in fits], "A_law": None, "B_law": None}
    if len(fits) >= 3:
        try:
            b = fit_B_law([(f.dim, f.B) for f in fits])
            meta["B_law"] = {"alpha_B": b.alpha_B, "beta_B": b.beta_B,
                             "se_alpha_B": b.se_alpha_B, "se_beta_B": b.se_beta_B}
        except HpercError as exc:
            log.warning("B-law fit skipped: %s", exc)
    if len(fits) >= 4:
        try:
            a = fit_A_law([(f.dim, f.A) for f in fits])
            meta["A_law"] = {"gamma_A": a.gamma_A, "alpha_A": a.alpha_A, "beta_A": a.beta_A,
                             "se_gamma_A": a.se_gamma_A, "se_alpha_A": a.se_alpha_A, "se_beta_A": a.se_beta_A,
                             "gamma_at_boundary": a.at_boundary}
        except HpercError as exc:
            log.warning("A-law fit skipped: %s", exc)
    if meta["A_law"] is None and meta["B_law"] is None:
        log.warning("metafit skipped: %d dimension(s) available, need >= 3 for B(D) and >= 4 for A(D)", len(fits))
    else:
        meta["config"] = manifest("fit", cfg, [])["config"]
        write_json(out / "metafit.json", meta)
        outputs.append("metafit.json")
        for name, law in (("A(D)", meta["A_law"]), ("B(D)", meta["B_law"])):
            if law:
                print(name + ": " + ", ".join(f"{k}={v:.6g}" for k, v in law.items()))
    write_json(out / "fit_manifest.json", manifest("fit", cfg, outputs))
    return EXIT_OK


def cmd_concentration(cfg: dict) -> int:
    if cfg["qubits"] is None:
        raise UsageError("--qubits is required")
    qubits = parse_int_list(cfg["qubits"])
    if not qubits or min(qubits) < 1:
        raise UsageError("every qubit count must be >= 1")
    n_pairs = int(cfg["pairs"])
    if n_pairs < MIN_PAIRS:
        raise UsageError(f"--pairs must be >= {MIN_PAIRS}, got {n_pairs}")
    if cfg["epsilon"] is None and not cfg["epsilon_inverse_dim"]:
        raise UsageError("give --epsilon or --epsilon-inverse-dim")
    epsilons = parse_float_list(cfg["epsilon"]) if cfg["epsilon"] is not None else []
    if any(e <= 0 for e in epsilons):
        raise UsageError("every epsilon must be > 0")
    seed = int(cfg["seed"])
    workers = resolve_workers(cfg)
    out = out_dir(cfg)

    rows = []
    for n in qubits:
        dim = qubits_to_dim(n)
        eps_list = ([1.0 / dim] if cfg["epsilon_inverse_dim"] else []) + epsilons
        fids = sample_fidelities(dim, n_pairs, seed, workers)
        for eps in eps_list:
            rep = empirical_tail(dim, eps, n_pairs, seed, fidelities=fids)
            rows.append([fmt(dim), fmt(eps), fmt(rep.analytic_bound), fmt(rep.empirical_tail),
                         fmt(rep.ci_halfwidth), fmt(n_pairs), fmt(seed)])
            print(f"D={dim} eps={eps:.6g} bound={rep.analytic_bound:.6g} "
                  f"1-bound={1 - rep.analytic_bound:.8g} tail={rep.empirical_tail:.6g} +/- {rep.ci_halfwidth:.2g}")
    with open(out / "concentration.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONC_HEADER)
        w.writerows(rows)
    write_json(out / "concentration_manifest.json", manifest("concentration", cfg, ["concentration.csv"]))
    return EXIT_OK


def cmd_selftest(cfg: dict) -> int:
    rng = np.random.default_rng(int(cfg["seed"]))
    n = int(cfg["instances"])
    results = []

    bad = 0
    for i in range(n):
        M = int(rng.integers(2, 51))
        dim = int(rng.choice([2, 4, 8]))
        dm = distance_matrix(sample_ensemble(M, dim, int(cfg["seed"]), i))
        t = float(rng.uniform(0, HALF_PI))
        if build_clusters(dm, t).as_sets() != oracle_boolean_clusters(dm, t).as_sets():
            bad += 1
    results.append((f"oracle equivalence ({n} instances)", bad == 0, f"{bad} mismatches"))

    tol = DEFAULT_TOL
    worst = 0.0
    for i in range(100):
        dm = distance_matrix(sample_ensemble(2, int(rng.choice([2, 16, 256])), int(cfg["seed"]) + 1, i))
        d = dm.entries[0]
        worst = max(worst, abs(critical_threshold(dm, tol).critical_delta_s - max(d, HALF_PI - d)))
    results.append(("M=2 closed form", worst <= 2 * tol, f"max error {worst:.3g}"))

    violations = 0
    for i in range(20):
        dm = distance_matrix(sample_ensemble(int(rng.integers(2, 60)), 4, int(cfg["seed"]) + 2, i))
        for _ in range(20):
            a, b = sorted(rng.uniform(0, HALF_PI, 2))
            if msc_indicator(dm, a) and not msc_indicator(dm, b):
                violations += 1
    results.append(("monotone MSC indicator", violations == 0, f"{violations} violations"))

    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hperc", description="Continuum percolation among random N-qubit states.")
    p.add_argument("--version", action="version", version=f"hperc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values (flags take precedence)")
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("percolate", help="critical threshold of one sampled ensemble")
    common(sp)
    sp.add_argument("--qubits", type=int)
    sp.add_argument("--states", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--sample-index", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--epsilon", type=float, help="fixed MSC tolerance (default: tied to the threshold)")
    sp.add_argument("--memory-budget", type=int, help="bytes")

    sp = sub.add_parser("sweep", help="critical thresholds over a grid of qubit and state counts")
    common(sp)
    sp.add_argument("--qubits", help="e.g. 7-10 or 7,8")
    sp.add_argument("--states", help="e.g. 2,10,50 or log:2:200:25")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--resume", action="store_true", help="keep grid points already in sweep.csv")
    sp.add_argument("--per-sample", action="store_true", help="also write sweep_samples.csv")
    sp.add_argument("--memory-budget", type=int, help="bytes")

    sp = sub.add_parser("fit", help="power-law and meta-law fits of a sweep")
    common(sp)
    sp.add_argument("--input", help="sweep CSV")
    sp.add_argument("--m-min", type=int)
    sp.add_argument("--m-max", type=int)
    sp.add_argument("--n-min", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--weighted", action="store_true", help="weight points by their standard errors")

    sp = sub.add_parser("concentration", help="analytic bound vs sampled fidelity tails")
    common(sp)
    sp.add_argument("--qubits", help="e.g. 6,7,8")
    sp.add_argument("--epsilon", help="comma-separated deviations")
    sp.add_argument("--epsilon-inverse-dim", action="store_true", help="use epsilon = 1/D")
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("selftest", help="oracle-equivalence and invariant checks")
    sp.add_argument("--config")
    sp.add_argument("--instances", type=int)
    sp.add_argument("--seed", type=int)
    return p


COMMANDS = {
    "percolate": cmd_percolate,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "concentration": cmd_concentration,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"hperc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"hperc {args.command}: refused: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidDataError, InsufficientDataError) as exc:
        print(f"hperc {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HpercError as exc:
        print(f"hperc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hperc {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
