"""Experiment driver and command-line interface.

Subcommands
-----------
forward     clustered eigenvalues of one model at one frequency
invert      reconstruct (D, b, r) from two cluster files
experiment  sweep D x (k1, k2) x delta x seed and write tables/figure data
validate    check a config file or cluster files without computing

Exit codes: 0 success, 1 validation error, 2 computation failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .errors import EbmError, FrequencyOrder, ValidationError
from .inversion import MeasuredCluster, ReconstructionResult, invert
from .noise import NOISE_MODES, NoiseSpec, perturb_cluster
from .polyutil import BISECT_TOL
from .relaxation import EbmModel, modulus_h, reference_model
from .spectral import (
    Cluster,
    compute_cluster,
    extra_roots_localized,
    interlaces,
    secular_residual,
)

log = logging.getLogger(__name__)

K_MAX = 10**6
CLI_NOISE_MODES = {"all": "all_roots", "interlaced": "interlaced_only", "single-draw": "single_draw"}

TABLE_FILE = "d_table.csv"
SCATTER_FILE = "scatter.csv"
RECORDS_FILE = "records.jsonl"
META_FILE = "run_meta.json"


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 5
    D_values: tuple[float, ...] = (0.5, 1.0, 5.0)
    rate_rule: tuple[float, ...] | None = None  # None: r_i = 5 i
    weight_rule: tuple[float, ...] | None = None  # None: b_i = 1
    normalize_h: bool = False
    k_pairs: tuple[tuple[int, int], ...] = ((81, 91), (81, 501), (81, 1001))
    deltas: tuple[float, ...] = (0.0, 0.05, 0.1)
    seeds: tuple[int, ...] = (0,)
    noise_mode: str = "all_roots"
    output_dir: str = "results"
    bisect_tol: float = BISECT_TOL
    brackets_from: str = "k2"

    def validate(self) -> "ExperimentConfig":
        if self.N < 1:
            raise ValidationError("N must be >= 1")
        if not self.D_values or any(not (d > 0 and math.isfinite(d)) for d in self.D_values):
            raise ValidationError(f"D_values must be positive, got {self.D_values}")
        if not self.k_pairs:
            raise ValidationError("k_pairs must not be empty")
        for k1, k2 in self.k_pairs:
            if not (1 <= k1 < k2 <= K_MAX):
                raise ValidationError(f"k pair ({k1}, {k2}) needs 1 <= k1 < k2 <= {K_MAX}")
        if not self.deltas or any(not 0 <= d < 1 for d in self.deltas):
            raise ValidationError(f"deltas must lie in [0, 1), got {self.deltas}")
        if not self.seeds or any(not 0 <= s < 2**64 for s in self.seeds):
            raise ValidationError("seeds must be non-empty unsigned 64-bit integers")
        if self.noise_mode not in NOISE_MODES:
            raise ValidationError(f"noise_mode must be one of {NOISE_MODES}")
        if self.brackets_from not in ("k1", "k2"):
            raise ValidationError("brackets_from must be k1 or k2")
        if not self.bisect_tol > 0:
            raise ValidationError("bisect_tol must be positive")
        for name in ("rate_rule", "weight_rule"):
            seq = getattr(self, name)
            if seq is not None and len(seq) != self.N:
                raise ValidationError(f"{name} has {len(seq)} entries, expected N={self.N}")
        for D in self.D_values:
            self.model(D)
        return self

    def model(self, D: float) -> EbmModel:
        base = reference_model(self.N, D, normalize_h=False)
        r = self.rate_rule if self.rate_rule is not None else base.r
        b = self.weight_rule if self.weight_rule is not None else base.b
        if self.normalize_h:
            h = math.fsum(bi / ri for bi, ri in zip(b, r))
            b = tuple(bi / h for bi in b)
        return EbmModel(D=D, b=b, r=r)


# -- config file -----------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _seeds(text: str) -> tuple[int, ...]:
    out: list[int] = []
    for part in text.replace(",", " ").split():
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _k_pairs(text: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for part in text.replace(",", " ").split():
        k1, k2 = part.split(":")
        pairs.append((int(k1), int(k2)))
    return tuple(pairs)


def _rule(text: str) -> tuple[float, ...] | None:
    return None if text.strip().lower() in ("", "default") else _floats(text)


def _noise_mode(text: str) -> str:
    text = text.strip()
    return CLI_NOISE_MODES.get(text, text)


_PARSERS = {
    "N": int,
    "D_values": _floats,
    "rate_rule": _rule,
    "weight_rule": _rule,
    "normalize_h": None,  # handled via getboolean
    "k_pairs": _k_pairs,
    "deltas": _floats,
    "seeds": _seeds,
    "noise_mode": _noise_mode,
    "output_dir": str,
    "bisect_tol": float,
    "brackets_from": str,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` lines (``#`` comments) into a validated config.

    Sequences are comma separated; ``k_pairs`` uses ``k1:k2`` items and
    ``seeds`` accepts ranges like ``1-100``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed config: {exc}") from None
    section = cp["experiment"]
    kwargs = {}
    for key in section:
        if key not in _PARSERS:
            raise ValidationError(f"unknown config key {key!r}")
        try:
            if key == "normalize_h":
                kwargs[key] = section.getboolean(key)
            else:
                kwargs[key] = _PARSERS[key](section[key])
        except ValueError as exc:
            raise ValidationError(f"bad value for {key}: {exc}") from None
    return ExperimentConfig(**kwargs).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- cluster files ---------------------------------------------------------

def _roots_json(roots: Sequence[complex]) -> list[list[float]]:
    return [[z.real, z.imag] for z in map(complex, roots)]


def cluster_to_json(c: MeasuredCluster, model: EbmModel | None = None) -> dict:
    out = {
        "k": c.k,
        "roots": _roots_json(c.roots),
        "interlaced": list(c.interlaced),
        "extra": list(c.extra),
    }
    if model is not None:
        out["model"] = model.as_dict()
    return out


def cluster_from_json(obj: dict) -> MeasuredCluster:
    try:
        k = int(obj["k"])
        roots = [complex(re, im) for re, im in obj["roots"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"cluster file needs 'k' and 'roots' [[re, im], ...]: {exc}") from None
    if "interlaced" in obj and "extra" in obj:
        return MeasuredCluster(k=k, roots=roots, interlaced=obj["interlaced"], extra=obj["extra"])
    return MeasuredCluster.from_roots(k, roots)


def read_cluster(path: str | Path) -> MeasuredCluster:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read cluster file {path}: {exc}") from None
    return cluster_from_json(obj)


def write_cluster(path: str | Path, c: MeasuredCluster, model: EbmModel | None = None) -> None:
    Path(path).write_text(json.dumps(cluster_to_json(c, model), indent=2) + "\n", encoding="utf-8")


# -- operations ------------------------------------------------------------

def run_forward(m: EbmModel, k: int, tol: float = BISECT_TOL) -> dict:
    """Cluster at ``k`` plus its interlacing, secular and localization checks."""
    c = compute_cluster(m, k, tol)
    h, regime = modulus_h(m)
    return {
        "model": m.as_dict(),
        "h": h,
        "regime": regime,
        "k": c.k,
        "cluster": c,
        "interlaced_roots": list(c.real_roots),
        "extra_roots": _roots_json(c.extra_roots),
        "interlacing": interlaces(c, m),
        "secular_residuals": [secular_residual(m, k, a) for a in c.real_roots],
        "extra_localized": extra_roots_localized(c, m),
    }


def run_invert(
    path1: str | Path,
    path2: str | Path,
    tol: float = BISECT_TOL,
    brackets_from: str = "k2",
) -> ReconstructionResult:
    c1, c2 = read_cluster(path1), read_cluster(path2)
    return invert(c1, c2, tol=tol, brackets_from=brackets_from)


def _rel(inv: float, true: float) -> float:
    return abs(inv - true) / abs(true)


def _grid_point(
    cfg: ExperimentConfig,
    m: EbmModel,
    clusters: dict[int, Cluster],
    k1: int,
    k2: int,
    delta: float,
    seed: int,
) -> dict:
    row: dict = {
        "N": m.N,
        "D": m.D,
        "k1": k1,
        "k2": k2,
        "delta": delta,
        "seed": seed,
        "noise_mode": cfg.noise_mode,
        "regime": modulus_h(m)[1],
        "true": m.as_dict(),
        "clusters_exact": [_roots_json(clusters[k1].roots), _roots_json(clusters[k2].roots)],
    }
    spec = NoiseSpec(delta=delta, seed=seed, mode=cfg.noise_mode)
    try:
        mc1 = perturb_cluster(clusters[k1], spec)
        mc2 = perturb_cluster(clusters[k2], spec)
        row["clusters_measured"] = [_roots_json(mc1.roots), _roots_json(mc2.roots)]
        res = invert(mc1, mc2, tol=cfg.bisect_tol, brackets_from=cfg.brackets_from)
    except EbmError as exc:
        row.update(status="error", error=type(exc).__name__, stage=exc.stage, message=str(exc))
        return row
    row.update(
        status="ok",
        result=res.as_dict(),
        rel_error={
            "D": _rel(res.D_inv, m.D),
            "D_glassy": _rel(res.D_inv_glassy, m.D),
            "r": [_rel(x, t) for x, t in zip(res.r_inv, m.r)],
            "b": [_rel(x, t) for x, t in zip(res.b_inv, m.b)],
        },
    )
    return row


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    rows: list[dict] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)

    def d_table(self) -> list[list[str]]:
        """D-reconstruction table: rows D x delta, one column per k pair.

        Cells hold the median ``D_inv`` over successful seeds, 4 decimals.
        """
        cfg = self.config
        header = ["D", "delta"] + [f"({k1},{k2})" for k1, k2 in cfg.k_pairs]
        table = [header]
        for D in cfg.D_values:
            for delta in cfg.deltas:
                line = [f"{D:g}", f"{delta:g}"]
                for k1, k2 in cfg.k_pairs:
                    vals = [
                        row["result"]["D_inv"]
                        for row in self.rows
                        if row["status"] == "ok"
                        and (row["D"], row["delta"], row["k1"], row["k2"]) == (D, delta, k1, k2)
                    ]
                    line.append(f"{statistics.median(vals):.4f}" if vals else "nan")
                table.append(line)
        return table

    def scatter(self) -> list[list]:
        out: list[list] = [["D", "k1", "k2", "delta", "seed", "param", "index", "true", "inv"]]
        for row in self.rows:
            if row["status"] != "ok":
                continue
            key = [row["D"], row["k1"], row["k2"], row["delta"], row["seed"]]
            res, true = row["result"], row["true"]
            for j, (t, x) in enumerate(zip(true["r"], res["r_inv"]), start=1):
                out.append(key + ["r", j, repr(t), repr(x)])
            for j, (t, x) in enumerate(zip(true["b"], res["b_inv"]), start=1):
                out.append(key + ["b", j, repr(t), repr(x)])
            out.append(key + ["D", 0, repr(true["D"]), repr(res["D_inv"])])
        return out

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {name: out / name for name in (TABLE_FILE, SCATTER_FILE, RECORDS_FILE, META_FILE)}
        for name, rows in ((TABLE_FILE, self.d_table()), (SCATTER_FILE, self.scatter())):
            with open(paths[name], "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh, lineterminator="\n").writerows(rows)
        with open(paths[RECORDS_FILE], "w", encoding="utf-8") as fh:
            for row in self.rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        # the only non-deterministic output: timestamps and timings
        meta = {
            "created": datetime.now(timezone.utc).isoformat(),
            "config": asdict(self.config),
            "n_rows": len(self.rows),
            "n_failed": sum(row["status"] != "ok" for row in self.rows),
            "wall_time_s": self.wall_times,
        }
        paths[META_FILE].write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        return paths


def run_experiment(cfg: ExperimentConfig) -> ExperimentRecord:
    """Sweep the grid. Grid-point failures are recorded, never raised."""
    cfg.validate()
    record = ExperimentRecord(config=cfg)
    ks = sorted({k for pair in cfg.k_pairs for k in pair})
    for D in cfg.D_values:
        m = cfg.model(D)
        clusters = {k: compute_cluster(m, k, cfg.bisect_tol) for k in ks}
        for k1, k2 in cfg.k_pairs:
            for delta in cfg.deltas:
                for seed in cfg.seeds:
                    t0 = time.perf_counter()
                    record.rows.append(_grid_point(cfg, m, clusters, k1, k2, delta, seed))
                    record.wall_times.append(time.perf_counter() - t0)
    return record


# -- CLI -------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebm-inverse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def noise_flags(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--noise-mode", choices=sorted(CLI_NOISE_MODES), default=None)

    fw = sub.add_parser("forward", help="compute one eigenvalue cluster")
    fw.add_argument("--k", type=int, required=True)
    fw.add_argument("--N", type=int, default=5, help="dimension for the default r_i = 5i, b_i = 1 model")
    fw.add_argument("--D", type=float, default=1.0)
    fw.add_argument("--b", type=float, nargs="+")
    fw.add_argument("--r", type=float, nargs="+")
    fw.add_argument("--normalize-h", action="store_true")
    fw.add_argument("--tol", type=float, default=BISECT_TOL)
    fw.add_argument("--out", help="write the (optionally noisy) cluster to this JSON file")
    noise_flags(fw)

    inv = sub.add_parser("invert", help="reconstruct parameters from two cluster files")
    inv.add_argument("cluster1")
    inv.add_argument("cluster2")
    inv.add_argument("--tol", type=float, default=BISECT_TOL)
    inv.add_argument("--brackets-from", choices=("k1", "k2"), default="k2")
    inv.add_argument("--out", help="write the reconstruction to this JSON file")

    ex = sub.add_parser("experiment", help="run the reconstruction sweep")
    ex.add_argument("--config")
    ex.add_argument("--out")
    ex.add_argument("--tol", type=float)
    ex.add_argument("--normalize-h", action="store_true")
    noise_flags(ex)

    va = sub.add_parser("validate", help="validate a config or cluster files")
    va.add_argument("--config")
    va.add_argument("clusters", nargs="*")
    return parser


def _forward_model(args) -> EbmModel:
    if args.r is None and args.b is None:
        return reference_model(args.N, args.D, normalize_h=args.normalize_h)
    if args.r is None or args.b is None:
        raise ValidationError("--b and --r must be given together")
    m = EbmModel(D=args.D, b=tuple(args.b), r=tuple(args.r))
    if args.normalize_h:
        m = EbmModel(D=m.D, b=tuple(bi / m.h for bi in m.b), r=m.r)
    return m


def _fmt(z: complex) -> str:
    return f"{z.real:.15g}" if z.imag == 0 else f"{z.real:.15g}{z.imag:+.15g}j"


def _cmd_forward(args) -> int:
    m = _forward_model(args)
    rep = run_forward(m, args.k, args.tol)
    c: Cluster = rep["cluster"]
    print(f"model: D={m.D:g} b={list(m.b)} r={list(m.r)}  h={rep['h']:.10g} ({rep['regime']})")
    print(f"k={c.k}  eta={-(2 * c.k - 1) ** 2}")
    for j, (a, s) in enumerate(zip(c.real_roots, rep["secular_residuals"]), start=1):
        print(f"  a_{j} = {a:.15g}   secular residual {s:.2e}")
    for z in c.extra_roots:
        print(f"  extra = {_fmt(z)}")
    print(f"interlacing: {'PASS' if rep['interlacing'] else 'FAIL'}")
    print(f"extra-root localization: {'PASS' if rep['extra_localized'] else 'FAIL'}")
    if args.out:
        mc = MeasuredCluster.from_cluster(c)
        if args.delta:
            mode = CLI_NOISE_MODES[args.noise_mode or "all"]
            mc = perturb_cluster(c, NoiseSpec(args.delta, args.seed or 0, mode))
        write_cluster(args.out, mc, m)
        print(f"wrote {args.out}")
    return 0


def _cmd_invert(args) -> int:
    res = run_invert(args.cluster1, args.cluster2, args.tol, args.brackets_from)
    print(f"D_inv        = {res.D_inv:.10g}")
    print(f"D_inv_glassy = {res.D_inv_glassy:.10g}")
    for j, (r, b) in enumerate(zip(res.r_inv, res.b_inv), start=1):
        print(f"  r_{j} = {r:.12g}   b_{j} = {b:.12g}")
    print(f"characteristic-equation residual: {res.diagnostics['charpoly_residual']:.2e}")
    if args.out:
        Path(args.out).write_text(json.dumps(res.as_dict(), indent=2) + "\n", encoding="utf-8")
    return 0


def _experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides: dict = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.delta is not None:
        overrides["deltas"] = (args.delta,)
    if args.noise_mode is not None:
        overrides["noise_mode"] = CLI_NOISE_MODES[args.noise_mode]
    if args.normalize_h:
        overrides["normalize_h"] = True
    if args.out:
        overrides["output_dir"] = args.out
    if args.tol is not None:
        overrides["bisect_tol"] = args.tol
    return replace(cfg, **overrides).validate()


def _cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    record = run_experiment(cfg)
    paths = record.write(cfg.output_dir)
    for line in record.d_table():
        print(",".join(line))
    failed = sum(row["status"] != "ok" for row in record.rows)
    print(f"{len(record.rows)} grid points, {failed} failed; outputs in {paths[TABLE_FILE].parent}")
    return 0


def _cmd_validate(args) -> int:
    if not args.config and not args.clusters:
        raise ValidationError("nothing to validate: pass --config and/or cluster files")
    if args.config:
        load_config(args.config)
        print(f"{args.config}: OK")
    for path in args.clusters:
        c = read_cluster(path)
        print(f"{path}: OK (k={c.k}, N={c.N})")
    return 0


COMMANDS = {
    "forward": _cmd_forward,
    "invert": _cmd_invert,
    "experiment": _cmd_experiment,
    "validate": _cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, FrequencyOrder) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except EbmError as exc:
        stage = f" in stage '{exc.stage}'" if exc.stage else ""
        print(f"computation failed{stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
