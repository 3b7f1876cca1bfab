"""Experiment configuration, dispatch and result files.

A run produces, in memory, a list of :class:`ResultRow` plus optional
per-replica rows, a JSON summary and plot tables; :func:`write_outputs` then
places them in the output directory all at once. Nothing is written when an
experiment fails.

Config files are flat ``key = value`` text; ``#`` starts a comment and lists
are comma separated (target lists are separated by ``;``).
"""
import csv
from dataclasses import dataclass, field, fields
import io
import json
import math
import os
from pathlib import Path
import shutil
import tempfile

import numpy as np

from ._parallel import map_replicas
from ._validation import UINT64_MAX
from .codec import encode_range
from .entropy import (
    boundary_lower_bound,
    codec_upper_bound,
    range_distribution,
    replica_statistics,
    scaling_normalizer,
)
from .extractor import TemplatePair, bit_statistics, default_templates, extract_bits
from .geometry import inner_boundary, range_of
from .lemmas import LEMMAS, lemma_check
from .percolation import (
    TargetSet,
    exact_tree_entropy,
    expected_retained,
    intersection_ratios,
    sample_fractal,
    tree_log_prob,
)
from .stats import binomial_estimate, mean_estimate
from .walk import derive_stream, simulate_walk

EXPERIMENTS = ("simulate", "encode", "entropy", "lemma-check", "extract", "percolation", "intersection")
ENV_PREFIX = "RWRANGE_"
FLOAT_FORMAT = ".9g"


class ConfigError(ValueError):
    pass


def _int(text):
    return int(str(text).strip(), 0)


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [_int(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _targets(text):
    if isinstance(text, (list, tuple)):
        return [str(TargetSet.parse(str(t))) for t in text]
    return [str(TargetSet.parse(t)) for t in str(text).split(";") if t.strip()]


def _str(text):
    return str(text).strip()


SCHEMA = {
    "experiment": _str,
    "d": _int,
    "n": _int,
    "n_grid": _int_list,
    "L": _int,
    "reps": _int,
    "seed": _int,
    "mode": _str,
    "lemma": _str,
    "targets": _targets,
    "template": _str,
    "budget": _int,
    "save_streams": _bool,
    "out": _str,
    "threads": _int,
}


@dataclass
class ExperimentConfig:
    experiment: str
    d: int = 2
    n: int = None
    n_grid: list = None
    L: int = None
    reps: int = None
    seed: int = None
    mode: str = "exact"
    lemma: str = "all"
    targets: list = None
    template: str = None
    budget: int = None
    save_streams: bool = False
    out: str = "walkrange-out"
    threads: int = 1

    @classmethod
    def from_mapping(cls, values):
        """Build from raw (string or typed) values, checking every key against the schema."""
        typed = {}
        for key, raw in values.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}; known keys: {', '.join(sorted(SCHEMA))}")
            if raw is None:
                continue
            try:
                typed[key] = SCHEMA[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
        if "experiment" not in typed:
            raise ConfigError("config needs an 'experiment' key")
        cfg = cls(**typed)
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        needs_seed = not (self.experiment == "entropy" and self.mode == "exact")
        if needs_seed and self.seed is None:
            raise ConfigError("seed is required for Monte Carlo experiments "
                              f"(config 'seed', --seed or {ENV_PREFIX}SEED)")
        if self.seed is not None and not 0 <= self.seed <= UINT64_MAX:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.reps is not None and self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.experiment in ("percolation", "intersection"):
            if self.L is None or self.L < 1:
                raise ConfigError(f"{self.experiment} needs L >= 1")
        elif self.experiment != "lemma-check" and not self.n_values():
            raise ConfigError(f"{self.experiment} needs n or n_grid")
        if any(v < 0 for v in self.n_values()):
            raise ConfigError("walk lengths must be >= 0")
        if self.experiment in ("encode", "extract") and self.d != 2:
            raise ConfigError(f"{self.experiment} is defined for d=2 only")
        if self.experiment == "entropy" and self.mode not in ("exact", "sandwich", "scaling"):
            raise ConfigError("entropy mode must be exact, sandwich or scaling")
        if self.experiment == "lemma-check" and self.lemma != "all" and self.lemma not in LEMMAS:
            raise ConfigError(f"unknown lemma {self.lemma!r}; expected all or one of {', '.join(LEMMAS)}")
        if self.experiment == "intersection" and not self.targets:
            raise ConfigError("intersection needs targets, e.g. targets = point(96,64); ball(64,64,8)")
        if self.experiment != "lemma-check" and self.reps is None and not (
                self.experiment == "entropy" and self.mode == "exact"):
            raise ConfigError(f"{self.experiment} needs reps")

    def n_values(self):
        if self.n_grid:
            return list(self.n_grid)
        return [self.n] if self.n is not None else []

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_config_text(text):
    """``key = value`` lines to a dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)


# -- results ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    experiment: str
    d: int
    n: object  # int, or "" when not applicable
    param: str
    seed: object
    reps: int
    estimate: float
    stderr: float
    extra: dict = field(default_factory=dict)


COLUMNS = [f.name for f in fields(ResultRow)]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    if isinstance(value, (tuple, list)):
        return "(" + ",".join(_fmt(v) for v in value) + ")"
    return str(value)


def _fmt_extra(extra):
    return ";".join(f"{k}={_fmt(v)}" for k, v in sorted(extra.items()))


def parse_extra(text):
    out = {}
    for item in filter(None, str(text).split(";")):
        key, _, value = item.partition("=")
        out[key] = value
    return out


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.experiment), _fmt(r.d), _fmt(r.n), r.param, _fmt(r.seed), _fmt(r.reps),
                    _fmt(r.estimate), _fmt(r.stderr), _fmt_extra(r.extra)])
    return buf.getvalue()


def table_to_csv(header, records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rec in records:
        w.writerow([_fmt(v) for v in rec])
    return buf.getvalue()


@dataclass
class RunOutput:
    rows: list
    replicas: tuple = None  # (header, records) sorted by replica id
    summary: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)  # name -> (header, records)
    blobs: dict = field(default_factory=dict)  # relative path -> bytes


# -- experiments -----------------------------------------------------------------------

def _simulate_replica(i, d, n, master_seed):
    traj = simulate_walk(d, n, derive_stream(master_seed, i))
    pts = traj.points
    R = range_of(traj)
    max_sq = int((pts * pts).sum(axis=1).max())
    return len(R), len(inner_boundary(R)), max_sq, tuple(pts[-1].tolist())


def _run_simulate(cfg):
    rows, records, plot = [], [], []
    for n in cfg.n_values():
        res = map_replicas(_simulate_replica, cfg.reps, cfg.threads, d=cfg.d, n=n, master_seed=cfg.seed)
        arr = np.array([r[:3] for r in res], dtype=float)
        names = ("range_size", "boundary_size", "max_sq_displacement")
        for j, name in enumerate(names):
            est = mean_estimate(arr[:, j]) if cfg.reps > 1 else None
            rows.append(ResultRow("simulate", cfg.d, n, name, cfg.seed, cfg.reps,
                                  float(arr[:, j].mean()), est.stderr if est else math.nan))
        records += [(i, n, *r[:3], r[3]) for i, r in enumerate(res)]
        plot.append((n, float(arr[:, 0].mean()), float(arr[:, 1].mean())))
    return RunOutput(rows, (["replica", "n", "range_size", "boundary_size", "max_sq_displacement", "endpoint"],
                            sorted(records, key=lambda r: (r[1], r[0]))),
                     plots={"plot_sizes": (["x", "y_range_size", "y_boundary_size"], plot)})


def _encode_replica(i, n, master_seed, keep_stream):
    R = range_of(simulate_walk(2, n, derive_stream(master_seed, i)))
    s = encode_range(R, n)
    return s.total_bits, (s.to_bytes() if keep_stream else None)


def _run_encode(cfg):
    rows, records, plot, blobs = [], [], [], {}
    for n in cfg.n_values():
        res = map_replicas(_encode_replica, cfg.reps, cfg.threads, n=n, master_seed=cfg.seed,
                           keep_stream=cfg.save_streams)
        bits = [r[0] for r in res]
        est = mean_estimate(bits) if cfg.reps > 1 else None
        norm = scaling_normalizer(2, n) if n > 1 else math.nan
        rows.append(ResultRow("encode", 2, n, "code_length", cfg.seed, cfg.reps, float(np.mean(bits)),
                              est.stderr if est else math.nan, {"normalized": float(np.mean(bits)) * norm}))
        records += [(i, n, b) for i, b in enumerate(bits)]
        plot.append((n, float(np.mean(bits)) * norm))
        if cfg.save_streams:
            blobs.update({f"streams/n{n}_r{i}.rwrc": r[1] for i, r in enumerate(res)})
    return RunOutput(rows, (["replica", "n", "bits"], records),
                     plots={"plot_code_length": (["x", "y"], plot)}, blobs=blobs)


def _entropy_rows(cfg, n, with_exact, with_mc):
    rows, records = [], []
    if with_exact:
        budget = {} if cfg.budget is None else {"budget": cfg.budget}
        dist = range_distribution(cfg.d, n, **budget)
        rows.append(ResultRow("entropy", cfg.d, n, "exact", "" if cfg.seed is None else cfg.seed, 0,
                              dist.entropy(), 0.0,
                              {"distinct_ranges": len(dist.counts), "trajectories": dist.total}))
    if with_mc:
        code = cfg.d == 2
        stats = map_replicas(replica_statistics, cfg.reps, cfg.threads, d=cfg.d, n=n,
                             master_seed=cfg.seed, with_code=code)
        stats = np.array(stats, dtype=float)
        norm = scaling_normalizer(cfg.d, n) if n > 1 else math.nan
        lower = boundary_lower_bound(cfg.d, stats[:, 1], n)
        rows.append(ResultRow("entropy", cfg.d, n, "lower_bound", cfg.seed, cfg.reps, lower.value,
                              lower.stderr, {"normalized": lower.value * norm}))
        if code:
            upper = codec_upper_bound(stats[:, 2].astype(int).tolist(), n)
            rows.append(ResultRow("entropy", cfg.d, n, "upper_bound", cfg.seed, cfg.reps, upper.value,
                                  upper.stderr, {"normalized": upper.value * norm}))
        records = [(i, n, int(s[0]), int(s[1]), int(s[2])) for i, s in enumerate(stats)]
    return rows, records


def _run_entropy(cfg):
    rows, records, plot = [], [], []
    for n in cfg.n_values():
        r, rec = _entropy_rows(cfg, n, cfg.mode in ("exact", "sandwich"), cfg.mode in ("sandwich", "scaling"))
        rows += r
        records += rec
        plot += [(n, row.param, row.extra.get("normalized", row.estimate)) for row in r]
    replicas = (["replica", "n", "range_size", "boundary_size", "bits"], records) if records else None
    return RunOutput(rows, replicas, plots={"plot_entropy": (["x", "series", "y"], plot)})


def _param_tag(lemma, params):
    return lemma + "|" + ";".join(f"{k}={_fmt(v)}" for k, v in params.items())


def _json_float(v):
    """Floats rounded to the CSV precision; non-finite values become null."""
    if not isinstance(v, float):
        return v
    return float(_fmt(v)) if math.isfinite(v) else None


def _run_lemma_check(cfg):
    lemmas = LEMMAS if cfg.lemma == "all" else (cfg.lemma,)
    rows, summary = [], {}
    for lemma in lemmas:
        rep = lemma_check(lemma, reps=cfg.reps, master_seed=cfg.seed)
        for p in rep.points:
            rows.append(ResultRow("lemma-check", 2, p.params.get("n", ""), _param_tag(lemma, p.params),
                                  p.seed, p.reps, p.estimate, p.stderr,
                                  {"form": p.form, "ratio": p.ratio, "skipped": p.skipped, "note": p.note}))
        extra = {"band": rep.band, "direction": rep.direction, "direction_ok": rep.direction_ok,
                 "stable": rep.stable, "passed": rep.passed, **rep.extra}
        rows.append(ResultRow("lemma-check", 2, "", lemma + "|summary", cfg.seed,
                              rep.points[0].reps if rep.points else 0, rep.fitted_constant, math.nan, extra))
        summary[lemma] = {k: _json_float(v) for k, v in extra.items()}
        summary[lemma]["fitted_constant"] = _json_float(rep.fitted_constant)
    return RunOutput(rows, summary={"lemmas": summary})


def _extract_replica(i, n, master_seed, template_text):
    tp = TemplatePair.from_text(template_text)
    R = range_of(simulate_walk(2, n, derive_stream(master_seed, i)))
    return extract_bits(R, tp).bits


def _run_extract(cfg):
    tp = default_templates() if cfg.template is None else TemplatePair.from_text(Path(cfg.template).read_text())
    rows, records, plot, blobs = [], [], [], {}
    for n in cfg.n_values():
        bit_lists = map_replicas(_extract_replica, cfg.reps, cfg.threads, n=n, master_seed=cfg.seed,
                                 template_text=tp.to_text())
        ones, (rho, rho_se), counts = bit_statistics(bit_lists)
        occ = mean_estimate(counts) if cfg.reps > 1 else None
        norm = scaling_normalizer(2, n) if n > 1 else math.nan
        rows += [
            ResultRow("extract", 2, n, "ones_frequency", cfg.seed, cfg.reps, ones.value, ones.stderr,
                      {"bits": int(counts.sum())}),
            ResultRow("extract", 2, n, "lag1_autocorrelation", cfg.seed, cfg.reps, rho, rho_se),
            ResultRow("extract", 2, n, "occurrences", cfg.seed, cfg.reps, float(counts.mean()),
                      occ.stderr if occ else math.nan, {"normalized": float(counts.mean()) * norm}),
        ]
        records += [(i, n, b.size, int(b.sum())) for i, b in enumerate(bit_lists)]
        plot.append((n, float(counts.mean()) * norm))
        pooled = np.concatenate(bit_lists) if bit_lists else np.zeros(0, dtype=np.uint8)
        blobs[f"bits_n{n}.hex"] = (np.packbits(pooled).tobytes().hex() + "\n").encode()
    return RunOutput(rows, (["replica", "n", "occurrences", "ones"], records),
                     plots={"plot_occurrences": (["x", "y"], plot)}, blobs=blobs)


def _percolation_replica(i, L, master_seed):
    t = sample_fractal(L, derive_stream(master_seed, i))
    return t.counts, tree_log_prob(t)


def _run_percolation(cfg):
    L = cfg.L
    res = map_replicas(_percolation_replica, cfg.reps, cfg.threads, L=L, master_seed=cfg.seed)
    counts = np.array([r[0] for r in res], dtype=float)
    logp = np.array([r[1] for r in res])
    rows = []
    for k in range(1, L + 1):
        est = mean_estimate(counts[:, k]) if cfg.reps > 1 else None
        rows.append(ResultRow("percolation", 2, 1 << L, f"N_{k}", cfg.seed, cfg.reps, float(counts[:, k].mean()),
                              est.stderr if est else math.nan, {"expected": expected_retained(k), "level": k}))
    est = mean_estimate(logp) if cfg.reps > 1 else None
    exact = exact_tree_entropy(L)
    rows.append(ResultRow("percolation", 2, 1 << L, "tree_log_prob", cfg.seed, cfg.reps, float(logp.mean()),
                          est.stderr if est else math.nan, {"exact": exact}))
    surv = binomial_estimate(int((counts[:, L] > 0).sum()), cfg.reps)
    rows.append(ResultRow("percolation", 2, 1 << L, "survival", cfg.seed, cfg.reps, surv.value, surv.stderr))
    plot = [(ell, exact_tree_entropy(ell) * ell * ell / 4**ell) for ell in range(1, L + 1)]
    records = [(i, *map(int, c), lp) for i, (c, lp) in enumerate(zip(counts, logp))]
    header = ["replica", *[f"N_{k}" for k in range(L + 1)], "tree_log_prob"]
    return RunOutput(rows, (header, records), plots={"plot_tree_entropy": (["x", "y"], plot)})


def _run_intersection(cfg):
    res = intersection_ratios(cfg.targets, cfg.L, cfg.reps, cfg.seed)
    rows = [ResultRow("intersection", 2, 1 << cfg.L, r.target, cfg.seed, cfg.reps, r.ratio, r.ratio_se,
                      {"p_fractal": r.fractal.value, "p_fractal_se": r.fractal.stderr,
                       "p_walk": r.walk.value, "p_walk_se": r.walk.stderr}) for r in res]
    return RunOutput(rows)


_DISPATCH = {
    "simulate": _run_simulate,
    "encode": _run_encode,
    "entropy": _run_entropy,
    "lemma-check": _run_lemma_check,
    "extract": _run_extract,
    "percolation": _run_percolation,
    "intersection": _run_intersection,
}


def run(cfg):
    """Run the configured experiment and return its outputs without writing anything."""
    if not isinstance(cfg, ExperimentConfig):
        cfg = ExperimentConfig.from_mapping(cfg)
    out = _DISPATCH[cfg.experiment](cfg)
    config = {k: v for k, v in cfg.as_dict().items() if k not in ("out", "threads")}
    out.summary = {"config": config, "rows": len(out.rows), **out.summary}
    return out


def write_outputs(out, directory):
    """Write ``results.csv``, ``summary.json`` and the optional files into ``directory``.

    Files are first written to a staging directory next to the target, then
    moved into place, so a failure leaves the target untouched.
    """
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    files = {"results.csv": rows_to_csv(out.rows).encode(),
             "summary.json": (json.dumps(out.summary, indent=2, sort_keys=True, default=_json_default) + "\n").encode()}
    if out.replicas is not None:
        files["replicas.csv"] = table_to_csv(*out.replicas).encode()
    for name, (header, records) in out.plots.items():
        files[f"{name}.csv"] = table_to_csv(header, records).encode()
    files.update(out.blobs)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=directory.parent))
    try:
        for name, data in files.items():
            path = staging / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        directory.mkdir(exist_ok=True)
        for name in files:
            (directory / name).parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / name, directory / name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return sorted(files)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# -- report ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    experiment: str
    d: int
    n: object
    param: str
    reps: int
    estimate: float
    stderr: float
    extra: dict


def read_results(path):
    """Parse ``results.csv`` (or a directory containing it)."""
    path = Path(path)
    if path.is_dir():
        path = path / "results.csv"
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(COLUMNS)}")
    rows = []
    for lineno, rec in enumerate(reader, 2):
        if len(rec) != len(COLUMNS):
            raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(rec)}")
        try:
            rows.append(ReportRow(rec[0], int(rec[1]), int(rec[2]) if rec[2] else "", rec[3], int(rec[5]),
                                  float(rec[6]), float(rec[7]), parse_extra(rec[8])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows


BANDS = {2: 4.0, 3: 2.0}


def _band_line(label, values, limit):
    vals = [v for v in values if math.isfinite(v)]
    if len(vals) < 2:
        return None
    ok = min(vals) > 0 and max(vals) / min(vals) < limit
    band = max(vals) / min(vals) if min(vals) > 0 else math.inf
    return ("PASS" if ok else "FAIL") + f"  {label}: band max/min = {band:.3g} (limit {limit:g})"


def report(rows):
    """Human-readable summary lines; FAIL lines mark violated checks."""
    if not rows:
        return ["no rows"]
    lines = []
    by_exp = {}
    for r in rows:
        by_exp.setdefault(r.experiment, []).append(r)

    ent = by_exp.get("entropy", [])
    if ent:
        lines.append("entropy (normalized = bits * log2(n)^2 / n for d=2, bits / n for d=3, bits / log2 n for d=1)")
        lines.append(f"  {'d':>2} {'n':>8} {'kind':<12} {'bits':>12} {'stderr':>10} {'normalized':>11}")
        for r in ent:
            lines.append(f"  {r.d:>2} {r.n:>8} {r.param:<12} {r.estimate:>12.6g} {r.stderr:>10.3g} "
                         f"{r.extra.get('normalized', ''):>11}")
        cells = {}
        for r in ent:
            cells.setdefault((r.d, r.n), {})[r.param] = r
        for (d, n), kinds in sorted(cells.items()):
            ex = kinds.get("exact")
            if ex is None:
                continue
            lo, up = kinds.get("lower_bound"), kinds.get("upper_bound")
            if lo is not None and lo.estimate - 3 * lo.stderr > ex.estimate:
                lines.append(f"FAIL  sandwich d={d} n={n}: lower bound {lo.estimate:.6g} exceeds exact {ex.estimate:.6g}")
            if up is not None and up.estimate + 3 * up.stderr < ex.estimate:
                lines.append(f"FAIL  sandwich d={d} n={n}: upper bound {up.estimate:.6g} below exact {ex.estimate:.6g}")
            if (lo is None or lo.estimate - 3 * lo.stderr <= ex.estimate) and (
                    up is None or up.estimate + 3 * up.stderr >= ex.estimate) and (lo or up):
                lines.append(f"PASS  sandwich d={d} n={n}")
        for d, limit in BANDS.items():
            for kind in ("lower_bound", "upper_bound"):
                vals = [float(r.extra["normalized"]) for r in ent
                        if r.d == d and r.param == kind and "normalized" in r.extra]
                line = _band_line(f"d={d} {kind}", vals, limit)
                if line:
                    lines.append(line)

    for r in by_exp.get("lemma-check", []):
        if r.param.endswith("|summary"):
            ok = r.extra.get("passed") == "true"
            lines.append(("PASS" if ok else "FAIL") + f"  lemma {r.param.split('|')[0]}: constant "
                         f"{r.estimate:.4g}, band {r.extra.get('band')}, direction_ok {r.extra.get('direction_ok')}")

    ext = by_exp.get("extract", [])
    for r in ext:
        if r.param == "ones_frequency":
            ok = abs(r.estimate - 0.5) < 3 * r.stderr
            lines.append(("PASS" if ok else "FAIL") + f"  extract n={r.n}: ones {r.estimate:.4f} +- {r.stderr:.4f}")
        elif r.param == "lag1_autocorrelation":
            ok = math.isfinite(r.estimate) and abs(r.estimate) < 3 * r.stderr
            lines.append(("PASS" if ok else "FAIL") + f"  extract n={r.n}: lag-1 rho {r.estimate:.4f} +- {r.stderr:.4f}")
    line = _band_line("extract occurrences", [float(r.extra["normalized"]) for r in ext
                                             if r.param == "occurrences"], 4.0)
    if line:
        lines.append(line)

    for r in by_exp.get("percolation", []):
        if r.param.startswith("N_") or r.param == "tree_log_prob":
            target = float(r.extra["expected"] if "expected" in r.extra else r.extra["exact"])
            ok = abs(r.estimate - target) <= 3 * r.stderr
            lines.append(("PASS" if ok else "FAIL") + f"  percolation {r.param}: {r.estimate:.6g} "
                         f"+- {r.stderr:.3g} vs {target:.6g}")

    for r in by_exp.get("intersection", []):
        ok = math.isfinite(r.estimate) and 1 / 20 <= r.estimate <= 20
        lines.append(("PASS" if ok else "FAIL") + f"  intersection {r.param}: ratio {r.estimate:.4g} "
                     f"+- {r.stderr:.3g}")

    for exp in ("simulate", "encode"):
        for r in by_exp.get(exp, []):
            lines.append(f"  {exp} d={r.d} n={r.n} {r.param}: {r.estimate:.6g} +- {r.stderr:.3g}")
    line = _band_line("encode code_length", [float(r.extra["normalized"]) for r in by_exp.get("encode", [])
                                             if "normalized" in r.extra], 4.0)
    if line:
        lines.append(line)
    return lines
