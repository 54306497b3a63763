"""Monte-Carlo experiment orchestration, config files and CSV output.

A sweep point is one ``(N, rho)`` pair.  For each point a training set is
drawn for the offline grouping search, a disjoint evaluation set is drawn,
and every architecture is optimized online on the same evaluation
realizations (paired comparison).
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import (DEFAULT_EVAL_REALIZATIONS, DEFAULT_TRAINING_SIZE, ChannelSampler,
                      CorrelationSpec, sample_realizations, stream_rng)
from .errors import BDRISError, InvalidConfigError
from .grouping import grouping_objective, optimize_grouping, precompute
from .link import (LN2, effective_channel, mrt_precoder, received_power, sum_rate,
                   zf_precoders)
from .model import GroupingStrategy, SystemConfig, sequential_grouping
from .scattering import QuasiNewtonOptions, optimize_scattering_mu, optimize_scattering_su

log = logging.getLogger(__name__)

MODES = ("single-user", "multi-user")
ARCHITECTURES = ("single", "group-NG", "group-OG", "fully")
CSV_COLUMNS = ("mode", "N", "N_H", "N_V", "N_G", "rho", "architecture", "metric",
               "mean", "stderr", "n", "seed", "P_T", "sigma_z2")


@dataclass(frozen=True)
class ExperimentConfig:
    """System parameters plus the sweep and Monte-Carlo settings.

    ``N`` values must be multiples of ``N_V``; the UPA then has
    ``N_H = N / N_V`` columns.
    """

    mode: str = "single-user"
    N: tuple[int, ...] = (64,)
    N_G: tuple[int, ...] = (4,)
    rho: tuple[float, ...] = (0.8,)
    architectures: tuple[str, ...] = ARCHITECTURES
    N_V: int = 8
    M: int = 4
    K: int = 1
    Z0: float = 50.0
    P_T: float = 1.0
    sigma_z2: float = 1e-11
    L0: float = 1e-3
    alpha_R: float = 2.8
    alpha_T: float = 2.0
    tx_pos: tuple[float, float] = (0.0, 0.0)
    ris_pos: tuple[float, float] = (50.0, 2.0)
    rx_pos: tuple[float, float] = (52.0, 0.0)
    training_size: int = DEFAULT_TRAINING_SIZE
    eval_realizations: int = DEFAULT_EVAL_REALIZATIONS
    seed: int = 0
    jobs: int = 1
    qn_max_iterations: int = 500
    qn_gradient_tolerance: float = 1e-6
    qn_restarts: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = set(self.architectures) - set(ARCHITECTURES)
        if bad or not self.architectures:
            raise InvalidConfigError(f"unknown architectures {sorted(bad)}")
        if self.mode == "single-user" and self.K != 1:
            raise InvalidConfigError("single-user mode requires K = 1")
        if self.mode == "multi-user" and self.K > self.M:
            raise InvalidConfigError("zero forcing requires K <= M")
        if self.training_size < 1 or self.eval_realizations < 1 or self.jobs < 1:
            raise InvalidConfigError("training_size, eval_realizations and jobs must be >= 1")
        for N in self.N:
            if N % self.N_V:
                raise InvalidConfigError(f"N={N} is not a multiple of N_V={self.N_V}")
            for rho in self.rho:
                self.system(N, rho)
            for ng in self.N_G:
                if ng < 1 or N % ng:
                    raise InvalidConfigError(f"N_G={ng} does not divide N={N}")
        groups = {"group-NG", "group-OG"} & set(self.architectures)
        if groups and not self.N_G:
            raise InvalidConfigError("group architectures need at least one N_G value")

    def system(self, N: int, rho: float, N_G: int = 1) -> SystemConfig:
        return SystemConfig(
            N_H=N // self.N_V, N_V=self.N_V, M=self.M, K=self.K, N_G=N_G, Z0=self.Z0,
            P_T=self.P_T, sigma_z2=self.sigma_z2, rho=rho, L0=self.L0,
            alpha_R=self.alpha_R, alpha_T=self.alpha_T, tx_pos=self.tx_pos,
            ris_pos=self.ris_pos, rx_pos=self.rx_pos)

    def qn_options(self) -> QuasiNewtonOptions:
        return QuasiNewtonOptions(max_iterations=self.qn_max_iterations,
                                  gradient_tolerance=self.qn_gradient_tolerance,
                                  restarts=self.qn_restarts)


# -- config files ------------------------------------------------------------

_TUPLE_FIELDS = {"N": int, "N_G": int, "rho": float, "architectures": str,
                 "tx_pos": float, "ris_pos": float, "rx_pos": float}


def _convert(name: str, raw: str, ftype):
    if name in _TUPLE_FIELDS:
        conv = _TUPLE_FIELDS[name]
        return tuple(conv(tok.strip()) for tok in raw.split(",") if tok.strip())
    if name == "output":
        return raw
    if "int" in str(ftype):
        return int(raw)
    if "float" in str(ftype):
        return float(raw)
    return raw


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment, lists are comma separated)."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise InvalidConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw, types[key])
        except ValueError as exc:
            raise InvalidConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return replace(base or ExperimentConfig(), **values)


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ", ".join(map(str, v))
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# -- seeds ---------------------------------------------------------------------

TRAIN, EVAL = 0, 1


def derive_seed(seed: int, N: int, rho: float, purpose: int) -> int:
    """64-bit seed for one sweep point and purpose (training or evaluation)."""
    ss = np.random.SeedSequence([int(seed), int(N), int(round(rho * 1_000_000)), purpose])
    return int(ss.generate_state(1, np.uint64)[0])


# -- results -------------------------------------------------------------------

@dataclass
class ResultRow:
    mode: str
    N: int
    N_H: int
    N_V: int
    N_G: int
    rho: float
    architecture: str
    metric: str
    mean: float
    stderr: float
    n: int
    seed: int
    P_T: float
    sigma_z2: float
    wall_time: float = 0.0

    def csv_fields(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            out.append(repr(float(v)) if isinstance(v, float) else str(v))
        return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[ResultRow] = field(default_factory=list)
    failures: list[tuple[int, float, str]] = field(default_factory=list)
    strategies: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def select(self, **kw) -> list[ResultRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in kw.items())]

    def value(self, **kw) -> float:
        rows = self.select(**kw)
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows match {kw}")
        return rows[0].mean

    def to_csv(self) -> str:
        cfg = self.config
        buf = io.StringIO()
        buf.write(f"# bdris experiment mode={cfg.mode} P_T={cfg.P_T!r} sigma_z2={cfg.sigma_z2!r} "
                  f"seed={cfg.seed} training_size={cfg.training_size} "
                  f"eval_realizations={cfg.eval_realizations}\n")
        buf.write("# rates in bit/s/Hz; zero-forcing power split equally (||w_k||^2 = 1/K)\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def read_results_csv(path_or_text) -> list[dict]:
    text = str(path_or_text)
    if "\n" not in text:
        text = Path(text).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- per-realization work ----------------------------------------------------------

@dataclass(frozen=True)
class _Arch:
    name: str
    N_G: int
    perm: tuple[int, ...]

    @property
    def strategy(self) -> GroupingStrategy:
        return GroupingStrategy(self.perm, self.N_G)


def _evaluate_chunk(args):
    """Metric values for realizations ``indices`` under each architecture."""
    mode, system, archs, eval_seed, indices, qn = args
    sampler = ChannelSampler(CorrelationSpec.from_config(system), system.K)
    strategies = [a.strategy for a in archs]
    out = np.empty((len(indices), len(archs), 2))
    for row, idx in enumerate(indices):
        ch = sampler.draw(eval_seed, idx)
        for col, s in enumerate(strategies):
            # restart draws must not depend on worker assignment
            rng = stream_rng(eval_seed, idx, 1_000_000 + col)
            out[row, col] = _evaluate_one(mode, system, s, ch, qn, rng)
    return out


def _evaluate_one(mode, system: SystemConfig, s: GroupingStrategy, ch, qn, rng):
    if mode == "single-user":
        blocks, _ = optimize_scattering_su(s, ch)
        h = effective_channel(s, blocks, ch.H_R, ch.H_T)[0]
        p = received_power(h, mrt_precoder(h), system.P_T)
        return p, float(np.vdot(h, h).real)
    sol = optimize_scattering_mu(s, ch, qn, system.Z0, rng=rng)
    H = effective_channel(s, sol.scattering, ch.H_R, ch.H_T)
    rate = sum_rate(H, zf_precoders(H), system.P_T, system.sigma_z2)
    return rate / LN2, sol.objective


def _stderr(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def _ratio_stderr(x: np.ndarray, y: np.ndarray) -> float:
    """Delta-method standard error of ``mean(x) / mean(y)`` for paired samples."""
    if x.size < 2 or y.mean() == 0:
        return 0.0
    r = x.mean() / y.mean()
    return float(np.std(x - r * y, ddof=1) / math.sqrt(x.size) / abs(y.mean()))


def _architectures(cfg: ExperimentConfig, N: int, og: dict[int, GroupingStrategy]) -> list[_Arch]:
    archs = []
    if "single" in cfg.architectures:
        archs.append(_Arch("single", 1, tuple(range(N))))
    for ng in cfg.N_G:
        if N % ng:
            continue
        if "group-NG" in cfg.architectures:
            archs.append(_Arch("group-NG", ng, tuple(range(N))))
        if "group-OG" in cfg.architectures:
            archs.append(_Arch("group-OG", ng, og[ng].perm))
    if "fully" in cfg.architectures:
        archs.append(_Arch("fully", N, tuple(range(N))))
    return archs


def _chunks(n: int, parts: int) -> list[list[int]]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [list(range(bounds[i], bounds[i + 1])) for i in range(parts)]


def offline_grouping(cfg: ExperimentConfig, N: int, rho: float,
                     N_G_values: Sequence[int] | None = None):
    """Run the grouping search for every group size; returns ``{N_G: (strategy, trace)}``."""
    system = cfg.system(N, rho)
    spec = CorrelationSpec.from_config(system)
    train = sample_realizations(system, spec, cfg.training_size, derive_seed(cfg.seed, N, rho, TRAIN))
    pre = precompute(train, cfg.mode)
    out = {}
    for ng in (N_G_values if N_G_values is not None else cfg.N_G):
        if N % ng == 0:
            out[ng] = optimize_grouping(pre, ng, cfg.mode)
    return out


def run_point(cfg: ExperimentConfig, N: int, rho: float, pool=None):
    """Evaluate one sweep point; returns ``(rows, {N_G: strategy}, {N_G: trace})``."""
    t0 = time.perf_counter()
    system = cfg.system(N, rho)
    searched = {}
    if "group-OG" in cfg.architectures:
        searched = offline_grouping(cfg, N, rho)
    og = {ng: st for ng, (st, _) in searched.items()}
    traces = {ng: tr for ng, (_, tr) in searched.items()}
    archs = _architectures(cfg, N, og)
    eval_seed = derive_seed(cfg.seed, N, rho, EVAL)
    qn = cfg.qn_options()
    tasks = [(cfg.mode, system, archs, eval_seed, idx, qn)
             for idx in _chunks(cfg.eval_realizations, cfg.jobs)]
    mapper = pool.map if pool is not None else map
    values = np.concatenate(list(mapper(_evaluate_chunk, tasks)), axis=0)
    wall = time.perf_counter() - t0

    metric, aux = ("received_power", "channel_gain") if cfg.mode == "single-user" \
        else ("sum_rate", "channel_gain")
    common = dict(mode=cfg.mode, N=N, N_H=system.N_H, N_V=system.N_V, rho=float(rho),
                  seed=cfg.seed, P_T=float(cfg.P_T), sigma_z2=float(cfg.sigma_z2),
                  wall_time=wall)
    n = values.shape[0]
    rows = []
    single = next((i for i, a in enumerate(archs) if a.name == "single"), None)
    for col, a in enumerate(archs):
        x = values[:, col, 0]
        rows.append(ResultRow(N_G=a.N_G, architecture=a.name, metric=metric,
                              mean=float(x.mean()), stderr=_stderr(x), n=n, **common))
        g = values[:, col, 1]
        rows.append(ResultRow(N_G=a.N_G, architecture=a.name, metric=aux,
                              mean=float(g.mean()), stderr=_stderr(g), n=n, **common))
        if cfg.mode == "single-user" and single is not None:
            y = values[:, single, 0]
            rows.append(ResultRow(N_G=a.N_G, architecture=a.name, metric="power_gain",
                                  mean=float(x.mean() / y.mean()), stderr=_ratio_stderr(x, y),
                                  n=n, **common))
    return rows, og, traces


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every sweep point; failures are recorded per point and the rest continue."""
    result = ExperimentResult(cfg)
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        for N in cfg.N:
            for rho in cfg.rho:
                try:
                    rows, og, traces = run_point(cfg, N, rho, pool)
                except (BDRISError, np.linalg.LinAlgError) as exc:
                    log.error("sweep point N=%d rho=%g failed: %s", N, rho, exc)
                    result.failures.append((N, rho, str(exc)))
                    continue
                result.rows.extend(rows)
                for ng, s in og.items():
                    result.strategies[(N, rho, ng)] = s
                    result.traces[(N, rho, ng)] = traces[ng]
                log.info("N=%d rho=%g done in %.1fs", N, rho, rows[0].wall_time if rows else 0)
    finally:
        if pool is not None:
            pool.shutdown()
    if cfg.output:
        result.write_csv(cfg.output)
    return result


# -- grouping maps -------------------------------------------------------------

def export_grouping_map(s: GroupingStrategy, N_H: int, N_V: int) -> str:
    """CSV grid with ``N_V`` rows and ``N_H`` columns of 1-based canonical group ids.

    Element ``n`` (0-based) sits in row ``n % N_V`` and column ``n // N_V``.
    """
    if N_H * N_V != s.N:
        raise InvalidConfigError(f"grid {N_H}x{N_V} does not hold N={s.N} elements")
    labels = s.labels() + 1
    grid = labels.reshape(N_H, N_V).T
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(grid.tolist())
    return buf.getvalue()


def parse_grouping_map(text: str) -> GroupingStrategy:
    grid = np.array([[int(v) for v in row] for row in csv.reader(io.StringIO(text)) if row])
    labels = grid.T.ravel()
    groups = [np.flatnonzero(labels == g).tolist() for g in np.unique(labels)]
    return GroupingStrategy.from_groups(groups)


def element_positions(N_H: int, N_V: int, spacing: float = 1.0) -> np.ndarray:
    n = np.arange(N_H * N_V)
    return spacing * np.column_stack([n // N_V, n % N_V]).astype(float)


def intra_group_distance(s: GroupingStrategy, N_H: int, N_V: int, spacing: float = 1.0) -> float:
    """Mean over groups of the mean pairwise distance between grouped elements."""
    if N_H * N_V != s.N:
        raise InvalidConfigError(f"grid {N_H}x{N_V} does not hold N={s.N} elements")
    if s.group_size == 1:
        return 0.0
    pos = element_positions(N_H, N_V, spacing)
    per_group = []
    for g in s.partition:
        d = [math.dist(pos[i], pos[j]) for i, j in combinations(g, 2)]
        per_group.append(sum(d) / len(d))
    return float(np.mean(per_group))


# -- presets -------------------------------------------------------------------

FIG_N = (16, 32, 48, 64)
FIG2_GRIDS = ((2, 8), (4, 8), (6, 8), (8, 8))
#: transmit power used by the multi-user preset (0 dBm), see README
FIG3_P_T = 1e-3


def fig1_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig(mode="single-user", N=FIG_N, N_G=(2, 4, 8), rho=(0.6, 0.8), K=1)
    return replace(base, **overrides)


def fig3_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig(mode="multi-user", N=FIG_N, N_G=(2, 4, 8), rho=(0.6, 0.8), K=2,
                            P_T=FIG3_P_T, sigma_z2=1e-11,
                            architectures=("group-NG", "group-OG"))
    return replace(base, **overrides)


@dataclass
class GroupingMap:
    N_H: int
    N_V: int
    strategy: GroupingStrategy
    distance_og: float
    distance_ng: float

    def to_csv(self) -> str:
        return export_grouping_map(self.strategy, self.N_H, self.N_V)


def fig2_maps(seed: int = 0, training_size: int = DEFAULT_TRAINING_SIZE, rho: float = 0.8,
              N_G: int = 4, grids=FIG2_GRIDS) -> list[GroupingMap]:
    """Optimized single-user groupings for each ``(N_H, N_V)`` grid."""
    maps = []
    for N_H, N_V in grids:
        cfg = ExperimentConfig(mode="single-user", N=(N_H * N_V,), N_G=(N_G,), rho=(rho,),
                               N_V=N_V, training_size=training_size, seed=seed)
        s, _ = offline_grouping(cfg, N_H * N_V, rho)[N_G]
        ng = sequential_grouping(N_H * N_V, N_G)
        maps.append(GroupingMap(N_H, N_V, s, intra_group_distance(s, N_H, N_V),
                                intra_group_distance(ng, N_H, N_V)))
    return maps


def training_objectives(cfg: ExperimentConfig, N: int, rho: float, N_G: int):
    """Surrogate objective of the OG and NG strategies on the training set."""
    system = cfg.system(N, rho)
    spec = CorrelationSpec.from_config(system)
    train = sample_realizations(system, spec, cfg.training_size, derive_seed(cfg.seed, N, rho, TRAIN))
    pre = precompute(train, cfg.mode)
    og, trace = optimize_grouping(pre, N_G, cfg.mode)
    return grouping_objective(og, pre), grouping_objective(sequential_grouping(N, N_G), pre), trace
