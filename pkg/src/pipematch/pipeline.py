"""Monte-Carlo decoding runs: stage orchestration, statistics, output.

Per shot the stages run strictly one way, with no backtracking:

    sample -> [virtual pre-match -> correlated reweight
               -> optional second pre-match (frozen)] -> exact matching

With ``correlated=False`` the bracketed stages are skipped entirely and the
matcher sees the base weights: the plain matching baseline, bit-for-bit
independent of any correlation data in the graph.

Shots are grouped into fixed-size batches, each with its own counter-derived
RNG stream, and failure counts are reduced additively, so results are
byte-identical across runs and across worker counts.  The per-round failure
rate q is backed out from the N-round logical error probability P by
equating P with the odds of an odd number of per-round flips:

    P = (1 - (1 - 2q)^N) / 2        =>        q = (1 - (1 - 2P)^(1/N)) / 2
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .circuits import CodeFamily, FAMILIES, attach_noise, build_circuit
from .errors import DecoderError
from .graph import DetectionGraph, build_graph
from .matching import StaticPaths, judge_failure, mwpm
from .prematch import prematch
from .reweight import reweight, run_stage2_prematch
from .sim import SensitivityModel, ShotResult, ShotSampler, enumerate_errors

BATCH = ShotSampler.BATCH

CSV_HEADER = ("family,distance,p,rounds,shots,failures,"
              "P_logical,q_per_round,stderr,correlated")


@dataclass(frozen=True)
class RunConfig:
    family: CodeFamily
    distance: int
    p: float
    rounds: int
    shots: int
    correlated: bool = True
    stage2_prematch: bool = False
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not (0.0 <= self.p < 1.0):
            raise ValueError("p must lie in [0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class RunStats:
    family: str
    distance: int
    p: float
    rounds: int
    shots: int
    failures: int
    correlated: bool

    @property
    def p_logical(self) -> float:
        return self.failures / self.shots

    @property
    def q_per_round(self) -> float:
        return per_round_rate(self.p_logical, self.rounds)

    @property
    def stderr(self) -> float:
        """Per-round-rate standard error from the binomial shot variance."""
        P = self.p_logical
        sigma_p = math.sqrt(max(P * (1.0 - P), 0.0) / self.shots)
        return sigma_p * _dq_dP(P, self.rounds)

    def csv_row(self) -> str:
        # rates carry six significant digits
        return (f"{self.family},{self.distance},{self.p:.6e},{self.rounds},"
                f"{self.shots},{self.failures},{self.p_logical:.5e},"
                f"{self.q_per_round:.5e},{self.stderr:.5e},"
                f"{int(self.correlated)}")


def per_round_rate(P: float, rounds: int) -> float:
    """Back the per-round failure rate q out of an N-round probability P."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not (0.0 <= P < 0.5):
        raise ValueError("per-round back-out needs 0 <= P < 0.5")
    return 0.5 * (1.0 - (1.0 - 2.0 * P) ** (1.0 / rounds))


def accumulate_rounds(q: float, rounds: int) -> float:
    """Forward direction of the back-out: odd-flip probability over N rounds."""
    return 0.5 * (1.0 - (1.0 - 2.0 * q) ** rounds)


def _dq_dP(P: float, rounds: int) -> float:
    return (1.0 - 2.0 * P) ** (1.0 / rounds - 1.0) / rounds


class DecodeContext:
    """Shared immutable state for decoding shots of one configuration."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.circuit = build_circuit(config.family, config.distance, config.rounds)
        self.channels = attach_noise(self.circuit, config.p) if config.p > 0 else []
        self.model = SensitivityModel(self.circuit)
        if config.p > 0:
            self.table = enumerate_errors(self.circuit, self.channels, self.model)
            self.graph: DetectionGraph | None = build_graph(
                self.circuit, self.channels, self.model, self.table)
            self.static = StaticPaths(self.graph)
        else:
            self.table = None
            self.graph = None
            self.static = None
        self.coords = self.model.detectors.coords

    def decode_indices(self, event_idx, truth_flip: bool,
                       correlated: bool | None = None,
                       stage2: bool | None = None) -> bool:
        """Decode one shot given detector indices; True means logical failure."""
        if len(event_idx) == 0:
            return bool(truth_flip)
        assert self.graph is not None
        correlated = self.config.correlated if correlated is None else correlated
        stage2 = self.config.stage2_prematch if stage2 is None else stage2
        events = [self.coords[k] for k in event_idx]
        truth = ShotResult(events=frozenset(events), logical_x_flip=bool(truth_flip))
        if correlated:
            virtual = prematch(events, self.graph)
            overlay = reweight(self.graph, virtual)
            frozen = (run_stage2_prematch(self.graph, overlay, events)
                      if stage2 else None)
            # a write-free overlay means base weights; reuse the static tables
            effective = overlay if overlay.p_written else None
            outcome = mwpm(events, frozen, self.graph, effective,
                           static=self.static)
        else:
            outcome = mwpm(events, None, self.graph, static=self.static)
        return judge_failure(outcome, truth)

    def decode_shot(self, shot: ShotResult, **kw) -> bool:
        idx = [self.model.detectors.index[c] for c in shot.events]
        return self.decode_indices(np.asarray(sorted(idx)), shot.logical_x_flip, **kw)


def _batch_plan(shots: int) -> list[tuple[int, int]]:
    """Fixed partition of the shot budget into (batch_index, size) tasks."""
    plan = []
    b = 0
    left = shots
    while left > 0:
        size = min(BATCH, left)
        plan.append((b, size))
        b += 1
        left -= size
    return plan


_WORKER_CTX: dict = {}


def _decode_batch(ctx: DecodeContext, sampler: ShotSampler,
                  batch: tuple[int, int], paired: bool):
    b, size = batch
    events, flips = sampler.sample_batch(b, size)
    if not paired:
        fails = 0
        for ev, flip in zip(events, flips):
            try:
                fails += ctx.decode_indices(ev, flip)
            except DecoderError as exc:
                raise DecoderError(
                    f"shot {b}:{len(events)} (seed={sampler.seed}, batch={b}) "
                    f"failed: {exc}") from exc
        return fails
    # Paired mode: decode the same samples with and without correlations.
    n_corr = n_unc = n_discordant = 0
    for ev, flip in zip(events, flips):
        f_corr = ctx.decode_indices(ev, flip, correlated=True)
        f_unc = ctx.decode_indices(ev, flip, correlated=False)
        n_corr += f_corr
        n_unc += f_unc
        n_discordant += f_corr != f_unc
    return n_corr, n_unc, n_discordant


def _pool_init(config: RunConfig, paired: bool):
    _WORKER_CTX["ctx"] = DecodeContext(config)
    _WORKER_CTX["sampler"] = ShotSampler(_WORKER_CTX["ctx"].table, config.seed)
    _WORKER_CTX["paired"] = paired


def _pool_task(batch):
    return _decode_batch(_WORKER_CTX["ctx"], _WORKER_CTX["sampler"],
                         batch, _WORKER_CTX["paired"])


def _run_batches(config: RunConfig, paired: bool):
    plan = _batch_plan(config.shots)
    if config.workers == 1:
        ctx = DecodeContext(config)
        sampler = ShotSampler(ctx.table, config.seed)
        return [_decode_batch(ctx, sampler, b, paired) for b in plan]
    with ProcessPoolExecutor(max_workers=config.workers,
                             initializer=_pool_init,
                             initargs=(config, paired)) as pool:
        return list(pool.map(_pool_task, plan))


def run(config: RunConfig) -> RunStats:
    """Monte-Carlo estimate of the logical failure rate for one configuration."""
    if config.p == 0.0:
        # No error mechanism can fire; the decoder is never exercised.
        return RunStats(config.family, config.distance, config.p,
                        config.rounds, config.shots, 0, config.correlated)
    results = _run_batches(config, paired=False)
    failures = int(sum(results))
    return RunStats(config.family, config.distance, config.p, config.rounds,
                    config.shots, failures, config.correlated)


@dataclass(frozen=True)
class PairedStats:
    """Same error samples decoded with and without correlated reweighting."""

    correlated: RunStats
    uncorrelated: RunStats
    discordant: int

    @property
    def q_difference(self) -> float:
        return self.uncorrelated.q_per_round - self.correlated.q_per_round

    @property
    def q_difference_sigma(self) -> float:
        """Paired-sample standard error of the q difference.

        Var(f_unc - f_corr) over shots is bounded by the discordant fraction;
        the delta method maps the P difference onto q.
        """
        n = self.correlated.shots
        p_disc = self.discordant / n
        d = (self.uncorrelated.p_logical - self.correlated.p_logical)
        var = max(p_disc - d * d, 0.0) / n
        p_mid = 0.5 * (self.uncorrelated.p_logical + self.correlated.p_logical)
        return math.sqrt(var) * _dq_dP(p_mid, self.correlated.rounds)


def run_paired(config: RunConfig) -> PairedStats:
    """Variance-reduced correlated-vs-uncorrelated comparison on shared shots."""
    if config.p == 0.0:
        z = RunStats(config.family, config.distance, config.p, config.rounds,
                     config.shots, 0, True)
        return PairedStats(z, replace(z, correlated=False), 0)
    results = _run_batches(replace(config, correlated=True), paired=True)
    n_corr = sum(r[0] for r in results)
    n_unc = sum(r[1] for r in results)
    n_disc = sum(r[2] for r in results)
    mk = lambda fails, corr: RunStats(config.family, config.distance, config.p,
                                      config.rounds, config.shots, int(fails), corr)
    return PairedStats(mk(n_corr, True), mk(n_unc, False), int(n_disc))


def pick_rounds(family: CodeFamily, distance: int, p: float, seed: int = 0,
                target: float = 0.10, pilot_shots: int = 2048,
                pilot_rounds: int = 4, max_rounds: int = 512) -> int:
    """Choose N so the N-round logical error probability lands near ``target``.

    Runs a short pilot at a fixed small N, backs out q, and solves the
    odd-flip relation for the N that reaches the target.  Falls back to the
    pilot N when the pilot sees no failures.
    """
    pilot = run(RunConfig(family, distance, p, pilot_rounds, pilot_shots,
                          correlated=False, seed=seed))
    if pilot.failures == 0 or pilot.p_logical >= 0.5:
        return pilot_rounds
    q = pilot.q_per_round
    n = math.log(1.0 - 2.0 * target) / math.log(1.0 - 2.0 * q)
    return max(1, min(max_rounds, round(n)))


def write_csv(stats: list[RunStats], path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else None
    text = "\n".join([CSV_HEADER] + [s.csv_row() for s in stats]) + "\n"
    if buf is not None:
        buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def csv_text(stats: list[RunStats]) -> str:
    buf = io.StringIO()
    write_csv(stats, buf)
    return buf.getvalue()


def read_csv(path) -> list[RunStats]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            f = line.strip().split(",")
            if not line.strip():
                continue
            out.append(RunStats(f[0], int(f[1]), float(f[2]), int(f[3]),
                                int(f[4]), int(f[5]), bool(int(f[9]))))
    return out


def plotdata_files(stats: list[RunStats], prefix: str) -> list[str]:
    """Write one two-column (p, q_per_round) file per decoding curve.

    Files are named ``{prefix}_{family}_d{distance}_{corr|uncorr}.dat`` and
    sorted by p, ready for log-log plotting.
    """
    groups: dict[tuple, list[RunStats]] = {}
    for s in stats:
        groups.setdefault((s.family, s.distance, s.correlated), []).append(s)
    written = []
    for (family, d, corr), rows in sorted(groups.items()):
        tag = "corr" if corr else "uncorr"
        path = f"{prefix}_{family}_d{d}_{tag}.dat"
        rows.sort(key=lambda s: s.p)
        with open(path, "w") as fh:
            fh.write("# p q_per_round\n")
            for s in rows:
                fh.write(f"{s.p:.6e} {s.q_per_round:.5e}\n")
        written.append(path)
    return written


def dump_shots(ctx: DecodeContext, seed: int, shots: int) -> str:
    """Shot dump: one line per shot, sorted event coordinates then logical bit."""
    sampler = ShotSampler(ctx.table, seed)
    lines = []
    done = 0
    for b, size in _batch_plan(shots):
        events, flips = sampler.sample_batch(b, size)
        for ev, flip in zip(events, flips):
            coords = " ".join(f"({t},{i},{j})"
                              for t, i, j in (ctx.coords[k] for k in ev))
            lines.append(f"{coords} {int(flip)}".strip())
            done += 1
    return "\n".join(lines) + "\n"
