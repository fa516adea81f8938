"""Multivariate mutually-exciting point processes over per-community event
series: thinning-based simulation, latent-branching Gibbs inference with an
exponential impulse kernel (decay sampled over a discrete grid), and
normalized cross-community influence.

Time unit is days. W[i][j] is the expected number of events directly
triggered in process j by one event in process i; the kernel is
g(t) = beta * exp(-beta * t) so W integrates out as the branching ratio.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import Document

SECONDS_PER_DAY = 86400.0
# Parent candidates older than this many kernel e-foldings contribute less
# than 1e-12 relative weight and are skipped.
KERNEL_CUTOFF = math.log(1e12)
MAX_PARENT_WINDOW = 2000


@dataclass
class EventSeries:
    claim_id: str
    processes: list[str]
    events: list[np.ndarray]  # per process, sorted times in days
    horizon: float

    def __post_init__(self) -> None:
        self.events = [np.asarray(e, dtype=np.float64) for e in self.events]
        for k, ev in enumerate(self.events):
            if len(ev) and (ev.min() < 0 or ev.max() > self.horizon):
                raise ValueError(f"process {self.processes[k]}: events outside [0, horizon]")
            if np.any(np.diff(ev) < 0):
                raise ValueError(f"process {self.processes[k]}: events not sorted")

    @property
    def K(self) -> int:
        return len(self.processes)

    def counts(self) -> np.ndarray:
        return np.array([len(e) for e in self.events], dtype=np.int64)

    def total_events(self) -> int:
        return int(self.counts().sum())

    @property
    def fittable(self) -> bool:
        return self.K >= 2 and int((self.counts() > 0).sum()) >= 2

    def merged(self) -> tuple[np.ndarray, np.ndarray]:
        """All events as (times, process indices), time-sorted."""
        times = np.concatenate([e for e in self.events]) if self.events else np.zeros(0)
        procs = np.concatenate(
            [np.full(len(e), k, dtype=np.int64) for k, e in enumerate(self.events)]
        ) if self.events else np.zeros(0, dtype=np.int64)
        order = np.argsort(times, kind="stable")
        return times[order], procs[order]


def build_series(
    claim_id: str,
    docs_by_community: Mapping[str, Sequence[Document]],
    communities: Optional[Sequence[str]] = None,
) -> EventSeries:
    """One event per matched document, in days from the claim's first event.

    Horizon is the last event plus one day. A series with fewer than two
    non-empty processes is returned but flagged unfittable.
    """
    comms = list(communities) if communities is not None else sorted(docs_by_community)
    all_ts = [d.timestamp for c in comms for d in docs_by_community.get(c, ())]
    if not all_ts:
        return EventSeries(claim_id, comms, [np.zeros(0) for _ in comms], horizon=1.0)
    origin = min(all_ts)
    events = []
    for c in comms:
        days = sorted((d.timestamp - origin) / SECONDS_PER_DAY for d in docs_by_community.get(c, ()))
        events.append(np.array(days))
    horizon = (max(all_ts) - origin) / SECONDS_PER_DAY + 1.0
    return EventSeries(claim_id, comms, events, horizon)


@dataclass
class HawkesParams:
    mu: np.ndarray  # (K,) background rates, events/day
    W: np.ndarray  # (K, K) expected direct offspring, W[i][j] = i -> j
    beta: float  # kernel decay, 1/days

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.W = np.asarray(self.W, dtype=np.float64)
        K = len(self.mu)
        if self.W.shape != (K, K):
            raise ValueError(f"W shape {self.W.shape} does not match mu length {K}")
        if np.any(self.mu < 0) or np.any(self.W < 0) or self.beta <= 0:
            raise ValueError("rates and weights must be non-negative, beta positive")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.W))):
            raise ValueError("non-finite parameters")

    @property
    def K(self) -> int:
        return len(self.mu)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.W))))

    def stationary_rates(self) -> np.ndarray:
        """Expected event rates (I - W^T)^-1 mu; valid when subcritical."""
        K = self.K
        return np.linalg.solve(np.eye(K) - self.W.T, self.mu)


def simulate(
    params: HawkesParams,
    T: float,
    seed: int = 0,
    initial_events: Sequence[tuple[int, float]] = (),
    processes: Optional[Sequence[str]] = None,
    claim_id: str = "simulated",
) -> EventSeries:
    """Thinning simulation on [0, T]; deterministic for a fixed seed.

    ``initial_events`` are exogenous (process, time) pairs injected into
    the timeline; they excite offspring like any other event, which gives
    a direct handle on branching cascades even with mu = 0. Requires a
    subcritical W.
    """
    if params.spectral_radius() >= 1.0:
        raise ValueError(f"unstable excitation matrix: spectral radius {params.spectral_radius():.3f} >= 1")
    rng = np.random.default_rng(seed)
    K = params.K
    beta = params.beta
    events: list[list[float]] = [[] for _ in range(K)]
    sched = sorted(((float(ts), int(proc)) for proc, ts in initial_events))
    si = 0
    t = 0.0
    t_state = 0.0  # time the excitation vector A refers to
    A = np.zeros(K)  # summed kernel mass currently exciting each target

    while True:
        bound = float(params.mu.sum() + A.sum())
        if bound <= 0.0:
            if si >= len(sched):
                break
            st, sp = sched[si]
            si += 1
            if st > T:
                break
            A = A * math.exp(-beta * (st - t_state))
            t = t_state = st
            events[sp].append(st)
            A = A + params.W[sp] * beta
            continue
        t_cand = t + rng.exponential(1.0 / bound)
        if si < len(sched) and sched[si][0] <= t_cand:
            st, sp = sched[si]
            si += 1
            A = A * math.exp(-beta * (st - t_state))
            t = t_state = st
            if st <= T:
                events[sp].append(st)
                A = A + params.W[sp] * beta
            continue
        if t_cand > T:
            break
        decayed = A * math.exp(-beta * (t_cand - t_state))
        lam = params.mu + decayed
        u = rng.uniform(0.0, bound)
        t = t_state = t_cand
        if u <= float(lam.sum()):
            k = int(np.searchsorted(np.cumsum(lam), u))
            events[k].append(t_cand)
            A = decayed + params.W[k] * beta
        else:
            A = decayed

    names = list(processes) if processes is not None else [f"p{k}" for k in range(K)]
    return EventSeries(claim_id, names, [np.array(e) for e in events], horizon=float(T))


def log_likelihood(series: EventSeries, params: HawkesParams) -> float:
    """Exact exponential-kernel log likelihood on [0, horizon].

    Simultaneous events are handled as a group: none of them excites the
    others at the shared instant.
    """
    times, procs = series.merged()
    T = series.horizon
    K = series.K
    beta = params.beta
    ll = -float(params.mu.sum()) * T
    if len(times) == 0:
        return ll

    # R[i] = sum over past events of process i of exp(-beta (t - t_m))
    R = np.zeros(K)
    t_prev = 0.0
    n = 0
    N = len(times)
    while n < N:
        t_now = times[n]
        R = R * math.exp(-beta * (t_now - t_prev))
        t_prev = t_now
        m = n
        while m < N and times[m] == t_now:
            lam = params.mu[procs[m]] + beta * float(R @ params.W[:, procs[m]])
            if lam <= 0.0:
                return -math.inf
            ll += math.log(lam)
            m += 1
        for idx in range(n, m):
            R[procs[idx]] += 1.0
        n = m

    row_mass = params.W.sum(axis=1)
    ll -= float((row_mass[procs] * (1.0 - np.exp(-beta * (T - times)))).sum())
    return ll


@dataclass
class FitResult:
    params: HawkesParams  # posterior means (beta = grid-weighted mean)
    raw_attribution: np.ndarray  # (K, K) mean triggered-event counts, root/parent in i
    background_mean: np.ndarray  # (K,) mean background counts per process
    samples: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    attribution: str = "ancestor"


def _parent_caches(times: np.ndarray, beta_grid: Sequence[float]) -> dict[float, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-beta CSR-style candidate windows: (offsets, flat decays, flat idx)."""
    N = len(times)
    caches = {}
    strict_hi = np.searchsorted(times, times, side="left")
    for beta in beta_grid:
        window = KERNEL_CUTOFF / beta
        lo = np.searchsorted(times, times - window, side="left")
        lo = np.maximum(lo, strict_hi - MAX_PARENT_WINDOW)
        offsets = np.zeros(N + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(strict_hi - lo)
        flat_idx = np.concatenate(
            [np.arange(lo[n], strict_hi[n]) for n in range(N)]
        ) if offsets[-1] else np.zeros(0, dtype=np.int64)
        lags = np.repeat(times, strict_hi - lo) - times[flat_idx]
        flat_dec = beta * np.exp(-beta * lags)
        caches[beta] = (offsets, flat_dec, flat_idx)
    return caches


def fit_gibbs(
    series: EventSeries,
    mu_prior: tuple[float, float] = (1.0, 1.0),
    w_prior: tuple[float, float] = (1.0, 1.0),
    beta_grid: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 8.0),
    iters: int = 2000,
    burn_in: int = 500,
    seed: int = 0,
    attribution: str = "ancestor",
    drift_threshold: float = 0.2,
    keep_attribution_samples: bool = False,
) -> FitResult:
    """Latent-branching Gibbs sampler with conjugate gamma updates.

    Each sweep samples every event's parent (background vs. an earlier
    event, proportional to background rate vs. triggering intensity), then
    draws mu and W from their gamma conditionals and the kernel decay from
    the grid by conditional likelihood. Attribution counts follow each
    event's sampled ancestor chain to its background root ("ancestor"
    mode) or just its direct parent ("direct").

    Deterministic for a fixed seed. Conservation holds in every sample:
    per process j, triggered counts summed over sources plus background
    count equal the event count of j.
    """
    if not series.fittable:
        raise ValueError("series not fittable: need >= 2 non-empty processes")
    if iters <= burn_in:
        raise ValueError("iters must exceed burn_in")
    if attribution not in ("ancestor", "direct"):
        raise ValueError(f"unknown attribution mode: {attribution!r}")

    a_mu, b_mu = mu_prior
    a_w, b_w = w_prior
    beta_grid = [float(b) for b in beta_grid]
    times, procs = series.merged()
    N = len(times)
    K = series.K
    T = series.horizon
    proc_counts = series.counts()

    rng = np.random.default_rng(seed)
    caches = _parent_caches(times, beta_grid)
    T_minus = T - times

    mu = np.full(K, max(N / (K * T), 1e-3))
    W = np.full((K, K), 0.1)
    bi = len(beta_grid) // 2

    n_kept = 0
    mu_sum = np.zeros(K)
    w_sum = np.zeros((K, K))
    beta_sum = 0.0
    raw_sum = np.zeros((K, K))
    bg_sum = np.zeros(K)
    mu_samples = np.zeros((iters - burn_in, K))
    w_samples = np.zeros((iters - burn_in, K, K))
    beta_samples = np.zeros(iters - burn_in)
    raw_samples = np.zeros((iters - burn_in, K, K), dtype=np.int64) if keep_attribution_samples else None
    bg_samples = np.zeros((iters - burn_in, K), dtype=np.int64) if keep_attribution_samples else None
    trace = np.zeros(iters)

    parents = np.full(N, -1, dtype=np.int64)
    for it in range(iters):
        beta = beta_grid[bi]
        offsets, flat_dec, flat_idx = caches[beta]

        # 1. Parents: background with weight mu, earlier event m with
        # weight W[k_m, k_n] * beta * exp(-beta lag).
        for n in range(N):
            o1, o2 = offsets[n], offsets[n + 1]
            bg = mu[procs[n]]
            if o1 == o2:
                parents[n] = -1
                continue
            exc = W[procs[flat_idx[o1:o2]], procs[n]] * flat_dec[o1:o2]
            cum = np.cumsum(exc)
            total = bg + cum[-1]
            u = rng.random() * total
            if u < bg:
                parents[n] = -1
            else:
                parents[n] = flat_idx[o1 + int(np.searchsorted(cum, u - bg))]

        triggered = parents >= 0
        bg_counts = np.bincount(procs[~triggered], minlength=K)
        M = np.zeros((K, K), dtype=np.int64)
        if triggered.any():
            np.add.at(M, (procs[parents[triggered]], procs[triggered]), 1)

        # 2. Conjugate draws.
        mu = rng.gamma(a_mu + bg_counts, 1.0 / (b_mu + T))
        exposure = np.zeros(K)
        np.add.at(exposure, procs, 1.0 - np.exp(-beta * T_minus))
        W = rng.gamma(a_w + M, 1.0 / (b_w + exposure[:, None]))

        # 3. Kernel decay over the grid, conditioned on the branching.
        n_trig = int(triggered.sum())
        lag_sum = float((times[triggered] - times[parents[triggered]]).sum()) if n_trig else 0.0
        row_mass = W.sum(axis=1)
        lls = np.empty(len(beta_grid))
        for gi, bg_val in enumerate(beta_grid):
            survival = float((row_mass[procs] * (1.0 - np.exp(-bg_val * T_minus))).sum())
            lls[gi] = n_trig * math.log(bg_val) - bg_val * lag_sum - survival
        probs = np.exp(lls - lls.max())
        probs /= probs.sum()
        bi = int(np.searchsorted(np.cumsum(probs), rng.random()))

        trace[it] = float(W.mean())
        if it < burn_in:
            continue

        # 4. Attribution bookkeeping for kept samples.
        if attribution == "ancestor":
            roots = np.arange(N)
            for n in range(N):
                if parents[n] >= 0:
                    roots[n] = roots[parents[n]]
            src = procs[roots[triggered]]
        else:
            src = procs[parents[triggered]]
        raw = np.zeros((K, K))
        if n_trig:
            np.add.at(raw, (src, procs[triggered]), 1.0)
        assert np.array_equal(raw.sum(axis=0) + bg_counts, proc_counts), "attribution conservation violated"

        ki = n_kept
        mu_samples[ki] = mu
        w_samples[ki] = W
        beta_samples[ki] = beta_grid[bi]
        if keep_attribution_samples:
            raw_samples[ki] = raw.astype(np.int64)
            bg_samples[ki] = bg_counts
        mu_sum += mu
        w_sum += W
        beta_sum += beta_grid[bi]
        raw_sum += raw
        bg_sum += bg_counts
        n_kept += 1

    # Drift heuristic: compare the running mean of the last quarter of the
    # chain against the preceding quarter.
    q = iters // 4
    drift = 0.0
    if q >= 1:
        last, prev = trace[-q:].mean(), trace[-2 * q: -q].mean()
        drift = abs(last - prev) / max(abs(prev), 1e-12)
    converged_warning = bool(drift > drift_threshold)
    if converged_warning:
        warnings.warn(f"gibbs chain may not have converged: drift {drift:.3f} > {drift_threshold}")

    mean_params = HawkesParams(mu=mu_sum / n_kept, W=w_sum / n_kept, beta=beta_sum / n_kept)
    samples = {"mu": mu_samples, "W": w_samples, "beta": beta_samples}
    if keep_attribution_samples:
        samples["raw"] = raw_samples
        samples["background"] = bg_samples
    return FitResult(
        params=mean_params,
        raw_attribution=raw_sum / n_kept,
        background_mean=bg_sum / n_kept,
        samples=samples,
        diagnostics={
            "iters": iters,
            "burn_in": burn_in,
            "kept": n_kept,
            "drift": drift,
            "converged_warning": converged_warning,
            "seed": seed,
        },
        attribution=attribution,
    )


def parent_probabilities(series: EventSeries, params: HawkesParams) -> list[np.ndarray]:
    """Normalized parent distribution per event: [background, earlier events].

    Mirrors the sampler's weights; each vector sums to 1.
    """
    times, procs = series.merged()
    out = []
    strict_hi = np.searchsorted(times, times, side="left")
    for n in range(len(times)):
        lags = times[n] - times[: strict_hi[n]]
        exc = params.W[procs[: strict_hi[n]], procs[n]] * params.beta * np.exp(-params.beta * lags)
        weights = np.concatenate([[params.mu[procs[n]]], exc])
        out.append(weights / weights.sum())
    return out


@dataclass
class InfluenceMatrix:
    communities: list[str]
    raw: np.ndarray  # (K, K) attributed triggered-event counts
    normalized: np.ndarray  # (K, K) percent of source events; NaN row when source empty
    external: np.ndarray  # (K,) sum of normalized over other communities
    source_events: np.ndarray  # (K,) event counts per community

    def to_csv(self, path: str | Path) -> None:
        """Off-diagonal (source, target, raw, normalized) rows."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("source,target,raw,normalized_pct\n")
            for i, src in enumerate(self.communities):
                for j, dst in enumerate(self.communities):
                    if i == j:
                        continue
                    norm = self.normalized[i, j]
                    norm_str = "" if np.isnan(norm) else repr(float(norm))
                    fh.write(f"{src},{dst},{float(self.raw[i, j])!r},{norm_str}\n")


def _normalize_influence(communities: list[str], raw: np.ndarray, source_events: np.ndarray) -> InfluenceMatrix:
    K = len(communities)
    normalized = np.full((K, K), np.nan)
    external = np.full(K, np.nan)
    for i in range(K):
        if source_events[i] > 0:
            normalized[i] = raw[i] / source_events[i] * 100.0
            external[i] = float(normalized[i].sum() - normalized[i, i])
    return InfluenceMatrix(
        communities=communities,
        raw=raw,
        normalized=normalized,
        external=external,
        source_events=source_events,
    )


def influence(fit: FitResult, series: EventSeries) -> InfluenceMatrix:
    """Attribution-based influence: events in j whose chain roots in i.

    Normalized entries divide by the source community's event count (x100),
    approximating how efficiently a community's activity begets activity
    elsewhere; the per-source external total can exceed 100%.
    """
    return _normalize_influence(list(series.processes), fit.raw_attribution.copy(), series.counts())


def aggregate_influence(
    matrices: Mapping[str, InfluenceMatrix],
    claim_ids: Optional[Iterable[str]] = None,
    exclude_communities: Iterable[str] = (),
) -> InfluenceMatrix:
    """Sum raw attributions over claims, then renormalize by summed source
    events. Excluded communities are dropped from the frame entirely.
    """
    selected = sorted(claim_ids) if claim_ids is not None else sorted(matrices)
    selected = [cid for cid in selected if cid in matrices]
    if not selected:
        raise ValueError("empty claim subset")
    ref = matrices[selected[0]].communities
    for cid in selected:
        if matrices[cid].communities != ref:
            raise ValueError(f"community list mismatch for claim {cid!r}")
    excluded = set(exclude_communities)
    keep = [i for i, c in enumerate(ref) if c not in excluded]
    comms = [ref[i] for i in keep]
    raw = np.zeros((len(keep), len(keep)))
    src_events = np.zeros(len(keep))
    for cid in selected:
        m = matrices[cid]
        raw += m.raw[np.ix_(keep, keep)]
        src_events += m.source_events[keep]
    return _normalize_influence(comms, raw, src_events)


def aggregate_by_topic(
    matrices: Mapping[str, InfluenceMatrix],
    claims: Sequence,
    topic: Optional[str] = None,
    exclude_communities: Iterable[str] = (),
) -> InfluenceMatrix:
    """Aggregate over the claims tagged with ``topic`` (all when None)."""
    if topic is None:
        ids = [c.id for c in claims]
    else:
        ids = [c.id for c in claims if topic in c.topics]
    return aggregate_influence(matrices, ids, exclude_communities)
