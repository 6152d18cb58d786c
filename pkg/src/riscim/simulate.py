"""Monte Carlo ABER engine and the parameter sweeps built on it.

Trials are grouped into blocks of ``config.block_size``.  Block ``i`` draws
from ``default_rng(SeedSequence([seed, i]))``, so the result does not depend
on how blocks are spread over worker processes.  Every trial draws one
channel realization and one noise vector and reuses them across all power
points of the curve.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .codebook import CimCodebook, build_codebook
from .channel import ChannelRealization, LinkSetup, complex_gaussian
from .config import SimConfig, dbm_to_watts
from .signal_chain import (
    SingularWhiteningError,
    WhiteningFilter,
    branch_responses,
    build_whitening,
    modulate,
    psk_points,
    symbol_labels,
)
from .theory import BerCurve, pairwise_error_table, union_bound

log = logging.getLogger(__name__)

__all__ = [
    "CURVE_COLUMNS",
    "TrialSetup",
    "aber_upper_bound",
    "emit_csv",
    "prepare_trial",
    "read_csv",
    "run_array_sweep",
    "run_curve",
    "run_perturbation_sweep",
    "run_sparsity_sweep",
]

CURVE_COLUMNS = ("power_dbm", "trials", "bit_errors", "aber_sim", "aber_bound",
                 "strategy", "M", "B", "seed")

# give up on a configuration that never yields an invertible combiner
MAX_REDRAWS = 1000


@dataclass
class TrialSetup:
    """Everything fixed for one channel realization."""

    real: ChannelRealization       # channel the codebook was designed on
    tx_real: ChannelRealization    # channel the signal actually crosses
    f_t: np.ndarray
    codebook: CimCodebook
    filt: WhiteningFilter
    responses: np.ndarray          # U[c, c'] on tx_real
    redraws: int = 0

    @property
    def filter_norm(self) -> float:
        return float(np.linalg.norm(self.filt.Fr[:, 0]))


def prepare_trial(cfg: SimConfig, link: LinkSetup, rng: np.random.Generator) -> TrialSetup:
    """Draw a channel, build codebook and whitening, apply the angle perturbation.

    Draws whose combiner cannot be whitened are discarded and counted in
    ``redraws``.
    """
    sigma2 = cfg.noise_w
    for redraws in range(MAX_REDRAWS):
        real = link.draw(rng)
        f_t = real.tx_beamformer()
        cb = build_codebook(cfg.strategy, real, f_t, cfg.B, array_gain=cfg.array_gain, rng=rng)
        try:
            filt = build_whitening(cb.combiner, sigma2)
        except SingularWhiteningError:
            continue
        tx_real = real
        if cfg.angle_perturb_deg:
            tx_real = real.with_clusters(real.clusters.shifted(np.deg2rad(cfg.angle_perturb_deg)))
        u = branch_responses(cb, tx_real, filt, f_t, cfg.array_gain)
        return TrialSetup(real, tx_real, f_t, cb, filt, u, redraws)
    raise SingularWhiteningError(f"no invertible combiner after {MAX_REDRAWS} channel draws")


@dataclass
class _Tally:
    trials: int
    bit_errors: np.ndarray
    bound_sum: np.ndarray
    bound_count: int
    redraws: int = 0


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.array([bin(int(v)).count("1") for v in np.ravel(x)]).reshape(np.shape(x))


def _run_block(cfg: SimConfig, block: int, start: int, n: int) -> _Tally:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, block]))
    link = cfg.link()
    powers = dbm_to_watts(cfg.powers_dbm)
    amp = np.sqrt(powers)
    sigma2 = cfg.noise_w
    order = cfg.B
    pts = psk_points(cfg.M)
    labels = symbol_labels(order, cfg.M)
    eta = cfg.bits_per_use
    n_bound = n if cfg.bound_realizations is None else max(0, min(n, cfg.bound_realizations - start))

    errors = np.zeros(len(powers), dtype=np.int64)
    bound = np.zeros(len(powers))
    redraws = 0
    for t in range(n):
        setup = prepare_trial(cfg, link, rng)
        redraws += setup.redraws
        u = setup.responses
        sym = modulate(rng.integers(0, 2, eta), order, cfg.M)
        wn = setup.filt.Fr.conj().T @ complex_gaussian(rng, sigma2, setup.filt.Fr.shape[0])

        z = amp[:, None] * (u[:, sym.c] * sym.s)[None, :] + wn[None, :]
        expected = amp[:, None, None] * (np.diag(u)[:, None] * pts[None, :])[None]
        metric = np.abs(z[:, :, None] - expected) ** 2
        h_hat = np.argmin(metric.reshape(len(powers), -1), axis=1)
        errors += _popcount(labels[h_hat] ^ labels[sym.c * cfg.M + sym.k])

        if t < n_bound:
            table = pairwise_error_table(u, cfg.M, powers, np.sqrt(sigma2), setup.filter_norm)
            bound += union_bound(table, order, cfg.M)
    return _Tally(n, errors, bound, n_bound, redraws)


def _blocks(total: int, size: int):
    return [(i, start, min(size, total - start)) for i, start in enumerate(range(0, total, size))]


def _run_block_args(args):
    return _run_block(*args)


def _tally(cfg: SimConfig, trials: int, threads: int) -> _Tally:
    work = [(cfg, i, start, n) for i, start, n in _blocks(trials, cfg.block_size)]
    if threads > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_block_args, work))
    else:
        parts = []
        for k, args in enumerate(work, 1):
            parts.append(_run_block_args(args))
            log.info("block %d/%d done", k, len(work))
    # fixed reduction order keeps the float sums identical for any worker count
    total = _Tally(0, np.zeros(len(cfg.powers_dbm), dtype=np.int64),
                   np.zeros(len(cfg.powers_dbm)), 0)
    for p in parts:
        total.trials += p.trials
        total.bit_errors = total.bit_errors + p.bit_errors
        total.bound_sum = total.bound_sum + p.bound_sum
        total.bound_count += p.bound_count
        total.redraws += p.redraws
    return total


def run_curve(cfg: SimConfig, threads: int | None = None) -> BerCurve:
    """Simulated ABER and union bound at every power in ``cfg.powers_dbm``.

    ``trials_per_point = 0`` returns an empty curve.
    """
    curve = BerCurve(bits_per_use=cfg.bits_per_use, strategy=cfg.strategy, M=cfg.M,
                     B=cfg.B, seed=cfg.seed)
    n = cfg.trials_per_point
    if n == 0:
        return curve
    t = _tally(cfg, n, threads or cfg.threads)
    with np.errstate(invalid="ignore", divide="ignore"):
        bound = np.minimum(t.bound_sum / t.bound_count, 1.0) if t.bound_count else \
            np.full(len(cfg.powers_dbm), np.nan)
    curve.power_dbm = list(cfg.powers_dbm)
    curve.trials = [n] * len(cfg.powers_dbm)
    curve.bit_errors = [int(e) for e in t.bit_errors]
    curve.aber_sim = [float(e) / (n * cfg.bits_per_use) for e in t.bit_errors]
    curve.aber_bound = [float(b) for b in bound]
    curve.singular_redraws = t.redraws
    if t.redraws:
        log.warning("%d channel draws redrawn after a singular whitening build", t.redraws)
    return curve


def aber_upper_bound(cfg: SimConfig, n_realizations: int = 200,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Union bound on ABER at each power, averaged over fresh channel draws.

    The value is not clipped to 1.
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    link = cfg.link()
    powers = dbm_to_watts(cfg.powers_dbm)
    acc = np.zeros(len(powers))
    for _ in range(n_realizations):
        setup = prepare_trial(cfg, link, rng)
        table = pairwise_error_table(setup.responses, cfg.M, powers, np.sqrt(cfg.noise_w),
                                     setup.filter_norm)
        acc += union_bound(table, cfg.B, cfg.M)
    return acc / n_realizations


def _fmt_dims(dims) -> str:
    return "x".join(str(d) for d in dims)


def _curve_rows(curve: BerCurve, **extra):
    for i in range(len(curve)):
        row = dict(extra)
        row.update({"power_dbm": curve.power_dbm[i], "trials": curve.trials[i],
                    "bit_errors": curve.bit_errors[i], "aber_sim": curve.aber_sim[i],
                    "aber_bound": curve.aber_bound[i], "strategy": curve.strategy,
                    "M": curve.M, "B": curve.B, "seed": curve.seed})
        yield row


def run_array_sweep(cfg: SimConfig, sizes, power_dbm: float = 20.0,
                    threads: int | None = None) -> list[dict]:
    """ABER at one power for each ``(antenna_dims, ris_dims)`` pair.

    Tx and Rx both take ``antenna_dims``.  Every row reuses ``cfg.seed``, so
    the rows are paired comparisons and repeated sizes give identical rows.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("sizes must be non-empty")
    rows = []
    for ant, ris in sizes:
        c = cfg.replace(nt=ant, nr=ant, n_ris=ris, powers_dbm=[power_dbm])
        rows.extend(_curve_rows(run_curve(c, threads), antennas=_fmt_dims(c.nt),
                                ris=_fmt_dims(c.n_ris)))
    return rows


def run_sparsity_sweep(cfg: SimConfig, cluster_counts, path_counts, strategies=None,
                       threads: int | None = None) -> list[dict]:
    """ABER for every (strategy, C_R, L_R) cell at every configured power."""
    cluster_counts, path_counts = list(cluster_counts), list(path_counts)
    if not cluster_counts or not path_counts:
        raise ValueError("cluster and path grids must be non-empty")
    rows = []
    for strategy in strategies or [cfg.strategy]:
        for n_c in cluster_counts:
            for n_l in path_counts:
                c = cfg.replace(strategy=strategy, C_R=n_c, L_R=n_l)
                rows.extend(_curve_rows(run_curve(c, threads), C_R=n_c, L_R=n_l))
    return rows


def run_perturbation_sweep(cfg: SimConfig, deltas_deg,
                           threads: int | None = None) -> list[dict]:
    """Full ABER curve for each cluster-angle error ``delta`` (degrees)."""
    deltas_deg = list(deltas_deg)
    if any(d < 0 for d in deltas_deg):
        raise ValueError("deltas must be non-negative")
    rows = []
    for d in deltas_deg:
        c = cfg.replace(angle_perturb_deg=float(d))
        rows.extend(_curve_rows(run_curve(c, threads), delta_deg=float(d)))
    return rows


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(data, path, columns=None) -> None:
    """Write a :class:`BerCurve` or a list of row dicts as CSV.

    Floats use ``repr`` so that parsing the file gives back the exact values.
    A curve always uses :data:`CURVE_COLUMNS`; row tables use ``columns`` or
    the keys of the first row.
    """
    if isinstance(data, BerCurve):
        rows, columns = list(_curve_rows(data)), CURVE_COLUMNS
    else:
        rows = list(data)
        columns = columns or (list(rows[0]) if rows else list(CURVE_COLUMNS))
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(row[c]) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _parse(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_csv(path) -> list[dict]:
    """Rows of a file written by :func:`emit_csv`, numbers parsed back."""
    with open(path, newline="") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]
