"""Ensemble statistics: Mandel-Q, pair-averaged g2 maps, pulse shapes, deficits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .absorber import EnsembleResult


# ---------------------------------------------------------------------------
# counting statistics from histograms

def _hist_moments(hist: np.ndarray) -> tuple[float, float, float, float, float, float]:
    """(n, mean, unbiased variance, mu2, mu3, mu4) of a count histogram."""
    hist = np.asarray(hist, dtype=float)
    if hist.ndim != 1 or (hist < 0).any():
        raise ValueError("histogram must be a 1-D array of non-negative counts")
    n = float(hist.sum())
    if n < 1:
        raise ValueError("empty histogram")
    k = np.arange(hist.size)
    mean = float((k * hist).sum() / n)
    d = k - mean
    mu2 = float((hist * d**2).sum() / n)
    mu3 = float((hist * d**3).sum() / n)
    mu4 = float((hist * d**4).sum() / n)
    var = mu2 * n / (n - 1) if n > 1 else 0.0
    return n, mean, var, mu2, mu3, mu4


def hist_mean(hist: np.ndarray) -> float:
    return _hist_moments(hist)[1]


def hist_mean_sem(hist: np.ndarray) -> float:
    n, _, var, *_ = _hist_moments(hist)
    return math.sqrt(var / n)


def mandel_q(hist: np.ndarray) -> float:
    """Mandel-Q = Var(n)/<n> - 1 of a count histogram (unbiased variance)."""
    _, mean, var, *_ = _hist_moments(hist)
    if mean == 0.0:
        raise ValueError("Mandel-Q undefined for zero-mean counts")
    return var / mean - 1.0


def _mean_var_cov(hist: np.ndarray) -> tuple[float, float, float, float, float, float]:
    """Moments plus the sampling (co)variances of (mean, variance) estimates."""
    n, mean, var, mu2, mu3, mu4 = _hist_moments(hist)
    var_mean = mu2 / n
    var_var = max(0.0, (mu4 - mu2**2 * (n - 3) / (n - 1)) / n) if n > 1 else 0.0
    cov = mu3 / n
    return n, mean, var, var_mean, var_var, cov


def mandel_q_sem(hist: np.ndarray) -> float:
    """Delta-method standard error of the Mandel-Q estimate."""
    _, mean, var, var_mean, var_var, cov = _mean_var_cov(hist)
    if mean == 0.0:
        raise ValueError("Mandel-Q undefined for zero-mean counts")
    d_var = 1.0 / mean
    d_mean = -var / mean**2
    return math.sqrt(max(0.0, d_var**2 * var_var + d_mean**2 * var_mean + 2 * d_var * d_mean * cov))


def q_over_mean(hist: np.ndarray) -> float:
    """Ratio of Mandel-Q to the mean count; -1 for Bernoulli statistics."""
    _, mean, *_ = _hist_moments(hist)
    if mean == 0.0:
        raise ValueError("Q/mean undefined for zero-mean counts")
    return mandel_q(hist) / mean


def q_over_mean_sem(hist: np.ndarray) -> float:
    """Delta-method standard error of the Q/mean estimate."""
    _, mean, var, var_mean, var_var, cov = _mean_var_cov(hist)
    if mean == 0.0:
        raise ValueError("Q/mean undefined for zero-mean counts")
    d_var = 1.0 / mean**2
    d_mean = (mean - 2.0 * var) / mean**3
    return math.sqrt(max(0.0, d_var**2 * var_var + d_mean**2 * var_mean + 2 * d_var * d_mean * cov))


def sem(samples: np.ndarray) -> float:
    """Standard error of the mean: sample standard deviation over sqrt(n)."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    return float(x.std(ddof=1) / math.sqrt(x.size))


# ---------------------------------------------------------------------------
# time-resolved intensity correlations

@dataclass
class G2Matrix:
    """Pair-averaged g2(t1, t2) estimates on a cell grid.

    ``values`` is symmetrized in (t1, t2) with NaN marking cells where no
    detector pair has nonzero marginal rates.  ``counts`` holds the raw
    accumulated pair products; ``front_g2``/``rear_g2`` pool the first-third
    and last-third blocks of the pulse with exact per-shot error propagation.
    """

    cell_edges_us: np.ndarray
    values: np.ndarray
    sigma: np.ndarray
    counts: np.ndarray
    marginals: np.ndarray
    shots: int
    front_g2: float
    front_sigma: float
    rear_g2: float
    rear_sigma: float

    @property
    def cell_starts_us(self) -> np.ndarray:
        return self.cell_edges_us[:-1]


class G2Accumulator:
    """Streaming accumulator for pair-averaged intensity correlations.

    Feeds on per-shot (n_det, n_bins) click arrays.  For every unordered
    detector pair it accumulates the ordered product sums over a coarser cell
    grid plus the per-shot scatter needed for error bars; merging two
    accumulators is exact.
    """

    def __init__(
        self,
        n_bins: int,
        bin_width_us: float,
        cell_edges: np.ndarray | None = None,
        n_det: int = 4,
    ) -> None:
        if n_det < 2:
            raise ValueError("need at least two detectors for intensity correlations")
        edges = np.arange(0, n_bins + 1, 2) if cell_edges is None else np.asarray(cell_edges)
        if edges[-1] != n_bins:
            edges = np.append(edges, n_bins)
        if edges.size < 2 or edges[0] != 0 or (np.diff(edges) <= 0).any():
            raise ValueError("cell edges must increase from 0 to n_bins")
        self.n_bins = n_bins
        self.bin_width_us = bin_width_us
        self.n_det = n_det
        self.cell_edges = edges.astype(np.int64)
        self.pairs = [(a, b) for a in range(n_det) for b in range(a + 1, n_det)]
        n_cells = edges.size - 1
        self.shots = 0
        self.marg_sums = np.zeros((n_det, n_cells))
        self.pair_sums = np.zeros((len(self.pairs), n_cells, n_cells))
        self.y_sum = np.zeros((n_cells, n_cells))
        self.y_sq_sum = np.zeros((n_cells, n_cells))
        centers = (edges[:-1] + edges[1:]) / 2.0 * bin_width_us
        duration = n_bins * bin_width_us
        self._front = centers < duration / 3.0
        self._rear = centers >= 2.0 * duration / 3.0
        self.front_sum = 0.0
        self.front_sq_sum = 0.0
        self.rear_sum = 0.0
        self.rear_sq_sum = 0.0

    @property
    def n_cells(self) -> int:
        return self.cell_edges.size - 1

    def add(self, det_bins: np.ndarray) -> None:
        det_bins = np.asarray(det_bins)
        if det_bins.shape != (self.n_det, self.n_bins):
            raise ValueError(
                f"expected click array of shape {(self.n_det, self.n_bins)}, got {det_bins.shape}"
            )
        cells = np.add.reduceat(det_bins, self.cell_edges[:-1], axis=1).astype(float)
        self.shots += 1
        self.marg_sums += cells
        outer = np.einsum("ic,jd->ijcd", cells, cells)
        y = np.zeros((self.n_cells, self.n_cells))
        for k, (a, b) in enumerate(self.pairs):
            self.pair_sums[k] += outer[a, b]
            y += outer[a, b]
        self.y_sum += y
        self.y_sq_sum += y * y
        y_front = float(y[np.ix_(self._front, self._front)].sum())
        y_rear = float(y[np.ix_(self._rear, self._rear)].sum())
        self.front_sum += y_front
        self.front_sq_sum += y_front * y_front
        self.rear_sum += y_rear
        self.rear_sq_sum += y_rear * y_rear

    def merged(self, other: "G2Accumulator") -> "G2Accumulator":
        if (
            self.n_bins != other.n_bins
            or self.n_det != other.n_det
            or not np.array_equal(self.cell_edges, other.cell_edges)
        ):
            raise ValueError("cannot merge correlation accumulators with different grids")
        out = G2Accumulator(self.n_bins, self.bin_width_us, self.cell_edges, self.n_det)
        out.shots = self.shots + other.shots
        out.marg_sums = self.marg_sums + other.marg_sums
        out.pair_sums = self.pair_sums + other.pair_sums
        out.y_sum = self.y_sum + other.y_sum
        out.y_sq_sum = self.y_sq_sum + other.y_sq_sum
        out.front_sum = self.front_sum + other.front_sum
        out.front_sq_sum = self.front_sq_sum + other.front_sq_sum
        out.rear_sum = self.rear_sum + other.rear_sum
        out.rear_sq_sum = self.rear_sq_sum + other.rear_sq_sum
        return out

    def equals(self, other: "G2Accumulator") -> bool:
        return (
            self.shots == other.shots
            and np.array_equal(self.cell_edges, other.cell_edges)
            and np.array_equal(self.marg_sums, other.marg_sums)
            and np.array_equal(self.pair_sums, other.pair_sums)
            and np.array_equal(self.y_sum, other.y_sum)
        )

    def _pooled(self, mask: np.ndarray, y_total: float, y_sq_total: float, marg: np.ndarray):
        denom = 0.0
        for a, b in self.pairs:
            denom += float(np.outer(marg[a][mask], marg[b][mask]).sum())
        if denom <= 0.0 or self.shots < 2:
            return float("nan"), float("nan")
        y_mean = y_total / self.shots
        y_var = max(0.0, y_sq_total / self.shots - y_mean**2) * self.shots / (self.shots - 1)
        return y_mean / denom, math.sqrt(y_var / self.shots) / denom

    def finalize(self) -> G2Matrix:
        if self.shots == 0:
            raise ValueError("empty ensemble: no shots accumulated")
        n_cells = self.n_cells
        marg = self.marg_sums / self.shots
        values = np.full((n_cells, n_cells), np.nan)
        contrib = np.zeros((n_cells, n_cells))
        ratio_sum = np.zeros((n_cells, n_cells))
        denom_sum = np.zeros((n_cells, n_cells))
        for k, (a, b) in enumerate(self.pairs):
            denom = np.outer(marg[a], marg[b])
            defined = denom > 0
            ratio = np.zeros_like(denom)
            ratio[defined] = (self.pair_sums[k][defined] / self.shots) / denom[defined]
            ratio_sum += np.where(defined, ratio, 0.0)
            denom_sum += np.where(defined, denom, 0.0)
            contrib += defined
        any_def = contrib > 0
        values[any_def] = ratio_sum[any_def] / contrib[any_def]
        # Per-cell error from the shot-to-shot scatter of the summed pair
        # products, scaled by the same denominator as the value.
        sigma = np.full((n_cells, n_cells), np.nan)
        if self.shots > 1:
            y_mean = self.y_sum / self.shots
            y_var = np.maximum(0.0, self.y_sq_sum / self.shots - y_mean**2)
            y_var *= self.shots / (self.shots - 1)
            sigma[any_def] = np.sqrt(y_var[any_def] / self.shots) / denom_sum[any_def]
        sym_values = _symmetrize_nan(values)
        sym_sigma = _symmetrize_sigma(sigma)
        counts = 0.5 * (self.pair_sums.sum(axis=0) + self.pair_sums.sum(axis=0).T)
        front_g2, front_sigma = self._pooled(
            self._front, self.front_sum, self.front_sq_sum, marg
        )
        rear_g2, rear_sigma = self._pooled(self._rear, self.rear_sum, self.rear_sq_sum, marg)
        edges_us = self.cell_edges * self.bin_width_us
        return G2Matrix(
            cell_edges_us=edges_us,
            values=sym_values,
            sigma=sym_sigma,
            counts=counts,
            marginals=marg,
            shots=self.shots,
            front_g2=front_g2,
            front_sigma=front_sigma,
            rear_g2=rear_g2,
            rear_sigma=rear_sigma,
        )


def _symmetrize_nan(matrix: np.ndarray) -> np.ndarray:
    transposed = matrix.T
    average = 0.5 * (matrix + transposed)
    return np.where(np.isnan(matrix), transposed, np.where(np.isnan(transposed), matrix, average))


def _symmetrize_sigma(sigma: np.ndarray) -> np.ndarray:
    # Combining the (t1,t2) and (t2,t1) estimates halves the variance at most;
    # keeping the quadrature mean is slightly conservative for the diagonal.
    transposed = sigma.T
    combined = np.sqrt(0.5 * (sigma**2 + transposed**2))
    return np.where(np.isnan(sigma), transposed, np.where(np.isnan(transposed), sigma, combined))


def g2_matrix(
    click_records: Iterable,
    bin_width_us: float,
    cell_edges: np.ndarray | None = None,
) -> G2Matrix:
    """Pair-averaged g2 map of an ensemble of click records.

    ``click_records`` yields ClickRecord objects or bare (n_det, n_bins)
    arrays; the grid defaults to two bins per cell.
    """
    iterator = iter(click_records)
    try:
        first = next(iterator)
    except StopIteration:
        raise ValueError("empty ensemble: no click records") from None
    first_arr = np.asarray(getattr(first, "detectors", first))
    n_det, n_bins = first_arr.shape
    acc = G2Accumulator(n_bins, bin_width_us, cell_edges, n_det)
    acc.add(first_arr)
    for rec in iterator:
        acc.add(np.asarray(getattr(rec, "detectors", rec)))
    return acc.finalize()


# ---------------------------------------------------------------------------
# pulse shapes and photon deficit

@dataclass
class PulseShape:
    """Per-bin mean input/output rates and transmission of an ensemble."""

    bin_starts_us: np.ndarray
    in_rate: np.ndarray
    out_rate: np.ndarray
    transmission: np.ndarray
    transmission_sem: np.ndarray

    def band_transmission(self, lo_frac: float, hi_frac: float) -> float:
        """Transmission pooled over bins whose centers lie in the given
        fraction of the pulse duration (ratio of summed rates)."""
        duration = self.bin_starts_us[-1] + (self.bin_starts_us[1] - self.bin_starts_us[0])
        centers = self.bin_starts_us + 0.5 * (self.bin_starts_us[1] - self.bin_starts_us[0])
        mask = (centers >= lo_frac * duration) & (centers < hi_frac * duration)
        total_in = self.in_rate[mask].sum()
        if total_in == 0:
            return float("nan")
        return float(self.out_rate[mask].sum() / total_in)


def pulse_shape(ens: EnsembleResult) -> PulseShape:
    """Mean photon rates per bin with the per-bin transmission and its error."""
    if ens.shots < 1:
        raise ValueError("ensemble holds no shots")
    n = ens.shots
    in_rate = ens.in_bin_sums / n
    out_rate = ens.out_bin_sums / n
    with np.errstate(divide="ignore", invalid="ignore"):
        trans = np.where(in_rate > 0, out_rate / in_rate, np.nan)
    tsem = np.full(ens.n_bins, np.nan)
    if n > 1:
        var_in = np.maximum(0.0, (ens.in_bin_sq_sums - n * in_rate**2) / (n - 1))
        var_out = np.maximum(0.0, (ens.out_bin_sq_sums - n * out_rate**2) / (n - 1))
        cov = (ens.inout_bin_sums - n * in_rate * out_rate) / (n - 1)
        ok = in_rate > 0
        var_ratio = (
            var_out[ok] / in_rate[ok] ** 2
            + out_rate[ok] ** 2 * var_in[ok] / in_rate[ok] ** 4
            - 2.0 * out_rate[ok] * cov[ok] / in_rate[ok] ** 3
        )
        tsem[ok] = np.sqrt(np.maximum(0.0, var_ratio) / n)
    starts = np.arange(ens.n_bins) * ens.bin_width_us
    return PulseShape(
        bin_starts_us=starts,
        in_rate=in_rate,
        out_rate=out_rate,
        transmission=trans,
        transmission_sem=tsem,
    )


def photon_deficit(ens: EnsembleResult, t: float) -> tuple[float, float]:
    """Missing photons relative to linear transmission: t*<N_in> - <N_out>.

    The quoted standard error is propagated from the output variance alone,
    which slightly overstates the uncertainty of the correlated difference.
    """
    if ens.shots < 2:
        raise ValueError("need at least two shots for a deficit estimate")
    value = t * ens.mean_in - ens.mean_out
    return float(value), ens.sem_out
