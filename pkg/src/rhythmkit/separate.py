"""Decomposition of a mixture spectrogram into independent rank-1 streams.

The pipeline is linear algebra end to end.  A magnitude spectrogram of a
percussive recording is close to low-rank: each instrument contributes
roughly one spectral shape scaled over time by one activation envelope.
Truncated SVD finds a basis for that low-rank structure, but its factors
are merely uncorrelated, and uncorrelated is too weak: SVD happily mixes
two drums into sum and difference components.  The missing constraint is
statistical independence, and because the retained basis is orthonormal,
enforcing independence reduces to choosing a rotation inside the retained
subspace.

The rotation is found the transparent way: scan candidate angles on a
fixed grid, score each by a fourth-order-cumulant contrast (sum of
squared excess kurtoses of the rotated rows, negated so independence is
a minimum), and collect the local minima.  Sampling noise can produce
several competing minima, so the winner among them is the candidate
whose rotated rows carry the least mutual information, measured as the
KL divergence between the joint amplitude histogram and the product of
its marginals.  For more than two components the same two-dimensional
scan runs as pairwise sweeps until no pair wants to move.

Each resulting component is an outer product: one spectral shape, one
temporal envelope.  Multiplying that rank-1 magnitude with the phase of
the original mixture and inverting the transform yields the audio of one
stream.  The rank-1 matrices are kept signed so that their sum equals
the rank-k truncation of the input exactly; negative entries are clipped
only at resynthesis time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import (
    BinningMismatchError,
    DegenerateContrastWarning,
    DimensionMismatchError,
    EmptyInputError,
    InsufficientDataWarning,
    RankDeficientWarning,
    TooShortError,
)
from .spectral import Spectrogram, StftConfig, istft, magnitude, phase, stft

_KL_FLOOR = 1e-12
_DEFAULT_BINS = 64
_DEFAULT_ANGLE_GRID = 90  # one-degree steps across a quarter turn
_MIN_FRAMES = 8


# ---------------------------------------------------------------------------
# mixing models

@dataclass
class MixingModel:
    """A square mixing matrix paired with its exact inverse."""

    mixing: np.ndarray
    unmixing: np.ndarray

    @classmethod
    def from_mixing(cls, mixing) -> "MixingModel":
        m = np.asarray(mixing, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("mixing matrix must be square, got %r" % (m.shape,))
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError("mixing matrix is singular or near-singular")
        return cls(mixing=m, unmixing=np.linalg.inv(m))


def mix(sources: np.ndarray, model: MixingModel) -> np.ndarray:
    """Apply the mixing matrix to source rows: one observed row per output."""
    x = np.asarray(sources, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != model.mixing.shape[1]:
        raise DimensionMismatchError(
            "sources shape %r does not match %d-source model" % (x.shape, model.mixing.shape[1])
        )
    return model.mixing @ x


def unmix(mixed: np.ndarray, model: MixingModel) -> np.ndarray:
    """Invert mix() exactly, up to the conditioning of the model."""
    y = np.asarray(mixed, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != model.unmixing.shape[1]:
        raise DimensionMismatchError(
            "mixed shape %r does not match %d-source model" % (y.shape, model.unmixing.shape[1])
        )
    return model.unmixing @ y


# ---------------------------------------------------------------------------
# second-order stage: covariance and whitening

def covariance(data: np.ndarray) -> np.ndarray:
    """Unnormalized covariance of the rows, X_centered @ X_centered.T."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] < 2:
        raise EmptyInputError("need a 2-D array with at least 2 observations per row")
    centered = x - x.mean(axis=1, keepdims=True)
    return centered @ centered.T


@dataclass
class WhiteningResult:
    """Basis, scales, and means that decorrelate a data matrix."""

    rotation: np.ndarray       # full V-transpose of the covariance SVD
    scale: np.ndarray          # singular values, non-increasing
    reduced_basis: np.ndarray  # retained basis vectors as columns
    retained: int
    row_means: np.ndarray

    def transform(self, data: np.ndarray) -> np.ndarray:
        """Project data onto the retained basis with unit-covariance scaling."""
        x = np.asarray(data, dtype=np.float64)
        centered = x - self.row_means[:, np.newaxis]
        k = self.retained
        return (self.rotation[:k] @ centered) / np.sqrt(self.scale[:k])[:, np.newaxis]


def whiten(data: np.ndarray, retained: int) -> WhiteningResult:
    """Diagonalize the row covariance and keep the strongest directions.

    The retained count is clamped to the numerical rank of the data; asking
    for more produces a RankDeficientWarning rather than blowing up on a
    zero singular value.
    """
    if retained < 1:
        raise EmptyInputError("retained must be at least 1")
    cov = covariance(data)
    u, scale, vt = np.linalg.svd(cov)
    if scale[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.sum(scale > scale[0] * 1e-12))
    if rank == 0:
        raise EmptyInputError("data has no variance to whiten")
    kept = min(retained, rank)
    if kept < retained:
        warnings.warn(
            "requested %d components but numerical rank is %d" % (retained, rank),
            RankDeficientWarning,
            stacklevel=2,
        )
    x = np.asarray(data, dtype=np.float64)
    return WhiteningResult(
        rotation=vt,
        scale=scale,
        reduced_basis=u[:, :kept],
        retained=kept,
        row_means=x.mean(axis=1),
    )


# ---------------------------------------------------------------------------
# density estimates and divergences

@dataclass
class PdfHistogram:
    """A binned amplitude density: edges, raw counts, and total mass."""

    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.counts.sum())

    @property
    def normalized(self) -> np.ndarray:
        total = self.counts.sum()
        if total <= 0:
            return np.zeros_like(self.counts, dtype=np.float64)
        return self.counts / total


def amplitude_histogram(values, bins: int = _DEFAULT_BINS) -> PdfHistogram:
    """Histogram over [min, max] of the data; the PDF estimate used throughout."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyInputError("cannot histogram an empty array")
    counts, edges = np.histogram(v, bins=bins, range=(v.min(), v.max()))
    return PdfHistogram(bin_edges=edges, counts=counts.astype(np.float64))


def kl_divergence(p, q) -> float:
    """KL divergence sum(p * ln(p/q)) between two same-binning histograms.

    Inputs may be PdfHistograms or plain count/probability arrays.  Both
    sides are floored by 1e-12 and renormalized, so identical inputs give
    exactly zero and empty bins never produce log(0).
    """
    p_arr, p_edges = _histogram_array(p)
    q_arr, q_edges = _histogram_array(q)
    if p_arr.shape != q_arr.shape:
        raise BinningMismatchError(
            "histogram shapes differ: %r vs %r" % (p_arr.shape, q_arr.shape)
        )
    if p_edges is not None and q_edges is not None and not np.allclose(p_edges, q_edges):
        raise BinningMismatchError("histogram bin edges differ")
    pf = p_arr + _KL_FLOOR
    pf = pf / pf.sum()
    qf = q_arr + _KL_FLOOR
    qf = qf / qf.sum()
    return float(np.sum(pf * np.log(pf / qf)))


def _histogram_array(h):
    if isinstance(h, PdfHistogram):
        return np.asarray(h.counts, dtype=np.float64).ravel(), h.bin_edges
    return np.asarray(h, dtype=np.float64).ravel(), None


def mutual_information(rows: np.ndarray, bins: int = _DEFAULT_BINS) -> float:
    """Histogram mutual information of the rows, in nats.

    For two rows this is KL(joint || product of marginals) over a bins x bins
    amplitude histogram; more rows are scored as the sum over row pairs.
    Zero means independent; the estimate is biased upward by sparse bins,
    which is why fewer than 100 samples triggers a warning.
    """
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DimensionMismatchError("need at least two rows, got shape %r" % (x.shape,))
    if x.shape[1] < 100:
        warnings.warn(
            "only %d samples per row; histogram MI will be noisy" % x.shape[1],
            InsufficientDataWarning,
            stacklevel=2,
        )
    total = 0.0
    for i in range(x.shape[0] - 1):
        for j in range(i + 1, x.shape[0]):
            total += _pair_mutual_information(x[i], x[j], bins)
    return total


def _pair_mutual_information(a: np.ndarray, b: np.ndarray, bins: int) -> float:
    joint, _, _ = np.histogram2d(
        a, b, bins=bins, range=[[a.min(), a.max()], [b.min(), b.max()]]
    )
    marginal_a = joint.sum(axis=1)
    marginal_b = joint.sum(axis=0)
    return kl_divergence(joint.ravel(), np.outer(marginal_a, marginal_b).ravel())


# ---------------------------------------------------------------------------
# fourth-order stage: the independence rotation

def _excess_kurtosis(y: np.ndarray) -> float:
    z = y - y.mean()
    power = float(z @ z)
    if power <= 0.0:
        return 0.0
    z2 = z * z
    return len(y) * float(z2 @ z2) / (power * power) - 3.0


def _rotation2(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def _pair_rotation_angle(pair: np.ndarray, angle_grid: int, bins: int) -> float:
    """Grid-scan one row pair; returns the chosen angle in [0, pi/2).

    The contrast has period pi/2, so the grid covers a quarter turn.  Local
    minima are collected first; if several survive, the one whose rotated
    rows show the least mutual information wins.
    """
    m = pair.shape[1]
    thetas = np.arange(angle_grid) * (np.pi / 2.0) / angle_grid
    contrast = np.empty(angle_grid)
    for idx, theta in enumerate(thetas):
        rotated = _rotation2(theta) @ pair
        contrast[idx] = -(
            _excess_kurtosis(rotated[0]) ** 2 + _excess_kurtosis(rotated[1]) ** 2
        )

    # a pair that is (anti)identical cannot be separated by any rotation,
    # and a pair of Gaussians gives a contrast that is flat up to the
    # sampling noise of the fourth cumulant (variance 24/m per estimate)
    denom = np.sqrt(float(pair[0] @ pair[0]) * float(pair[1] @ pair[1]))
    if denom > 0.0:
        corr = abs(float(pair[0] @ pair[1])) / denom
        if corr > 1.0 - 1e-9:
            warnings.warn(
                "rows are collinear; no rotation separates them",
                DegenerateContrastWarning,
                stacklevel=3,
            )
            return 0.0
    flat_tolerance = 12.0 * 24.0 / m
    if float(contrast.max() - contrast.min()) < flat_tolerance:
        warnings.warn(
            "independence contrast is flat within sampling noise",
            DegenerateContrastWarning,
            stacklevel=3,
        )
        return 0.0

    minima = [
        idx
        for idx in range(angle_grid)
        if contrast[idx] < contrast[idx - 1]
        and contrast[idx] <= contrast[(idx + 1) % angle_grid]
    ]
    if not minima:
        warnings.warn(
            "no local minimum in the independence contrast",
            DegenerateContrastWarning,
            stacklevel=3,
        )
        return 0.0
    if len(minima) == 1:
        return float(thetas[minima[0]])

    def information_at(idx: int) -> float:
        rotated = _rotation2(thetas[idx]) @ pair
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InsufficientDataWarning)
            return mutual_information(rotated, bins=bins)

    best = min(minima, key=information_at)
    return float(thetas[best])


def ica_rotation(
    whitened: np.ndarray,
    angle_grid: int = _DEFAULT_ANGLE_GRID,
    bins: int = _DEFAULT_BINS,
) -> MixingModel:
    """Find the rotation that makes whitened rows maximally independent.

    Returns a MixingModel whose unmixing matrix, applied to the whitened
    rows, yields the independent components.  Rotations carry no scale, so
    mixing is simply the transpose.
    """
    x = np.asarray(whitened, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DimensionMismatchError("need at least two whitened rows")
    if x.shape[1] <= x.shape[0]:
        raise EmptyInputError("need more observations than rows")
    if angle_grid < 4:
        raise EmptyInputError("angle grid too coarse to contain a minimum")

    k = x.shape[0]
    if k == 2:
        theta = _pair_rotation_angle(x, angle_grid, bins)
        q = _rotation2(theta)
        return MixingModel(mixing=q.T, unmixing=q)

    # pairwise sweeps: rotate each row pair to independence, repeat until no
    # pair moves; each 2x2 rotation is embedded into the full k x k frame
    q = np.eye(k)
    y = x.copy()
    step = (np.pi / 2.0) / angle_grid
    for _ in range(6):
        moved = False
        for i in range(k - 1):
            for j in range(i + 1, k):
                theta = _pair_rotation_angle(y[[i, j]], angle_grid, bins)
                if theta < 0.5 * step or theta > np.pi / 2.0 - 0.5 * step:
                    continue
                g = _rotation2(theta)
                y[[i, j]] = g @ y[[i, j]]
                q[[i, j]] = g @ q[[i, j]]
                moved = True
        if not moved:
            break
    return MixingModel(mixing=q.T, unmixing=q)


# ---------------------------------------------------------------------------
# the full decomposition

@dataclass
class SeparatedStream:
    """One independent component rendered back to audio.

    subspace_spectrogram is the signed rank-1 outer product of
    spectral_basis and temporal_weights; summed over all streams it
    reproduces the rank-k truncation of the mixture magnitude exactly.
    """

    audio: AudioBuffer
    subspace_spectrogram: np.ndarray
    temporal_weights: np.ndarray
    spectral_basis: np.ndarray
    component_index: int


def isa_separate(
    mixture: AudioBuffer,
    components: int,
    config: StftConfig = StftConfig(),
    rotate_basis: str = "temporal",
) -> list[SeparatedStream]:
    """Split a mono mixture into `components` independent streams.

    rotate_basis selects which factor the independence rotation is fit on:
    "temporal" (default) rotates the activation envelopes, "spectral"
    rotates the spectral shapes.  Either way the product of the factors is
    the same rank-k surface; only the attribution between basis and
    weights changes.

    Streams come back sorted by descending energy, with component_index
    recording the position in that order.
    """
    if components < 1:
        raise EmptyInputError("components must be at least 1")
    if rotate_basis not in ("temporal", "spectral"):
        raise EmptyInputError("rotate_basis must be 'temporal' or 'spectral'")

    spec = stft(mixture, config)
    if spec.frame_count < _MIN_FRAMES:
        raise TooShortError(
            "mixture yields %d frames; need at least %d" % (spec.frame_count, _MIN_FRAMES)
        )
    mag = magnitude(spec)
    ph = phase(spec)

    if mag.max() <= 0.0:
        # silence: there is nothing to attribute, return silent streams
        return [
            _zero_stream(spec, c, mag.shape) for c in range(components)
        ]

    u, s, vt = np.linalg.svd(mag, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-10))
    kept = min(components, rank)
    if kept < components:
        warnings.warn(
            "requested %d components but spectrogram rank is %d" % (components, rank),
            RankDeficientWarning,
            stacklevel=2,
        )

    # the rotation stays attached to the factor it was fit on; the singular
    # values scale the other factor, so the rotated rows keep exactly the
    # independence the contrast bought them
    if rotate_basis == "temporal":
        rotation = ica_rotation(vt[:kept]).unmixing if kept > 1 else np.eye(1)
        weights = rotation @ vt[:kept]
        basis = (u[:, :kept] * s[:kept][np.newaxis, :]) @ rotation.T
    else:
        rotation = ica_rotation(u[:, :kept].T).unmixing if kept > 1 else np.eye(1)
        weights = rotation @ (vt[:kept] * s[:kept, np.newaxis])
        basis = u[:, :kept] @ rotation.T
    # keep basis columns unit-norm so scale lives in the weights; flip signs
    # so each spectral shape is predominantly positive
    for c in range(kept):
        norm = np.linalg.norm(basis[:, c])
        if norm > 0:
            basis[:, c] /= norm
            weights[c] *= norm
        if basis[:, c].sum() < 0:
            basis[:, c] = -basis[:, c]
            weights[c] = -weights[c]

    streams = []
    order = np.argsort(
        [-float(np.sum(np.square(np.outer(basis[:, c], weights[c])))) for c in range(kept)]
    )
    for position, c in enumerate(order):
        surface = np.outer(basis[:, c], weights[c])
        rendered = istft(
            Spectrogram(
                bins=np.clip(surface, 0.0, None) * np.exp(1j * ph),
                config=config,
                sample_rate=spec.sample_rate,
                original_length=spec.original_length,
            )
        )
        streams.append(
            SeparatedStream(
                audio=rendered,
                subspace_spectrogram=surface,
                temporal_weights=weights[c].copy(),
                spectral_basis=basis[:, c].copy(),
                component_index=position,
            )
        )
    return streams


def _zero_stream(spec: Spectrogram, index: int, shape) -> SeparatedStream:
    return SeparatedStream(
        audio=AudioBuffer(
            samples=np.zeros(spec.original_length), sample_rate=spec.sample_rate
        ),
        subspace_spectrogram=np.zeros(shape),
        temporal_weights=np.zeros(shape[1]),
        spectral_basis=np.zeros(shape[0]),
        component_index=index,
    )


def dump_subspace_csv(stream: SeparatedStream, path) -> None:
    """Write one stream's rank-1 magnitude surface as a CSV matrix."""
    np.savetxt(path, stream.subspace_spectrogram, fmt="%.9g", delimiter=",")
