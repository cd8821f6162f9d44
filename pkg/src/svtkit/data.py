"""Benchmark data: synthetic low-rank instances, metrics, file loaders.

Covers the three experiment families the CLI drives: random low-rank
recovery (generation plus relative error / frequency of success),
image inpainting (binary PPM/PGM I/O, uniform pixel masks, PSNR) and
collaborative filtering (tab-separated ratings files, NMAE).

Everything randomized is a pure function of its seed; benchmark drivers
derive one child seed per trial so results do not depend on scheduling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .solvers import CompletionProblem


@dataclass(frozen=True)
class SyntheticSpec:
    """Low-rank completion instance: truth M1 @ M2 plus optional noise.

    ``observe_fraction`` of the m*n entries are revealed (uniformly,
    without replacement); ``noise_sigma`` scales i.i.d. standard normal
    noise added to the revealed values.
    """

    m: int
    n: int
    rank: int
    observe_fraction: float
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m <= 0 or self.n <= 0:
            raise ValueError("matrix dimensions must be positive")
        if not 1 <= self.rank <= min(self.m, self.n):
            raise ValueError(f"rank must lie in [1, {min(self.m, self.n)}]")
        if not 0.0 < self.observe_fraction <= 1.0:
            raise ValueError("observe_fraction must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


def gen_lowrank(spec: SyntheticSpec):
    """Generate (truth, problem) for a synthetic completion instance.

    The truth is the product of i.i.d. standard normal factors of the
    requested rank; draws happen in a fixed order (factors, index set,
    noise) so a seed fully determines the instance.
    """
    rng = np.random.default_rng(spec.seed)
    m1 = rng.standard_normal((spec.m, spec.rank))
    m2 = rng.standard_normal((spec.rank, spec.n))
    truth = m1 @ m2
    total = spec.m * spec.n
    count = int(round(spec.observe_fraction * total))
    count = max(1, min(count, total))
    lin = np.sort(rng.choice(total, size=count, replace=False))
    omega = np.column_stack(np.divmod(lin, spec.n))
    observed = truth[omega[:, 0], omega[:, 1]]
    if spec.noise_sigma > 0:
        observed = observed + spec.noise_sigma * rng.standard_normal(count)
    problem = CompletionProblem(shape=(spec.m, spec.n), omega=omega, observed=observed)
    return truth, problem


def rel_err(x, truth) -> float:
    """||x - truth||_F / ||truth||_F."""
    x = np.asarray(x, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if x.shape != truth.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {truth.shape}")
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise ValueError("truth matrix must be nonzero")
    return float(np.linalg.norm(x - truth) / denom)


def psnr(original, recovered) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit image data.

    10*log10(255^2 / MSE); returns math.inf when the images agree
    exactly.
    """
    original = np.asarray(original, dtype=float)
    recovered = np.asarray(recovered, dtype=float)
    if original.shape != recovered.shape:
        raise ValueError(f"shape mismatch: {original.shape} vs {recovered.shape}")
    mse = float(np.mean((original - recovered) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def nmae(x, truth_values, eval_omega) -> float:
    """Mean absolute deviation of x from the held-out values.

    ``eval_omega`` is a (k, 2) index array and ``truth_values`` the
    matching reference values; the result is the plain L1 deviation
    divided by k (no rating-range normalization).
    """
    x = np.asarray(x, dtype=float)
    eval_omega = np.asarray(eval_omega, dtype=np.intp)
    truth_values = np.asarray(truth_values, dtype=float)
    if eval_omega.ndim != 2 or eval_omega.shape[1] != 2 or eval_omega.shape[0] == 0:
        raise ValueError("eval_omega must be a nonempty (k, 2) index array")
    if truth_values.shape != (eval_omega.shape[0],):
        raise ValueError("need one truth value per evaluation index")
    pred = x[eval_omega[:, 0], eval_omega[:, 1]]
    return float(np.mean(np.abs(pred - truth_values)))


def load_movielens(path, holdout_fraction=0.2, seed=0):
    """Load a tab-separated ratings file and split off a holdout set.

    Lines have the form ``user<TAB>item<TAB>rating<TAB>timestamp`` with
    1-indexed ids (the timestamp is ignored).  Ids are mapped to dense
    0-based indices in sorted order.  Repeated (user, item) pairs keep
    the last rating and emit one warning with the duplicate count.

    Returns (train, (test_omega, test_values)); the holdout is drawn
    uniformly without replacement from all ratings using ``seed``.
    """
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must lie in [0, 1)")
    users, items, ratings = [], [], []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected user<TAB>item<TAB>rating, got {line!r}"
                )
            try:
                users.append(int(parts[0]))
                items.append(int(parts[1]))
                ratings.append(float(parts[2]))
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: non-numeric field in {line!r}"
                ) from None
    if not users:
        raise DataFormatError(f"{path}: no ratings found")
    users = np.asarray(users)
    items = np.asarray(items)
    ratings = np.asarray(ratings, dtype=float)

    uniq_users, row = np.unique(users, return_inverse=True)
    uniq_items, col = np.unique(items, return_inverse=True)
    shape = (uniq_users.size, uniq_items.size)

    lin = row.astype(np.int64) * shape[1] + col
    order = np.argsort(lin, kind="stable")
    lin_sorted = lin[order]
    keep_sorted = np.ones(lin.size, dtype=bool)
    keep_sorted[:-1] = lin_sorted[:-1] != lin_sorted[1:]  # keep the last duplicate
    dupes = int(lin.size - keep_sorted.sum())
    if dupes:
        warnings.warn(f"{path}: dropped {dupes} duplicated (user, item) ratings")
    keep = order[keep_sorted]
    row, col, ratings = row[keep], col[keep], ratings[keep]

    k = row.size
    n_test = int(round(holdout_fraction * k))
    rng = np.random.default_rng(seed)
    test_idx = np.sort(rng.choice(k, size=n_test, replace=False)) if n_test else np.empty(0, dtype=np.intp)
    mask = np.zeros(k, dtype=bool)
    mask[test_idx] = True

    train = CompletionProblem(
        shape=shape,
        omega=np.column_stack([row[~mask], col[~mask]]),
        observed=ratings[~mask],
    )
    test_omega = np.column_stack([row[mask], col[mask]])
    return train, (test_omega, ratings[mask])


def _read_pnm_header(fh, path):
    """Read magic, width, height, maxval, skipping whitespace/comments."""
    magic = fh.read(2)
    if magic not in (b"P5", b"P6"):
        raise DataFormatError(f"{path}: unsupported format magic {magic!r} (need P5 or P6)")
    fields = []
    while len(fields) < 3:
        ch = fh.read(1)
        if not ch:
            raise DataFormatError(f"{path}: truncated header")
        if ch.isspace():
            continue
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        token = ch
        while True:
            ch = fh.read(1)
            if not ch or ch.isspace():
                break
            token += ch
        try:
            fields.append(int(token))
        except ValueError:
            raise DataFormatError(f"{path}: bad header token {token!r}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise DataFormatError(f"{path}: only 8-bit images supported (maxval {maxval})")
    return magic, width, height


def load_image(path) -> np.ndarray:
    """Load a binary PGM (P5) or PPM (P6) image.

    Returns a float array of shape (channels, height, width) with
    values in [0, 255]; one channel for PGM, three for PPM.
    """
    with open(path, "rb") as fh:
        magic, width, height = _read_pnm_header(fh, path)
        channels = 1 if magic == b"P5" else 3
        payload = fh.read(width * height * channels + 1)
    expected = width * height * channels
    if len(payload) < expected:
        raise DataFormatError(f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    data = np.frombuffer(payload[:expected], dtype=np.uint8)
    return data.reshape(height, width, channels).transpose(2, 0, 1).astype(float)


def save_image(path, channels) -> None:
    """Write per-channel data back to binary PGM/PPM.

    Values are clamped to [0, 255] and rounded; one channel selects P5,
    three select P6.
    """
    arr = np.asarray(channels, dtype=float)
    if arr.ndim != 3 or arr.shape[0] not in (1, 3):
        raise ValueError("expected an array of shape (1|3, height, width)")
    quantized = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    c, h, w = quantized.shape
    magic = b"P5" if c == 1 else b"P6"
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(quantized.transpose(1, 2, 0).tobytes())


def mask_uniform(shape, missing_fraction, seed) -> np.ndarray:
    """Index set of observed pixels after uniform missingness.

    Drops round(missing_fraction * m * n) positions chosen uniformly;
    the same positions apply to every channel.  Returns the kept
    positions as a sorted (k, 2) array.
    """
    m, n = shape
    if not 0.0 <= missing_fraction < 1.0:
        raise ValueError("missing_fraction must lie in [0, 1)")
    total = m * n
    n_missing = int(round(missing_fraction * total))
    rng = np.random.default_rng(seed)
    missing = rng.choice(total, size=n_missing, replace=False)
    keep = np.ones(total, dtype=bool)
    keep[missing] = False
    lin = np.nonzero(keep)[0]
    return np.column_stack(np.divmod(lin, n))


def load_matrix_csv(path) -> np.ndarray:
    """Dense matrix from comma-separated rows (no header)."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: non-numeric entry") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=float)


def save_matrix_csv(path, matrix) -> None:
    """Write a dense matrix as comma-separated rows (no header)."""
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def load_observations_csv(path, shape) -> CompletionProblem:
    """Observed entries from ``row,col,value`` triples (0-based indices)."""
    triples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected row,col,value, got {line!r}"
                )
            try:
                triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: bad field in {line!r}") from None
    if not triples:
        raise DataFormatError(f"{path}: no observations found")
    omega = np.array([(r, c) for r, c, _ in triples], dtype=np.intp)
    values = np.array([v for _, _, v in triples], dtype=float)
    try:
        return CompletionProblem(shape=tuple(shape), omega=omega, observed=values)
    except ValueError as err:
        raise DataFormatError(f"{path}: {err}") from None


def save_observations_csv(path, problem: CompletionProblem) -> None:
    """Write observed entries as ``row,col,value`` triples."""
    with open(path, "w") as fh:
        for (r, c), v in zip(problem.omega, problem.observed):
            fh.write(f"{r},{c},{v:.17g}\n")


@dataclass(frozen=True)
class TrialRecord:
    """One (solver, rank, seed) benchmark run."""

    seed: int
    rel_err: float
    success: bool
    iterations: int
    wall_time: float


@dataclass(frozen=True)
class ExperimentResult:
    """Per-seed records plus their aggregate statistics."""

    records: tuple[TrialRecord, ...]
    fos: float
    mean_rel_err: float


SUCCESS_THRESHOLD = 1e-3


def aggregate(records, threshold=SUCCESS_THRESHOLD) -> ExperimentResult:
    """Fold trial records into frequency-of-success and mean error."""
    records = tuple(records)
    if not records:
        raise ValueError("no records to aggregate")
    for r in records:
        if r.success != (r.rel_err < threshold):
            raise ValueError("record success flag disagrees with threshold")
    fos = sum(r.success for r in records) / len(records)
    mean = float(np.mean([r.rel_err for r in records]))
    return ExperimentResult(records=records, fos=fos, mean_rel_err=mean)


def make_record(seed, err, iterations, wall_time, threshold=SUCCESS_THRESHOLD) -> TrialRecord:
    """Build a TrialRecord, deriving the success flag from the threshold."""
    return TrialRecord(
        seed=seed,
        rel_err=err,
        success=bool(err < threshold),
        iterations=iterations,
        wall_time=wall_time,
    )
