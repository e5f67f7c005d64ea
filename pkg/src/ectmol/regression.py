"""Ridge regression under shuffled k-fold cross-validation.

Folds: indices are permuted once with ``Generator(PCG64(shuffle_seed))`` and
cut into contiguous blocks whose sizes differ by at most one (the first
``N % k`` folds get the extra row). Reported standard deviations are
population (``ddof=0``) values over the folds.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from ectmol.ect import ThresholdGrid, ect_batch, sample_directions
from ectmol.errors import ShapeMismatch, SingularSystem, TooFewRows, ZeroVariance
from ectmol.features import NUM_FEATURES

DEFAULT_FOLDS = 10
DEFAULT_LAMBDA = 1.0


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.weights.size:
            raise ShapeMismatch(f"expected {self.weights.size} columns, got {X.shape}")
        return X @ self.weights + self.intercept


def fit_ridge(X, y, lam: float = DEFAULT_LAMBDA) -> RidgeModel:
    """Solve ``(Xc'Xc + lam*N*I) w = Xc'yc`` on centered data by Cholesky.

    The intercept is left unpenalized: ``ybar - xbar'w``. With more columns
    than rows (and lam > 0) the equivalent N x N dual system is solved.

    Raises:
        ShapeMismatch: X is not 2-d or disagrees with y.
        SingularSystem: lam == 0 and Xc'Xc is (numerically) singular.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ShapeMismatch(f"X {X.shape} and y {y.shape} do not match")
    if X.shape[0] < 1:
        raise ShapeMismatch("need at least one row")
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    n, w = X.shape
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    if lam > 0 and w > n:
        # Wide data: the dual system (Xc Xc' + lam*N*I) a = yc is N x N and
        # gives the same weights, w = Xc' a.
        weights = Xc.T @ _spd_solve(Xc @ Xc.T, yc, lam * n)
    else:
        weights = _spd_solve(Xc.T @ Xc, Xc.T @ yc, lam * n)
    return RidgeModel(weights, y_mean - float(x_mean @ weights), float(lam))


def _spd_solve(A: np.ndarray, b: np.ndarray, ridge: float) -> np.ndarray:
    A[np.diag_indices(A.shape[0])] += ridge
    try:
        factor = scipy.linalg.cho_factor(A, lower=False, check_finite=False)
        diag = np.abs(np.diag(factor[0]))
        ill = diag.min() ** 2 <= A.shape[0] * np.finfo(float).eps * diag.max() ** 2
    except np.linalg.LinAlgError:
        factor, ill = None, True
    if not ill:
        return scipy.linalg.cho_solve(factor, b, check_finite=False)
    if ridge == 0:
        raise SingularSystem("normal equations are singular; use lambda > 0")
    # The penalty is tiny next to the Gram matrix; use a rank-revealing solve.
    return scipy.linalg.lstsq(A, b, check_finite=False)[0]


def rmse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return math.sqrt(float(np.mean((pred - truth) ** 2)))


def r_squared(pred, truth) -> float:
    """``1 - SS_res / SS_tot``, SS_tot taken about ``truth``'s own mean.

    Raises:
        ZeroVariance: ``truth`` is constant.
    """
    pred, truth = _pair(pred, truth)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0:
        raise ZeroVariance("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((pred - truth) ** 2)) / ss_tot


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.size != truth.size or pred.size == 0:
        raise ShapeMismatch(f"lengths {pred.size} and {truth.size}")
    return pred, truth


@dataclass(frozen=True)
class CVConfig:
    folds: int = DEFAULT_FOLDS
    shuffle_seed: int = 0
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Test-index blocks of one seeded shuffle of ``range(n)``."""
    if n < folds:
        raise TooFewRows(f"{n} rows cannot fill {folds} folds")
    order = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    return np.array_split(order, folds)


@dataclass
class CVReport:
    fold_rmse: list[float]
    fold_r2: list[float]
    representation: str = ""
    dataset: str = ""
    n_features: int = 0
    blocks: list[tuple[str, int]] = field(default_factory=list)
    folds: int = DEFAULT_FOLDS
    shuffle_seed: int = 0
    lam: float = DEFAULT_LAMBDA
    target_transform: str = "identity"
    fold_sizes: list[int] = field(default_factory=list)

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.fold_rmse))

    @property
    def std_rmse(self) -> float:
        return float(np.std(self.fold_rmse))

    @property
    def mean_r2(self) -> float:
        return float(np.mean(self.fold_r2))

    @property
    def std_r2(self) -> float:
        return float(np.std(self.fold_r2))

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["blocks"] = [list(b) for b in self.blocks]
        doc.update(mean_rmse=self.mean_rmse, std_rmse=self.std_rmse,
                   mean_r2=self.mean_r2, std_r2=self.std_r2)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        return format_table([self])


def format_table(reports: list[CVReport]) -> str:
    """Aligned text table with ``mean ± std`` cells."""
    head = ["representation", "dataset", "width", "RMSE", "R2"]
    rows = [[r.representation or "-", r.dataset or "-", str(r.n_features),
             f"{r.mean_rmse:.3f} ± {r.std_rmse:.3f}", f"{r.mean_r2:.3f} ± {r.std_r2:.3f}"]
            for r in reports]
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip()
             for line in [head, *rows]]
    return "\n".join(lines) + "\n"


def _run_fold(X, y, test, lam):
    train = np.ones(y.size, dtype=bool)
    train[test] = False
    model = fit_ridge(X[train], y[train], lam)
    pred = model.predict(X[test])
    return rmse(pred, y[test]), r_squared(pred, y[test])


def cross_validate(X, y, cfg: CVConfig = CVConfig(), jobs: int = 1,
                   representation: str = "", dataset: str = "") -> CVReport:
    """Shuffled k-fold CV of ridge regression; metrics on held-out folds only.

    Raises:
        TooFewRows: fewer rows than folds.
        ShapeMismatch, SingularSystem, ZeroVariance: from the per-fold fits.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeMismatch(f"X {X.shape} and y {y.shape} do not match")
    tests = fold_indices(y.size, cfg.folds, cfg.shuffle_seed)
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: _run_fold(X, y, t, cfg.lam), tests))
    else:
        results = [_run_fold(X, y, t, cfg.lam) for t in tests]
    return CVReport(
        fold_rmse=[r for r, _ in results],
        fold_r2=[r2 for _, r2 in results],
        representation=representation,
        dataset=dataset,
        n_features=X.shape[1],
        blocks=[(representation or "features", X.shape[1])],
        folds=cfg.folds,
        shuffle_seed=cfg.shuffle_seed,
        lam=cfg.lam,
        fold_sizes=[int(t.size) for t in tests],
    )


@dataclass(frozen=True)
class SweepRow:
    directions: int
    thresholds: int
    n_features: int
    mean_rmse: float
    std_rmse: float
    mean_r2: float
    std_r2: float
    seconds: float = field(compare=False, default=0.0)


def sensitivity_sweep(molecules, y, direction_counts, threshold_counts,
                      cfg: CVConfig = CVConfig(), seed: int = 0, jobs: int = 1) -> list[SweepRow]:
    """Cross-validate ECT features for every (D, T) pair, D-major order.

    Args:
        molecules: normalized ``(features, edges)`` pairs, as for ``ect_batch``.
        y: targets (already transformed).
        direction_counts, threshold_counts: values of D and T to try.
        seed: direction seed, reused for every pair.

    Errors raised for a pair carry ``exc.sweep_point = (D, T)``.
    """
    if not direction_counts or not threshold_counts:
        raise ValueError("sweep needs at least one D and one T")
    rows = []
    for d in direction_counts:
        for t in threshold_counts:
            start = time.perf_counter()
            try:
                dirs = sample_directions(NUM_FEATURES, d, seed)
                X = ect_batch(molecules, dirs, ThresholdGrid.default(t), jobs=jobs)
                rep = cross_validate(X, y, cfg, jobs=jobs)
            except Exception as exc:
                exc.sweep_point = (d, t)
                exc.args = (f"D={d}, T={t}: {exc}",) + exc.args[1:]
                raise
            rows.append(SweepRow(d, t, X.shape[1], rep.mean_rmse, rep.std_rmse,
                                 rep.mean_r2, rep.std_r2, time.perf_counter() - start))
    return rows
