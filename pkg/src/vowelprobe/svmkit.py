"""Kernel SVM training via SMO, stratified CV, grid search, and metrics.

The solver is a working-set SMO on the standard dual: at each step it picks
the maximal KKT-violating pair (ties broken toward the lowest index), solves
the two-variable subproblem in closed form, and stops when the violation gap
drops below tol. Front maps to +1, back to -1; a decision value of exactly
zero predicts front.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .corpus import VowelClass
from .dsp import MinMaxScaler
from .errors import ConfigError, ConvergenceError

KERNELS = ("linear", "poly", "rbf")
GAMMA_MODES = ("scale", "auto")
DECISION_MODES = ("ovr", "ovo")

POSITIVE_CLASS = VowelClass.FRONT  # +1
NEGATIVE_CLASS = VowelClass.BACK  # -1

_BOUND_EPS = 1e-9
_ETA_FLOOR = 1e-12


def labels_to_pm1(labels) -> np.ndarray:
    return np.array([1.0 if c is VowelClass.FRONT or c == 1 else -1.0 for c in labels])


@dataclass(frozen=True)
class KernelConfig:
    kind: str = "rbf"
    gamma_mode: str = "scale"
    degree: int = 3
    coef0: float = 0.0
    gamma: float | None = None  # resolved value, set at fit time

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kind!r}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}")
        if self.degree < 1:
            raise ConfigError(f"degree must be >= 1, got {self.degree}")


def resolve_gamma(mode: str, X: np.ndarray) -> float:
    """'scale' -> 1/(d * pooled variance of all entries); 'auto' -> 1/d."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ConfigError("gamma resolution needs a nonempty 2-D matrix")
    d = X.shape[1]
    if mode == "auto":
        return 1.0 / d
    if mode == "scale":
        var = float(X.var())
        if var <= 0.0:
            raise ConfigError("gamma_mode 'scale' undefined for constant features (zero variance)")
        return 1.0 / (d * var)
    raise ConfigError(f"unknown gamma mode {mode!r}")


def gram(a: np.ndarray, b: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix K[i, j] = k(a_i, b_j)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise ConfigError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    dots = a @ b.T
    if cfg.kind == "linear":
        return dots
    if cfg.gamma is None:
        raise ConfigError("kernel gamma not resolved")
    if cfg.kind == "poly":
        return (cfg.gamma * dots + cfg.coef0) ** cfg.degree
    sq_a = np.einsum("ij,ij->i", a, a)
    sq_b = np.einsum("ij,ij->i", b, b)
    d2 = np.maximum(sq_a[:, None] + sq_b[None, :] - 2.0 * dots, 0.0)
    return np.exp(-cfg.gamma * d2)


def kernel_eval(cfg: KernelConfig, x: np.ndarray, z: np.ndarray) -> float:
    return float(gram(np.atleast_2d(x), np.atleast_2d(z), cfg)[0, 0])


def dual_objective(K: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """sum(alpha) - 0.5 (alpha*y)' K (alpha*y)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def smo_solve(
    K: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> tuple[np.ndarray, float, int]:
    """Solve the dual on a precomputed Gram matrix; returns (alpha, bias, iterations).

    Selection: i = argmax_{I_up} -y g, j = argmin_{I_low} -y g (first index on
    ties); termination when the gap m - M <= tol. Bias from the mean over free
    support vectors, else the KKT midpoint (m + M) / 2.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if c <= 0.0:
        raise ConfigError(f"C must be positive, got {c}")
    if np.all(y > 0) or np.all(y < 0):
        raise ConfigError("training set must contain both classes")
    if max_iter is None:
        max_iter = max(10 * n, 10_000)

    alpha = np.zeros(n)
    g = -np.ones(n)  # gradient of 0.5 a'Qa - e'a at a = 0
    pos = y > 0
    diag = np.diagonal(K)
    it = 0
    while True:
        v = -(y * g)
        up = (pos & (alpha < c - _BOUND_EPS)) | (~pos & (alpha > _BOUND_EPS))
        low = (~pos & (alpha < c - _BOUND_EPS)) | (pos & (alpha > _BOUND_EPS))
        if not up.any() or not low.any():
            m = M = 0.0
            break
        vi = np.where(up, v, -np.inf)
        vj = np.where(low, v, np.inf)
        i = int(np.argmax(vi))
        j = int(np.argmin(vj))
        m, M = vi[i], vj[j]
        if m - M <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO hit the iteration ceiling ({max_iter}) with gap {m - M:.3e} > tol {tol:.0e}"
            )
        it += 1

        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], _ETA_FLOOR)
        e_i = y[i] * g[i]
        e_j = y[j] * g[j]
        s = y[i] * y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if s < 0:
            lo, hi = max(0.0, aj_old - ai_old), min(c, c + aj_old - ai_old)
        else:
            lo, hi = max(0.0, ai_old + aj_old - c), min(c, ai_old + aj_old)
        aj = min(max(aj_old + y[j] * (e_i - e_j) / eta, lo), hi)
        ai = ai_old + s * (aj_old - aj)
        d_i, d_j = ai - ai_old, aj - aj_old
        if d_i == 0.0 and d_j == 0.0:
            raise ConvergenceError("SMO stalled: maximal violating pair admits no step")
        alpha[i], alpha[j] = ai, aj
        g += y * (d_i * y[i] * K[i] + d_j * y[j] * K[j])

    free = (alpha > _BOUND_EPS) & (alpha < c - _BOUND_EPS)
    if free.any():
        f0 = K[free] @ (alpha * y)
        bias = float(np.mean(y[free] - f0))
    else:
        bias = float((m + M) / 2.0)
    return alpha, bias, it


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray  # alpha_i * y_i for rows with alpha_i > 0
    bias: float
    kernel: KernelConfig
    c: float
    classes: tuple[str, str] = ("front", "back")

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ConfigError(
                f"dimension mismatch: model has {self.support_vectors.shape[1]}, got {X.shape[1]}"
            )
        return gram(X, self.support_vectors, self.kernel) @ self.dual_coefs + self.bias


def smo_train(
    X: np.ndarray,
    y: np.ndarray,
    c: float,
    kernel: KernelConfig,
    tol: float = 1e-3,
    max_passes: int = 10,
) -> SvmModel:
    """Fit one binary machine; max_passes scales the hard iteration ceiling (n * max_passes)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kernel.gamma is None and kernel.kind != "linear":
        kernel = replace(kernel, gamma=resolve_gamma(kernel.gamma_mode, X))
    K = gram(X, X, kernel)
    ceiling = max(max_passes * X.shape[0], 10_000)
    alpha, bias, _ = smo_solve(K, y, c, tol=tol, max_iter=ceiling)
    keep = alpha > _BOUND_EPS
    return SvmModel(
        support_vectors=X[keep].copy(),
        dual_coefs=(alpha * y)[keep].copy(),
        bias=bias,
        kernel=kernel,
        c=c,
    )


@dataclass
class VowelClassifier:
    """OVR/OVO wrapper over binary machines; both degenerate to one boundary here.

    OVR trains front-vs-rest and back-vs-rest and takes the argmax of their
    decision values; OVO trains the single pairwise machine.
    """

    decision_mode: str
    machines: list[SvmModel]

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        if self.decision_mode == "ovo":
            return self.machines[0].decision_values(X)
        d_front = self.machines[0].decision_values(X)
        d_back = self.machines[1].decision_values(X)
        return 0.5 * (d_front - d_back)

    def predict_pm1(self, X: np.ndarray) -> np.ndarray:
        if self.decision_mode == "ovo":
            return np.where(self.machines[0].decision_values(X) >= 0.0, 1.0, -1.0)
        d_front = self.machines[0].decision_values(X)
        d_back = self.machines[1].decision_values(X)
        return np.where(d_front >= d_back, 1.0, -1.0)


def train_classifier(
    X: np.ndarray,
    y: np.ndarray,
    c: float,
    kernel: KernelConfig,
    decision_mode: str,
    tol: float = 1e-3,
    max_passes: int = 10,
) -> VowelClassifier:
    if decision_mode not in DECISION_MODES:
        raise ConfigError(f"decision mode must be one of {DECISION_MODES}, got {decision_mode!r}")
    if decision_mode == "ovo":
        return VowelClassifier("ovo", [smo_train(X, y, c, kernel, tol, max_passes)])
    front = smo_train(X, np.asarray(y, dtype=np.float64), c, kernel, tol, max_passes)
    back = smo_train(X, -np.asarray(y, dtype=np.float64), c, kernel, tol, max_passes)
    return VowelClassifier("ovr", [front, back])


def stratified_kfold(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """k disjoint folds; per-fold class counts within 1 of proportional."""
    y = np.asarray(y)
    if k < 2:
        raise ConfigError(f"need k >= 2 folds, got {k}")
    folds: list[list[int]] = [[] for _ in range(k)]
    rng = np.random.default_rng(seed)
    for value in (1.0, -1.0):
        idx = np.flatnonzero(y == value)
        if idx.size < k:
            raise ConfigError(f"class {value:+.0f} has {idx.size} rows, fewer than {k} folds")
        idx = idx.copy()
        rng.shuffle(idx)
        for pos, row in enumerate(idx):
            folds[pos % k].append(int(row))
    return [np.array(sorted(f), dtype=int) for f in folds]


@dataclass(frozen=True)
class GridCell:
    c: float
    kernel: str
    gamma_mode: str
    decision: str

    def sort_key(self):
        return (self.c, KERNELS.index(self.kernel), GAMMA_MODES.index(self.gamma_mode),
                DECISION_MODES.index(self.decision))


@dataclass(frozen=True)
class GridSpec:
    c_values: tuple[float, ...] = tuple((np.arange(1, 11) * 0.5).tolist())  # 0.5 .. 5.0
    kernels: tuple[str, ...] = KERNELS
    gamma_modes: tuple[str, ...] = GAMMA_MODES
    decision_modes: tuple[str, ...] = DECISION_MODES
    degree: int = 3
    coef0: float = 0.0

    def cells(self) -> list[GridCell]:
        """Canonical order: C ascending, then linear<poly<rbf, scale<auto, ovr<ovo."""
        return [
            GridCell(c, kern, gm, dm)
            for c, kern, gm, dm in itertools.product(
                self.c_values, self.kernels, self.gamma_modes, self.decision_modes
            )
        ]


@dataclass
class CvRow:
    cell: GridCell
    fold: int
    accuracy: float


@dataclass
class GridSearchResult:
    best: GridCell
    best_gamma: float | None
    classifier: VowelClassifier
    scaler: MinMaxScaler | None
    cv_rows: list[CvRow]
    cv_mean: dict[GridCell, float]
    cells_evaluated: int


def _fold_predictions(K_tr, K_val, y_tr, cell: GridCell, tol, max_passes) -> np.ndarray:
    ceiling = max(max_passes * len(y_tr), 10_000)
    if cell.decision == "ovo":
        alpha, bias, _ = smo_solve(K_tr, y_tr, cell.c, tol, ceiling)
        return np.where(K_val @ (alpha * y_tr) + bias >= 0.0, 1.0, -1.0)
    a_f, b_f, _ = smo_solve(K_tr, y_tr, cell.c, tol, ceiling)
    a_b, b_b, _ = smo_solve(K_tr, -y_tr, cell.c, tol, ceiling)
    d_front = K_val @ (a_f * y_tr) + b_f
    d_back = K_val @ (a_b * -y_tr) + b_b
    return np.where(d_front >= d_back, 1.0, -1.0)


def grid_search(
    X: np.ndarray,
    y: np.ndarray,
    grid: GridSpec = GridSpec(),
    k: int = 5,
    seed: int = 0,
    scale: bool = False,
    tol: float = 1e-3,
    max_passes: int = 10,
) -> GridSearchResult:
    """Evaluate every cell by mean fold accuracy, then refit the winner on all rows.

    Kernel matrices are shared across the C/decision sub-grid of each fold, so
    the 120-cell default costs 6 Gram constructions per fold, not 120. The
    winner is the maximal mean accuracy with ties broken by the canonical cell
    order, independent of evaluation order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    folds = stratified_kfold(y, k, seed)
    cells = grid.cells()
    accs: dict[GridCell, list[float]] = {cell: [] for cell in cells}

    all_idx = np.arange(y.shape[0])
    for fold_id, val_idx in enumerate(folds):
        tr_idx = np.setdiff1d(all_idx, val_idx, assume_unique=True)
        X_tr, X_val = X[tr_idx], X[val_idx]
        y_tr, y_val = y[tr_idx], y[val_idx]
        if scale:
            scaler = MinMaxScaler().fit(X_tr)
            X_tr, X_val = scaler.transform(X_tr), scaler.transform(X_val)
        for kind in grid.kernels:
            for gamma_mode in grid.gamma_modes:
                cfg = KernelConfig(kind, gamma_mode, grid.degree, grid.coef0)
                if kind != "linear":
                    cfg = replace(cfg, gamma=resolve_gamma(gamma_mode, X_tr))
                K_tr = gram(X_tr, X_tr, cfg)
                K_val = gram(X_val, X_tr, cfg)
                for c in grid.c_values:
                    for decision in grid.decision_modes:
                        cell = GridCell(c, kind, gamma_mode, decision)
                        pred = _fold_predictions(K_tr, K_val, y_tr, cell, tol, max_passes)
                        accs[cell].append(float(np.mean(pred == y_val)))

    cv_rows = [CvRow(cell, fold, accs[cell][fold]) for cell in cells for fold in range(k)]
    cv_mean = {cell: float(np.mean(accs[cell])) for cell in cells}
    best = min(cells, key=lambda cell: (-cv_mean[cell],) + cell.sort_key())

    scaler = MinMaxScaler().fit(X) if scale else None
    X_fit = scaler.transform(X) if scaler else X
    kernel = KernelConfig(best.kernel, best.gamma_mode, grid.degree, grid.coef0)
    if best.kernel != "linear":
        kernel = replace(kernel, gamma=resolve_gamma(best.gamma_mode, X_fit))
    classifier = train_classifier(X_fit, y, best.c, kernel, best.decision, tol, max_passes)
    return GridSearchResult(
        best=best,
        best_gamma=kernel.gamma,
        classifier=classifier,
        scaler=scaler,
        cv_rows=cv_rows,
        cv_mean=cv_mean,
        cells_evaluated=len(cells),
    )


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # [true (front, back) x predicted (front, back)]
    cell: GridCell | None = None


def evaluate(
    classifier: VowelClassifier,
    X_test: np.ndarray,
    y_test: np.ndarray,
    scaler: MinMaxScaler | None = None,
    cell: GridCell | None = None,
) -> EvalResult:
    X_test = np.asarray(X_test, dtype=np.float64)
    y_test = np.asarray(y_test, dtype=np.float64)
    if y_test.shape[0] < 1:
        raise ConfigError("evaluation needs a nonempty test set")
    if scaler is not None:
        X_test = scaler.transform(X_test)
    pred = classifier.predict_pm1(X_test)
    confusion = np.zeros((2, 2), dtype=int)
    for truth, guess in zip(y_test, pred):
        confusion[0 if truth > 0 else 1, 0 if guess > 0 else 1] += 1
    return EvalResult(accuracy=float(np.mean(pred == y_test)), confusion=confusion, cell=cell)
