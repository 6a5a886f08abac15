"""Supervised evaluation harness: stratified splits, a Gaussian-kernel SVM
trained by sequential minimal optimization in a one-against-one scheme, a
nearest-neighbor control, and bandwidth search.

Features are standardized (zero mean, unit variance per dimension, statistics
from the training set) before the RBF kernel is applied; all randomness is
injected through explicit seeds, so training and evaluation are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._backend import get_kernels


@dataclass(frozen=True)
class Split:
    train_ratio: float = 0.75
    seed: int = 0
    stratified: bool = True
    trial_count: int = 5

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise ValueError("train_ratio must be in (0, 1)")


@dataclass
class PairClassifier:
    class_a: int
    class_b: int
    sv: np.ndarray            # (m, d) standardized support vectors
    coef: np.ndarray          # (m,) alpha * y
    bias: float


@dataclass
class SvmModel:
    classes: np.ndarray
    sigma: float
    C: float
    mean: np.ndarray
    std: np.ndarray
    pairs: list[PairClassifier] = field(default_factory=list)


@dataclass
class EvalReport:
    accuracy: float                        # percent, mean over trials
    confusion: np.ndarray                  # rows true, cols predicted, summed
    per_trial: list[float]
    config: dict


def split_indices(y: np.ndarray, split: Split, trial: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic stratified train/test indices for one trial."""
    y = np.asarray(y)
    rng = np.random.default_rng(np.random.SeedSequence([split.seed, trial]))
    train, test = [], []
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    for c in classes:
        idx = np.nonzero(y == c)[0]
        if idx.size < 2:
            raise ValueError(f"class {c} has fewer than 2 samples")
        n_train = int(round(split.train_ratio * idx.size))
        n_train = min(max(n_train, 1), idx.size - 1)
        perm = rng.permutation(idx.size) if split.stratified else np.arange(idx.size)
        train.append(idx[perm[:n_train]])
        test.append(idx[perm[n_train:]])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split_dataset(samples: list, split: Split, trial: int) -> tuple[list, list]:
    """Stratified split of a list of labeled samples."""
    y = np.array([s.class_id for s in samples])
    tr, te = split_indices(y, split, trial)
    return [samples[i] for i in tr], [samples[i] for i in te]


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def rbf_kernel(A: np.ndarray, B: np.ndarray, sigma: float) -> np.ndarray:
    """K(x, y) = exp(-||x - y||^2 / (2 sigma^2))."""
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * sigma**2))


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-10, max_iter: int = 1_000_000):
    """Two-class SMO on a precomputed kernel; returns (alpha, bias).

    Working pairs are chosen by the maximal KKT violation, ties resolving to
    the lowest index, so the solver is deterministic. The default tolerance
    drives the dual to its optimum (rather than an early waypoint), which is
    what makes the decision function reproducible under feature rescaling or
    duplicated rows; a stall guard ends degenerate problems that cannot
    progress. The iteration loop lives in the kernel backend.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    alpha, bias, _ = get_kernels().smo_solve(K, y, float(C), float(tol), int(max_iter))
    return np.asarray(alpha), float(bias)


def train_svm(X: np.ndarray, y: np.ndarray, sigma: float, C: float = 10.0) -> SvmModel:
    """Train a one-against-one RBF SVM (one binary SMO problem per class pair)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    mean, std = standardize_fit(X)
    Xs = (X - mean) / std
    model = SvmModel(classes=classes, sigma=sigma, C=C, mean=mean, std=std)
    for a, b in combinations(classes.tolist(), 2):
        sel = (y == a) | (y == b)
        Xp = Xs[sel]
        yp = np.where(y[sel] == a, 1.0, -1.0)
        K = rbf_kernel(Xp, Xp, sigma)
        alpha, bias = _smo(K, yp, C)
        keep = alpha > 1e-12
        model.pairs.append(
            PairClassifier(a, b, Xp[keep].copy(), (alpha * yp)[keep].copy(), bias)
        )
    return model


def pair_decisions(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Decision values of every pair classifier, shape (n_pairs, n_samples)."""
    Xs = (np.asarray(X, dtype=np.float64) - model.mean) / model.std
    if Xs.shape[1] != model.mean.shape[0]:
        raise ValueError("feature dimension does not match the model")
    out = np.empty((len(model.pairs), Xs.shape[0]))
    for p, pc in enumerate(model.pairs):
        if pc.sv.size:
            out[p] = pc.coef @ rbf_kernel(pc.sv, Xs, model.sigma) + pc.bias
        else:
            out[p] = pc.bias
    return out


def predict(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Majority vote over pairwise decisions; ties break to the lowest class id."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    dec = pair_decisions(model, X)
    votes = np.zeros((X.shape[0], model.classes.size), dtype=np.int64)
    cls_index = {c: i for i, c in enumerate(model.classes.tolist())}
    for p, pc in enumerate(model.pairs):
        wins_a = dec[p] > 0
        votes[wins_a, cls_index[pc.class_a]] += 1
        votes[~wins_a, cls_index[pc.class_b]] += 1
    return model.classes[np.argmax(votes, axis=1)]


def knn_predict(train_X: np.ndarray, train_y: np.ndarray, X: np.ndarray, k: int = 1) -> np.ndarray:
    """k-nearest-neighbor control on standardized features; ties break low."""
    if k < 1:
        raise ValueError("k must be >= 1")
    train_X = np.asarray(train_X, dtype=np.float64)
    if k > train_X.shape[0]:
        raise ValueError("k exceeds training set size")
    mean, std = standardize_fit(train_X)
    A = (train_X - mean) / std
    B = (np.atleast_2d(np.asarray(X, dtype=np.float64)) - mean) / std
    d2 = np.sum(A * A, axis=1)[None, :] - 2.0 * (B @ A.T) + np.sum(B * B, axis=1)[:, None]
    near = np.argsort(d2, axis=1, kind="stable")[:, :k]
    train_y = np.asarray(train_y)
    classes = np.unique(train_y)
    out = np.empty(B.shape[0], dtype=train_y.dtype)
    for r in range(B.shape[0]):
        counts = np.array([(train_y[near[r]] == c).sum() for c in classes])
        out[r] = classes[np.argmax(counts)]
    return out


def evaluate(model: SvmModel, X: np.ndarray, y: np.ndarray) -> EvalReport:
    """Accuracy (percent) and confusion matrix on a labeled test set."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("empty test set")
    pred = predict(model, X)
    classes = model.classes
    cls_index = {c: i for i, c in enumerate(classes.tolist())}
    confusion = np.zeros((classes.size, classes.size), dtype=np.int64)
    for t, p in zip(y, pred):
        confusion[cls_index[int(t)], cls_index[int(p)]] += 1
    acc = 100.0 * float(np.trace(confusion)) / y.size
    return EvalReport(acc, confusion, [acc], {"sigma": model.sigma, "C": model.C})


def sigma_search(
    train: tuple[np.ndarray, np.ndarray],
    validation: tuple[np.ndarray, np.ndarray],
    sigma_grid,
    C: float = 10.0,
) -> float:
    """Bandwidth maximizing validation accuracy; ties go to the smallest sigma."""
    grid = sorted(float(s) for s in sigma_grid)
    if not grid:
        raise ValueError("empty sigma grid")
    best_sigma, best_acc = grid[0], -1.0
    for s in grid:
        model = train_svm(train[0], train[1], s, C)
        acc = evaluate(model, validation[0], validation[1]).accuracy
        if acc > best_acc:
            best_acc, best_sigma = acc, s
    return best_sigma


def default_sigma_grid(X: np.ndarray, seed: int = 0, max_rows: int = 256) -> list[float]:
    """Multiples of the median pairwise distance of standardized features."""
    rng = np.random.default_rng(seed)
    X = np.asarray(X, dtype=np.float64)
    rows = X if X.shape[0] <= max_rows else X[rng.choice(X.shape[0], max_rows, replace=False)]
    mean, std = standardize_fit(rows)
    A = (rows - mean) / std
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(A * A, axis=1)[None, :] - 2 * (A @ A.T)
    med = float(np.sqrt(np.maximum(np.median(d2[np.triu_indices(A.shape[0], 1)]), 1e-12)))
    return [med * m for m in (0.25, 0.5, 1.0, 2.0, 4.0)]


def run_trials(
    X: np.ndarray,
    y: np.ndarray,
    split: Split,
    sigma: float | None = None,
    sigma_grid=None,
    C: float = 10.0,
    val_ratio: float = 0.8,
) -> EvalReport:
    """The recognition protocol: stratified splits with accuracy averaged over
    trials. When no bandwidth is given, one is picked empirically before the
    trials by a search on a train/validation subsplit of the first trial's
    training set."""
    if sigma is None:
        tr0, _ = split_indices(y, split, 0)
        grid = sigma_grid if sigma_grid is not None else default_sigma_grid(X[tr0], split.seed)
        inner = Split(train_ratio=val_ratio, seed=split.seed + 7919, trial_count=1)
        itr, ival = split_indices(y[tr0], inner, 0)
        sigma = sigma_search((X[tr0][itr], y[tr0][itr]), (X[tr0][ival], y[tr0][ival]), grid, C)
    per_trial: list[float] = []
    confusion = None
    for trial in range(split.trial_count):
        tr, te = split_indices(y, split, trial)
        model = train_svm(X[tr], y[tr], sigma, C)
        rep = evaluate(model, X[te], y[te])
        per_trial.append(rep.accuracy)
        confusion = rep.confusion if confusion is None else confusion + rep.confusion
    return EvalReport(
        float(np.mean(per_trial)),
        confusion,
        per_trial,
        {"C": C, "sigma": sigma, "trials": split.trial_count, "ratio": split.train_ratio},
    )


# ---------------------------------------------------------------------------
# model persistence


def _fmt(values) -> str:
    return " ".join(f"{v:.17g}" for v in np.atleast_1d(values))


def save_model(model: SvmModel, path) -> None:
    """Line-oriented text serialization; round-trips decision values exactly."""
    with open(path, "w") as fh:
        fh.write("SE2N-SVM v1\n")
        fh.write(f"sigma {model.sigma:.17g}\n")
        fh.write(f"C {model.C:.17g}\n")
        fh.write(f"classes {_fmt(model.classes)}\n")
        fh.write(f"dim {model.mean.shape[0]}\n")
        fh.write(f"mean {_fmt(model.mean)}\n")
        fh.write(f"std {_fmt(model.std)}\n")
        for pc in model.pairs:
            fh.write(f"pair {pc.class_a} {pc.class_b}\n")
            fh.write(f"bias {pc.bias:.17g}\n")
            fh.write(f"nsv {pc.sv.shape[0]}\n")
            for coef, row in zip(pc.coef, pc.sv):
                fh.write(f"{coef:.17g} {_fmt(row)}\n")
        fh.write("end\n")


def load_model(path) -> SvmModel:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "SE2N-SVM v1":
        raise ValueError("not an SE2N-SVM v1 model file")
    pos = 1

    def take(prefix: str) -> str:
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(prefix + " "):
            raise ValueError(f"malformed model file: expected {prefix!r}")
        val = lines[pos][len(prefix) + 1 :]
        pos += 1
        return val

    sigma = float(take("sigma"))
    C = float(take("C"))
    classes = np.array([int(float(v)) for v in take("classes").split()])
    dim = int(take("dim"))
    mean = np.array([float(v) for v in take("mean").split()])
    std = np.array([float(v) for v in take("std").split()])
    model = SvmModel(classes=classes, sigma=sigma, C=C, mean=mean, std=std)
    while pos < len(lines) and lines[pos] != "end":
        a, b = (int(v) for v in take("pair").split())
        bias = float(take("bias"))
        nsv = int(take("nsv"))
        coef = np.empty(nsv)
        sv = np.empty((nsv, dim))
        for m in range(nsv):
            parts = lines[pos].split()
            pos += 1
            coef[m] = float(parts[0])
            sv[m] = [float(v) for v in parts[1:]]
        model.pairs.append(PairClassifier(a, b, sv, coef, bias))
    return model
