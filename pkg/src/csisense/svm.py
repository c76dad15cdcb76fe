"""RBF-kernel support vector machine trained by sequential minimal
optimization, one-vs-one for multiclass. The SMO sweep picks the second
multiplier with a seeded RNG, updates two multipliers at a time in closed
form (which preserves the sum(alpha * y) = 0 equality), and stops after
max_passes consecutive sweeps without a change."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, TrainingError, ValidationError
from .seeds import derive_seed


@dataclass
class SvmConfig:
    C: float = 1.0
    gamma: float = None  # None -> 1 / (n_features * variance)
    tolerance: float = 1e-3
    max_passes: int = 10
    max_sweeps: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValidationError(f"C must be > 0, got {self.C}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")
        if self.tolerance <= 0:
            raise ValidationError(f"tolerance must be > 0, got {self.tolerance}")

    def config_string(self, gamma_used=None):
        if self.gamma is not None:
            gamma_part = f"gamma={self.gamma:.6g}"
        elif gamma_used is not None:
            gamma_part = f"gamma=scale({gamma_used:.6g})"
        else:
            gamma_part = "gamma=scale"
        return f"C={self.C:g} {gamma_part} tol={self.tolerance:g}"


def rbf_kernel(x, y, gamma):
    """k(a, b) = exp(-gamma * ||a - b||^2) for rows of x against rows of y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sq = (
        (x * x).sum(axis=1)[:, None]
        + (y * y).sum(axis=1)[None, :]
        - 2.0 * (x @ y.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _smo(kernel, y, c, tol, max_passes, max_sweeps, rng):
    """Solve one binary dual problem; returns (alpha, b)."""
    n = y.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    # g[i] = sum_s alpha_s y_s K[s, i]; errors are g + b - y
    g = np.zeros(n)
    quiet_passes = 0
    sweeps = 0
    while quiet_passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            e_i = g[i] + b - y[i]
            r = y[i] * e_i
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            e_j = g[j] + b - y[j]
            ai_old, aj_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                lo = max(0.0, aj_old - ai_old)
                hi = min(c, c + aj_old - ai_old)
            else:
                lo = max(0.0, ai_old + aj_old - c)
                hi = min(c, ai_old + aj_old)
            if lo == hi:
                continue
            eta = 2.0 * kernel[i, j] - kernel[i, i] - kernel[j, j]
            if eta >= 0:
                continue
            aj = aj_old - y[j] * (e_i - e_j) / eta
            aj = min(hi, max(lo, aj))
            if abs(aj - aj_old) < 1e-5:
                continue
            ai = ai_old + y[i] * y[j] * (aj_old - aj)
            b1 = b - e_i - y[i] * (ai - ai_old) * kernel[i, i] - y[j] * (aj - aj_old) * kernel[i, j]
            b2 = b - e_j - y[i] * (ai - ai_old) * kernel[i, j] - y[j] * (aj - aj_old) * kernel[j, j]
            if 0.0 < ai < c:
                b = b1
            elif 0.0 < aj < c:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            g += (ai - ai_old) * y[i] * kernel[i] + (aj - aj_old) * y[j] * kernel[j]
            alpha[i] = ai
            alpha[j] = aj
            changed += 1
        sweeps += 1
        quiet_passes = quiet_passes + 1 if changed == 0 else 0
    return alpha, b


@dataclass
class PairModel:
    class_a: int
    class_b: int
    sv_x: np.ndarray  # support vectors [M, D]
    coef: np.ndarray  # alpha * y at the support vectors
    b: float
    alpha: np.ndarray  # full multipliers, kept for KKT diagnostics
    y: np.ndarray  # +1 for class_a, -1 for class_b


@dataclass
class SvmModel:
    classes: list
    gamma: float
    C: float
    pairs: list = field(default_factory=list)


def svm_train(features, labels, cfg: SvmConfig = None):
    """One-vs-one RBF SVM over [N, D] features; needs at least 2 classes."""
    cfg = cfg or SvmConfig()
    x = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != labels.shape[0]:
        raise ValidationError(
            f"features {x.shape} do not match {labels.shape[0]} labels"
        )
    if x.shape[0] < 2:
        raise TrainingError(f"need at least 2 samples, got {x.shape[0]}")
    classes = sorted(int(v) for v in np.unique(labels))
    if len(classes) < 2:
        raise TrainingError(f"need at least 2 classes, got {classes}")
    if cfg.gamma is not None:
        gamma = cfg.gamma
    else:
        var = float(x.var())
        if var == 0.0:
            raise DegenerateDataError("features have zero variance; cannot scale gamma")
        gamma = 1.0 / (x.shape[1] * var)
    rng = np.random.default_rng(derive_seed(cfg.seed, "svm"))
    model = SvmModel(classes=classes, gamma=gamma, C=cfg.C)
    for ai, class_a in enumerate(classes):
        for class_b in classes[ai + 1 :]:
            mask = (labels == class_a) | (labels == class_b)
            xp = x[mask]
            y = np.where(labels[mask] == class_a, 1.0, -1.0)
            kernel = rbf_kernel(xp, xp, gamma)
            alpha, b = _smo(
                kernel, y, cfg.C, cfg.tolerance, cfg.max_passes, cfg.max_sweeps, rng
            )
            sv = alpha > 1e-8
            model.pairs.append(
                PairModel(
                    class_a=class_a,
                    class_b=class_b,
                    sv_x=xp[sv].copy(),
                    coef=(alpha * y)[sv].copy(),
                    b=b,
                    alpha=alpha,
                    y=y,
                )
            )
    return model


def pair_decision(pair: PairModel, x, gamma):
    """Signed decision values of one pairwise classifier for rows of x."""
    if pair.sv_x.shape[0] == 0:
        return np.full(np.asarray(x).shape[0], pair.b)
    return rbf_kernel(x, pair.sv_x, gamma) @ pair.coef + pair.b


def svm_predict(model: SvmModel, features):
    """Pairwise-vote winner; vote ties resolve to the lower label."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"features must be [N, D], got {x.shape}")
    index = {c: i for i, c in enumerate(model.classes)}
    votes = np.zeros((x.shape[0], len(model.classes)), dtype=np.int64)
    for pair in model.pairs:
        decision = pair_decision(pair, x, model.gamma)
        votes[decision >= 0, index[pair.class_a]] += 1
        votes[decision < 0, index[pair.class_b]] += 1
    # argmax returns the first (lowest-label) maximum
    winners = votes.argmax(axis=1)
    return np.array([model.classes[w] for w in winners])


def check_kkt(pair: PairModel, c, tol):
    """Box and equality conditions of one solved pairwise dual."""
    eq = float(np.dot(pair.alpha, pair.y))
    below = float((-pair.alpha).max(initial=0.0))
    above = float((pair.alpha - c).max(initial=0.0))
    return {
        "equality_violation": abs(eq),
        "box_below": below,
        "box_above": above,
        "ok": abs(eq) < tol and below <= tol and above <= tol,
    }


def dual_objective(pair: PairModel, kernel):
    """W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij."""
    ay = pair.alpha * pair.y
    return float(pair.alpha.sum() - 0.5 * ay @ kernel @ ay)
