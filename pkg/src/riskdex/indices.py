"""Risk indices, local indices of Ito processes, and ranking checkers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .core import Agent, Gamble
from .errors import InsufficientGrid, NonpositiveExcessDrift

KINDS = ("vm", "is", "sd")
RATIO_MARGIN = 0.02
TAIL_POINTS = 5
MIN_GRID_K = 10

# index each decision function is ranked by, smaller index = preferred
INDEX_FOR_FN = {"ca": "vm", "ar": "vm", "ce": "is", "rp": "sd"}


def _kind(kind: str) -> str:
    k = str(kind).lower()
    if k not in KINDS:
        raise ValueError(f"index kind must be one of {KINDS}, got {kind!r}")
    return k


def _formula(kind: str, sd: float, excess_mean: float) -> float:
    if kind == "vm":
        return sd * sd / excess_mean
    if kind == "is":
        return sd / excess_mean
    return sd


def index(kind: str, g: Gamble, r_f: float | None = None) -> float:
    """Variance-to-mean, inverse Sharpe or standard deviation of a gamble.

    With ``r_f`` the per-dollar versions use the excess mean E[g] - r_f.
    """
    kind = _kind(kind)
    excess = g.mean if r_f is None else g.mean - r_f
    if not excess > 0:
        raise NonpositiveExcessDrift(f"mean {g.mean} does not exceed risk-free rate {r_f}")
    return _formula(kind, g.std, excess)


def local_index(kind: str, process, mu_f: float | None = None) -> float:
    """Index built from the process' initial drift mu0 and diffusion sigma0."""
    kind = _kind(kind)
    mu0, sigma0 = float(process.mu0), float(process.sigma0)
    if not (mu0 > 0 and sigma0 > 0):
        raise ValueError("local indices need mu0 > 0 and sigma0 > 0")
    excess = mu0 if mu_f is None else mu0 - mu_f
    if not excess > 0:
        raise NonpositiveExcessDrift(f"mu0={mu0} does not exceed mu_f={mu_f}")
    return _formula(kind, sigma0, excess)


# ---------------------------------------------------------------------------
# uniformly higher
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformResult:
    status: str  # holds | fails | ratio_limit_one
    k0: int | None
    ratio_limit: float
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def to_json(self) -> dict[str, Any]:
        return {"status": self.status, "k0": self.k0, "ratio_limit": self.ratio_limit,
                "reason": self.reason}


def _check_grid(t_grid: np.ndarray) -> None:
    if t_grid.ndim != 1 or t_grid.size - 1 < MIN_GRID_K:
        raise InsufficientGrid(f"need K >= {MIN_GRID_K} (at least {MIN_GRID_K + 1} grid points)")
    if not np.all(t_grid > 0) or not np.allclose(t_grid[1:] / t_grid[:-1], 0.5, rtol=1e-9):
        raise ValueError("grid must be t0 * 2**-k, k = 0..K")


def extrapolate_linear(t: np.ndarray, y: np.ndarray, tail: int = TAIL_POINTS) -> tuple[float, float]:
    """Intercept of a degree-1 least-squares fit of y on t over the ``tail``
    smallest-t points, and the RMS residual of that fit."""
    order = np.argsort(t)[:tail]
    tt, yy = np.asarray(t, float)[order], np.asarray(y, float)[order]
    coef = np.polyfit(tt, yy, 1)
    resid = yy - np.polyval(coef, tt)
    return float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def ratio_limit(f: np.ndarray, h: np.ndarray, t_grid: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.asarray(f, float) / np.asarray(h, float)
    if not np.all(np.isfinite(r[-TAIL_POINTS:])):
        return math.nan
    return extrapolate_linear(t_grid, r)[0]


def uniformly_higher(f_samples: Sequence[float], h_samples: Sequence[float],
                     t_grid: Sequence[float], ratio_margin: float = RATIO_MARGIN) -> UniformResult:
    """Whether curve f is eventually (small t) strictly above h with a ratio
    limit bounded away from one. Curves are sampled on t0 * 2**-k, k = 0..K."""
    t = np.asarray(t_grid, float)
    f = np.asarray(f_samples, float)
    h = np.asarray(h_samples, float)
    _check_grid(t)
    if f.shape != t.shape or h.shape != t.shape:
        raise ValueError("curves must be sampled on the grid")
    lim = ratio_limit(f, h, t)
    if math.isfinite(lim) and abs(lim - 1.0) <= ratio_margin:
        return UniformResult("ratio_limit_one", None, lim, f"|limit - 1| <= {ratio_margin}")
    above = f > h
    if not above[-1]:
        return UniformResult("fails", None, lim, "pointwise")
    # k0: first index after the last violation
    bad = np.flatnonzero(~above)
    k0 = int(bad[-1] + 1) if bad.size else 0
    if k0 > t.size - TAIL_POINTS:
        return UniformResult("fails", k0, lim, "pointwise")
    if not math.isfinite(lim):
        return UniformResult("fails", k0, lim, "ratio undefined")
    return UniformResult("holds", k0, lim)


# ---------------------------------------------------------------------------
# ranking agreement
# ---------------------------------------------------------------------------


def _signs(v: np.ndarray, tie_tol: float) -> np.ndarray:
    """sign(v_j - v_k) for j < k, with relative ties collapsed to 0."""
    j, k = np.triu_indices(v.size, 1)
    a, b = v[j], v[k]
    with np.errstate(invalid="ignore"):
        d = a - b
        scale = np.maximum(np.abs(a), np.abs(b))
        same = (a == b) | (np.abs(d) <= tie_tol * np.where(np.isfinite(scale), scale, 0.0))
    s = np.sign(np.where(np.isnan(d), 0.0, d))
    s[same] = 0.0
    return s


def kendall_agreement(x: Sequence[float], y: Sequence[float], tie_tol: float = 1e-9) -> float:
    """Kendall-type agreement in [-1, 1]: a pair counts as concordant when
    both vectors order it the same way, including both tying; otherwise it is
    discordant. 1 means identical weak orderings."""
    sx, sy = _signs(np.asarray(x, float), tie_tol), _signs(np.asarray(y, float), tie_tol)
    if sx.size == 0:
        return 1.0
    conc = np.count_nonzero(sx == sy)
    return float((2 * conc - sx.size) / sx.size)


@dataclass(frozen=True)
class RankingReport:
    fn: str
    values: list[list[float]]          # values[agent][gamble]
    rankings: list[list[int]]          # gamble indices, most preferred first
    tau: list[list[float]]
    agreement: bool
    index_kind: str | None = None
    index_values: list[float] | None = None
    index_tau: list[float] | None = None
    index_agreement: bool | None = None

    def to_json(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _ranking(v: np.ndarray) -> list[int]:
    return [int(i) for i in np.argsort(-v, kind="stable")]


def consistency_check(f: Callable[[Agent, Gamble], Any], agents: Sequence[Agent],
                      gambles: Sequence[Gamble], *, fn_name: str = "",
                      index_kind: str | None = None,
                      index_values: Sequence[float] | None = None,
                      tie_tol: float = 1e-9) -> RankingReport:
    """Evaluate f on every (agent, gamble) pair and compare agents' rankings.

    When an index (a kind, or explicit per-gamble values) is given, each
    agent's ranking is also compared with the ascending index order.
    """
    if len(agents) < 2 or len(gambles) < 2:
        raise ValueError("need at least two agents and two gambles")
    vals = np.empty((len(agents), len(gambles)))
    for i, a in enumerate(agents):
        for j, g in enumerate(gambles):
            out = f(a, g)
            vals[i, j] = out.as_float() if hasattr(out, "as_float") else float(out)
    n = len(agents)
    tau = [[kendall_agreement(vals[i], vals[j], tie_tol) for j in range(n)] for i in range(n)]
    agreement = all(tau[i][j] == 1.0 for i in range(n) for j in range(n))

    q = None
    if index_values is not None:
        q = np.asarray(index_values, float)
    elif index_kind is not None:
        q = np.array([index(index_kind, g) for g in gambles])
    idx_tau = idx_ok = None
    if q is not None:
        # smaller index is preferred, i.e. ranks like -q
        idx_tau = [kendall_agreement(vals[i], -q, tie_tol) for i in range(n)]
        idx_ok = all(t == 1.0 for t in idx_tau)
    return RankingReport(
        fn=fn_name, values=vals.tolist(), rankings=[_ranking(v) for v in vals], tau=tau,
        agreement=agreement, index_kind=index_kind,
        index_values=None if q is None else q.tolist(), index_tau=idx_tau, index_agreement=idx_ok)


# ---------------------------------------------------------------------------
# weak consistency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeakResult:
    status: str  # holds | violated
    t_bar: float | None
    witness: dict[str, Any] | None = None

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def to_json(self) -> dict[str, Any]:
        return {"status": self.status, "t_bar": self.t_bar, "witness": self.witness}


def weak_consistency_check(index_values: Sequence[float], decision_curves: Sequence[Sequence[float]],
                           t_grid: Sequence[float], tail: int = TAIL_POINTS) -> WeakResult:
    """Q(g) > Q(g') must imply f(g_t) <= f(g'_t) for all grid t below some t_bar.

    t_bar is the largest grid t such that the implication holds for every
    ordered pair at every grid point t <= t_bar. The check is violated when
    fewer than ``tail`` of the smallest grid points qualify.
    """
    q = np.asarray(index_values, float)
    curves = np.asarray(decision_curves, float)
    t = np.asarray(t_grid, float)
    if curves.shape != (q.size, t.size):
        raise ValueError("decision_curves must be (n_processes, n_grid)")
    order = np.argsort(-t)  # decreasing t
    t, curves = t[order], curves[:, order]
    ok = np.ones(t.size, dtype=bool)
    first_bad: dict[int, tuple[int, int]] = {}
    for i in range(q.size):
        for j in range(q.size):
            if q[i] > q[j]:
                bad = curves[i] > curves[j]
                for k in np.flatnonzero(bad):
                    first_bad.setdefault(int(k), (i, j))
                ok &= ~bad
    if ok.all():
        return WeakResult("holds", float(t[0]))
    last_bad = int(np.flatnonzero(~ok)[-1])
    i, j = first_bad[last_bad]
    witness = {"riskier": i, "safer": j, "t": float(t[last_bad]),
               "f_riskier": float(curves[i, last_bad]), "f_safer": float(curves[j, last_bad])}
    if last_bad + 1 > t.size - tail:
        return WeakResult("violated", None, witness)
    return WeakResult("holds", float(t[last_bad + 1]))


__all__ = [
    "index", "local_index", "uniformly_higher", "UniformResult", "consistency_check",
    "RankingReport", "weak_consistency_check", "WeakResult", "kendall_agreement",
    "extrapolate_linear", "INDEX_FOR_FN", "KINDS",
]
