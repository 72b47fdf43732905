"""
Small dense linear programs and a bounded-variable two-phase simplex solver.

Problems are stated as

    minimize    c . v
    subject to  A_eq v  = b_eq
                A_ge v >= b_ge
                lower <= v <= upper      (lower finite, upper may be +inf)

The solver keeps a dense tableau, lets nonbasic variables sit at either bound, prices
with Dantzig's rule and falls back to Bland's rule once 2N consecutive pivots make no
progress. Optimal answers are basic (vertex) solutions.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.config.settings import DEFAULT_FEAS_TOL, DEFAULT_OPT_TOL
from src.utils.exceptions import NumericalFailure, OutputError, ValidationError

logger = logging.getLogger(__name__)

_PIVOT_TOL = 1e-9
_DEGENERATE_STEP = 1e-12


class LPStatus(Enum):
    """Outcome of a solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(rows, n: int) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return np.zeros((0, n))
    return arr.reshape(-1, n) if arr.ndim == 1 else arr


@dataclass(frozen=True)
class StandardFormLP:
    """Dense LP container: equality rows, greater-or-equal rows and variable bounds."""
    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        n = c.shape[0]
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", _as_matrix(self.eq_matrix, n))
        object.__setattr__(self, "ineq_matrix", _as_matrix(self.ineq_matrix, n))
        object.__setattr__(self, "eq_rhs", np.asarray(self.eq_rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "ineq_rhs", np.asarray(self.ineq_rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).reshape(-1))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).reshape(-1))
        self.validate()

    @classmethod
    def build(cls, objective, eq_constraints=(), ineq_constraints=(), bounds=None) -> "StandardFormLP":
        """
        Build from (row, rhs) pairs.

        Args:
            objective: Cost vector of length n
            eq_constraints: Iterable of (row, rhs) meaning row . v = rhs
            ineq_constraints: Iterable of (row, rhs) meaning row . v >= rhs
            bounds: Per-variable (lower, upper); defaults to (0, inf)
        """
        c = np.asarray(objective, dtype=float)
        n = len(c)
        eq = list(eq_constraints)
        ge = list(ineq_constraints)
        bounds = bounds if bounds is not None else [(0.0, np.inf)] * n
        return cls(
            objective=c,
            eq_matrix=np.array([r for r, _ in eq], dtype=float).reshape(len(eq), n),
            eq_rhs=np.array([b for _, b in eq], dtype=float),
            ineq_matrix=np.array([r for r, _ in ge], dtype=float).reshape(len(ge), n),
            ineq_rhs=np.array([b for _, b in ge], dtype=float),
            lower=np.array([lo for lo, _ in bounds], dtype=float),
            upper=np.array([hi for _, hi in bounds], dtype=float),
        )

    @property
    def n(self) -> int:
        return self.objective.shape[0]

    @property
    def eq_constraints(self):
        return list(zip(self.eq_matrix, self.eq_rhs))

    @property
    def ineq_constraints(self):
        return list(zip(self.ineq_matrix, self.ineq_rhs))

    def validate(self):
        n = self.n
        if self.eq_matrix.shape[1] != n or self.ineq_matrix.shape[1] != n:
            raise ValidationError("constraint rows must have length n")
        if self.eq_matrix.shape[0] != self.eq_rhs.shape[0] or self.ineq_matrix.shape[0] != self.ineq_rhs.shape[0]:
            raise ValidationError("constraint rows and right-hand sides differ in count")
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise ValidationError("bounds must have length n")
        if not np.all(np.isfinite(self.objective)):
            raise ValidationError("objective coefficients must be finite")
        if not np.all(np.isfinite(self.lower)):
            raise ValidationError("lower bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValidationError("lower bound exceeds upper bound")

    def residuals(self, values: np.ndarray) -> float:
        """Largest scaled violation of any constraint or bound at `values`."""
        v = np.asarray(values, dtype=float)
        worst = 0.0
        if self.eq_matrix.shape[0]:
            scale = 1.0 + np.abs(self.eq_matrix) @ np.abs(v) + np.abs(self.eq_rhs)
            worst = max(worst, float(np.max(np.abs(self.eq_matrix @ v - self.eq_rhs) / scale)))
        if self.ineq_matrix.shape[0]:
            scale = 1.0 + np.abs(self.ineq_matrix) @ np.abs(v) + np.abs(self.ineq_rhs)
            worst = max(worst, float(np.max(np.maximum(self.ineq_rhs - self.ineq_matrix @ v, 0.0) / scale)))
        lo_gap = np.maximum(self.lower - v, 0.0) / (1.0 + np.abs(self.lower))
        hi = np.where(np.isfinite(self.upper), self.upper, np.inf)
        hi_gap = np.maximum(v - hi, 0.0) / (1.0 + np.abs(np.where(np.isfinite(hi), hi, 0.0)))
        return max(worst, float(np.max(lo_gap, initial=0.0)), float(np.max(hi_gap, initial=0.0)))

    def to_text(self) -> str:
        """Plain-text dump: objective row, then one line per constraint, then bounds."""
        def fmt(row):
            return " ".join(repr(float(x)) for x in row)

        lines = [f"n {self.n}", f"min {fmt(self.objective)}"]
        lines += [f"eq {fmt(r)} = {float(b)!r}" for r, b in self.eq_constraints]
        lines += [f"ge {fmt(r)} >= {float(b)!r}" for r, b in self.ineq_constraints]
        lines += [f"bounds {i} {float(lo)!r} {float(hi)!r}" for i, (lo, hi) in enumerate(zip(self.lower, self.upper))]
        return "\n".join(lines) + "\n"


def dump_lp(lp: StandardFormLP, path: Union[str, Path]) -> None:
    try:
        Path(path).write_text(lp.to_text())
    except OSError as e:
        raise OutputError(f"cannot write LP dump to {path}: {e}") from e


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    values: Optional[np.ndarray] = None
    objective_value: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


@dataclass
class _Tableau:
    """Working state of the bounded-variable simplex."""
    T: np.ndarray            # B^-1 A, m x N
    x_b: np.ndarray          # basic values
    basis: np.ndarray        # column index of the basic variable in each row
    ub: np.ndarray           # upper bound of every column (shifted, lower = 0)
    at_upper: np.ndarray     # nonbasic-at-upper flags
    d: np.ndarray = field(default=None)  # reduced costs
    iterations: int = 0

    def is_basic(self) -> np.ndarray:
        mask = np.zeros(self.T.shape[1], dtype=bool)
        mask[self.basis] = True
        return mask

    def price(self, cost: np.ndarray):
        self.d = cost - cost[self.basis] @ self.T

    def pivot(self, r: int, j: int):
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.d -= self.d[j] * T[r]
        self.d[j] = 0.0
        self.basis[r] = j

    def point(self) -> np.ndarray:
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = self.x_b
        return x


def _iterate(tab: _Tableau, opt_tol: float, max_iterations: int, phase: int) -> LPStatus:
    """Run simplex pivots until optimal or unbounded."""
    n_cols = tab.T.shape[1]
    stall = 0
    bland = False
    while True:
        if tab.iterations >= max_iterations:
            raise NumericalFailure(f"simplex phase {phase} exceeded {max_iterations} iterations")
        basic = tab.is_basic()
        increase = ~basic & ~tab.at_upper & (tab.d < -opt_tol)
        decrease = ~basic & tab.at_upper & (tab.d > opt_tol)
        score = np.where(increase, -tab.d, np.where(decrease, tab.d, 0.0))
        candidates = np.flatnonzero(score > 0)
        if candidates.size == 0:
            return LPStatus.OPTIMAL
        j = int(candidates[0]) if bland else int(np.argmax(score))
        sigma = -1.0 if tab.at_upper[j] else 1.0
        col = tab.T[:, j]
        alpha = sigma * col

        ratios = np.full(alpha.shape, np.inf)
        ub_b = tab.ub[tab.basis]
        down = alpha > _PIVOT_TOL
        ratios[down] = np.maximum(tab.x_b[down], 0.0) / alpha[down]
        up = (alpha < -_PIVOT_TOL) & np.isfinite(ub_b)
        ratios[up] = np.maximum(ub_b[up] - tab.x_b[up], 0.0) / (-alpha[up])
        theta_row = ratios.min() if ratios.size else np.inf
        flip = tab.ub[j]

        if not np.isfinite(theta_row) and not np.isfinite(flip):
            return LPStatus.UNBOUNDED

        tab.iterations += 1
        if flip <= theta_row:
            tab.x_b -= flip * alpha
            tab.at_upper[j] = not tab.at_upper[j]
            theta = flip
        else:
            theta = theta_row
            ties = np.flatnonzero(ratios <= theta_row + _DEGENERATE_STEP * (1.0 + theta_row))
            if bland:
                r = int(ties[np.argmin(tab.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = int(tab.basis[r])
            entering_value = (tab.ub[j] if tab.at_upper[j] else 0.0) + sigma * theta
            tab.x_b -= theta * alpha
            tab.x_b[r] = entering_value
            tab.at_upper[leaving] = bool(alpha[r] < 0)
            tab.at_upper[j] = False
            tab.pivot(r, j)

        if theta <= _DEGENERATE_STEP:
            stall += 1
            if not bland and stall > 2 * n_cols:
                logger.debug(f"Simplex stalled for {stall} pivots, switching to Bland's rule")
                bland = True
        else:
            stall = 0


def solve(lp: StandardFormLP, feas_tol: float = DEFAULT_FEAS_TOL, opt_tol: float = DEFAULT_OPT_TOL,
          max_iterations: Optional[int] = None) -> LPSolution:
    """
    Solve an LP to optimality.

    Args:
        lp: Problem to solve
        feas_tol: Scaled feasibility tolerance for phase 1 and the final residual check
        opt_tol: Reduced-cost tolerance
        max_iterations: Pivot guard; defaults to 50 * (rows + columns) + 1000

    Returns:
        Optimal vertex solution, or an Infeasible / Unbounded status

    Raises:
        NumericalFailure: iteration guard tripped or the answer fails its residual check
    """
    n = lp.n
    lower = lp.lower
    span = lp.upper - lower

    # v = lower + y, 0 <= y <= span; ge rows get a surplus column each
    m_e, m_g = lp.eq_matrix.shape[0], lp.ineq_matrix.shape[0]
    m = m_e + m_g
    n_cols = n + m_g
    A = np.zeros((m, n_cols))
    A[:m_e, :n] = lp.eq_matrix
    A[m_e:, :n] = lp.ineq_matrix
    A[m_e:, n:] = -np.eye(m_g)
    b = np.concatenate([lp.eq_rhs - lp.eq_matrix @ lower, lp.ineq_rhs - lp.ineq_matrix @ lower])
    ub = np.concatenate([span, np.full(m_g, np.inf)])
    cost = np.concatenate([lp.objective, np.zeros(m_g)])

    # ge rows with b <= 0 start with their surplus basic after negation
    flip_rows = b < 0
    flip_rows[m_e:] |= b[m_e:] == 0
    A[flip_rows] *= -1.0
    b[flip_rows] *= -1.0

    basis = np.empty(m, dtype=int)
    needs_art = np.ones(m, dtype=bool)
    for i in range(m_e, m):
        if flip_rows[i]:
            basis[i] = n + (i - m_e)
            needs_art[i] = False
    pivots = _crash(A[:, :n], b, ub[:n], needs_art, basis)
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    A_full = np.hstack([A, np.zeros((m, n_art))])
    for a, i in enumerate(art_rows):
        A_full[i, n_cols + a] = 1.0
        basis[i] = n_cols + a

    if max_iterations is None:
        max_iterations = 50 * (m + n_cols) + 1000

    tab = _Tableau(
        T=A_full / pivots[:, None],
        x_b=b / pivots,
        basis=basis,
        ub=np.concatenate([ub, np.full(n_art, np.inf)]),
        at_upper=np.zeros(n_cols + n_art, dtype=bool),
    )

    # Phase 1: minimise the artificial sum
    if n_art:
        tab.price(np.concatenate([np.zeros(n_cols), np.ones(n_art)]))
        _iterate(tab, opt_tol, max_iterations, phase=1)
        infeasibility = float(np.sum(tab.point()[n_cols:]))
        if infeasibility > feas_tol * (1.0 + float(np.max(np.abs(b), initial=0.0))):
            logger.debug(f"LP infeasible: phase-1 residual {infeasibility:.3e}")
            return LPSolution(LPStatus.INFEASIBLE, iterations=tab.iterations)
        keep = _drive_out_artificials(tab, n_cols)
        A = A[keep]
        b = b[keep]
        tab.T = tab.T[:, :n_cols]
        tab.ub = tab.ub[:n_cols]
        tab.at_upper = tab.at_upper[:n_cols]

    # Phase 2
    tab.price(cost)
    status = _iterate(tab, opt_tol, max_iterations, phase=2)
    if status == LPStatus.UNBOUNDED:
        return LPSolution(LPStatus.UNBOUNDED, iterations=tab.iterations)

    y = _polish(tab, A, b)
    values = np.clip(lower + y[:n], lower, lp.upper)
    residual = lp.residuals(values)
    if residual > feas_tol:
        raise NumericalFailure(f"solution violates constraints by {residual:.3e} (tol {feas_tol:.1e})")
    return LPSolution(
        LPStatus.OPTIMAL,
        values=values,
        objective_value=float(lp.objective @ values),
        iterations=tab.iterations,
    )


def _crash(A: np.ndarray, b: np.ndarray, ub: np.ndarray, needs_art: np.ndarray,
           basis: np.ndarray) -> np.ndarray:
    """
    Start rows basic on a structural column that appears in no other row.

    A row qualifies when such a column has a positive coefficient there and the value
    b / a fits under its upper bound; the row then needs no artificial. Updates
    `needs_art` and `basis` in place and returns the per-row pivot element (1 elsewhere).
    """
    pivots = np.ones(A.shape[0])
    singleton = np.count_nonzero(A, axis=0) == 1
    for i in np.flatnonzero(needs_art):
        for j in np.flatnonzero(singleton & (A[i] > _PIVOT_TOL)):
            if b[i] / A[i, j] <= ub[j]:
                basis[i] = j
                pivots[i] = A[i, j]
                needs_art[i] = False
                break
    return pivots


def _drive_out_artificials(tab: _Tableau, n_cols: int) -> np.ndarray:
    """Pivot zero-valued artificials out of the basis; drop redundant rows. Returns kept rows."""
    keep = np.ones(tab.T.shape[0], dtype=bool)
    for r in range(tab.T.shape[0]):
        if tab.basis[r] < n_cols:
            continue
        basic = tab.is_basic()
        row = np.where(basic[:n_cols], 0.0, np.abs(tab.T[r, :n_cols]))
        j = int(np.argmax(row)) if row.size else -1
        if j >= 0 and row[j] > _PIVOT_TOL:
            value = tab.ub[j] if tab.at_upper[j] else 0.0
            tab.at_upper[j] = False
            tab.pivot(r, j)
            tab.x_b[r] = value
        else:
            keep[r] = False
    if not keep.all():
        logger.debug(f"Dropping {int((~keep).sum())} redundant LP rows")
        tab.T = tab.T[keep]
        tab.x_b = tab.x_b[keep]
        tab.basis = tab.basis[keep]
    return keep


def _polish(tab: _Tableau, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Recompute basic values from the original rows to shed pivoting round-off."""
    x = tab.point()
    if tab.basis.size:
        nonbasic = ~tab.is_basic()
        rhs = b - A[:, nonbasic] @ x[nonbasic]
        try:
            x[tab.basis] = np.linalg.solve(A[:, tab.basis], rhs)
        except np.linalg.LinAlgError:
            logger.debug("Singular basis during polish; keeping tableau values")
    return x
