"""Bounded-variable linear programming by the revised simplex method.

Solves   maximize c'x   subject to   A x {<=,>=} b,   l <= x <= u

with a dense revised simplex: the basis inverse is carried explicitly,
rank-one updated per pivot and refactorized periodically.  The default is a
two-phase primal method: phase one minimizes the sum of artificial variables
introduced for rows the starting corner violates; phase two optimizes the
true objective.  Dantzig pricing is the default, with Bland's rule engaged
after a run of degenerate pivots so that degenerate instances terminate.

A dual method is also available (algorithm="dual").  It starts from the
all-slack basis with every structural variable resting on a bound, which is
trivially dual feasible here, and repairs primal infeasibility row by row.
Its ratio test walks the breakpoints in order of increasing dual step and
flips bound-to-bound columns it passes along the way, so instances dominated
by box constraints move many variables per priced iteration instead of
spending one iteration per coordinate.  When no dual-feasible start can be
built, or the dual run breaks down numerically or stalls on a degenerate
face, solve falls back to the primal method, so the two entry points accept
the same problems.
"""

import enum
import io
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, InvalidBounds, NumericalBreakdown

LE = "<="
GE = ">="

_PIVOT_EPS = 1e-11


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


def _as_float_array(x, name, ndim):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-D, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class LpProblem:
    """An inequality-form LP with per-variable bounds.

    senses is a tuple of '<=' / '>=' per row (defaults to all '<=').  Every
    variable needs at least one finite bound; an upper bound of +inf is
    allowed only alongside a finite lower bound and vice versa.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: tuple = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        c = _as_float_array(self.c, "c", 1)
        A = _as_float_array(self.A, "A", 2)
        b = _as_float_array(self.b, "b", 1)
        m, n = A.shape
        if c.shape[0] != n:
            raise DimensionMismatch(f"c has {c.shape[0]} entries for {n} columns")
        if b.shape[0] != m:
            raise DimensionMismatch(f"b has {b.shape[0]} entries for {m} rows")
        senses = tuple(self.senses) if self.senses is not None else (LE,) * m
        if len(senses) != m or any(s not in (LE, GE) for s in senses):
            raise DimensionMismatch(f"senses must be {m} entries of '<=' or '>='")
        lower = _as_float_array(self.lower if self.lower is not None else np.zeros(n), "lower", 1)
        upper = _as_float_array(self.upper if self.upper is not None else np.full(n, np.inf), "upper", 1)
        if lower.shape[0] != n or upper.shape[0] != n:
            raise DimensionMismatch("bounds must have one entry per variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DimensionMismatch("c, A, b must be finite")
        if np.any(lower > upper):
            raise InvalidBounds("lower bound exceeds upper bound")
        if np.any(~np.isfinite(lower) & ~np.isfinite(upper)):
            raise InvalidBounds("every variable needs at least one finite bound")
        for name, arr in (("c", c), ("A", A), ("b", b), ("lower", lower), ("upper", upper)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "senses", senses)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class CanonicalLp:
    """Equality form [A | A_s | I_a] xbar = b with b >= 0.

    Slack signs are +1/-1 per row after rows with negative right-hand sides
    were negated; artificial columns exist only for rows whose slack sign is
    -1, so the tail [A_s | I_a] always contains an m-column identity.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    slack_signs: np.ndarray
    artificial_rows: np.ndarray
    n: int
    m: int
    a: int


def _orient(A, b, senses):
    """Negate rows until b >= 0; return (A~, b~, slack signs)."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    sigma = np.where(np.asarray(senses) == LE, 1.0, -1.0)
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    sigma[flip] *= -1.0
    return A, b, sigma


def canonicalize(problem):
    """Enlarge an LpProblem to the equality form used by the simplex method."""
    At, bt, sigma = _orient(problem.A, problem.b, problem.senses)
    m, n = At.shape
    art_rows = np.flatnonzero(sigma < 0)
    a = art_rows.size
    eye = np.eye(m)
    A_en = np.hstack([At, eye * sigma, eye[:, art_rows]])
    c_pad = np.concatenate([problem.c, np.zeros(m + a)])
    lower = np.concatenate([problem.lower, np.zeros(m + a)])
    upper = np.concatenate([problem.upper, np.full(m + a, np.inf)])
    return CanonicalLp(A=A_en, b=bt, c=c_pad, lower=lower, upper=upper,
                       slack_signs=sigma, artificial_rows=art_rows, n=n, m=m, a=a)


def predict_ops(m, n, a, pivoted):
    """Elementary operations one simplex iteration costs on an m x (n+a) system.

    A non-pivoting iteration (bound flip) costs 3m; a pivoting one costs
    (m+1)(n+a+1) + 2m.
    """
    if pivoted:
        return int((m + 1) * (n + a + 1) + 2 * m)
    return int(3 * m)


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome.

    x and objective are None unless the status is OPTIMAL or ITERATION_LIMIT
    (the latter returns the current, possibly suboptimal, point; it may even
    be infeasible if the limit fell inside the feasibility phase).  duals
    holds the row multipliers in the orientation produced by canonicalize.
    op_count sums predict_ops over iterations, counting the phase-one
    artificials only while phase one runs.  phase1_iterations counts the
    feasibility-seeking iterations of whichever method ran: primal phase one,
    or the dual repair loop.
    """

    status: Status
    x: np.ndarray = None
    objective: float = None
    duals: np.ndarray = None
    iterations: int = 0
    pivots: int = 0
    bound_flips: int = 0
    phase1_iterations: int = 0
    artificials: int = 0
    op_count: int = 0
    basis: np.ndarray = None
    trace: tuple = None


class _Simplex:
    """Working state of one solve: enlarged columns, basis, and its inverse.

    Nonbasic variables rest at an explicit value: a bound, or 0 when the
    origin lies inside the bounds (the natural start for these problems; it
    makes every all-<= nonnegative-b instance feasible at once, so phase one
    is skipped).  A variable that leaves its interior rest never returns to
    it, so the Bland fallback retains its termination guarantee.
    """

    def __init__(self, Abar, bt, lower, upper, basis, rest, is_basic, tol,
                 pivot_rule, n_struct, art_start, refactor_every=100):
        self.Abar = Abar
        self.bt = bt
        self.lb = lower
        self.ub = upper
        self.basis = basis
        self.rest = rest
        self.is_basic = is_basic
        self.tol = tol
        self.pivot_rule = pivot_rule
        self.n_struct = n_struct
        self.art_start = art_start
        self.refactor_every = refactor_every
        self.m = Abar.shape[0]
        self.iterations = 0
        self.pivots = 0
        self.bound_flips = 0
        self.op_count = 0
        self.trace = None
        self._refactorize()

    # -- basis maintenance ------------------------------------------------

    def _refactorize(self):
        B = self.Abar[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B) if self.m else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular simplex basis") from exc
        self._recompute_basics()

    def _recompute_basics(self):
        vals = self.rest.copy()
        vals[self.basis] = 0.0
        self.xB = self.Binv @ (self.bt - self.Abar @ vals)

    def full_point(self):
        vals = self.rest.copy()
        vals[self.basis] = self.xB
        return vals

    def pin(self, col):
        """Freeze a column at zero (used for artificials leaving the pool)."""
        self.lb[col] = 0.0
        self.ub[col] = 0.0
        self.rest[col] = 0.0

    def _replace(self, row, col, w, enter_val):
        """Swap basis[row] for col given w = Binv @ Abar[:, col]."""
        wr = w[row]
        if abs(wr) < _PIVOT_EPS:
            raise NumericalBreakdown(f"pivot element {wr:.3e} below tolerance")
        self.basis[row] = col
        self.is_basic[col] = True
        row_r = self.Binv[row].copy()
        self.Binv -= np.outer(w, row_r) / wr
        self.Binv[row] = row_r / wr
        self.xB[row] = enter_val
        self.pivots += 1
        if self.pivots % self.refactor_every == 0:
            self._refactorize()

    # -- main loop ---------------------------------------------------------

    def run(self, c_work, ops_a, budget, in_phase1):
        """Iterate until the phase objective is optimal; returns the reason."""
        rule = self.pivot_rule
        consecutive_degenerate = 0
        retries = 0
        while True:
            if self.iterations >= budget:
                return "limit"
            y = c_work[self.basis] @ self.Binv
            d = c_work - y @ self.Abar
            can_inc = ~self.is_basic & (self.rest < self.ub)
            can_dec = ~self.is_basic & (self.rest > self.lb)
            cand = (can_inc & (d > self.tol)) | (can_dec & (d < -self.tol))
            if not cand.any():
                return "optimal"
            if rule == "bland":
                j = int(np.flatnonzero(cand)[0])
            else:
                j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            sdir = 1.0 if (d[j] > 0 and can_inc[j]) else -1.0
            w = self.Binv @ self.Abar[:, j]
            delta = -sdir * w

            ratios = np.full(self.m, np.inf)
            pos = delta > _PIVOT_EPS
            neg = delta < -_PIVOT_EPS
            ratios[pos] = (self.ub[self.basis[pos]] - self.xB[pos]) / delta[pos]
            ratios[neg] = (self.lb[self.basis[neg]] - self.xB[neg]) / delta[neg]
            np.maximum(ratios, 0.0, out=ratios)
            t_row = ratios.min() if self.m else np.inf
            t_flip = (self.ub[j] - self.rest[j]) if sdir > 0 else (self.rest[j] - self.lb[j])
            if not np.isfinite(min(t_row, t_flip)):
                return "unbounded"

            if t_flip <= t_row:
                t = t_flip
                self.xB += delta * t
                self.rest[j] = self.ub[j] if sdir > 0 else self.lb[j]
                self.bound_flips += 1
                pivoted = False
            else:
                ties = np.flatnonzero(ratios <= t_row + 1e-10)
                if rule == "bland":
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                if abs(w[r]) < _PIVOT_EPS:
                    # stale inverse can fabricate tiny pivots; rebuild and retry
                    retries += 1
                    if retries > 3:
                        raise NumericalBreakdown("persistent tiny pivot element")
                    self._refactorize()
                    continue
                retries = 0
                t = float(ratios[r])
                leaving = int(self.basis[r])
                hit_upper = delta[r] > 0
                self.xB += delta * t
                self.is_basic[leaving] = False
                self.rest[leaving] = self.ub[leaving] if hit_upper else self.lb[leaving]
                enter_val = self.rest[j] + sdir * t
                self._replace(r, j, w, enter_val)
                if in_phase1 and leaving >= self.art_start:
                    self.pin(leaving)
                pivoted = True

            self.iterations += 1
            self.op_count += predict_ops(self.m, self.n_struct, ops_a, pivoted)
            if self.trace is not None:
                self.trace.append(float(c_work @ self.full_point()))
            if t <= self.tol:
                consecutive_degenerate += 1
                if consecutive_degenerate >= 50:
                    rule = "bland"
            else:
                consecutive_degenerate = 0
                rule = self.pivot_rule

    def run_dual(self, c_work, budget):
        """Repair primal infeasibility while keeping the reduced costs optimal.

        Requires every nonbasic rest to sit exactly on a bound and the signs
        of c_work - y'Abar to match those rests (arranged by the caller).
        The bound-flipping ratio test sorts eligible columns by dual step and
        flips the bounded ones whose full swing still leaves the target row
        infeasible; only the column at the crossing breakpoint enters.

        A margin objective prices zero onto every structural column, so the
        start is totally dual degenerate and the dual step is zero almost
        everywhere; heuristic progress is measured on the total bound
        violation instead.  Once a run of steps improves neither that nor the
        dual objective, the loop drops to least-index choices on both ends
        (no flips) and only a strict dual step hands control back; a capped
        least-index stretch raises NumericalBreakdown so the caller can fall
        back to the primal method instead of spending the whole budget.
        """
        feas_tol = self.tol * max(1.0, float(np.abs(self.bt).max()) if self.m else 1.0)
        stalled = 0
        retries = 0
        best_inf = np.inf
        bland = False
        bland_run = 0
        bland_cap = max(200, 4 * self.m)
        while True:
            if self.iterations >= budget:
                return "limit"
            viol_lo = self.lb[self.basis] - self.xB
            viol_hi = self.xB - self.ub[self.basis]
            viol = np.maximum(viol_lo, viol_hi)
            if self.m == 0 or viol.max() <= feas_tol:
                return "feasible"
            if not bland:
                total_inf = float(np.maximum(viol, 0.0).sum())
                if total_inf < best_inf - feas_tol:
                    best_inf = total_inf
                    stalled = 0
                bland = stalled >= 50
            if bland:
                bland_run += 1
                if bland_run > bland_cap:
                    raise NumericalBreakdown(
                        "dual method stalled on a degenerate face")
                rows = np.flatnonzero(viol > feas_tol)
                r = int(rows[np.argmin(self.basis[rows])])
            else:
                r = int(np.argmax(viol))
            below = viol_lo[r] >= viol_hi[r]
            alpha = self.Binv[r] @ self.Abar
            y = c_work[self.basis] @ self.Binv
            dmin = y @ self.Abar - c_work
            at_lo = ~self.is_basic & (self.rest == self.lb)
            at_up = ~self.is_basic & ~at_lo & (self.rest == self.ub)
            movable = self.ub > self.lb
            if below:
                elig = movable & ((at_lo & (alpha < -self.tol)) | (at_up & (alpha > self.tol)))
            else:
                elig = movable & ((at_lo & (alpha > self.tol)) | (at_up & (alpha < -self.tol)))
            idxs = np.flatnonzero(elig)
            if idxs.size == 0:
                return "infeasible"
            denom = -alpha[idxs] if below else alpha[idxs]
            rho = np.maximum(dmin[idxs] / denom, 0.0)
            target = self.lb[self.basis[r]] if below else self.ub[self.basis[r]]
            if bland:
                # least index among the minimal-ratio ties, no flips
                rho_q = float(rho.min())
                q = int(idxs[rho <= rho_q + self.tol].min())
            else:
                ranks = np.argsort(rho, kind="stable")
                order = idxs[ranks]
                q = int(order[-1])
                rho_q = float(rho[ranks[-1]])
                for k, j in enumerate(order):
                    remaining = abs(target - self.xB[r])
                    travel = self.ub[j] - self.lb[j]
                    if (k == order.size - 1 or not np.isfinite(travel)
                            or abs(alpha[j]) * travel >= remaining - feas_tol):
                        q = int(j)
                        rho_q = float(rho[ranks[k]])
                        break
                    newv = self.ub[j] if self.rest[j] == self.lb[j] else self.lb[j]
                    self.xB -= (self.Binv @ self.Abar[:, j]) * (newv - self.rest[j])
                    self.rest[j] = newv
                    self.bound_flips += 1
                    self.op_count += predict_ops(self.m, self.n_struct, 0, False)

            w = self.Binv @ self.Abar[:, q]
            if abs(w[r]) < _PIVOT_EPS:
                retries += 1
                if retries > 3:
                    raise NumericalBreakdown("persistent tiny pivot element")
                self._refactorize()
                continue
            retries = 0
            t = (target - self.xB[r]) / -w[r]
            self.xB += -w * t
            leaving = int(self.basis[r])
            self.is_basic[leaving] = False
            self.rest[leaving] = target
            self._replace(r, q, w, self.rest[q] + t)
            self.iterations += 1
            self.op_count += predict_ops(self.m, self.n_struct, 0, True)
            if self.trace is not None:
                self.trace.append(float(c_work @ self.full_point()))
            if rho_q <= self.tol:
                stalled += 1
            else:
                stalled = 0
                bland = False
                bland_run = 0

    def drive_out_artificials(self, ops_a):
        """Pivot zero-valued artificials out of the basis where a real column allows it."""
        for r in range(self.m):
            if self.basis[r] < self.art_start:
                continue
            prices = self.Binv[r] @ self.Abar[:, :self.art_start]
            prices[self.is_basic[:self.art_start]] = 0.0
            prices[self.ub[:self.art_start] <= self.lb[:self.art_start]] = 0.0
            j = int(np.argmax(np.abs(prices)))
            if abs(prices[j]) <= 1e-9:
                continue  # row is redundant; artificial stays basic, pinned at 0
            w = self.Binv @ self.Abar[:, j]
            leaving = int(self.basis[r])
            self.is_basic[leaving] = False
            self._replace(r, j, w, self.rest[j])
            self.pin(leaving)
            self.iterations += 1
            self.op_count += predict_ops(self.m, self.n_struct, ops_a, True)


def _nearest_bound_point(point, lower, upper):
    """Snap each coordinate of point to its nearest finite bound."""
    d_lo = np.where(np.isfinite(lower), np.abs(point - lower), np.inf)
    d_hi = np.where(np.isfinite(upper), np.abs(point - upper), np.inf)
    return np.where(d_lo <= d_hi, lower, upper)


def _column_cap(G, h, lower, upper, j, sgn=1.0):
    """Finite bound on sgn*x_j implied by the rows g'x <= h, or None.

    Each row with a positive coefficient on sgn*x_j caps it by maximizing the
    remaining terms over the box; the tightest finite cap wins.
    """
    col = sgn * G[:, j]
    best = np.inf
    for i in np.flatnonzero(col > _PIVOT_EPS):
        g = -G[i].copy()
        g[j] = 0.0
        part = np.zeros_like(g)
        pos, neg = g > 0, g < 0
        part[pos] = g[pos] * upper[pos]
        part[neg] = g[neg] * lower[neg]
        total = h[i] + part.sum()
        if np.isfinite(total):
            best = min(best, total / col[i])
    return float(best) if np.isfinite(best) else None


def _finish(problem, state, status, c_phase2, phase1_iters, a):
    trace = tuple(state.trace) if state.trace is not None else None
    if status in (Status.INFEASIBLE, Status.UNBOUNDED):
        return LpSolution(status=status, iterations=state.iterations,
                          pivots=state.pivots, bound_flips=state.bound_flips,
                          phase1_iterations=phase1_iters, artificials=a,
                          op_count=state.op_count, trace=trace)
    state._refactorize()
    point = state.full_point()
    x = point[:problem.n]
    duals = c_phase2[state.basis] @ state.Binv if problem.m else np.zeros(0)
    return LpSolution(status=status, x=x, objective=float(problem.c @ x),
                      duals=duals, iterations=state.iterations, pivots=state.pivots,
                      bound_flips=state.bound_flips, phase1_iterations=phase1_iters,
                      artificials=a, op_count=state.op_count,
                      basis=state.basis.copy(), trace=trace)


def _solve_dual(problem, tol, max_iters, pivot_rule, collect_trace, start):
    """Dual-method body of solve; returns None when no dual start exists."""
    m, n = problem.m, problem.n
    At, bt, sigma = _orient(problem.A, problem.b, problem.senses)
    G = At * sigma[:, None]
    h = bt * sigma
    lower = np.concatenate([problem.lower, np.zeros(m)])
    upper = np.concatenate([problem.upper, np.full(m, np.inf)])

    # place every structural on the bound its objective sign asks for; a
    # profitable column with no bound on that side gets a temporary one, wide
    # enough (via _column_cap) that no optimum is cut off
    base = np.clip(start if start is not None else np.zeros(n),
                   problem.lower, problem.upper)
    rest_s = _nearest_bound_point(base, problem.lower, problem.upper)
    shifted = []
    for j in range(n):
        if problem.c[j] > tol:
            if np.isfinite(problem.upper[j]):
                rest_s[j] = problem.upper[j]
            else:
                cap = _column_cap(G, h, problem.lower, problem.upper, j)
                if cap is None:
                    return None
                upper[j] = cap * 1.01 + 1.0
                rest_s[j] = upper[j]
                shifted.append((j, "upper"))
        elif problem.c[j] < -tol:
            if np.isfinite(problem.lower[j]):
                rest_s[j] = problem.lower[j]
            else:
                cap = _column_cap(G, h, problem.lower, problem.upper, j, sgn=-1.0)
                if cap is None:
                    return None
                lower[j] = -(cap * 1.01 + 1.0)
                rest_s[j] = lower[j]
                shifted.append((j, "lower"))

    Abar = np.hstack([At, np.eye(m) * sigma])
    rest = np.concatenate([rest_s, np.zeros(m)])
    basis = n + np.arange(m)
    is_basic = np.zeros(n + m, dtype=bool)
    is_basic[basis] = True
    state = _Simplex(Abar, bt, lower, upper, basis, rest, is_basic, tol,
                     pivot_rule, n_struct=n, art_start=n + m)
    if collect_trace:
        state.trace = []
    c_phase2 = np.concatenate([problem.c, np.zeros(m)])

    reason = state.run_dual(c_phase2, budget=max_iters)
    phase1_iters = state.iterations
    if reason == "infeasible":
        return _finish(problem, state, Status.INFEASIBLE, c_phase2, phase1_iters, 0)
    if reason == "limit":
        return _finish(problem, state, Status.ITERATION_LIMIT, c_phase2, phase1_iters, 0)

    for j, side in shifted:
        if side == "upper":
            state.ub[j] = np.inf
        else:
            state.lb[j] = -np.inf
    reason = state.run(c_phase2, ops_a=0, budget=max_iters, in_phase1=False)
    if reason == "unbounded":
        return _finish(problem, state, Status.UNBOUNDED, c_phase2, phase1_iters, 0)
    if reason == "limit":
        return _finish(problem, state, Status.ITERATION_LIMIT, c_phase2, phase1_iters, 0)
    return _finish(problem, state, Status.OPTIMAL, c_phase2, phase1_iters, 0)


def solve(problem, tol=1e-9, max_iters=None, pivot_rule="dantzig",
          collect_trace=False, algorithm="primal", start=None):
    """Solve an LpProblem; returns an LpSolution.

    tol is used both as the feasibility and the reduced-cost tolerance.
    max_iters defaults to 50*(m+n) across both phases; hitting it returns the
    current point flagged with Status.ITERATION_LIMIT rather than raising.
    start is an optional structural point hint: the primal method rests the
    nonbasic variables there (clipped to the bounds), the dual method snaps
    it to the nearest bounds.  algorithm picks the primal or the dual method;
    the dual falls back to the primal when it cannot run.
    """
    if pivot_rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    if algorithm not in ("primal", "dual"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    m, n = problem.m, problem.n
    if start is not None:
        start = _as_float_array(start, "start", 1)
        if start.shape[0] != n:
            raise DimensionMismatch(f"start has {start.shape[0]} entries for {n} columns")
        if np.any(np.isnan(start)):
            raise InvalidBounds("start must not contain nan")
    if max_iters is None:
        max_iters = 50 * (m + n)

    if algorithm == "dual":
        try:
            sol = _solve_dual(problem, tol, max_iters, pivot_rule, collect_trace, start)
        except NumericalBreakdown:
            sol = None
        if sol is not None:
            return sol

    At, bt, sigma = _orient(problem.A, problem.b, problem.senses)

    # rest nonbasic structurals at 0 when the origin is inside the bounds,
    # else at the finite bound; rows the resulting corner violates get a
    # repair artificial (none when all b >= 0 with <= senses, so those
    # instances go straight to phase two)
    if start is not None:
        anchors = np.clip(start, problem.lower, problem.upper)
    else:
        anchors = np.where((problem.lower <= 0.0) & (problem.upper >= 0.0), 0.0,
                           np.where(np.isfinite(problem.lower), problem.lower,
                                    problem.upper))
    residual = bt - At @ anchors
    slack_vals = sigma * residual
    art_rows = np.flatnonzero(slack_vals < 0)
    a = art_rows.size

    art_cols = np.zeros((m, a))
    art_cols[art_rows, np.arange(a)] = np.sign(residual[art_rows])
    Abar = np.hstack([At, np.eye(m) * sigma, art_cols])
    lower = np.concatenate([problem.lower, np.zeros(m + a)])
    upper = np.concatenate([problem.upper, np.full(m + a, np.inf)])
    art_start = n + m

    rest = np.concatenate([anchors, np.zeros(m + a)])
    is_basic = np.zeros(n + m + a, dtype=bool)
    basis = n + np.arange(m)
    basis[art_rows] = art_start + np.arange(a)
    is_basic[basis] = True

    state = _Simplex(Abar, bt, lower, upper, basis, rest, is_basic, tol,
                     pivot_rule, n_struct=n, art_start=art_start)
    if collect_trace:
        state.trace = []

    c_phase2 = np.concatenate([problem.c, np.zeros(m + a)])
    phase1_iters = 0
    feas_tol = tol * max(1.0, float(np.abs(bt).max()) if m else 1.0)

    if a:
        c_phase1 = np.zeros(n + m + a)
        c_phase1[art_start:] = -1.0
        reason = state.run(c_phase1, ops_a=a, budget=max_iters, in_phase1=True)
        if reason == "unbounded":
            raise NumericalBreakdown("phase one reported an unbounded direction")
        art_basic = state.basis >= art_start
        art_total = float(state.xB[art_basic].sum()) if art_basic.any() else 0.0
        if reason == "limit":
            phase1_iters = state.iterations
            return _finish(problem, state, Status.ITERATION_LIMIT, c_phase2, phase1_iters, a)
        if art_total > feas_tol:
            phase1_iters = state.iterations
            return _finish(problem, state, Status.INFEASIBLE, c_phase2, phase1_iters, a)
        state.drive_out_artificials(ops_a=a)
        for col in range(art_start, art_start + a):
            if not state.is_basic[col]:
                state.pin(col)
        phase1_iters = state.iterations

    reason = state.run(c_phase2, ops_a=0, budget=max_iters, in_phase1=False)
    if reason == "unbounded":
        return _finish(problem, state, Status.UNBOUNDED, c_phase2, phase1_iters, a)
    if reason == "limit":
        return _finish(problem, state, Status.ITERATION_LIMIT, c_phase2, phase1_iters, a)
    return _finish(problem, state, Status.OPTIMAL, c_phase2, phase1_iters, a)


@dataclass(frozen=True)
class CertifyReport:
    """Residuals of an optimality certificate; passed means all within tol."""

    row_violation: float
    bound_violation: float
    dual_sign_violation: float
    comp_slack_residual: float
    reduced_cost_residual: float
    tol: float
    passed: bool


def certify(problem, solution, tol=1e-6):
    """Check primal feasibility and complementary slackness of a solution.

    Requires an OPTIMAL solution (duals are reconstructed from the final
    basis at solve time).  All residuals are reported; passed requires every
    one of them to stay within tol.
    """
    if solution.status is not Status.OPTIMAL:
        raise ValueError("certify requires an OPTIMAL solution")
    x = np.asarray(solution.x, dtype=float)
    At, bt, sigma = _orient(problem.A, problem.b, problem.senses)
    slack = sigma * (bt - At @ x)  # distance to the feasible side of each row
    row_violation = float(max(0.0, -slack.min())) if problem.m else 0.0
    lo = np.where(np.isfinite(problem.lower), problem.lower - x, -np.inf)
    hi = np.where(np.isfinite(problem.upper), x - problem.upper, -np.inf)
    bound_violation = float(max(0.0, lo.max(initial=-np.inf), hi.max(initial=-np.inf)))
    y = np.asarray(solution.duals, dtype=float)
    ys = sigma * y if y.size else y
    dual_sign = float(max(0.0, -ys.min())) if y.size else 0.0
    comp_slack = float(np.max(np.abs(ys * slack))) if y.size else 0.0
    d = problem.c - (At.T @ y if y.size else 0.0)
    gap_up = np.where(np.isfinite(problem.upper), problem.upper - x, 1.0)
    gap_lo = np.where(np.isfinite(problem.lower), x - problem.lower, 1.0)
    rc = np.where(d > 0, d * np.minimum(gap_up, 1.0), -d * np.minimum(gap_lo, 1.0))
    reduced_cost = float(rc.max(initial=0.0))
    metrics = (row_violation, bound_violation, dual_sign, comp_slack, reduced_cost)
    return CertifyReport(*metrics, tol=tol, passed=bool(all(v <= tol for v in metrics)))


def _fmt(v):
    if np.isposinf(v):
        return "inf"
    if np.isneginf(v):
        return "-inf"
    return repr(float(v))


def dump_lp(problem):
    """Render an LpProblem as plain text (one row per line, then bounds)."""
    out = io.StringIO()
    out.write("# msmprec lp v1\n")
    out.write("maximize " + " ".join(_fmt(v) for v in problem.c) + "\n")
    for i in range(problem.m):
        coeffs = " ".join(_fmt(v) for v in problem.A[i])
        out.write(f"row {coeffs} {problem.senses[i]} {_fmt(problem.b[i])}\n")
    out.write("bounds\n")
    for lo, hi in zip(problem.lower, problem.upper):
        out.write(f"{_fmt(lo)} {_fmt(hi)}\n")
    return out.getvalue()


def load_lp(text):
    """Parse the dump_lp format back into an LpProblem."""
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("maximize"):
        raise ValueError("expected a 'maximize' line")
    c = np.array([float(t) for t in lines[0].split()[1:]])
    rows, senses, rhs = [], [], []
    k = 1
    while k < len(lines) and lines[k].startswith("row"):
        tokens = lines[k].split()
        sense = LE if LE in tokens else GE
        pos = tokens.index(sense)
        rows.append([float(t) for t in tokens[1:pos]])
        senses.append(sense)
        rhs.append(float(tokens[pos + 1]))
        k += 1
    if k >= len(lines) or lines[k] != "bounds":
        raise ValueError("expected a 'bounds' section")
    bounds = [tuple(float(t) for t in ln.split()) for ln in lines[k + 1:]]
    if len(bounds) != c.size:
        raise ValueError("bounds section must have one line per variable")
    A = np.array(rows, dtype=float).reshape(len(rows), c.size)
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])
    return LpProblem(c=c, A=A, b=np.array(rhs), senses=tuple(senses),
                     lower=lower, upper=upper)
