"""Spectral suprema, distances, and series sums for diagonal models.

Every norm of interest for a diagonal model is either

* a supremum over the spectrum closure of a weighted functional

  ``F(a) = prod_j |1 - e^{-i phi_j} a|**w_j / |lam - a|**dist_power``

  (resolvent norms, smoothed resolvent norms, unit-factor power norms), or

* a series over the entry sequence (transfer sums, column Grams,
  smoothed-column norms).

The head (realized entries) is evaluated exactly.  The tail of the rule is
handled by bracketing: continuous optimization along the approach curves gives
a rigorous upper bound for suprema, integer lattice candidates near each
optimum give the achieved value, and envelope integrals bound series
remainders.  Results therefore come as (value, upper/err) pairs; certificates
compare the conservative side against declared bounds while reports carry the
achieved side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RangeViolation, SpectrumHit, TailInconclusive
from .models import OperatorModel

_GL8 = np.polynomial.legendre.leggauss(8)

#: coarse sample count per decade for tail-curve optimization
_COARSE = 260
_TERNARY_ITERS = 48
_CAND_WINDOW = 8


def as_batch(lams):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    return lams


# ---------------------------------------------------------------------------
# weighted suprema over the spectrum
# ---------------------------------------------------------------------------


@dataclass
class SupResult:
    """Bracketed supremum of a spectral functional, per evaluation point.

    ``value`` is achieved on actual spectrum points (head entries, tail
    lattice candidates, accumulation points); ``upper`` additionally dominates
    the un-realized tail through its continuous envelope, so
    ``value <= true supremum <= upper``.
    """

    value: np.ndarray
    upper: np.ndarray
    arg: np.ndarray


def _weight_logs(a, phis, weights):
    out = np.zeros(np.shape(a), dtype=float)
    for phi, w in zip(phis, weights):
        if w != 0.0:
            with np.errstate(divide="ignore"):
                out = out + w * np.log(np.abs(1.0 - np.exp(-1j * phi) * a))
    return out


def _head_sup(model, lams, weights, dist_power):
    entries = model.entries
    phis = model.unit_points if model.unit_points else ()
    wlog = _weight_logs(entries, phis, weights) if any(weights) else np.zeros(len(entries))
    best = np.full(len(lams), -np.inf)
    argbest = np.zeros(len(lams), dtype=complex)
    rows = max(1, int(4_000_000 // max(len(entries), 1)))
    for lo in range(0, len(lams), rows):
        lam = lams[lo : lo + rows, None]
        logF = wlog[None, :]
        if dist_power:
            with np.errstate(divide="ignore"):
                logF = logF - dist_power * np.log(np.abs(lam - entries[None, :]))
        else:
            logF = np.broadcast_to(logF, (lam.shape[0], len(entries)))
        idx = np.argmax(logF, axis=1)
        best[lo : lo + rows] = logF[np.arange(len(idx)), idx]
        argbest[lo : lo + rows] = entries[idx]
    return best, argbest


def _ternary_max(fun, lo, hi, iters=_TERNARY_ITERS):
    """Vectorized ternary search for the maximum of fun over [lo, hi] (log scale)."""
    a = np.log(lo)
    b = np.log(hi)
    for _ in range(iters):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        f1 = fun(np.exp(m1))
        f2 = fun(np.exp(m2))
        take = f1 < f2
        a = np.where(take, m1, a)
        b = np.where(take, b, m2)
    t = np.exp(0.5 * (a + b))
    return t, fun(t)


def _tail_sup_class(model, k, lams, weights, dist_power):
    """Bracketed sup of the functional over the un-realized part of class k."""
    rule = model.rule
    phis = model.unit_points
    m0 = rule.m_start(k, model.n_max)
    th_hi = 1.0 / m0

    def logF_at(a, lam):
        out = _weight_logs(a, phis, weights)
        if dist_power:
            with np.errstate(divide="ignore"):
                out = out - dist_power * np.log(np.abs(lam - a))
        return out

    grid = np.geomspace(th_hi * 1e-14, th_hi, _COARSE)
    a_grid = rule.curve(k, grid)
    B = len(lams)
    lam_col = lams[:, None]
    g = logF_at(a_grid[None, :], lam_col)  # (B, COARSE)

    # top local maxima cells (up to 3 per row)
    pad = np.full((B, 1), -np.inf)
    gp = np.concatenate([pad, g, pad], axis=1)
    local = (gp[:, 1:-1] >= gp[:, :-2]) & (gp[:, 1:-1] >= gp[:, 2:])
    masked = np.where(local, g, -np.inf)
    order = np.argsort(masked, axis=1)[:, ::-1][:, :3]  # (B, 3)

    cont_best = np.max(g, axis=1)
    latt_best = np.full(B, -np.inf)
    latt_arg = np.zeros(B, dtype=complex)

    # shared lattice samples from the coarse grid
    ms_grid = np.unique(np.clip(np.round(1.0 / grid).astype(np.int64), m0, None))
    a_ms = rule.curve(k, 1.0 / ms_grid)
    g_ms = logF_at(a_ms[None, :], lam_col)
    j = np.argmax(g_ms, axis=1)
    latt_best = g_ms[np.arange(B), j]
    latt_arg = a_ms[j]

    offs = np.arange(-_CAND_WINDOW, _CAND_WINDOW + 1)
    for c in range(order.shape[1]):
        cell = order[:, c]
        valid = np.isfinite(masked[np.arange(B), cell])
        lo = grid[np.clip(cell - 1, 0, _COARSE - 1)]
        hi = grid[np.clip(cell + 1, 0, _COARSE - 1)]
        lo = np.where(valid, lo, grid[0])
        hi = np.where(valid, hi, grid[0] * (1 + 1e-12))

        def fun(theta, lam=lams):
            return logF_at(rule.curve(k, theta), lam)

        t_star, f_star = _ternary_max(fun, lo, hi)
        cont_best = np.maximum(cont_best, np.where(valid, f_star, -np.inf))
        # integer lattice candidates around the refined optimum
        m_star = np.clip(np.round(1.0 / t_star).astype(np.int64), m0, None)
        ms = np.clip(m_star[:, None] + offs[None, :], m0, None)
        a_c = rule.curve(k, 1.0 / ms)
        g_c = logF_at(a_c, lam_col)
        g_c = np.where(valid[:, None], g_c, -np.inf)
        jj = np.argmax(g_c, axis=1)
        better = g_c[np.arange(B), jj] > latt_best
        latt_best = np.where(better, g_c[np.arange(B), jj], latt_best)
        latt_arg = np.where(better, a_c[np.arange(B), jj], latt_arg)

    cont_best = np.maximum(cont_best, latt_best)
    return latt_best, latt_arg, cont_best


def sup_spectral_functional(model, lams, weights=(), dist_power=0):
    """Bracketed supremum of the weighted functional over the spectrum closure.

    Parameters
    ----------
    model : OperatorModel
        Diagonal model (dense models are handled by the engines that own them).
    lams : array_like of complex
        Evaluation points (ignored when ``dist_power == 0``, but the result is
        still broadcast per point).
    weights : sequence of float
        Exponents ``w_j`` aligned with ``model.unit_points``.
    dist_power : int
        Power ``s`` on ``1/|lam - a|``.
    """
    if model.kind != "diagonal":
        raise ValueError("sup_spectral_functional expects a diagonal model")
    lams = as_batch(lams)
    weights = tuple(weights) if weights else tuple(0.0 for _ in model.unit_points)
    if model.unit_points and len(weights) != len(model.unit_points):
        raise ValueError("weights must align with unit points")

    log_val, arg = _head_sup(model, lams, weights, dist_power)
    log_upper = log_val.copy()

    if model.rule is not None:
        for k, phi in enumerate(model.unit_points):
            wk = weights[k]
            if wk < 0:
                # the functional blows up at the accumulation point
                inf = np.full(len(lams), np.inf)
                return SupResult(value=inf, upper=inf,
                                 arg=np.full(len(lams), np.exp(1j * phi)))
            l_val, l_arg, c_val = _tail_sup_class(model, k, lams, weights, dist_power)
            better = l_val > log_val
            log_val = np.where(better, l_val, log_val)
            arg = np.where(better, l_arg, arg)
            log_upper = np.maximum(log_upper, c_val)
            if wk == 0.0:
                # the accumulation point e^{i phi_k} belongs to the closure and
                # the functional extends continuously there
                a_lim = np.exp(1j * phi)
                g_lim = _weight_logs(a_lim, model.unit_points, weights)
                if dist_power:
                    with np.errstate(divide="ignore"):
                        g_lim = g_lim - dist_power * np.log(np.abs(lams - a_lim))
                else:
                    g_lim = np.full(len(lams), g_lim)
                better = g_lim > log_val
                log_val = np.where(better, g_lim, log_val)
                arg = np.where(better, a_lim, arg)
                log_upper = np.maximum(log_upper, g_lim)

    with np.errstate(over="ignore"):
        return SupResult(value=np.exp(log_val), upper=np.exp(log_upper), arg=arg)


def spectral_distance(model, lams):
    """Distance to the spectrum closure: (achieved, lower bound, nearest point)."""
    res = sup_spectral_functional(model, lams, (), 1)
    with np.errstate(divide="ignore"):
        return 1.0 / res.value, 1.0 / res.upper, res.arg


def resolvent_norm_batch(model, lams, floor=1e-13):
    """Resolvent norms for diagonal models: (value, upper).

    ``value = 1 / dist(lam, spectrum)`` through the achieved bracket side.
    Raises :class:`SpectrumHit` when any point is within ``floor`` of the
    spectrum.
    """
    lams = as_batch(lams)
    res = sup_spectral_functional(model, lams, (), 1)
    dist_low = 1.0 / res.upper
    hit = dist_low <= floor
    if np.any(hit):
        i = int(np.argmax(hit))
        raise SpectrumHit(
            f"evaluation point {lams[i]} is within {floor} of the spectrum",
            lam=complex(lams[i]), distance=float(dist_low[i]),
        )
    return res.value, res.upper


def factor_power_norm(model, point_index, exponent):
    """Operator norm of a fractional unit-factor power, ``||(1-e^{-i phi_k}A)**theta||``.

    Returns ``inf`` when the exponent is negative and the entries accumulate
    at the point (the inverse factor is unbounded there).
    """
    if not model.unit_points:
        raise ValueError("unit factors need a model with distinguished unit points")
    weights = [0.0] * len(model.unit_points)
    weights[point_index] = exponent
    if exponent < 0 and model.rule is not None:
        return np.inf
    res = sup_spectral_functional(model, np.array([0.0 + 0.0j]), tuple(weights), 0)
    return float(res.upper[0])


def tail_min_dist(model, lams):
    """Lower bound on the distance from each point to the un-realized tail curves."""
    lams = as_batch(lams)
    if model.rule is None:
        return np.full(len(lams), np.inf)
    zero_w = tuple(0.0 for _ in model.unit_points)
    out = np.full(len(lams), np.inf)
    near = np.zeros(len(lams), dtype=bool)
    for k in range(model.rule.n_points):
        rad = model.rule.tail_radius(k, model.n_max)
        crude = np.abs(lams - np.exp(1j * model.unit_points[k])) - rad
        out = np.minimum(out, crude)
        near |= crude < 3.0 * rad
    if np.any(near):
        # close to some cluster: sharpen with the bracketed curve supremum
        sel = np.flatnonzero(near)
        best = np.full(len(sel), -np.inf)
        for k in range(model.rule.n_points):
            _, _, cont = _tail_sup_class(model, k, lams[sel], zero_w, 1)
            best = np.maximum(best, cont)
        with np.errstate(divide="ignore", over="ignore"):
            out[sel] = 1.0 / np.exp(best)
    return out


# ---------------------------------------------------------------------------
# series over the entry sequence (pair sums with kernels)
# ---------------------------------------------------------------------------


def _gl_panel_nodes(edges):
    """Gauss-Legendre nodes/weights on consecutive [edges[i], edges[i+1]] panels."""
    x, w = _GL8
    lo = edges[:-1]
    hi = edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return nodes, wts


class PairSums:
    """Series ``sum_n conj(L_i(n)) R_j(n) * weight(a_n) * kernel(lam, a_n)``.

    ``L_i`` and ``R_j`` are column sequences attached to the model,
    ``weight(a) = prod_j |1 - e^{-i phi_j} a|**u_j`` a nonnegative entrywise
    weight (used for smoothing exponents), and the kernel one of

    * ``"none"``   : 1 (lam-independent Gram),
    * ``"resolvent"``: 1 / (lam - a)  (transfer sums),
    * ``"abs2"``   : 1 / |lam - a|**2 (resolvent-column Grams).

    Head terms are exact; tail terms of rule-backed models are summed exactly
    over a resonance window where needed and bounded by envelope integrals
    elsewhere.  Results are (value, err) with ``err`` a bound on the absolute
    truncation remainder (in the summed-entry L1 sense, which dominates the
    2-norm error of the matrix value).
    """

    def __init__(self, model, left_cols, right_cols, weight_exponents=None):
        if model.kind != "diagonal":
            raise ValueError("PairSums expects a diagonal model")
        self.model = model
        self.left = tuple(left_cols)
        self.right = tuple(right_cols)
        n_pts = len(model.unit_points)
        self.u = tuple(weight_exponents) if weight_exponents is not None else tuple([0.0] * n_pts)
        if n_pts and len(self.u) != n_pts:
            raise ValueError("weight exponents must align with unit points")
        self._check_convergence()
        idx = np.arange(1, model.n_max + 1)
        Lh = np.column_stack([c.values(model, idx) for c in self.left])
        Rh = np.column_stack([c.values(model, idx) for c in self.right])
        wh = self._weight_on(model.entries)
        self._P = (np.conj(Lh)[:, :, None] * Rh[:, None, :]) * wh[:, None, None]
        self._P_flat = self._P.reshape(model.n_max, -1)
        self._pl = len(self.left)
        self._pr = len(self.right)

    # -- structural helpers -------------------------------------------------

    def _weight_on(self, a):
        if not any(self.u):
            return np.ones(np.shape(a), dtype=float)
        out = np.ones(np.shape(a), dtype=float)
        for phi, u in zip(self.model.unit_points, self.u):
            if u != 0.0:
                out = out * np.abs(1.0 - np.exp(-1j * phi) * a) ** u
        return out

    def _check_convergence(self):
        # along a class curve |1 - e^{-i phi_k} a| ~ theta and theta = 1/m, so a
        # pair term decays like m**(-(wL + tL + wR + tR + u_k)); the series needs
        # that exponent above 1 for the slowest column pair
        model = self.model
        if model.rule is None:
            return

        def slowest(col_set):
            rates = [sum(c.decay_exponents(model)) for c in col_set]
            return min(rates) if rates else np.inf

        rate = slowest(self.left) + slowest(self.right)
        if np.isinf(rate):
            return
        for k in range(model.rule.n_points):
            u_k = self.u[k] if self.u else 0.0
            sigma = rate + u_k
            if sigma <= 1.0 + 1e-9:
                raise RangeViolation(
                    "smoothed column series diverges "
                    f"(pair decay exponent {sigma:.3g} <= 1 at unit point {k})"
                )

    def _pair_env(self, k, theta, a=None):
        """Envelope sum_{i,j} |L_i| |R_j| * weight along the class-k curve."""
        model = self.model
        if a is None:
            a = model.rule.curve(k, theta)
        w = self._weight_on(a)
        lsum = np.zeros(np.shape(theta), dtype=float)
        for c in self.left:
            lsum = lsum + np.abs(self._curve_col(c, k, theta, a))
        rsum = np.zeros(np.shape(theta), dtype=float)
        for c in self.right:
            rsum = rsum + np.abs(self._curve_col(c, k, theta, a))
        return lsum * rsum * w

    def _curve_col(self, col, k, theta, a):
        from .models import ExplicitColumn, SmoothedPowerColumn

        if isinstance(col, ExplicitColumn):
            return np.zeros(np.shape(theta), dtype=float)
        if isinstance(col, SmoothedPowerColumn):
            model = self.model
            n_cont = (1.0 / np.asarray(theta) - 1.0) * model.rule.n_points + k + 1
            out = np.full(np.shape(theta), abs(complex(col.scale)), dtype=float)
            if col.w != 0.0:
                for phi in model.unit_points:
                    out = out * np.abs(1.0 - np.exp(-1j * phi) * a) ** col.w
            return out / n_cont**col.t
        raise TypeError(f"unknown column type {type(col)!r}")

    # -- lam-free series -----------------------------------------------------

    def series(self, rtol=1e-12, kernel_fn=None, kernel_env=None):
        """Full series value as a (pl, pr) matrix plus remainder bound.

        ``kernel_fn(a, idx)`` optionally multiplies each term (must be bounded
        on the tail and covered by ``kernel_env(theta)`` along the curves).
        """
        model = self.model
        if kernel_fn is None:
            head = self._P.sum(axis=0)
        else:
            kv = kernel_fn(model.entries, np.arange(1, model.n_max + 1))
            head = (self._P * kv[:, None, None]).sum(axis=0)
        value = head
        err = 0.0
        if model.rule is None:
            return value, err
        for k in range(model.rule.n_points):
            v_k, e_k = self._series_class(k, rtol, kernel_fn, kernel_env)
            value = value + v_k
            err += e_k
        return value, err

    def _constant_phase_matrix(self):
        """Unit phases conj(s_i) s_j when every pair has constant tail phase, else None.

        Smoothed-power pairs with equal factor exponent ``w`` produce tail terms
        of the form (constant unit phase) * (positive magnitude), which allows
        the integral-test remainder fold.  Explicit columns vanish on the tail
        and are compatible with anything.
        """
        from .models import ExplicitColumn, SmoothedPowerColumn

        ws = set()
        for col in (*self.left, *self.right):
            if isinstance(col, ExplicitColumn):
                continue
            if not isinstance(col, SmoothedPowerColumn):
                return None
            ws.add(float(col.w))
        if len(ws) > 1:
            return None

        def phase(col):
            if isinstance(col, ExplicitColumn):
                return 0.0
            s = complex(col.scale)
            return s / abs(s) if s != 0 else 0.0

        lp = np.array([phase(c) for c in self.left], dtype=complex)
        rp = np.array([phase(c) for c in self.right], dtype=complex)
        return np.conj(lp)[:, None] * rp[None, :]

    def _pair_mag(self, k, theta, kernel_env):
        """Per-pair tail magnitudes |L_i| |R_j| w kernel along the curve: (len, pl, pr)."""
        model = self.model
        a = model.rule.curve(k, theta)
        w = self._weight_on(a)
        if kernel_env is not None:
            w = w * kernel_env(theta)
        labs = np.stack([np.abs(self._curve_col(c, k, theta, a)) for c in self.left], axis=-1)
        rabs = np.stack([np.abs(self._curve_col(c, k, theta, a)) for c in self.right], axis=-1)
        return labs[..., :, None] * rabs[..., None, :] * w[..., None, None]

    def _series_class(self, k, rtol, kernel_fn, kernel_env):
        model = self.model
        rule = model.rule
        m0 = rule.m_start(k, model.n_max)
        total = np.zeros((self._pl, self._pr), dtype=complex)
        m_lo = m0
        block = max(m0, 4096)
        phases = self._constant_phase_matrix()
        budget = 1 << 25
        while m_lo < m0 + budget:
            m_hi = m_lo + min(block, 1 << 21)
            ms = np.arange(m_lo, m_hi)
            idx = rule.index_of(k, ms)
            a = rule.curve(k, 1.0 / ms)
            w = self._weight_on(a)
            term = w
            if kernel_fn is not None:
                term = term * kernel_fn(a, idx)
            Lv = np.column_stack([c.values(model, idx) for c in self.left])
            Rv = np.column_stack([c.values(model, idx) for c in self.right])
            total = total + np.einsum("ni,nj,n->ij", np.conj(Lv), Rv, term)
            th_cap = 1.0 / m_hi
            env = lambda th: np.sum(self._pair_mag(k, th, kernel_env), axis=(-2, -1))
            rem = _env_tail_integral(env, th_cap) + float(env(np.array([th_cap]))[0])
            scale = float(np.sum(np.abs(total))) + 1e-300
            if rem <= rtol * scale or rem < 1e-280:
                return total, rem
            if phases is not None and m_hi >= 32 * max(model.n_max, m0):
                mono = self._pair_mag(k, th_cap * np.array([1.0, 0.5, 0.25]), kernel_env)
                mono = mono.sum(axis=(-2, -1))
                if mono[0] >= mono[1] >= mono[2]:
                    # integral-test fold: remainder of each positive pair series
                    # lies in [I, I + first term]; fold the midpoint, keep half
                    # the first term as the certified error
                    I_pair = _pair_tail_integrals(
                        lambda th: self._pair_mag(k, th, kernel_env), th_cap,
                        (self._pl, self._pr),
                    )
                    first = self._pair_mag(k, np.array([th_cap]), kernel_env)[0]
                    total = total + phases * (I_pair + 0.5 * first)
                    return total, 0.5 * float(np.sum(first))
            m_lo = m_hi
            block *= 2
        raise TailInconclusive(
            f"series over class {k} did not settle within the block budget"
        )

    # -- lam-dependent sums ---------------------------------------------------

    def evaluate(self, lams, kernel="abs2", rtol=1e-9, window=512, tail_dist=None):
        """Evaluate the sums at a batch of resolvent-set points.

        Returns ``(values, err)`` with ``values`` of shape (B, pl, pr).
        """
        model = self.model
        lams = as_batch(lams)
        memo_key = (hash(lams.tobytes()), kernel, rtol, window,
                    None if tail_dist is None else hash(np.asarray(tail_dist).tobytes()))
        if getattr(self, "_eval_memo_key", None) == memo_key:
            values, err = self._eval_memo
            return values.copy(), err.copy()
        B = len(lams)
        s2 = 1 if kernel == "resolvent" else 2
        # head
        values = np.empty((B, self._pl * self._pr), dtype=complex)
        rows = max(1, int(2_000_000 // max(model.n_max, 1)))
        for lo in range(0, B, rows):
            diff = lams[lo : lo + rows, None] - model.entries[None, :]
            if kernel == "resolvent":
                K = 1.0 / diff
            else:
                K = 1.0 / (diff.real**2 + diff.imag**2)
            values[lo : lo + rows] = K @ self._P_flat
        values = values.reshape(B, self._pl, self._pr)
        err = np.zeros(B)
        if model.rule is None:
            return values, err

        if tail_dist is None:
            tail_dist = tail_min_dist(model, lams)
        for k in range(model.rule.n_points):
            mass = self._tail_mass(k)
            if mass == 0.0:
                continue
            quick = mass / np.maximum(tail_dist, 1e-300) ** s2
            scale = np.sum(np.abs(values.reshape(B, -1)), axis=1) + 1e-300
            flagged = quick > rtol * scale
            # points well clear of the cluster keep the mass/dist bound: there
            # the per-point integral sharpens it by < (1 + 2/16)**2 anyway
            far = tail_dist >= 16.0 * model.rule.tail_radius(k, model.n_max)
            err = err + np.where(flagged & ~far, 0.0, quick)
            flagged &= ~far
            if not np.any(flagged):
                continue
            sel = np.flatnonzero(flagged)
            v_add, e_add = self._tail_exact(k, lams[sel], kernel, window)
            values[sel] += v_add
            err[sel] += e_add
        self._eval_memo_key = memo_key
        self._eval_memo = (values.copy(), err.copy())
        return values, err

    def _tail_mass(self, k):
        if not hasattr(self, "_mass_cache"):
            self._mass_cache = {}
        if k not in self._mass_cache:
            rule = self.model.rule
            m0 = rule.m_start(k, self.model.n_max)
            th_cap = 1.0 / m0
            env = lambda th: self._pair_env(k, th)
            self._mass_cache[k] = _env_tail_integral(env, th_cap) + float(env(np.array([th_cap]))[0])
        return self._mass_cache[k]

    def _tail_exact(self, k, lams, kernel, window):
        """Exact resonance window plus envelope-integral remainder, batched."""
        model = self.model
        rule = model.rule
        phi_k = model.unit_points[k]
        m0 = rule.m_start(k, model.n_max)
        th_hi = 1.0 / m0
        B = len(lams)
        s2 = 1 if kernel == "resolvent" else 2
        vals = np.zeros((B, self._pl, self._pr), dtype=complex)
        delta = np.angle(lams * np.exp(-1j * phi_k))  # signed offset in (-pi, pi]
        win = (delta > 0.0) & (delta <= th_hi * (1 + 1e-12))
        res_lo = np.zeros(B)
        res_hi = np.zeros(B)
        if np.any(win):
            sel = np.flatnonzero(win)
            m_star = np.maximum(np.rint(1.0 / delta[sel]).astype(np.int64), m0)
            w_lo = np.maximum(m_star - window, m0)
            w_hi = m_star + window
            # padded resonance windows: rows clamp at w_hi, clamped slots masked
            off = np.arange(2 * window + 1, dtype=np.int64)
            ms = w_lo[:, None] + off[None, :]
            live = ms <= w_hi[:, None]
            ms = np.where(live, ms, w_hi[:, None])
            idx = rule.index_of(k, ms)
            a = rule.curve(k, 1.0 / ms)
            w = self._weight_on(a) * live
            diff = lams[sel, None] - a
            Kv = 1.0 / diff if kernel == "resolvent" else 1.0 / np.abs(diff) ** 2
            Lv = np.stack([c.values(model, idx) for c in self.left], axis=-1)
            Rv = np.stack([c.values(model, idx) for c in self.right], axis=-1)
            vals[sel] = np.einsum("bni,bnj,bn->bij", np.conj(Lv), Rv, w * Kv)
            res_lo[sel] = 1.0 / w_hi
            res_hi[sel] = 1.0 / w_lo
        floor = th_hi * 1e-12
        lo_cut = np.minimum(np.maximum(res_lo, floor), th_hi)
        hi_cut = np.minimum(np.maximum(res_hi, floor), th_hi)
        errs = self._segment_bound(k, lams, s2, np.full(B, floor),
                                   np.where(win, lo_cut, th_hi))
        if np.any(win):
            errs = errs + self._segment_bound(k, lams, s2,
                                              np.where(win, hi_cut, 0.0),
                                              np.where(win, th_hi, 0.0))
        return vals, errs

    def _segment_bound(self, k, lams, s2, lo, hi, n_panels=72, chunk=2048):
        """Integral-test bound of the lattice sum over theta in [lo, hi].

        Per point the lattice sum over {theta = 1/m} inside the segment is at
        most the integral of env/dist**s2 d(theta)/theta**2 plus the larger
        endpoint term.  Zero-width segments contribute zero.
        """
        rule = self.model.rule
        x, wgl = _GL8
        out = np.zeros(len(lams))
        act = np.flatnonzero(hi > lo)
        t = np.linspace(0.0, 1.0, n_panels + 1)
        for s in range(0, len(act), chunk):
            rows = act[s : s + chunk]
            l, h = lo[rows], hi[rows]
            edges = l[:, None] * (h / l)[:, None] ** t[None, :]
            mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
            half = 0.5 * (edges[:, 1:] - edges[:, :-1])
            nodes = (mid[:, :, None] + half[:, :, None] * x).reshape(len(rows), -1)
            wts = (half[:, :, None] * wgl).reshape(len(rows), -1)
            a = rule.curve(k, nodes)
            env = self._pair_env(k, nodes, a=a)
            d = np.abs(lams[rows, None] - a)
            integral = np.sum(env / np.maximum(d, 1e-300) ** s2 / nodes**2 * wts,
                              axis=1)
            ends = np.stack([l, h], axis=1)
            a_e = rule.curve(k, ends)
            d_e = np.abs(lams[rows, None] - a_e)
            ev = self._pair_env(k, ends, a=a_e) / np.maximum(d_e, 1e-300) ** s2
            out[rows] = integral + np.max(ev, axis=1)
        return out


def _pair_tail_integrals(mag_fn, theta_cap, shape, n_panels=96):
    """Per-pair ``integral_0^{theta_cap} mag(theta)/theta**2 dtheta`` (matrix valued)."""
    edges = np.geomspace(theta_cap * 1e-12, theta_cap, n_panels + 1)
    nodes, wts = _gl_panel_nodes(edges)
    vals = mag_fn(nodes) / nodes[:, None, None] ** 2
    panel = (vals * wts[:, None, None]).reshape(n_panels, -1, *shape).sum(axis=1)
    total = panel.sum(axis=0)
    p0 = float(panel[0].sum())
    p1 = float(panel[1].sum())
    if p1 > 0 and p0 < 0.9 * p1:
        total = total + panel[0] * (p0 / p1) / (1.0 - p0 / p1)
    elif p0 > 0:
        raise TailInconclusive("pair tail integral is not settling toward theta -> 0")
    return total


def _env_tail_integral(env_fn, theta_cap, n_panels=96):
    """Upper bound for sum over lattice theta=1/m below theta_cap via the integral test."""
    if theta_cap <= 0:
        return 0.0
    edges = np.geomspace(theta_cap * 1e-12, theta_cap, n_panels + 1)
    nodes, wts = _gl_panel_nodes(edges)
    vals = env_fn(nodes) / nodes**2
    panel = (vals * wts).reshape(n_panels, -1).sum(axis=1)
    total = float(panel.sum())
    # extrapolate the geometric decay below the smallest panel
    p0 = float(panel[0])
    p1 = float(panel[1]) if n_panels > 1 else 1.0
    if p1 > 0 and p0 < 0.9 * p1:
        ratio = p0 / p1
        total += p0 * ratio / (1.0 - ratio)
    elif p0 > 0:
        raise TailInconclusive("tail envelope integral is not settling toward theta -> 0")
    return total


# ---------------------------------------------------------------------------
# closed-form circle integrals (quadrature oracle for diagonal models)
# ---------------------------------------------------------------------------


def circle_integral_closed_form(model, cols, r, weight_exponents=None):
    """Exact ``integral_0^{2pi} sum_j ||R(r e^{i phi}) v_j||**2 dphi`` for diagonal models.

    Uses the entrywise identity ``integral dphi / |r e^{i phi} - a|**2
    = 2 pi / (r**2 - |a|**2)`` valid for ``|a| < r``.  Returns (value, err).
    """
    if r <= 1.0:
        raise ValueError("closed-form circle integral needs r > 1")
    ps = PairSums(model, cols, cols, weight_exponents)

    def kernel(a, idx):
        return 2.0 * np.pi / (r**2 - np.abs(a) ** 2)

    def kernel_env(theta):
        return 2.0 * np.pi / (r**2 - 1.0)

    value, err = ps.series(kernel_fn=kernel, kernel_env=kernel_env)
    return float(np.real(np.trace(value))), err


# ---------------------------------------------------------------------------
# dense helpers
# ---------------------------------------------------------------------------


def dense_resolvent_norm(matrix, lam, floor=1e-13):
    """Resolvent norm of a dense matrix via the smallest singular value."""
    n = matrix.shape[0]
    mat = lam * np.eye(n) - matrix
    smin = float(np.linalg.svd(mat, compute_uv=False)[-1])
    if smin <= floor:
        raise SpectrumHit(f"evaluation point {lam} is numerically on the spectrum",
                          lam=complex(lam), distance=smin)
    return 1.0 / smin


def batched_operator_norm(apply_fn, adjoint_fn, shape, tol=1e-8, cap=500):
    """Largest singular value of a batch of linear maps via power iteration.

    ``apply_fn`` / ``adjoint_fn`` map (B, n) state blocks; iteration runs on
    the Gram composition until the Rayleigh estimate settles to relative
    ``tol`` or the cap is reached.  Deterministic start vector.

    Returns (sigma (B,), iterations, converged (B,) bool).
    """
    B, n = shape
    i = np.arange(1, n + 1)
    x = (1.0 + 0.25 * np.sin(i) + 0.1j * np.cos(2.0 * i)) / np.sqrt(n)
    X = np.broadcast_to(x, (B, n)).copy()
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    sigma = np.zeros(B)
    converged = np.zeros(B, dtype=bool)
    it = 0
    for it in range(1, cap + 1):
        Y = adjoint_fn(apply_fn(X))
        num = np.real(np.einsum("bi,bi->b", np.conj(X), Y))
        sigma_new = np.sqrt(np.maximum(num, 0.0))
        norms = np.linalg.norm(Y, axis=1, keepdims=True)
        ok = norms[:, 0] > 0
        X = np.where(ok[:, None], Y / np.maximum(norms, 1e-300), X)
        done = np.abs(sigma_new - sigma) <= tol * np.maximum(sigma_new, 1e-300)
        converged |= done & (it > 2)
        sigma = sigma_new
        if np.all(converged):
            break
    return sigma, it, converged
