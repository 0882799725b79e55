"""Rank-one robust SVD fit by alternating weighted regressions.

The estimator minimizes the density power divergence objective h (see
objective.py) over (lambda, u, v, sigma2) with unit-norm u, v. Each outer
iteration runs a row regression for u, a column regression for v (both
backtracked so h never increases), and a self-consistent scale update.
After a warm-up the iteration is accelerated by squared extrapolation of
the fixed-point map, and every accelerated state is re-checked against h.

Plain alternating descent stalls inside a float-flat region around the
minimizer (step-to-step h differences underflow double precision long
before the parameters agree to 1e-10 across equivalent problem instances),
so converged fits are polished by a bordered Newton method with analytic
derivatives; the polish lands on the exact stationary point at float
resolution, which makes independently computed fits of scaled or permuted
data agree to machine precision.
"""
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateWeights, NonFiniteInput
from .objective import check_alpha, h_value, weights

PLAIN_FIRST = 10       # plain cycles before extrapolation kicks in
SIG_CAP = 0.5          # sigma^2 may shrink at most 2x per outer iteration
SPIKE_FACTOR = 4.0     # restart when lambda exceeds this multiple of sigma_1
SCREEN_K = 2.0         # init screening threshold in robust sd units


@dataclass
class Rank1Fit:
    """Result of a rank-one fit.

    lambda_ is the singular value (>= 0), u and v the unit singular
    vectors (largest-|u| entry positive), sigma2 the noise variance
    (>= the floor), trace the objective value per iteration.
    """
    lambda_: float
    u: np.ndarray
    v: np.ndarray
    sigma2: float
    iterations: int
    converged: bool
    trace: np.ndarray


@dataclass
class SolverOptions:
    """Solver configuration.

    init selects the starting point: "screened" (default) takes the top
    SVD pair of an outlier-screened copy of the data; "classical" the top
    SVD pair of the data itself; "random" seeded random unit vectors
    (set seed); a Rank1Fit or (lambda, u, v, sigma2) tuple is used as is.
    eps_sigma overrides the sigma2 floor (default 1e-10 max(1, mean X^2)).
    """
    alpha: float = 0.0
    tol: float = 1e-8
    max_iter: int = 100
    eps_sigma: float | None = None
    init: object = "screened"
    seed: int | None = None

    def __post_init__(self):
        self.alpha = check_alpha(self.alpha)
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        self.max_iter = int(self.max_iter)


def _as_init_tuple(init):
    if isinstance(init, Rank1Fit):
        return (float(init.lambda_), np.asarray(init.u, dtype=float),
                np.asarray(init.v, dtype=float), float(init.sigma2))
    lam, u, v, s2 = init
    return (float(lam), np.asarray(u, dtype=float),
            np.asarray(v, dtype=float), float(s2))


def _project_unit(w, ortho, what):
    if ortho is not None and ortho.shape[1]:
        w = w - ortho @ (ortho.T @ w)
        nw = np.linalg.norm(w)
        if nw <= 1e-12:
            raise FloatingPointError(f"degenerate {what} direction")
        w = w / nw
    return w


def _orient(u, v, M):
    """Canonical orientation: largest-|u| entry positive, then u'Mv >= 0."""
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0:
        u = -u
    d = float(u @ M @ v)
    if d < 0:
        v = -v
        d = -d
    return u, v, d


def _residual_scale2(X, lam, u, v, eps):
    e = X - lam * np.outer(u, v)
    return max((1.4826 * float(np.median(np.abs(e)))) ** 2, eps)


def _screened_init(X, ortho_u, ortho_v, eps, k=SCREEN_K):
    """Top SVD pair of the data with gross cells zeroed out first."""
    s = 1.4826 * float(np.median(np.abs(X)))
    if s <= 0:
        s = float(np.mean(np.abs(X))) or 1.0
    Xs = np.where(np.abs(X) <= k * s, X, 0.0)
    if not np.any(Xs):
        Xs = X
    Uc, _, Vct = np.linalg.svd(Xs, full_matrices=False)
    u = _project_unit(Uc[:, 0], ortho_u, "row")
    v = _project_unit(Vct[0], ortho_v, "column")
    u, v, d = _orient(u, v, Xs)
    lam = d if d > 0 else np.sqrt(eps)
    return lam, u, v, _residual_scale2(X, lam, u, v, eps)


def _classical_init(X, ortho_u, ortho_v, eps):
    Uc, _, Vct = np.linalg.svd(X, full_matrices=False)
    u = _project_unit(Uc[:, 0], ortho_u, "row")
    v = _project_unit(Vct[0], ortho_v, "column")
    u, v, d = _orient(u, v, X)
    lam = d if d > 0 else np.sqrt(eps)
    return lam, u, v, _residual_scale2(X, lam, u, v, eps)


def _random_init(X, ortho_u, ortho_v, eps, seed):
    rng = np.random.default_rng(seed)
    u = _project_unit(rng.standard_normal(X.shape[0]), ortho_u, "row")
    u = u / np.linalg.norm(u)
    v = _project_unit(rng.standard_normal(X.shape[1]), ortho_v, "column")
    v = v / np.linalg.norm(v)
    u, v, d = _orient(u, v, X)
    lam = d if d > 0 else np.sqrt(eps)
    return lam, u, v, _residual_scale2(X, lam, u, v, eps)


def _descent_step(X, target, cur, other, s2, alpha, h_cur, left, ortho):
    """Move from cur toward target, halving until h strictly decreases."""
    t = 1.0
    for _ in range(40):
        cand = cur + t * (target - cur)
        if ortho is not None and ortho.shape[1]:
            cand = cand - ortho @ (ortho.T @ cand)
        e = X - (np.outer(cand, other) if left else np.outer(other, cand))
        h = h_value(e, s2, alpha)
        if h < h_cur:
            return cand, h, e, True
        t *= 0.5
    e = X - (np.outer(cur, other) if left else np.outer(other, cur))
    return cur, h_value(e, s2, alpha), e, False


def _sigma_solve(e, s2, alpha, eps, floor):
    """Iterate the scale update to its float fixpoint, bounded below."""
    c_sig = alpha * (1.0 + alpha) ** -1.5
    lo = max(eps, floor)
    prev = -1.0
    for _ in range(200):
        W = weights(e, s2, alpha)
        den = np.mean(W) - c_sig
        if den <= 0:
            return s2
        s2_new = np.mean(e * e * W) / den
        if s2_new < lo:
            return lo
        if s2_new == s2 or s2_new == prev:
            # 2-cycle at float resolution: keep the lower branch
            return min(s2, s2_new) if s2_new == prev else s2_new
        prev = s2
        s2 = s2_new
    return s2


def _one_cycle(X, alpha, lam, u, v, s2, h, e, ortho_u, ortho_v, eps):
    W = weights(e, s2, alpha)
    den_u = W @ (v * v)
    if np.any(den_u <= 1e-300):
        raise DegenerateWeights("all row weights collapsed")
    a_t = ((X * W) @ v) / den_u
    if ortho_u is not None and ortho_u.shape[1]:
        a_t = a_t - ortho_u @ (ortho_u.T @ a_t)
    a, h, e, _ = _descent_step(X, a_t, lam * u, v, s2, alpha, h, True, ortho_u)
    lam_mid = np.linalg.norm(a)
    if lam_mid <= 0:
        raise FloatingPointError("rank collapse")
    u = a / lam_mid
    W = weights(e, s2, alpha)
    den_v = W.T @ (u * u)
    if np.any(den_v <= 1e-300):
        raise DegenerateWeights("all column weights collapsed")
    b_t = ((X * W).T @ u) / den_v
    if ortho_v is not None and ortho_v.shape[1]:
        b_t = b_t - ortho_v @ (ortho_v.T @ b_t)
    b, h, e, _ = _descent_step(X, b_t, lam_mid * v, u, s2, alpha, h, False, ortho_v)
    lam = np.linalg.norm(b)
    if lam <= 0:
        raise FloatingPointError("rank collapse")
    v = b / lam
    s2_c = _sigma_solve(e, s2, alpha, eps, floor=SIG_CAP * s2)
    h_c = h_value(e, s2_c, alpha)
    if h_c <= h:
        s2, h = s2_c, h_c
    return lam, u, v, s2, h, e


def _cell_derivs(X, a, b, t, alpha):
    """Residuals and per-cell derivatives of the cell divergence.

    Returns (e, P, Q, R, S, T2): P = dV/de, Q = d2V/de2, R = dV/dt,
    S = d2V/de dt, T2 = d2V/dt2, in the coordinates (a, b, t = ln sigma2).
    """
    e = X - np.outer(a, b)
    s2 = np.exp(t)
    if alpha == 0.0:
        P = e / s2
        Q = np.full_like(e, 1.0 / s2)
        R = -e * e / (2.0 * s2) + 0.5
        S = -e / s2
        T2 = e * e / (2.0 * s2)
        return e, P, Q, R, S, T2
    c1 = (1.0 + alpha) ** -0.5
    c2 = 1.0 + 1.0 / alpha
    pre = np.exp(-alpha * t / 2.0)
    w = np.exp(-alpha * e * e / (2.0 * s2))
    P = pre * c2 * w * (alpha * e / s2)
    Q = pre * c2 * (alpha / s2) * w * (1.0 - alpha * e * e / s2)
    V = pre * (c1 - c2 * w)
    G = P * e / 2.0
    R = -(alpha / 2.0) * V - G
    S = P * (-alpha / 2.0 - 1.0 + alpha * e * e / (2.0 * s2))
    T2 = -(alpha / 2.0) * R - G * (-alpha / 2.0 + alpha * e * e / (2.0 * s2) - 1.0)
    return e, P, Q, R, S, T2


def _solve_bordered(Da, Db, M, wa, wb, htt, B, g, tau):
    """Newton step of the bordered system; None when the step must be damped.

    The Hessian has diagonal a-a and b-b blocks, dense a-b coupling, a scale
    border, and Lagrange columns B (gauge plus orthogonality constraints).
    Small systems are solved densely; large ones by Schur elimination of the
    diagonal a-block, O(n p^2) instead of O((n+p)^3).
    """
    n = Da.shape[0]
    p = Db.shape[0]
    dim = n + p + 1
    nc = B.shape[1]
    if dim + nc <= 64:
        H = np.zeros((dim + nc, dim + nc))
        H[:n, :n] = np.diag(Da + tau)
        H[n:n + p, n:n + p] = np.diag(Db + tau)
        H[:n, n:n + p] = M
        H[n:n + p, :n] = M.T
        H[:n, dim - 1] = wa
        H[dim - 1, :n] = wa
        H[n:n + p, dim - 1] = wb
        H[dim - 1, n:n + p] = wb
        H[dim - 1, dim - 1] = htt + tau
        H[:dim, dim:] = B
        H[dim:, :dim] = B.T
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return None
        return d[:dim]
    D = Da + tau
    if np.min(D) <= 1e-300:
        return None
    C = np.concatenate([M, wa[:, None], B[:n]], axis=1)
    m = p + 1 + nc
    E = np.zeros((m, m))
    E[:p, :p] = np.diag(Db + tau)
    E[:p, p] = wb
    E[p, :p] = wb
    E[p, p] = htt + tau
    E[:p, p + 1:] = B[n:n + p]
    E[p + 1:, :p] = B[n:n + p].T
    E[p, p + 1:] = B[dim - 1]
    E[p + 1:, p] = B[dim - 1]
    r1 = -g[:n]
    r2 = np.concatenate([-g[n:n + p], [-g[dim - 1]], np.zeros(nc)])
    CD = C / D[:, None]
    S = E - C.T @ CD
    try:
        y = np.linalg.solve(S, r2 - CD.T @ r1)
    except np.linalg.LinAlgError:
        return None
    da = (r1 - C @ y) / D
    return np.concatenate([da, y[:p + 1]])


def _newton_polish(X, lam, u, v, s2, alpha, eps, ortho_u=None, ortho_v=None,
                   max_polish=40):
    """Drive a converged fit to the exact stationary point of h.

    Full Newton in (a, b, ln sigma2) with the scaling gauge (a, -b, 0) and
    any orthogonality constraints as Lagrange borders. Steps are trust
    capped, damped when the system is indefinite, and only accepted when h
    does not increase, so the descent trace stays monotone.
    """
    n, p = X.shape
    N = n * p
    a = lam * u
    b = v.copy()
    t = float(np.log(s2))
    t_floor = float(np.log(eps))
    h = h_value(X - np.outer(a, b), np.exp(t), alpha)
    tau = 0.0
    for _ in range(max_polish):
        e, P, Q, R, S, T2 = _cell_derivs(X, a, b, t, alpha)
        ga = -(P @ b) / N
        gb = -(P.T @ a) / N
        gt = float(np.sum(R)) / N
        Da = (Q @ (b * b)) / N
        Db = (Q.T @ (a * a)) / N
        M = (Q * np.outer(a, b) - P) / N
        wa = -(S @ b) / N
        wb = -(S.T @ a) / N
        htt = float(np.sum(T2)) / N
        dim = n + p + 1
        z = np.concatenate([a, -b, [0.0]])
        z = z / np.linalg.norm(z)
        cols = [z]
        if ortho_u is not None and ortho_u.shape[1]:
            for k in range(ortho_u.shape[1]):
                cvec = np.zeros(dim)
                cvec[:n] = ortho_u[:, k]
                cols.append(cvec)
        if ortho_v is not None and ortho_v.shape[1]:
            for k in range(ortho_v.shape[1]):
                cvec = np.zeros(dim)
                cvec[n:n + p] = ortho_v[:, k]
                cols.append(cvec)
        B = np.column_stack(cols)
        g = np.concatenate([ga, gb, [gt], np.zeros(B.shape[1])])
        cap = 1e-3 * (1.0 + max(np.max(np.abs(a)), np.max(np.abs(b)), abs(t)))
        ok = False
        for _try in range(12):
            d = _solve_bordered(Da, Db, M, wa, wb, htt, B, g, tau)
            if d is None:
                tau = max(10.0 * tau, 1e-8 * (1.0 + abs(htt)))
                continue
            dn = np.max(np.abs(d))
            if not np.isfinite(dn) or dn > cap:
                tau = max(10.0 * tau, 1e-8 * (1.0 + abs(htt)))
                continue
            an = a + d[:n]
            bn = b + d[n:n + p]
            tn = max(t + d[dim - 1], t_floor)
            hn = h_value(X - np.outer(an, bn), np.exp(tn), alpha)
            if np.isfinite(hn) and hn <= h + 1e-14 * (1.0 + abs(h)):
                ok = True
                break
            tau = max(10.0 * tau, 1e-8 * (1.0 + abs(htt)))
        if not ok:
            break
        step = max(np.max(np.abs(an - a)) / (1.0 + np.max(np.abs(a))),
                   np.max(np.abs(bn - b)), abs(tn - t))
        a, b, t, h = an, bn, tn, hn
        tau = tau / 4.0 if tau > 1e-300 else 0.0
        if step < 1e-15:
            break
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na <= 0 or nb <= 0 or not np.isfinite(na * nb):
        return lam, u, v, s2, h_value(X - lam * np.outer(u, v), s2, alpha)
    u_o = a / na
    v_o = b / nb
    i = int(np.argmax(np.abs(u_o)))
    if u_o[i] < 0:
        u_o, v_o = -u_o, -v_o
    return na * nb, u_o, v_o, float(np.exp(t)), h


def sigma_floor(X, eps_sigma=None):
    """sigma^2 floor: explicit override or 1e-10 max(1, mean X^2)."""
    if eps_sigma is not None:
        return float(eps_sigma)
    return 1e-10 * max(1.0, float(np.mean(X * X)))


def _check_input(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("X contains non-finite entries")
    if min(X.shape) < 2:
        raise ValueError("X must have at least 2 rows and 2 columns")
    return X


def _solve(X, opts, ortho_u=None, ortho_v=None, polish=True):
    """Internal driver; returns a dict so callers can extend diagnostics."""
    alpha = opts.alpha
    tol = opts.tol
    max_iter = opts.max_iter
    n, p = X.shape
    eps = sigma_floor(X, opts.eps_sigma)
    scale = np.sqrt(max(float(np.mean(X * X)), 1e-300))
    sig1 = np.linalg.svd(X, compute_uv=False)[0]
    lam_cap = SPIKE_FACTOR * max(sig1, np.sqrt(eps))

    policy = opts.init if isinstance(opts.init, str) else "provided"
    if policy == "screened":
        lam, u, v, s2 = _screened_init(X, ortho_u, ortho_v, eps)
    elif policy == "classical":
        lam, u, v, s2 = _classical_init(X, ortho_u, ortho_v, eps)
    elif policy == "random":
        lam, u, v, s2 = _random_init(X, ortho_u, ortho_v, eps,
                                     0 if opts.seed is None else opts.seed)
    elif policy == "provided":
        lam, u, v, s2 = _as_init_tuple(opts.init)
        s2 = max(s2, eps)
    else:
        raise ValueError(f"unknown init policy {opts.init!r}")

    def pack(lam, u, v, s2):
        return np.concatenate([(lam / scale) * u, v, [np.log(s2)]])

    def unpack(th):
        a = th[:n] * scale
        vv = th[n:n + p]
        with np.errstate(over="ignore"):
            s2x = float(np.exp(th[-1]))
        if ortho_u is not None and ortho_u.shape[1]:
            a = a - ortho_u @ (ortho_u.T @ a)
        if ortho_v is not None and ortho_v.shape[1]:
            vv = vv - ortho_v @ (ortho_v.T @ vv)
        la = np.linalg.norm(a)
        nv = np.linalg.norm(vv)
        if la <= 0 or nv <= 0 or not np.isfinite(s2x) or s2x <= 0:
            return None
        return la * nv, a / la, vv / nv, max(s2x, eps)

    e = X - lam * np.outer(u, v)
    h = h_value(e, s2, alpha)
    trace = [h]
    converged = False
    restarted = False
    it_total = 0
    it = 0
    while it_total < max_iter:
        it += 1
        it_total += 1
        lam_p, u_p, v_p, s2_p, h_p = lam, u, v, s2, h
        if it <= PLAIN_FIRST:
            lam, u, v, s2, h, e = _one_cycle(X, alpha, lam, u, v, s2, h, e,
                                             ortho_u, ortho_v, eps)
        else:
            th0 = pack(lam, u, v, s2)
            l1, u1, v1, s21, h1, e1 = _one_cycle(X, alpha, lam, u, v, s2, h,
                                                 e, ortho_u, ortho_v, eps)
            th1 = pack(l1, u1, v1, s21)
            l2, u2, v2, s22, h2, e2 = _one_cycle(X, alpha, l1, u1, v1, s21,
                                                 h1, e1, ortho_u, ortho_v, eps)
            th2 = pack(l2, u2, v2, s22)
            r = th1 - th0
            w = th2 - th1 - r
            nw = np.linalg.norm(w)
            accepted = False
            if nw > 1e-300:
                sq = -np.linalg.norm(r) / nw
                th_acc = th0 - 2.0 * sq * r + sq * sq * w
                st = unpack(th_acc)
                if st is not None:
                    la, ua, va, s2a = st
                    ea = X - la * np.outer(ua, va)
                    ha = h_value(ea, s2a, alpha)
                    if np.isfinite(ha):
                        try:
                            lf, uf, vf, s2f, hf, ef = _one_cycle(
                                X, alpha, la, ua, va, s2a, ha, ea,
                                ortho_u, ortho_v, eps)
                        except FloatingPointError:
                            lf = None
                        if lf is not None and hf < h2:
                            lam, u, v, s2, h, e = lf, uf, vf, s2f, hf, ef
                            accepted = True
            if not accepted:
                lam, u, v, s2, h, e = l2, u2, v2, s22, h2, e2
        if lam > lam_cap and not restarted and policy == "screened":
            # the screened basin blew past the data's top singular value
            restarted = True
            lam, u, v, s2 = _classical_init(X, ortho_u, ortho_v, eps)
            e = X - lam * np.outer(u, v)
            h = h_value(e, s2, alpha)
            trace = [h]
            it = 0
            continue
        trace.append(h)
        theta_inf = max(lam, 1.0, s2)
        rel = max(abs(h - h_p) / (1.0 + abs(h)),
                  max(abs(lam - lam_p), np.max(np.abs(u - u_p)),
                      np.max(np.abs(v - v_p)), abs(s2 - s2_p)) / (1.0 + theta_inf))
        if rel < tol:
            converged = True
            break
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0:
        u, v = -u, -v
    if polish:
        lam, u, v, s2, h = _newton_polish(X, lam, u, v, s2, alpha, eps,
                                          ortho_u, ortho_v)
        trace.append(h)
    return dict(lam=float(lam), u=u, v=v, s2=float(s2), h=h, it=it_total,
                conv=converged, restarted=restarted,
                trace=np.array(trace, dtype=float))


def fit_rank1(X, opts=None):
    """Fit the rank-one robust SVD model to X.

    Parameters
    ----------
    X : (n, p) array, finite, min(n, p) >= 2
    opts : SolverOptions, default SolverOptions()

    Returns
    -------
    Rank1Fit. The trace of objective values is non-increasing; the fit
    satisfies the unit-norm and sign conventions and sigma2 >= the floor.
    """
    X = _check_input(X)
    if opts is None:
        opts = SolverOptions()
    f = _solve(X, opts)
    return Rank1Fit(lambda_=f["lam"], u=f["u"], v=f["v"], sigma2=f["s2"],
                    iterations=f["it"], converged=f["conv"], trace=f["trace"])


def _fit_state(fit):
    if hasattr(fit, "lambda_"):
        lam, u, v, s2 = fit.lambda_, fit.u, fit.v, fit.sigma2
    else:
        lam, u, v, s2 = fit
    return (float(lam), np.asarray(u, dtype=float),
            np.asarray(v, dtype=float), float(s2))


def update_u(X, fit, alpha):
    """Row-regression update: the weighted least squares coefficients a.

    Solves, per row i, min over a_i of the summed cell divergence at the
    fit's v and sigma2: a_i = [sum_j v_j X_ij w_ij] / [sum_j v_j^2 w_ij]
    with w the robustness weights, iterated until the weights agree with
    the returned coefficients. Returns the unnormalized length-n vector.

    Raises DegenerateWeights if a row's denominator falls to 1e-300.
    """
    al = check_alpha(alpha)
    X = np.asarray(X, dtype=float)
    lam, u, v, s2 = _fit_state(fit)
    a = lam * u
    for _ in range(100):
        e = X - np.outer(a, v)
        W = weights(e, s2, al)
        den = W @ (v * v)
        if np.any(den <= 1e-300):
            raise DegenerateWeights("all row weights collapsed")
        a_new = ((X * W) @ v) / den
        done = np.max(np.abs(a_new - a)) <= 1e-13 * (1.0 + np.max(np.abs(a_new)))
        a = a_new
        if done:
            break
    return a


def update_v(X, fit, alpha):
    """Column-regression update, symmetric to update_u, using the fit's u."""
    al = check_alpha(alpha)
    X = np.asarray(X, dtype=float)
    lam, u, v, s2 = _fit_state(fit)
    b = lam * v
    for _ in range(100):
        e = X - np.outer(u, b)
        W = weights(e, s2, al)
        den = W.T @ (u * u)
        if np.any(den <= 1e-300):
            raise DegenerateWeights("all column weights collapsed")
        b_new = ((X * W).T @ u) / den
        done = np.max(np.abs(b_new - b)) <= 1e-13 * (1.0 + np.max(np.abs(b_new)))
        b = b_new
        if done:
            break
    return b


def update_sigma2(residuals, sigma2_prev, alpha, eps=1e-10):
    """Scale update: self-consistent weighted residual variance.

    Iterates s2 <- [mean e^2 w] / [mean w - alpha (1+alpha)^(-3/2)] from
    sigma2_prev to its fixpoint, clamped to >= eps. Returns (sigma2,
    degenerate): when the denominator is not positive the previous value
    is carried forward and degenerate is True.
    """
    al = check_alpha(alpha)
    e = np.asarray(residuals, dtype=float)
    s2 = float(sigma2_prev)
    if not s2 > 0.0:
        raise ValueError("sigma2_prev must be positive")
    c_sig = al * (1.0 + al) ** -1.5
    prev = -1.0
    for _ in range(200):
        W = weights(e, s2, al)
        den = np.mean(W) - c_sig
        if den <= 0:
            return s2, True
        s2_new = np.mean(e * e * W) / den
        if s2_new < eps:
            return eps, False
        if s2_new == s2 or s2_new == prev:
            return (min(s2, s2_new) if s2_new == prev else s2_new), False
        prev = s2
        s2 = s2_new
    return s2, False


def _matched_fit_pair(X, opts, transform_X, transform_state):
    """Fit X and its transform from matched starts; return both fits.

    The screened and classical policies derive their start from the data
    and commute with scaling and permutation, so they are already matched.
    Random or provided starts are transported through the transform.
    """
    policy = opts.init if isinstance(opts.init, str) else "provided"
    base = fit_rank1(X, opts)
    if policy in ("screened", "classical"):
        opts_t = opts
    elif policy == "random":
        eps = sigma_floor(np.asarray(X, dtype=float), opts.eps_sigma)
        st = _random_init(np.asarray(X, dtype=float), None, None, eps,
                          0 if opts.seed is None else opts.seed)
        opts_t = replace(opts, init=transform_state(st))
    else:
        opts_t = replace(opts, init=transform_state(_as_init_tuple(opts.init)))
    other = fit_rank1(transform_X(np.asarray(X, dtype=float)), opts_t)
    return base, other


def _fit_deviation(got, want):
    lam, u, v, s2 = want
    return max(abs(got.lambda_ - lam) / (1.0 + abs(lam)),
               float(np.max(np.abs(got.u - u))),
               float(np.max(np.abs(got.v - v))),
               abs(got.sigma2 - s2) / (1.0 + abs(s2)))


def check_equivariance_scale(X, c, opts=None, tol=1e-10):
    """True iff fitting c*X returns the scaled fit of X within tol.

    Both fits run from matched initializations; the reference is
    (|c| lambda, u, sign(c) v, c^2 sigma2) with the sign convention
    applied. Deviations are relative in lambda and sigma2 and absolute
    in the vector components.
    """
    c = float(c)
    if c == 0.0:
        raise ValueError("c must be nonzero")
    if opts is None:
        opts = SolverOptions()
    sgn = 1.0 if c > 0 else -1.0

    def t_state(st):
        lam, u, v, s2 = st
        return (abs(c) * lam, u, sgn * v, c * c * s2)

    base, other = _matched_fit_pair(X, opts, lambda A: c * A, t_state)
    want = (abs(c) * base.lambda_, base.u, sgn * base.v, c * c * base.sigma2)
    return _fit_deviation(other, want) <= tol


def check_equivariance_permutation(X, perm_rows, perm_cols, opts=None,
                                   tol=1e-10):
    """True iff fitting the row/column-permuted X permutes the fit of X."""
    pr = np.asarray(perm_rows, dtype=int)
    pc = np.asarray(perm_cols, dtype=int)
    if opts is None:
        opts = SolverOptions()

    def t_state(st):
        lam, u, v, s2 = st
        return (lam, u[pr], v[pc], s2)

    base, other = _matched_fit_pair(X, opts,
                                    lambda A: A[np.ix_(pr, pc)], t_state)
    want = (base.lambda_, base.u[pr], base.v[pc], base.sigma2)
    return _fit_deviation(other, want) <= tol
