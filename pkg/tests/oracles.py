"""Independent reference computations shared by the test modules."""
import numpy as np
from scipy import linalg as sla
from scipy.optimize import linprog

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol=1e-10, max_iter=500):
    """Minimizer of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def geodesic_objective(mu, Sigma, w, v, A):
    """Squared product-manifold distance from ``(mu, Sigma)`` to the curve
    ``t -> (t w1 v, exp(t w2 A))`` under the Log-Euclidean metric.

    The log of the curve's SPD part is ``t w2 A`` for every t, so the
    objective is evaluated without forming ``exp`` (which overflows for
    the large |t| scanned by the search).
    """
    logS = sla.logm(Sigma).real

    def f(t):
        dm = mu - t * w[0] * v
        dS = logS - t * w[1] * A
        return float(dm @ dm + np.sum(dS * dS))

    return f


def transport_lp(C, a, b):
    n, m = C.shape
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1
    for j in range(m):
        A_eq[n + j, j::m] = 1
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(res.message)
    return res.fun
