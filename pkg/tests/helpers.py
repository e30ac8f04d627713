"""Independent reference computations used by several test modules."""
import numpy as np
from scipy import integrate, stats


def brute_counts(features, labels, space, subspaces, k):
    """O(N^2) shared-radius counter: radii from the k-th same-class neighbor in
    ``space`` (max-norm), strict counts excluding the point itself."""
    f = np.asarray(features)
    n = f.shape[0]
    diff = np.abs(f[:, None, :] - f[None, :, :])
    eye = np.eye(n, dtype=bool)
    same = labels[:, None] == labels[None, :]
    full = diff[:, :, list(space)].max(axis=2)
    radii = np.array([np.sort(full[i, same[i] & ~eye[i]])[k - 1] for i in range(n)])
    out = {}
    for s in subspaces:
        s = frozenset(s)
        if not s:
            continue
        d = diff[:, :, sorted(s)].max(axis=2)
        inside = (d < radii[:, None]) & ~eye
        out[s] = (inside.sum(axis=1), (inside & same).sum(axis=1))
    return radii, out


def quad_mi_two_gaussians(mu1, mu2, sd=1.0):
    """I(Y;X) in nats for equal-prior X|y ~ N(mu_y, sd^2), by 1-D quadrature."""
    p1 = stats.norm(mu1, sd).pdf
    p2 = stats.norm(mu2, sd).pdf

    def integrand(x):
        a, b = p1(x), p2(x)
        mix = 0.5 * (a + b)
        val = 0.0
        if a > 0:
            val += 0.5 * a * np.log(a / mix)
        if b > 0:
            val += 0.5 * b * np.log(b / mix)
        return val

    lo = min(mu1, mu2) - 12 * sd
    hi = max(mu1, mu2) + 12 * sd
    value, _ = integrate.quad(integrand, lo, hi, limit=200, epsabs=1e-12)
    return value
