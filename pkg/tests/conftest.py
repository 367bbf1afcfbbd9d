import math

import numpy as np
import pytest
from scipy import integrate, optimize


def hermite_logz_quadrature(n, beta, cut=10.0):
    """log ∫ |Δ|^β e^{-βNΣλ²/4} over ℝⁿ (truncated), integrating the ordered region."""
    c = beta * n / 4.0

    def f(*lam):
        lam = np.asarray(lam)
        vd = 1.0
        for i in range(n):
            for j in range(i + 1, n):
                vd *= lam[j] - lam[i]
        return vd**beta * math.exp(-c * float(lam @ lam))

    if n == 1:
        val, _ = integrate.quad(lambda x: f(x), -cut, cut, epsabs=0, epsrel=1e-11)
        return math.log(val)
    if n == 2:
        val, _ = integrate.dblquad(lambda y, x: f(x, y), -cut, cut, lambda x: x, lambda x: cut,
                                   epsabs=0, epsrel=1e-10)
        return math.log(2.0 * val)
    # n = 3: ordered points a < a+s < a+s+t; the a-integral is Gaussian and done in
    # closed form, leaving a smooth adaptive 2-d integral over the gaps (s, t)
    def g(t, s):
        b = np.array([0.0, s, s + t])
        quad_form = float(b @ b - b.sum() ** 2 / 3.0)
        return (s * t * (s + t)) ** beta * math.exp(-c * quad_form)

    val, _ = integrate.dblquad(g, 0.0, cut, 0.0, cut, epsabs=0, epsrel=1e-11)
    return math.log(6.0 * val * math.sqrt(math.pi / (3.0 * c)))


def circular_logz_quadrature(beta):
    """log ∫∫_{[0,2π)²} |e^{iθ} − e^{iφ}|^β, over the ordered region θ < φ."""
    val, _ = integrate.dblquad(
        lambda p, t: abs(2.0 * math.sin(0.5 * (p - t))) ** beta,
        0.0, 2.0 * math.pi, lambda t: t, lambda t: 2.0 * math.pi,
        epsabs=0, epsrel=1e-11,
    )
    return math.log(2.0 * val)


def laguerre_logz_quadrature(n, beta, alpha):
    w = lambda x: x ** (alpha - 1.0) * math.exp(-beta * n * x)
    if n == 1:
        return math.log(integrate.quad(w, 0, np.inf, epsrel=1e-12)[0])
    val, _ = integrate.dblquad(lambda y, x: w(x) * w(y) * (y - x) ** beta, 0, 60.0 / (beta * n),
                               lambda x: x, lambda x: 60.0 / (beta * n), epsabs=0, epsrel=1e-10)
    return math.log(2.0 * val)


def jacobi_logz_quadrature(n, beta, mu, nu):
    w = lambda x: (1.0 - x) ** (mu - 1.0) * (1.0 + x) ** (nu - 1.0)
    if n == 1:
        return math.log(integrate.quad(w, -1, 1, epsrel=1e-12)[0])
    val, _ = integrate.dblquad(lambda y, x: w(x) * w(y) * (y - x) ** beta, -1, 1,
                               lambda x: x, lambda x: 1.0, epsabs=0, epsrel=1e-10)
    return math.log(2.0 * val)


def hermite_rejection(n, beta, count, rng, shrink=0.5):
    """Exact Hermite draws by rejection from i.i.d. Gaussians.

    Target ∝ |Δ|^β e^{-βNΣλ²/4}.  Proposals carry a fraction ``shrink`` of the
    Gaussian weight, so the acceptance ratio |Δ|^β e^{-(1-shrink)βNΣλ²/4} is
    bounded; its maximum is found numerically.
    """
    c = beta * n / 4.0

    def log_ratio(lam):
        lam = np.sort(lam)
        d = lam[None, :] - lam[:, None]
        iu = np.triu_indices(n, 1)
        return beta * np.sum(np.log(np.abs(d[iu]))) - (1 - shrink) * c * np.sum(lam**2)

    best = -np.inf
    for start in range(20):
        x0 = np.linspace(-1, 1, n) * (0.5 + 0.1 * start)
        res = optimize.minimize(lambda v: -log_ratio(v), x0, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        best = max(best, -res.fun)
    best += 1e-9
    sd = 1.0 / math.sqrt(2.0 * shrink * c)
    out = []
    while len(out) < count:
        prop = rng.normal(0.0, sd, size=(4 * count, n))
        prop.sort(axis=1)
        d = np.diff(prop, axis=1) if n == 2 else None
        if n == 2:
            lr = beta * np.log(d[:, 0]) - (1 - shrink) * c * np.sum(prop**2, axis=1)
        else:
            lr = np.array([log_ratio(p) for p in prop])
        assert np.all(lr <= best)
        keep = np.log(rng.random(prop.shape[0])) < lr - best
        out.extend(prop[keep])
    return np.array(out[:count])


def mean_and_se(values):
    values = np.asarray(values, dtype=float)
    return values.mean(), values.std(ddof=1) / math.sqrt(values.size)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
