import math

import numpy as np
import pytest

from riskprice import SmoothTestFunction, make_binomial, make_normal_family, make_trinomial, make_uncertain_binomial, make_uniform


def random_smooth(rng, k):
    """``a sin(bx + c) + exp(-(x-m)^2/s)`` with exact first and second derivatives."""
    out = []
    for _ in range(k):
        a, b, c = rng.uniform(0.5, 2), rng.uniform(1, 4), rng.uniform(0, 2 * math.pi)
        m, s = rng.uniform(-0.5, 0.5), rng.uniform(0.3, 1.5)

        def f(x, a=a, b=b, c=c, m=m, s=s):
            return a * np.sin(b * x + c) + np.exp(-((x - m) ** 2) / s)

        def df(x, a=a, b=b, c=c, m=m, s=s):
            return a * b * np.cos(b * x + c) - 2 * (x - m) / s * np.exp(-((x - m) ** 2) / s)

        def d2f(x, a=a, b=b, c=c, m=m, s=s):
            return -a * b * b * np.sin(b * x + c) + (4 * (x - m) ** 2 / s**2 - 2 / s) * np.exp(-((x - m) ** 2) / s)

        out.append(SmoothTestFunction(f, df, d2f))
    return out


def random_payoff(rng):
    """Bounded vectorized function: a few random calls/puts capped plus a sine."""
    k = rng.uniform(-0.3, 0.3, size=3)
    c = rng.normal(size=4)
    freq = rng.uniform(1, 8)

    def g(y):
        y = np.asarray(y, dtype=float)
        return (
            c[0] * np.minimum(np.maximum(y - k[0], 0), 1)
            + c[1] * np.minimum(np.maximum(k[1] - y, 0), 1)
            + c[2] * np.sin(freq * y + k[2])
            + c[3]
        )

    return g


MODEL_FACTORIES = {
    "binomial": lambda: make_binomial(0.2),
    "trinomial": lambda: make_trinomial(0.2),
    "uniform": lambda: make_uniform(0.2, 32),
    "uncertain": lambda: make_uncertain_binomial(0.2, 0.03, 21),
    "normal_family": lambda: make_normal_family([0.17, 0.2, 0.23]),
}


@pytest.fixture(params=sorted(MODEL_FACTORIES))
def any_model(request):
    return MODEL_FACTORIES[request.param]()


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {status}  {detail}")
