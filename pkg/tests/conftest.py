import numpy as np
import pytest

from adjsurrogate import lorenz, mlp, training
from adjsurrogate.smallmat import RngStream


@pytest.fixture(scope="session")
def attractor_states():
    """200 states spread along the attractor."""
    p, spec = lorenz.LorenzParams(), lorenz.IntegratorSpec()
    traj = lorenz.generate_truth(p, spec, lorenz.TRUTH_X0, 1000)
    return traj.states[::5][:200]


@pytest.fixture(scope="session")
def small_data():
    p, spec = lorenz.LorenzParams(), lorenz.IntegratorSpec()
    return training.generate_training_set(p, spec, RngStream(7, 1), n_data=60, scheme="Random")


def random_net(rng, data=None):
    theta = mlp.MlpParams.init(rng).flatten()
    theta[mlp._B1 - mlp.N_HIDDEN:mlp._B1] = 0.3 * rng.standard_normal(mlp.N_HIDDEN)
    theta[mlp._W2:] = rng.standard_normal(3)
    if data is not None:
        theta = training.centred_init(theta, data)
    return mlp.MlpParams.from_flat(theta)


CRITERIA = []


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
