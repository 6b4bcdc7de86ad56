import hypothesis
import numpy as np
import pytest

from convexcone import kkt_residuals

hypothesis.settings.register_profile("suite", max_examples=25, deadline=None)
hypothesis.settings.load_profile("suite")


@pytest.fixture
def assert_kkt():
    """Check a returned optimal solution against the KKT residual contract."""

    def check(qp, sol, eps_abs=1e-6, eps_rel=1e-6):
        assert sol.status == "optimal", sol.status
        res = kkt_residuals(qp, sol.x, sol.y)
        scale = max(
            np.abs(qp.P @ sol.x).max(initial=0.0),
            np.abs(qp.A.T @ sol.y).max(initial=0.0),
            np.abs(qp.q).max(initial=0.0),
        )
        assert res["stationarity"] <= eps_abs + eps_rel * scale
        assert res["primal"] <= eps_abs
        assert res["complementarity"] <= 10.0 * eps_abs
        return res

    return check
