import numpy as np
import pytest

from quakeopt.problem import NetworkSpec


def make_spec(N=1, T=1, **overrides) -> NetworkSpec:
    """Small hand-built spec: zero coefficients unless overridden."""
    base = dict(
        N=N,
        T=T,
        fidelities=np.full((N, T), 0.5),
        F_star=0.9,
        A=np.zeros((N, T, T)),
        R=np.zeros((N, T)),
        c=np.zeros(N),
        A_star=np.zeros((N, T, T)),
        R_star=np.zeros((N, T)),
        c_star=np.zeros(N),
        init_throughput=np.zeros((N, T)),
        f_costs=np.zeros(T),
        eta=np.zeros(T),
        kappa=np.zeros(T),
        lambda_mem=1.0,
        upsilon=np.ones(N),
        B_low=0.0,
        B_up=10.0,
        gamma=0.0,
        Lambda_bound=1e9,
        Pi_bound=1e9,
    )
    base.update(overrides)
    return NetworkSpec(**base)


@pytest.fixture
def spec_factory():
    return make_spec


# criterion id -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.setdefault(criterion, []).append((bool(ok), detail))
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE_RESULTS):
        parts = ACCEPTANCE_RESULTS[c]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {c:2d}: {detail}")
