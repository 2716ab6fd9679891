"""End-to-end acceptance suite.

Runs the full verification-check registry once (shared across tests) and
asserts every criterion at its pinned tolerance, printing one PASS/FAIL
line per criterion.  Run with ``pytest tests/test_acceptance.py -v -s``
to see the lines as they are produced.
"""

import time

import pytest

from diracmech.checks import run_checks

SYSTEMS = ("skater_free", "skater_slope", "skater_charged",
           "ball_free", "ball_magnetic", "ball_harmonic")

CRITERIA = {
    1: ("skater_free_regression", ["analytic_skater_free"]),
    2: ("skater_slope_regression", ["analytic_skater_slope"]),
    3: ("structure_function_exactness", ["structure_skater", "structure_ball"]),
    4: ("oracle_equivalence", [
        "oracle_mechanical_skater_free", "oracle_mechanical_skater_slope",
        "oracle_mechanical_ball", "oracle_magnetic_skater",
        "oracle_magnetic_ball", "oracle_magnetic_ball_harmonic",
    ]),
    5: ("isotropy", [f"isotropy_{s}" for s in SYSTEMS]),
    6: ("energy_conservation", [f"energy_{s}" for s in SYSTEMS]),
    7: ("consistency_maintenance", [f"consistency_{s}" for s in SYSTEMS]),
    8: ("ball_trajectory_shapes", ["ball_magnetic_circle", "ball_free_line"]),
    9: ("charged_skater_centered_equivalence", ["charged_skater_centered"]),
    10: ("ad_gradient_correctness", [f"ad_gradient_{s}" for s in SYSTEMS]),
    11: ("convergence_order", ["convergence_order"]),
    12: ("legendre_hamilton_agreement", [
        "legendre_hamilton_skater_free", "legendre_hamilton_skater_slope",
        "legendre_hamilton_ball_free",
    ]),
}


@pytest.fixture(scope="module")
def suite():
    start = time.perf_counter()
    results = run_checks(scope="all", seed=0)
    elapsed = time.perf_counter() - start
    return elapsed, {r.name: r for r in results}


def _assert_criterion(suite, number):
    _, by_name = suite
    label, names = CRITERIA[number]
    missing = [n for n in names if n not in by_name]
    assert not missing, f"checks not run: {missing}"
    results = [by_name[n] for n in names]
    passed = all(r.passed for r in results)
    detail = "; ".join(f"{r.name}: {r.metric}" for r in results)
    print(f"CRITERION {number:02d} {label} {'PASS' if passed else 'FAIL'} [{detail}]")
    failing = [r.name for r in results if not r.passed]
    assert passed, f"criterion {number} failed via {failing}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(suite, number):
    _assert_criterion(suite, number)


def test_total_check_wall_time_under_budget(suite):
    elapsed, _ = suite
    print(f"CRITERION 13 full_check_suite_wall_time "
          f"{'PASS' if elapsed <= 60.0 else 'FAIL'} [elapsed={elapsed:.1f}s limit=60s]")
    assert elapsed <= 60.0
