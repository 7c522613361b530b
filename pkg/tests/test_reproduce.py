import pytest

from ddprior import reproduce as repro
from ddprior.correlation import CorrelationMode
from ddprior.selection import figure1_scenario, mse_ratio_grid


@pytest.mark.parametrize("target", ["example4", "table2", "table3", "figure1", "table1"])
def test_default_route_reproduces(target):
    rows, ok = repro.run(target)
    assert ok, [r.label for r in rows if not r.ok]


def test_dataset_rebuilt_from_row_totals():
    data = repro.three_parent_dataset()
    assert len(data) == 78 and data.rows == sorted(data.rows)


def test_report_format():
    rows, _ = repro.run("example4")
    text = repro.format_report(rows, "quadratic")
    assert text.startswith("# mode: quadratic") and text.count("\n") == len(rows) + 2


def test_comparison_kinds():
    assert repro.Comparison("t", "x", 1.0015, 1.0, 1e-3, "max").ok is False
    assert repro.Comparison("t", "x", 0.5, 1.0, 1e-3, "max").ok
    assert repro.Comparison("t", "x", 0.9995, 1.0, 1e-3, "min").ok
    assert not repro.Comparison("t", "x", 1.2, 1.0, 1e-3).ok


def test_mixed_selection_is_robust_away_from_full_pooling():
    grid = mse_ratio_grid((0.25, 0.5, 0.25), figure1_scenario(), 0.1)
    worst = max(grid, key=lambda p: p.ratio)
    assert tuple(worst.pi_true) == (1.0, 0.0, 0.0)
    assert max(p.ratio for p in grid if p is not worst) <= 2.5


def test_exact_mode_stays_close_to_published_weights():
    w = repro.example4_weights(CorrelationMode.EXACT_QUADRATURE, CorrelationMode.EXACT_QUADRATURE)
    for key, value in repro.EXAMPLE4_WEIGHTS.items():
        assert w[key] == pytest.approx(value, abs=0.02)
