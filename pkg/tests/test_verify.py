"""The self-contained verification batteries all come back clean."""
from ntdescent.verify import verify_fd_all, verify_gi, verify_invariants


def test_gradient_inequality_battery():
    report = verify_gi(samples=300, seed=0, lb_samples=150)
    assert report.ok, "\n".join(report.lines())


def test_invariant_battery():
    report = verify_invariants(seed=0)
    assert report.ok, "\n".join(report.lines())


def test_finite_difference_battery_all_problems():
    for report in verify_fd_all(seed=0, points=60):
        assert report.ok, "\n".join(report.lines())
