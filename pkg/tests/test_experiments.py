import math

import numpy as np
import pytest

from eisenlab.eisenstein import build_orbit, series_on_nodes
from eisenlab.errors import OscillationBudgetError, SupportViolationError
from eisenlab.experiments import (
    ExperimentTable,
    PhaseSpaceSymbol,
    TestFunction,
    averaged_equidist,
    boundary_gap_nodes,
    equidist_point,
    equidist_scan,
    fit_loglog_slope,
    geodesic_line_integral,
    integrate,
    liouville,
    make_bump_grid,
    mu_xi,
    mu_xi_boundary_average,
    poisson_constant,
    trace_compare,
)
from eisenlab.schottky import SchottkyGroup

XI = np.exp(1j * np.pi / 4)


def test_grid_reproduces_ball_area():
    for r in (0.5, 1.0, 2.0):
        bump = TestFunction(0.15 + 0.1j, r)
        grid = make_bump_grid(bump, 1.0)
        exact = 4.0 * math.pi * math.sinh(r / 2.0) ** 2
        assert grid.area == pytest.approx(exact, rel=1e-12)


def test_integrate_constant_and_odd():
    bump = TestFunction(0.0j, 0.8)
    grid = make_bump_grid(bump, 1.0)
    val, err = integrate(lambda z: np.ones_like(z, dtype=float), grid)
    assert val == pytest.approx(grid.area, rel=1e-8)
    odd, _ = integrate(lambda z: np.real(z), grid)
    assert abs(odd) < 1e-10


def test_integrate_bump_refinement_stable():
    bump = TestFunction(0.1 + 0.0j, 0.6)
    grid = make_bump_grid(bump, 30.0)
    val, err = integrate(bump, grid)
    fine = make_bump_grid(bump, 30.0, refine=1.5)
    val2, _ = integrate(bump, fine)
    assert abs(val - val2) <= max(err, 1e-12)


def test_bump_support_validation(reference_group):
    TestFunction(0.0j, 0.8).validate_in_domain(reference_group)
    with pytest.raises(SupportViolationError):
        TestFunction(0.0j, 2.6).validate_in_domain(reference_group)
    with pytest.raises(SupportViolationError):
        TestFunction(0.95 + 0j, 0.2).validate_in_domain(reference_group)


def test_budget_guard():
    bump = TestFunction(0.0j, 0.4)
    grid = make_bump_grid(bump, 10.0)
    from eisenlab.experiments import _check_budget

    with pytest.raises(OscillationBudgetError):
        _check_budget(grid, 40.0)


def test_poisson_constant_m_independent(rng):
    vals = []
    for _ in range(5):
        m = 0.7 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        vals.append(poisson_constant(m))
    assert np.max(np.abs(np.array(vals) - math.pi / 2)) < 1e-8


def test_liouville_flat_and_odd(reference_group):
    base = TestFunction(0.12 - 0.07j, 0.5)
    grid = make_bump_grid(base, 1.0)
    mass = float(np.dot(grid.weights, base(grid.nodes)))
    flat = liouville(reference_group, PhaseSpaceSymbol(base), grid=grid)
    assert flat == pytest.approx(math.pi / 2 * mass, rel=1e-8)
    odd = liouville(reference_group, PhaseSpaceSymbol(base, lambda z, th: np.cos(th)), grid=grid)
    assert abs(odd) < 1e-8


def test_liouville_constant_across_bumps(reference_group):
    ratios = []
    for (c, r) in [(0.0j, 0.4), (0.2 + 0.1j, 0.5), (-0.15 + 0.2j, 0.35),
                   (0.05 - 0.22j, 0.6), (0.3 + 0.0j, 0.45)]:
        base = TestFunction(c, r)
        grid = make_bump_grid(base, 1.0)
        mass = float(np.dot(grid.weights, base(grid.nodes)))
        ratios.append(liouville(reference_group, PhaseSpaceSymbol(base), grid=grid) / mass)
    assert np.max(np.abs(np.array(ratios) - ratios[0])) < 1e-8


def test_mu_flat_equals_density_integral(reference_group, reference_delta):
    base = TestFunction(0.1 + 0.05j, 0.5)
    grid = make_bump_grid(base, 1.0)
    sym = PhaseSpaceSymbol(base)
    mu = mu_xi(reference_group, sym, XI, tol=1e-6,
               delta_upper=reference_delta.upper, orbit_depth=7, grid=grid)
    orbit = build_orbit(reference_group, XI, 7)
    dens = series_on_nodes(orbit, 1.0, grid.nodes).real
    direct = float(np.dot(grid.weights * base(grid.nodes), dens))
    assert mu == pytest.approx(direct, rel=1e-10)


def test_mu_boundary_average_matches_liouville(reference_group, reference_delta):
    base = TestFunction(0.1 + 0.05j, 0.5)
    grid = make_bump_grid(base, 1.0)
    sym = PhaseSpaceSymbol(base, lambda z, th: 1.0 + 0.8 * np.cos(th) ** 2 * (1 + np.real(z)))
    lv = liouville(reference_group, sym, grid=grid)
    mu = mu_xi_boundary_average(reference_group, sym, tol=1e-4,
                                delta_upper=reference_delta.upper, per_gap=8,
                                orbit_depth=7, grid=grid)
    assert mu == pytest.approx(lv, abs=2e-4)


def test_boundary_average_of_harmonic_density(reference_group):
    # unfolding: the gap integral of the covered density is the full-circle
    # elementary integral, independent of the interior point
    angles, weights, fold = boundary_gap_nodes(reference_group, 24)
    for m in (0.2 + 0.1j, -0.35 + 0.25j):
        total = 0.0
        for ang, w in zip(angles, weights):
            orbit = build_orbit(reference_group, np.exp(1j * ang), 6)
            total += fold * w * series_on_nodes(orbit, 1.0, np.array([m]))[0].real
        assert total == pytest.approx(math.pi / 2, rel=1e-6)


def test_equidist_small_scan(reference_group, reference_delta):
    bump = TestFunction(0.0j, 0.45)
    ts = [10.0, 20.0, 40.0]
    table = equidist_scan(reference_group, XI, bump, ts, 1e-3,
                          delta_upper=reference_delta.upper, orbit_depth=7)
    tt, dd = table.column("D")
    assert list(tt) == ts
    assert dd[0] == pytest.approx(6.76e-3, rel=0.05)
    errors = [r[3] for r in table.rows]
    assert all(e < 1e-3 for e in errors)


def test_equidist_grid_doubling_within_error(reference_group, reference_delta):
    bump = TestFunction(0.0j, 0.45)
    orbit = build_orbit(reference_group, XI, 7)
    g1 = make_bump_grid(bump, 40.0)
    g2 = make_bump_grid(bump, 40.0, refine=2.0)
    v1, h1 = equidist_point(orbit, g1, bump, [40.0])
    v2, h2 = equidist_point(orbit, g2, bump, [40.0])
    assert abs(v1[0] - v2[0]) < 1e-8
    assert abs(h1 - h2) < 1e-8


def test_averaged_trivial_group_control():
    g = SchottkyGroup.trivial()
    bump = TestFunction(0.1 + 0.1j, 0.5)
    ts = [5.0, 17.0, 42.0]
    vals, ref, err = averaged_equidist(g, bump, ts, 1e-6, delta_upper=0.0,
                                       per_gap=64)
    assert np.max(np.abs(vals - ref)) < 1e-7


def test_geodesic_line_integral_oracle(reference_group, reference_geodesics):
    # the period of a generator geodesic is exactly the diameter segment in
    # the fundamental domain, so the folded integral has a direct form
    bump = TestFunction(0.2 + 0j, 0.4)
    geo = next(g for g in reference_geodesics if g.cyclic_word == (1,))
    ours = geodesic_line_integral(reference_group, geo, bump)
    from numpy.polynomial.legendre import leggauss

    x, w = leggauss(24)
    direct = 0.0
    edges = np.linspace(-2.5, 2.5, 101)
    for lo, hi in zip(edges[:-1], edges[1:]):
        taus = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        direct += float(np.dot(0.5 * (hi - lo) * w, bump(np.tanh(taus / 2))))
    assert ours == pytest.approx(direct, rel=1e-9)
    # a bump far from the axis integrates to zero
    far = TestFunction(0.43 + 0.487j, 0.3)
    assert geodesic_line_integral(reference_group, geo, far) == 0.0


def test_trace_on_axis_t40(reference_group, reference_geodesics):
    bump = TestFunction(0.0j, 0.8)
    rec = trace_compare(reference_group, bump, 40.0, 14.0, tol=1e-3,
                        geodesics=reference_geodesics)
    osc = rec.lhs - rec.rhs_identity
    assert abs(osc) > 0.01
    assert rec.residual <= abs(osc) / 3.0
    assert rec.rhs_identity == pytest.approx(
        2 * math.pi * float(np.dot(make_bump_grid(bump, 40.0).weights,
                                   bump(make_bump_grid(bump, 40.0).nodes))), rel=1e-10)


def test_trace_off_axis(reference_group, reference_geodesics):
    bump = TestFunction(0.43 + 0.487j, 0.3)
    rec = trace_compare(reference_group, bump, 40.0, 14.0, tol=1e-3,
                        geodesics=reference_geodesics)
    assert rec.rhs_geodesic_k0 == 0.0
    assert abs(rec.lhs - rec.rhs_identity) < 5e-3


def test_table_csv_roundtrip(tmp_path):
    table = ExperimentTable()
    table.add(1.0, "D", 0.125, 1e-6, slope_so_far=-0.5, note="x")
    table.add(2.0, "D", 0.0625, 1e-6, slope_so_far=-1.0)
    path = tmp_path / "t.csv"
    table.to_csv(path)
    back = ExperimentTable.from_csv(path)
    assert back.rows[0][0] == 1.0
    assert back.rows[0][2] == 0.125
    assert back.rows[0][4]["note"] == "x"
    assert back.rows[1][4]["slope_so_far"] == -1.0


def test_fit_loglog_slope_exact_power():
    ts = np.geomspace(10, 80, 12)
    vals = 3.0 * ts ** (-0.7)
    assert fit_loglog_slope(ts, vals) == pytest.approx(-0.7, abs=1e-12)
