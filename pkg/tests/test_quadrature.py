"""Plain and singularity-graded quadrature rules and element plans."""
import numpy as np
import pytest

from qmloc.counterexamples import (analytic_energy_reference, hexagon_mesh,
                                   hexagon_target, radial_profile,
                                   radial_profile_derivative)
from qmloc.errors import PlanMismatch
from qmloc.fields import SingularPoint, TargetField, smooth_target
from qmloc.mesh import build_triangulation
from qmloc.quadrature import (make_quadrature_plan, polar_triangle_rule,
                              radial_rule, reference_triangle_rule,
                              triangle_rule)


def test_reference_rule_exactness():
    # int over the reference triangle of x^a y^b = a! b! / (a+b+2)!
    from math import factorial

    for p in range(1, 11):
        pts, wts = reference_triangle_rule(p)
        assert np.all(wts > 0)
        assert wts.sum() == pytest.approx(0.5, rel=1e-14)
        for a in range(p + 1):
            for b in range(p + 1 - a):
                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                got = float(wts @ (pts[:, 0] ** a * pts[:, 1] ** b))
                assert got == pytest.approx(exact, rel=1e-12), (p, a, b)


def test_mapped_rule_area_and_linear():
    v0, v1, v2 = np.array([1.0, 2.0]), np.array([3.0, 2.5]), np.array([1.5, 4.0])
    pts, wts = triangle_rule(3, v0, v1, v2)
    area = 0.5 * abs((v1 - v0)[0] * (v2 - v0)[1] - (v1 - v0)[1] * (v2 - v0)[0])
    assert wts.sum() == pytest.approx(area, rel=1e-14)
    centroid = (v0 + v1 + v2) / 3.0
    assert float(wts @ pts[:, 0]) / area == pytest.approx(centroid[0], rel=1e-14)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_radial_rule_closed_form(eps):
    # int_0^1 profile(r)^2 / r dr has a closed-form antiderivative
    def f(r):
        rho = radial_profile(eps, r)
        return rho * rho / r

    pts, wts = radial_rule(1.0, eps, (eps, 1.0))
    val = float(wts @ f(pts))
    exact = analytic_energy_reference(eps)["profile_sq_over_r"]
    assert val == pytest.approx(exact, rel=1e-8)
    assert val <= 1.0 / (2.0 * eps) - np.log(eps)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_polar_rule_ball_gradient(eps):
    # squared gradient of the radial profile over the ball of radius eps,
    # assembled from four right triangles covering [-eps, eps]^2
    def gsq(pts):
        r = np.hypot(pts[:, 0], pts[:, 1])
        d = radial_profile_derivative(eps, r)
        return d * d

    corners = np.array([[eps, eps], [-eps, eps], [-eps, -eps], [eps, -eps]])
    total = 0.0
    for i in range(4):
        for tri_pts in ((corners[i], corners[(i + 1) % 4]),):
            pts, wts = polar_triangle_rule(
                np.zeros(2), tri_pts[0], tri_pts[1], np.zeros(2), eps,
                (eps, 1.0),
            )
            r = np.hypot(pts[:, 0], pts[:, 1])
            mask = r <= eps
            total += float(wts[mask] @ gsq(pts[mask]))
    exact = analytic_energy_reference(eps)["ball_gradient_sq"]
    assert total == pytest.approx(exact, rel=1e-6)


def test_plan_routes_singular_elements():
    tri, _ = hexagon_mesh(0.1)
    target = hexagon_target(0.1)
    plan = make_quadrature_plan(tri, target, exactness=8)
    # every element touches the singular origin, so every rule is polar
    for k in range(tri.n_elements):
        pts, wts = plan.element_rule(k)
        assert np.all(wts > 0)
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert r.min() > 0  # no node hits the singular point
        assert wts.sum() == pytest.approx(float(tri.areas[k]), rel=1e-7)


def test_plan_smooth_target_matches_area():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    T = np.array([[0, 1, 2], [0, 2, 3]])
    tri = build_triangulation(V, T)
    target = smooth_target(lambda p: np.ones(len(p)),
                           lambda p: np.zeros_like(p))
    plan = make_quadrature_plan(tri, target, exactness=4)
    for k in range(2):
        _, wts = plan.element_rule(k)
        assert wts.sum() == pytest.approx(0.5, rel=1e-14)


def test_plan_mismatch_detected():
    from qmloc.quadrature import integrate

    V = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    T = np.array([[0, 1, 2], [0, 2, 3]])
    tri = build_triangulation(V, T)
    target = smooth_target(lambda p: np.ones(len(p)), lambda p: np.zeros_like(p))
    plan = make_quadrature_plan(tri, target, exactness=4)
    assert integrate(lambda p: np.ones(len(p)), range(2), plan) == pytest.approx(1.0)
    with pytest.raises(PlanMismatch):
        integrate(lambda p: np.ones(len(p)), range(5), plan)


def test_plan_is_deterministic():
    tri, _ = hexagon_mesh(0.05)
    target = hexagon_target(0.05)
    p1 = make_quadrature_plan(tri, target, exactness=8)
    p2 = make_quadrature_plan(tri, target, exactness=8)
    for k in range(tri.n_elements):
        a, wa = p1.element_rule(k)
        b, wb = p2.element_rule(k)
        assert np.array_equal(a, b) and np.array_equal(wa, wb)
