"""Quasi-monotonicity classifier, monotone paths, and derived selections."""
import itertools

import numpy as np
import pytest

from qmloc.coeff import (attach_coefficient, build_omega_hat,
                         check_quasi_monotonicity, find_monotone_path,
                         select_fz, select_kmax, select_kmax_of_node)
from qmloc.counterexamples import (checkerboard_mesh, fig1_meshes,
                                   hexagon_mesh)
from qmloc.errors import NoMonotonePath, NonPositiveValue
from qmloc.fespace import build_space
from qmloc.mesh import build_triangulation, vertex_patch


def brute_force_quasi_monotone(tri, coeff):
    """Exhaustive simple-path enumeration over every vertex star."""
    a = coeff.values
    for z in range(tri.n_vertices):
        star = sorted(vertex_patch(tri, z))
        adj = {
            (k, kk)
            for k, kk in itertools.permutations(star, 2)
            if any(set(tri.edge_elements[e]) == {k, kk} for e in range(tri.n_edges))
        }
        for k, kk in itertools.permutations(star, 2):
            if a[k] > a[kk]:
                continue
            found = False
            for m in range(1, len(star) + 1):
                for path in itertools.permutations(star, m):
                    if path[0] != k or path[-1] != kk:
                        continue
                    if any((p, q) not in adj for p, q in zip(path, path[1:])):
                        continue
                    vals = a[list(path)]
                    if np.all(np.diff(vals) >= 0):
                        found = True
                        break
                if found:
                    break
            if not found:
                return False
    return True


def test_non_positive_coefficient_rejected():
    tri, _ = hexagon_mesh(0.1)
    with pytest.raises(NonPositiveValue):
        attach_coefficient(tri, [1, 1, 1, 0, 1, 1])


@pytest.mark.parametrize("M,expected", [(2, True), (4, True), (8, True), (1.5, False), (1, True)])
def test_fig1_left_verdicts(M, expected):
    tri, coeff = fig1_meshes(M, "left")
    assert check_quasi_monotonicity(tri, coeff).quasi_monotone is expected
    assert brute_force_quasi_monotone(tri, coeff) is expected


@pytest.mark.parametrize("M,expected", [(10, False), (100, False), (1, True)])
def test_fig1_right_verdicts(M, expected):
    tri, coeff = fig1_meshes(M, "right")
    assert check_quasi_monotonicity(tri, coeff).quasi_monotone is expected
    assert brute_force_quasi_monotone(tri, coeff) is expected


def test_hexagon_not_quasi_monotone_with_witness():
    tri, coeff = hexagon_mesh(0.1)
    report = check_quasi_monotonicity(tri, coeff)
    assert not report.quasi_monotone
    assert len(report.witnesses) > 0
    locus, k, kk = report.witnesses[0]
    assert coeff.values[k] <= coeff.values[kk]
    kind, z = locus
    assert kind == "vertex"
    assert find_monotone_path(tri, coeff, z, k, kk) is None
    assert brute_force_quasi_monotone(tri, coeff) is False


def test_checkerboard_not_quasi_monotone():
    tri, coeff = checkerboard_mesh(2)
    report = check_quasi_monotonicity(tri, coeff)
    assert not report.quasi_monotone
    assert len(report.witnesses) > 0
    assert brute_force_quasi_monotone(tri, coeff) is False


def test_constant_coefficient_quasi_monotone():
    tri, _ = hexagon_mesh(0.1)
    coeff = attach_coefficient(tri, np.full(6, 3.7))
    assert check_quasi_monotonicity(tri, coeff).quasi_monotone


def test_path_properties():
    tri, _ = hexagon_mesh(0.1)
    coeff = attach_coefficient(tri, [1, 2, 4, 8, 16, 32])
    path = find_monotone_path(tri, coeff, 0, 0, 3)
    assert path.elements[0] == 0 and path.elements[-1] == 3
    vals = coeff.values[list(path.elements)]
    assert np.all(np.diff(vals) >= 0)
    assert len(path.shared_edges) == len(path.elements) - 1
    for e, (k, kk) in zip(path.shared_edges, zip(path.elements, path.elements[1:])):
        assert set(tri.edge_elements[e]) == {k, kk}
    # shortest: 0 -> 1 -> 2 -> 3 around the fan
    assert path.elements == (0, 1, 2, 3)


def test_scale_invariance():
    tri, coeff = hexagon_mesh(0.1)
    scaled = attach_coefficient(tri, 17.0 * coeff.values)
    r1 = check_quasi_monotonicity(tri, coeff)
    r2 = check_quasi_monotonicity(tri, scaled)
    assert r1.quasi_monotone == r2.quasi_monotone
    assert r1.witnesses == r2.witnesses
    star = list(range(6))
    assert select_kmax(tri, coeff, star) == select_kmax(tri, scaled, star)


def test_kmax_tie_break_smallest_id():
    tri, _ = hexagon_mesh(0.1)
    coeff = attach_coefficient(tri, [1.0, 2.0, 2.0, 1.0, 2.0, 2.0])
    assert select_kmax(tri, coeff, list(range(6))) == 1


def test_select_fz_is_edge_of_kmax():
    tri, coeff = hexagon_mesh(0.1)
    space = build_space(tri, 1)
    for z in range(space.n_nodes):
        e = select_fz(space, coeff, z)
        kmax = select_kmax_of_node(space, coeff, z)
        assert e in tuple(int(x) for x in tri.triangle_edges[kmax])
        assert z in tuple(int(v) for v in tri.edges[e])


def test_omega_hat_constant_coefficient():
    tri, _ = hexagon_mesh(0.1)
    coeff = attach_coefficient(tri, np.ones(6))
    for k in range(6):
        omega = build_omega_hat(tri, coeff, k)
        assert k in omega
        patch = {kk for z in tri.triangles[k] for kk in vertex_patch(tri, int(z))}
        assert set(omega) <= patch


def test_omega_hat_refuses_non_qm():
    tri, coeff = hexagon_mesh(0.1)
    with pytest.raises(NoMonotonePath):
        build_omega_hat(tri, coeff, 3)


def test_crucial_inequality_under_qm():
    tri, coeff = fig1_meshes(4, "left")
    for k in range(tri.n_elements):
        omega = build_omega_hat(tri, coeff, k)
        assert all(coeff.values[k] <= coeff.values[kk] + 1e-15 for kk in omega)
