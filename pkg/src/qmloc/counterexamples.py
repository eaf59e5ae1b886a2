"""Closed-form demonstration problems for the localization experiments.

Three families:

* a six-triangle hexagonal domain with an alternating high/low coefficient
  and a target whose global best error stays O(1) while every localized
  error sum shrinks with the contrast;
* the two four-triangle square tilings used to illustrate the
  quasi-monotonicity classifier (one quasi-monotone for large contrast, one
  checkerboard-like and never quasi-monotone away from the constant case);
* an N x N array of rescaled copies of the hexagon target on a uniform
  checkerboard mesh of the unit square, where localization on vertex stars
  fails as N grows.
"""
from __future__ import annotations

import numpy as np

from .coeff import Coefficient, attach_coefficient
from .errors import ParameterOutOfRange
from .fields import SingularPoint, TargetField
from .mesh import Triangulation, build_triangulation, uniform_refine

_HEX_VERTICES = np.array(
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 1.0],
     [-1.0, 0.0], [0.0, -1.0], [1.0, -1.0]]
)
_HEX_TRIANGLES = np.array(
    [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 6], [0, 6, 1]]
)

EPS_MIN, EPS_MAX = 1e-3, 0.5


def hexagon_mesh(eps: float) -> tuple[Triangulation, Coefficient]:
    """Hexagon {-1<=x,y<=1, -1<=x+y<=1} as six triangles around the origin,
    coefficient 1 on the two quadrant triangles and eps^2 elsewhere."""
    if not 0.0 < eps <= 1.0:
        raise ParameterOutOfRange(f"eps must lie in (0, 1], got {eps}")
    tri = build_triangulation(_HEX_VERTICES, _HEX_TRIANGLES)
    e2 = eps * eps
    coeff = attach_coefficient(tri, [1.0, e2, e2, 1.0, e2, e2])
    return tri, coeff


def radial_profile(eps: float, r):
    """Continuous profile: (1-eps)(r/eps)^eps below eps, 1-r up to 1, then 0."""
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    inner = r < eps
    mid = (r >= eps) & (r <= 1.0)
    out[inner] = (1.0 - eps) * (r[inner] / eps) ** eps
    out[mid] = 1.0 - r[mid]
    return out


def radial_profile_derivative(eps: float, r):
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    rs = np.where(r > 0, r, 1.0)
    inner = r < eps
    mid = (r >= eps) & (r <= 1.0)
    out[inner] = (1.0 - eps) * eps * (rs[inner] / eps) ** eps / rs[inner]
    out[mid] = -1.0
    return out


def hexagon_target(eps: float) -> TargetField:
    """The piecewise target on the hexagon.

    On the second-quadrant triangles: radial profile times the angular ramp
    3 - 4*theta/pi.  On the first-quadrant triangle: the radial profile
    inside the ball of radius eps and the explicit extension
    w + eps*utilde outside it, where w = 1-x-y and utilde interpolates the
    ball trace to zero on the outer edge.  The lower half is the point
    reflection u(x, y) = -u(-x, -y).
    """
    if not EPS_MIN <= eps <= EPS_MAX:
        raise ParameterOutOfRange(
            f"eps must lie in [{EPS_MIN}, {EPS_MAX}] for resolvable quadrature, got {eps}"
        )

    def split(pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        x, y = pts[:, 0], pts[:, 1]
        upper = (y > 0) | ((y == 0) & (x >= 0))
        sign = np.where(upper, 1.0, -1.0)
        xs, ys = sign * x, sign * y
        return xs, ys, sign

    def upper_value(xs, ys):
        r = np.hypot(xs, ys)
        rs = np.where(r > 0, r, 1.0)
        rho = radial_profile(eps, r)
        out = np.zeros_like(xs)
        q1 = xs >= 0  # first quadrant (ys >= 0 throughout)
        ball = q1 & (r < eps)
        outer = q1 & ~ (r < eps)
        out[ball] = rho[ball]
        if outer.any():
            A = (xs[outer] + ys[outer]) / rs[outer]
            w = 1.0 - xs[outer] - ys[outer]
            out[outer] = w + eps * (A - 1.0) * w / (1.0 - eps * A)
        q2 = ~q1
        if q2.any():
            theta = np.arctan2(ys[q2], xs[q2])
            out[q2] = rho[q2] * (3.0 - 4.0 * theta / np.pi)
        return out

    def upper_gradient(xs, ys):
        r = np.hypot(xs, ys)
        rs = np.where(r > 0, r, 1.0)
        g = np.zeros((len(xs), 2))
        q1 = xs >= 0
        ball = q1 & (r < eps)
        if ball.any():
            dr = radial_profile_derivative(eps, r[ball])
            g[ball, 0] = dr * xs[ball] / rs[ball]
            g[ball, 1] = dr * ys[ball] / rs[ball]
        outer = q1 & ~(r < eps)
        if outer.any():
            xo, yo, ro = xs[outer], ys[outer], rs[outer]
            A = (xo + yo) / ro
            w = 1.0 - xo - yo
            den = 1.0 - eps * A
            Ax = yo * (yo - xo) / ro**3
            Ay = xo * (xo - yo) / ro**3
            common = w * (1.0 - eps) / den**2
            g[outer, 0] = -1.0 + eps * (Ax * common - (A - 1.0) / den)
            g[outer, 1] = -1.0 + eps * (Ay * common - (A - 1.0) / den)
        q2 = ~q1
        if q2.any():
            xq, yq, rq = xs[q2], ys[q2], rs[q2]
            theta = np.arctan2(yq, xq)
            rho = radial_profile(eps, r[q2])
            drho = radial_profile_derivative(eps, r[q2])
            ang = 3.0 - 4.0 * theta / np.pi
            c, s = xq / rq, yq / rq
            g[q2, 0] = drho * ang * c - (-4.0 / np.pi) * rho * s / rq
            g[q2, 1] = drho * ang * s + (-4.0 / np.pi) * rho * c / rq
        return g

    def value(pts):
        xs, ys, sign = split(pts)
        return sign * upper_value(xs, ys)

    def gradient(pts):
        xs, ys, _ = split(pts)
        return upper_gradient(xs, ys)  # point reflection makes the gradient even

    return TargetField(
        value_fn=value,
        gradient_fn=gradient,
        singular_points=(SingularPoint((0.0, 0.0), eps, (eps, 1.0)),),
        antisymmetry=(((0.0, 0.0), np.inf),),
        parameters={"eps": eps},
    )


def analytic_energy_reference(eps: float) -> dict:
    """Closed-form energies of the hexagon target.

    ball_gradient_sq: squared gradient norm of the radial profile over the
    ball of radius eps.  profile_sq_over_r: the 1D integral of profile^2/r
    over (0, 1); bounded by 1/(2 eps) - ln eps.  low_region_energy_sq: the
    eps^2-weighted squared energy over the two second-quadrant triangles.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterOutOfRange(f"eps must lie in (0, 1), got {eps}")
    one = (1.0 - eps) ** 2
    ball = np.pi * eps * one
    profile = one / (2.0 * eps) - 1.5 - np.log(eps) + 2.0 * eps - eps * eps / 2.0
    low = eps * eps * (
        (np.pi / 6.0) * (eps * one / 2.0 + (1.0 - eps * eps) / 2.0)
        + (8.0 / np.pi) * profile
    )
    return {
        "ball_gradient_sq": ball,
        "profile_sq_over_r": profile,
        "profile_sq_over_r_bound": 1.0 / (2.0 * eps) - np.log(eps),
        "low_region_energy_sq": low,
    }


_FIG1_VERTICES = np.array(
    [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [0.0, 0.0]]
)
_FIG1_TRIANGLES = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
# element order: bottom, right, top, left


def fig1_meshes(M: float, side: str) -> tuple[Triangulation, Coefficient]:
    """Four-triangle square tilings of [-1,1]^2 meeting at the origin.

    side='left': values M/2 (bottom), 1 (right), M (top), 3M/4 (left) —
    quasi-monotone for M >= 2.  side='right': M on top/bottom, 1 on
    left/right — the checkerboard-like case, quasi-monotone only for M = 1.
    """
    if M <= 0:
        raise ParameterOutOfRange(f"M must be positive, got {M}")
    tri = build_triangulation(_FIG1_VERTICES, _FIG1_TRIANGLES)
    if side == "left":
        values = [M / 2.0, 1.0, M, 3.0 * M / 4.0]
    elif side == "right":
        values = [M, 1.0, M, 1.0]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return tri, attach_coefficient(tri, values)


def fig1_left_pattern(alpha: float, refines: int = 0) -> tuple[Triangulation, Coefficient]:
    """Quasi-monotone tiling with contrast alpha = min(a)/max(a).

    alpha=1 gives the constant coefficient; alpha <= 1/2 uses the 'left'
    tiling with M = 1/alpha.  Optional uniform refinements keep the
    coefficient subordinate to the four regions.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterOutOfRange(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        tri = build_triangulation(_FIG1_VERTICES, _FIG1_TRIANGLES)
        coeff = attach_coefficient(tri, np.ones(4))
    elif alpha > 0.5:
        raise ParameterOutOfRange(
            "the tiling is quasi-monotone only for alpha = 1 or alpha <= 1/2"
        )
    else:
        tri, coeff = fig1_meshes(1.0 / alpha, "left")
    for _ in range(refines):
        fine = uniform_refine(tri)
        coeff = attach_coefficient(fine, coeff.values[fine.parents])
        tri = fine
    return tri, coeff


def checkerboard_mesh(N: int) -> tuple[Triangulation, Coefficient]:
    """[0,1]^2 as 4N^2 squares of side 1/(2N), each split along its
    top-left-to-bottom-right diagonal; a = 1/N^2 on black squares (top-left
    square black, colors alternating), 1 on white."""
    if N < 1:
        raise ParameterOutOfRange(f"N must be >= 1, got {N}")
    n = 2 * N
    h = 1.0 / n
    xs = np.linspace(0.0, 1.0, n + 1)
    V = np.array([[x, y] for y in xs for x in xs])

    def vid(i, j):
        return j * (n + 1) + i

    tris, vals = [], []
    low = 1.0 / (N * N)
    for j in range(n):
        for i in range(n):
            bl, br = vid(i, j), vid(i + 1, j)
            tr, tl = vid(i + 1, j + 1), vid(i, j + 1)
            # diagonal tl -> br
            tris.append([bl, br, tl])
            tris.append([br, tr, tl])
            a = low if (i + j) % 2 == 1 else 1.0
            vals.extend([a, a])
    tri = build_triangulation(V, np.array(tris))
    return tri, attach_coefficient(tri, vals)


def checkerboard_target(N: int) -> TargetField:
    """Sum of 1/N-scaled copies of the hexagon target, one per macro square
    of side 1/N, each in local coordinates xi = 2N(x - center) and extended
    by zero on the two corner triangles |xi_x + xi_y| > 1."""
    eps = 1.0 / N if N >= 1 else np.inf
    if not EPS_MIN <= eps <= EPS_MAX:
        raise ParameterOutOfRange(
            f"target defined for eps = 1/N in [{EPS_MIN}, {EPS_MAX}]; got N={N}"
        )
    local = hexagon_target(eps)

    def to_local(pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        IJ = np.clip(np.floor(pts * N).astype(int), 0, N - 1)
        centers = (IJ + 0.5) / N
        xi = 2.0 * N * (pts - centers)
        return xi

    def value(pts):
        xi = to_local(pts)
        out = np.zeros(len(xi))
        inside = np.abs(xi[:, 0] + xi[:, 1]) <= 1.0
        if inside.any():
            out[inside] = local.value(xi[inside]) / N
        return out

    def gradient(pts):
        xi = to_local(pts)
        out = np.zeros_like(xi)
        inside = np.abs(xi[:, 0] + xi[:, 1]) <= 1.0
        if inside.any():
            out[inside] = 2.0 * local.gradient(xi[inside])
        return out

    sing = tuple(
        SingularPoint(
            ((i + 0.5) / N, (j + 0.5) / N), eps, (eps / (2.0 * N), 1.0 / (2.0 * N))
        )
        for j in range(N)
        for i in range(N)
    )
    anti = tuple((((i + 0.5) / N, (j + 0.5) / N), 0.5 / N) for j in range(N) for i in range(N))
    return TargetField(
        value_fn=value,
        gradient_fn=gradient,
        singular_points=sing,
        antisymmetry=anti,
        parameters={"N": N, "eps": eps},
    )
