"""Stencil construction.

The weighted least-squares rows are checked against things that are known
exactly: classical finite-difference weights on a uniform 3x3 support,
analytic derivatives of polynomial data on arbitrary supports, and the
invariances (translation, uniform scaling, weight choice at n = m) that the
construction must respect. Rank-deficient supports exercise the ambiguity
bookkeeping: operators whose stencil survives the deficiency keep working,
the rest raise.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlsm2d.neighbors import build_supports
from mlsm2d.nodes import Rect, build_rectangle_grid
from mlsm2d.shapes import (
    OPS,
    BasisSpec,
    IllConditionedStencilError,
    ShapeSet,
    WeightSpec,
    build_shape_set,
    compute_shapes,
    weight,
)

M9 = BasisSpec("monomial-9")
G9 = BasisSpec("gaussian-9")


def grid_support(h=1.0):
    """Uniform 3x3 support centered at the origin, center first."""
    offsets = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]
    return np.array(offsets, dtype=float) * h


def scattered_support(n, rng):
    """Jittered grid sites around the origin, center first.

    Nearest-neighbor supports never contain near-coincident pairs, so the
    generator keeps the minimum separation comparable to the spread; raw
    uniform draws would let the normalized weight zero out everything but
    the closest pair.
    """
    k = int(np.ceil(np.sqrt(n)))
    xs, ys = np.meshgrid(np.arange(k, dtype=float), np.arange(k, dtype=float))
    sites = np.column_stack([xs.ravel(), ys.ravel()])
    sites -= sites.mean(axis=0)
    rng.shuffle(sites)
    pts = sites[: n - 1] + rng.uniform(-0.2, 0.2, size=(n - 1, 2))
    return np.vstack([[0.0, 0.0], pts])


def poly_field(pos, coeff):
    """Tensor-quadratic with given 9 coefficients, plus exact derivatives."""
    x, y = pos[:, 0], pos[:, 1]
    basis = [np.ones_like(x), x, y, x * x, x * y, y * y, x * x * y, x * y * y, x * x * y * y]
    vals = sum(c * b for c, b in zip(coeff, basis))
    return vals


def poly_derivative(p, coeff, op):
    x, y = p
    c = coeff
    if op == "val":
        return (c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
                + c[6] * x * x * y + c[7] * x * y * y + c[8] * x * x * y * y)
    if op == "dx":
        return c[1] + 2 * c[3] * x + c[4] * y + 2 * c[6] * x * y + c[7] * y * y + 2 * c[8] * x * y * y
    if op == "dy":
        return c[2] + c[4] * x + 2 * c[5] * y + c[6] * x * x + 2 * c[7] * x * y + 2 * c[8] * x * x * y
    if op == "dxx":
        return 2 * c[3] + 2 * c[6] * y + 2 * c[8] * y * y
    if op == "dyy":
        return 2 * c[5] + 2 * c[7] * x + 2 * c[8] * x * x
    if op == "dxy":
        return c[4] + 2 * c[6] * x + 2 * c[7] * y + 4 * c[8] * x * y
    raise ValueError(op)


class TestFiniteDifferenceOracle:
    """At n = m on a uniform 3x3 block the rows are classical FD weights."""

    @pytest.mark.parametrize("sigma_w", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("h", [1.0, 0.1])
    def test_second_derivative_stencils(self, sigma_w, h):
        pos = grid_support(h)
        rows = compute_shapes(pos, pos[0], M9, WeightSpec(sigma=sigma_w))
        lookup = {tuple(np.round(p / h).astype(int)): k for k, p in enumerate(pos)}

        dxx = np.zeros(9)
        for off, w in (((-1, 0), 1.0), ((0, 0), -2.0), ((1, 0), 1.0)):
            dxx[lookup[off]] = w / h**2
        np.testing.assert_allclose(rows["dxx"], dxx, rtol=1e-9, atol=1e-9 / h**2)

        dyy = np.zeros(9)
        for off, w in (((0, -1), 1.0), ((0, 0), -2.0), ((0, 1), 1.0)):
            dyy[lookup[off]] = w / h**2
        np.testing.assert_allclose(rows["dyy"], dyy, rtol=1e-9, atol=1e-9 / h**2)

        dxy = np.zeros(9)
        for off, w in (((1, 1), 0.25), ((-1, -1), 0.25), ((1, -1), -0.25), ((-1, 1), -0.25)):
            dxy[lookup[off]] = w / h**2
        np.testing.assert_allclose(rows["dxy"], dxy, rtol=1e-9, atol=1e-9 / h**2)

    def test_value_row_is_a_delta(self):
        pos = grid_support()
        rows = compute_shapes(pos, pos[0], M9, WeightSpec())
        expected = np.zeros(9)
        expected[0] = 1.0
        np.testing.assert_allclose(rows["val"], expected, atol=1e-11)

    def test_first_derivative_stencils_are_central(self):
        pos = grid_support(0.5)
        rows = compute_shapes(pos, pos[0], M9, WeightSpec())
        f = poly_field(pos, np.arange(1.0, 10.0))
        assert rows["dx"] @ f == pytest.approx(poly_derivative((0, 0), np.arange(1.0, 10.0), "dx"))
        assert rows["dy"] @ f == pytest.approx(poly_derivative((0, 0), np.arange(1.0, 10.0), "dy"))


class TestPolynomialReproduction:
    @pytest.mark.parametrize("op", OPS)
    @pytest.mark.parametrize("n", [9, 13])
    def test_random_support_reproduces_tensor_quadratics(self, op, n):
        rng = np.random.default_rng(abs(hash((op, n))) % 2**32)
        for _ in range(5):
            pos = scattered_support(n, rng)
            coeff = rng.standard_normal(9)
            rows = compute_shapes(pos, pos[0], M9, WeightSpec())
            got = rows[op] @ poly_field(pos, coeff)
            want = poly_derivative((0.0, 0.0), coeff, op)
            assert got == pytest.approx(want, rel=1e-7, abs=1e-7 * np.abs(coeff).max())

    def test_constant_reproduction_and_zero_derivative_sums(self):
        rng = np.random.default_rng(7)
        pos = scattered_support(13, rng)
        rows = compute_shapes(pos, pos[0], M9, WeightSpec())
        assert rows["val"].sum() == pytest.approx(1.0, abs=1e-8)
        for op in ("dx", "dy", "dxx", "dxy", "dyy"):
            scale = np.abs(rows[op]).max()
            assert abs(rows[op].sum()) <= 1e-8 * scale

    def test_off_center_evaluation(self):
        rng = np.random.default_rng(11)
        pos = scattered_support(9, rng)
        coeff = rng.standard_normal(9)
        target = np.array([0.3, -0.2])
        rows = compute_shapes(pos, pos[0], M9, WeightSpec(), eval_point=target)
        for op in OPS:
            got = rows[op] @ poly_field(pos, coeff)
            assert got == pytest.approx(poly_derivative(target, coeff, op), rel=1e-6, abs=1e-8)


class TestInvariances:
    def test_translation(self):
        rng = np.random.default_rng(3)
        pos = scattered_support(13, rng)
        shift = np.array([5.0, -7.0])
        a = compute_shapes(pos, pos[0], M9, WeightSpec())
        b = compute_shapes(pos + shift, pos[0] + shift, M9, WeightSpec())
        for op in OPS:
            np.testing.assert_allclose(a[op], b[op], rtol=1e-9, atol=1e-9)

    def test_uniform_scaling(self):
        # rows of a k-th derivative scale as s^-k under p -> s p
        rng = np.random.default_rng(4)
        pos = scattered_support(13, rng)
        s = 0.01
        a = compute_shapes(pos, pos[0], M9, WeightSpec())
        b = compute_shapes(pos * s, pos[0] * s, M9, WeightSpec())
        orders = {"val": 0, "dx": 1, "dy": 1, "dxx": 2, "dxy": 2, "dyy": 2}
        for op, k in orders.items():
            np.testing.assert_allclose(b[op] * s**k, a[op], rtol=1e-7, atol=1e-9)

    @pytest.mark.parametrize("basis", [M9, G9], ids=["m9", "g9"])
    def test_weight_drops_out_at_interpolation(self, basis):
        rng = np.random.default_rng(5)
        pos = scattered_support(9, rng)
        a = compute_shapes(pos, pos[0], basis, WeightSpec(sigma=0.5))
        b = compute_shapes(pos, pos[0], basis, WeightSpec(sigma=2.0))
        for op in OPS:
            np.testing.assert_allclose(a[op], b[op], rtol=1e-6, atol=1e-8)


class TestGaussianBasis:
    def test_interpolation_value_row_sums_to_one(self):
        rng = np.random.default_rng(6)
        pos = scattered_support(9, rng)
        rows = compute_shapes(pos, pos[0], G9, WeightSpec())
        assert rows["val"].sum() == pytest.approx(1.0, abs=1e-8)

    def test_reproduces_own_basis_functions(self):
        # n = m interpolation is exact on the span of the basis, so data
        # sampled from one member comes back with its analytic derivatives
        rng = np.random.default_rng(6)
        pos = scattered_support(9, rng)
        p_min = np.hypot(pos[1:, 0], pos[1:, 1]).min()
        s = G9.sigma * p_min
        center = pos[3]
        d2 = ((pos - center) ** 2).sum(axis=1)
        f = np.exp(-d2 / s**2)
        rows = compute_shapes(pos, pos[0], G9, WeightSpec())
        f0 = np.exp(-((center**2).sum()) / s**2)
        assert rows["val"] @ f == pytest.approx(f0, rel=1e-8)
        assert rows["dx"] @ f == pytest.approx(2.0 * center[0] / s**2 * f0, rel=1e-7)
        assert rows["dy"] @ f == pytest.approx(2.0 * center[1] / s**2 * f0, rel=1e-7)


class TestWeightFunction:
    def test_gaussian_profile(self):
        p0 = np.array([0.0, 0.0])
        assert weight(p0, p0, 1.0, 1.0) == pytest.approx(1.0)
        assert weight(np.array([1.0, 0.0]), p0, 1.0, 1.0) == pytest.approx(np.exp(-1.0))
        assert weight(np.array([2.0, 0.0]), p0, 2.0, 1.0) == pytest.approx(np.exp(-1.0))


class TestRankDeficiency:
    def test_collinear_support_determines_along_line_only(self):
        pos = np.column_stack([np.linspace(-2, 2, 9), np.zeros(9)])
        pos[[0, 4]] = pos[[4, 0]]  # center first
        rows = compute_shapes(pos, pos[0], M9, WeightSpec(), ops=("val", "dx", "dxx"))
        f = 3.0 + 2.0 * pos[:, 0] + 0.5 * pos[:, 0] ** 2
        assert rows["val"] @ f == pytest.approx(3.0)
        assert rows["dx"] @ f == pytest.approx(2.0)
        assert rows["dxx"] @ f == pytest.approx(1.0)
        for op in ("dy", "dyy", "dxy"):
            with pytest.raises(IllConditionedStencilError):
                compute_shapes(pos, pos[0], M9, WeightSpec(), ops=(op,))

    def test_coincident_nodes_rejected(self):
        pos = grid_support()
        pos[3] = pos[0]
        with pytest.raises(IllConditionedStencilError):
            compute_shapes(pos, pos[0], M9, WeightSpec())

    def test_grid_edge_supports_leave_only_dxy_ambiguous(self):
        # edge-node 9-supports of a uniform grid are rank deficient, but the
        # Laplacian-relevant rows stay unique; only the mixed derivative
        # depends on the minimum-norm completion
        nodes = build_rectangle_grid(Rect(0, 4, 0, 2), 0.5)
        shapes = build_shape_set(nodes, build_supports(nodes, 9))
        edge = [
            i
            for i in range(nodes.n)
            if nodes.kinds[i] == 1 and not np.all(nodes.normals[i] != 0)
        ]
        assert shapes.ambiguous["dxy"][edge].any()
        for op in ("val", "dx", "dy", "dxx", "dyy"):
            assert not shapes.ambiguous[op].any(), op
        with pytest.raises(IllConditionedStencilError, match="dxy"):
            shapes.require("dxy")
        shapes.require("dxx")

    def test_require_respects_subset(self):
        nodes = build_rectangle_grid(Rect(0, 4, 0, 2), 0.5)
        shapes = build_shape_set(nodes, build_supports(nodes, 9))
        interior = np.nonzero(nodes.interior_mask)[0]
        shapes.require("dxy", interior)  # interior block stencils are unique


class TestShapeSet:
    def build(self, n=9):
        nodes = build_rectangle_grid(Rect(0, 2, 0, 1), 0.25)
        return nodes, build_shape_set(nodes, build_supports(nodes, n))

    def test_apply_differentiates_polynomial_data(self):
        nodes, shapes = self.build()
        x, y = nodes.positions[:, 0], nodes.positions[:, 1]
        f = 1.0 + 2.0 * x - y + 0.5 * x * y
        interior = nodes.interior_mask
        np.testing.assert_allclose((shapes.apply("dx", f))[interior], (2.0 + 0.5 * y)[interior], atol=1e-9)
        np.testing.assert_allclose((shapes.apply("dxy", f))[interior], 0.5, atol=1e-9)

    def test_row_accessor_matches_apply(self):
        nodes, shapes = self.build()
        f = np.sin(nodes.positions[:, 0])
        i = nodes.n // 2
        row = shapes.row(i, "dx")
        assert row @ f[shapes.support.indices[i]] == pytest.approx(shapes.apply("dx", f)[i])

    def test_full_rank_on_interior_of_uniform_grid(self):
        nodes, shapes = self.build()
        assert np.all(shapes.ranks[nodes.interior_mask] == 9)

    def test_csv_export(self, tmp_path):
        _, shapes = self.build()
        path = tmp_path / "shapes.csv"
        shapes.to_csv(path)
        assert path.read_text().startswith("node,op")


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_generic_13_supports_are_full_rank(seed):
    rng = np.random.default_rng(seed)
    pos = scattered_support(13, rng)
    rows = compute_shapes(pos, pos[0], M9, WeightSpec())
    assert rows["val"].sum() == pytest.approx(1.0, abs=1e-8)
