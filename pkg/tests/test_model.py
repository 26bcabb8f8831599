import numpy as np
import pytest
from scipy.special import roots_legendre

from eddymor.errors import ConstraintError, GeometryError
from eddymor.model import (
    MU_0,
    ConstraintGroup,
    FilamentSpec,
    Loop,
    assemble_constraints,
    build_null_system,
    build_nullspace,
    generate_filament_model,
    mutual_inductance,
    project_operators,
    self_inductance,
)


def neumann_mutual_oracle(a, b, d, n=96):
    """Independent Neumann double-integral via Gauss-Legendre quadrature.

    M = mu0/(4 pi) * a * b * \\int\\int cos(t - p) / |r1 - r2| dt dp
    for coaxial loops of radii a, b separated axially by d.
    """
    x, w = roots_legendre(n)
    t = np.pi * (x + 1.0)  # map to (0, 2 pi)
    wt = np.pi * w
    tt, pp = np.meshgrid(t, t)
    wgt = np.outer(wt, wt)
    dist = np.sqrt(a**2 + b**2 - 2 * a * b * np.cos(tt - pp) + d**2)
    return MU_0 * a * b / (4 * np.pi) * (np.cos(tt - pp) / dist * wgt).sum()


def small_spec(n=4, radius=1.0, spacing=0.3):
    loops = tuple(
        Loop(radius=radius, z=i * spacing, wire_radius=1e-3, resistance=1.0 + 0.1 * i)
        for i in range(n)
    )
    return FilamentSpec(passive=loops)


class TestInductance:
    def test_single_loop(self):
        spec = FilamentSpec(passive=(Loop(radius=1.0, z=0.0, wire_radius=1e-3, resistance=2.0),))
        model = generate_filament_model(spec)
        assert model.inductance.shape == (1, 1)
        assert model.inductance[0, 0] > 0
        np.testing.assert_allclose(model.resistance.toarray(), [[2.0]])

    def test_self_inductance_formula(self):
        loop = Loop(radius=1.0, z=0.0, wire_radius=1e-3, resistance=1.0)
        expected = MU_0 * 1.0 * (np.log(8.0 / 1e-3) - 1.75)
        np.testing.assert_allclose(self_inductance(loop), expected, rtol=1e-14)

    def test_far_field_dipole_limit(self):
        # d >> a: M ~ mu0 pi a1^2 a2^2 / (2 d^3), checked against the
        # independent Neumann quadrature oracle as well
        a1, a2, d = 0.5, 0.4, 20.0
        m = mutual_inductance(
            Loop(radius=a1, z=0.0, wire_radius=1e-3, resistance=1.0),
            Loop(radius=a2, z=d, wire_radius=1e-3, resistance=1.0),
        )
        dipole = MU_0 * np.pi * a1**2 * a2**2 / (2 * d**3)
        assert abs(m - dipole) <= 0.01 * abs(dipole)
        oracle = neumann_mutual_oracle(a1, a2, d)
        assert abs(m - oracle) <= 1e-6 * abs(oracle) + 1e-18

    def test_elliptic_matches_neumann_oracle_close_range(self):
        for a1, a2, d in [(1.0, 1.0, 0.5), (1.0, 0.7, 0.2), (0.3, 1.4, 1.1)]:
            m = mutual_inductance(
                Loop(radius=a1, z=0.0, wire_radius=1e-3, resistance=1.0),
                Loop(radius=a2, z=d, wire_radius=1e-3, resistance=1.0),
            )
            oracle = neumann_mutual_oracle(a1, a2, d, n=192)
            assert abs(m - oracle) <= 1e-8 * abs(oracle)

    def test_offset_pair_consistent_with_coaxial(self):
        # equal offsets share an axis, so the quadrature path must agree
        # with the closed form for the same radii and axial gap
        li = Loop(radius=0.8, z=0.0, offset=0.5, wire_radius=1e-3, resistance=1.0)
        lj = Loop(radius=0.6, z=0.7, offset=0.5 + 1e-9, wire_radius=1e-3, resistance=1.0)
        coax = mutual_inductance(
            Loop(radius=0.8, z=0.0, wire_radius=1e-3, resistance=1.0),
            Loop(radius=0.6, z=0.7, wire_radius=1e-3, resistance=1.0),
        )
        assert abs(mutual_inductance(li, lj) - coax) <= 1e-6 * abs(coax)

    def test_reciprocity_exact(self):
        model = generate_filament_model(small_spec(5))
        np.testing.assert_array_equal(model.inductance, model.inductance.T)

    def test_monotone_decay_with_distance(self):
        base = Loop(radius=1.0, z=0.0, wire_radius=1e-3, resistance=1.0)
        values = [
            abs(mutual_inductance(base, Loop(radius=1.0, z=d, wire_radius=1e-3, resistance=1.0)))
            for d in np.linspace(0.5, 10.0, 24)
        ]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_overlap_rejected(self):
        spec = FilamentSpec(
            passive=(
                Loop(radius=1.0, z=0.0, wire_radius=1e-3, resistance=1.0),
                Loop(radius=1.0, z=1e-6, wire_radius=1e-3, resistance=1.0),
            )
        )
        with pytest.raises(GeometryError):
            generate_filament_model(spec)

    def test_source_columns_are_mutual_columns(self):
        src = Loop(radius=0.8, z=2.0, wire_radius=1e-3)
        spec = FilamentSpec(passive=small_spec(3).passive, sources={"axi": (src,)})
        model = generate_filament_model(spec)
        expected = np.array([[mutual_inductance(p, src)] for p in spec.passive])
        np.testing.assert_allclose(model.sources["axi"], expected, rtol=1e-14)
        assert model.sources["3d"].shape == (3, 0)

    def test_spd_by_construction(self):
        from eddymor.numerics import cholesky_factor

        model = generate_filament_model(small_spec(8, spacing=0.25))
        cholesky_factor(model.inductance)
        cholesky_factor(model.resistance)


class TestConstraints:
    def test_single_group_row(self):
        model = generate_filament_model(small_spec(3))
        assemble_constraints(model, [ConstraintGroup(loops=(0, 1, 2), waveform="w0")])
        np.testing.assert_array_equal(model.constraints.toarray(), [[1.0, 1.0, 1.0]])
        assert model.constraint_waveforms == ("w0",)

    def test_no_groups(self):
        model = generate_filament_model(small_spec(3))
        assemble_constraints(model, [])
        assert model.constraints.shape == (0, 3)

    def test_two_disjoint_groups_rank(self):
        model = generate_filament_model(small_spec(5))
        assemble_constraints(
            model,
            [ConstraintGroup(loops=(0, 1), waveform="a"), ConstraintGroup(loops=(2, 3), waveform="b")],
        )
        s = np.linalg.svd(model.constraints.toarray(), compute_uv=False)
        assert (s > 1e-12 * s[0]).sum() == 2

    def test_empty_group_rejected(self):
        model = generate_filament_model(small_spec(3))
        with pytest.raises(ConstraintError):
            assemble_constraints(model, [ConstraintGroup(loops=(), waveform="x")])

    def test_out_of_range_rejected(self):
        model = generate_filament_model(small_spec(3))
        with pytest.raises(ConstraintError):
            assemble_constraints(model, [ConstraintGroup(loops=(0, 7), waveform="x")])


class TestNullspace:
    def test_empty_constraints_recover_unconstrained(self):
        data = build_nullspace(np.zeros((0, 4)))
        np.testing.assert_array_equal(data.basis, np.eye(4))
        np.testing.assert_array_equal(data.particular(np.zeros(0)), np.zeros(4))

    def test_two_loop_null_vector(self):
        data = build_nullspace(np.array([[1.0, 1.0]]))
        k = data.basis
        assert k.shape == (2, 1)
        expected = np.array([1.0, -1.0]) / np.sqrt(2.0)
        assert min(np.linalg.norm(k[:, 0] - expected), np.linalg.norm(k[:, 0] + expected)) <= 1e-12
        np.testing.assert_allclose(data.particular(np.array([0.0])), [0.0, 0.0], atol=1e-15)

    def test_particular_solution_pseudo_inverse(self):
        data = build_nullspace(np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(data.particular(np.array([2.0])), [1.0, 1.0], rtol=1e-12)

    def test_constraint_satisfaction_property(self):
        rng = np.random.default_rng(21)
        f = rng.standard_normal((3, 8))
        data = build_nullspace(f)
        assert np.abs(f @ data.basis).max() <= 1e-12 * np.abs(f).max()
        np.testing.assert_allclose(data.basis.T @ data.basis, np.eye(5), atol=1e-12)
        for _ in range(5):
            y = rng.standard_normal(5)
            alpha = rng.standard_normal(3)
            current = data.basis @ y + data.particular(alpha)
            assert np.linalg.norm(f @ current - alpha) <= 1e-10 * (1 + np.linalg.norm(alpha))


class TestProjection:
    def test_identity_basis(self):
        model = generate_filament_model(small_spec(3))
        ops = project_operators(model, np.eye(3))
        np.testing.assert_allclose(ops.resistance, model.resistance.toarray(), atol=1e-15)
        np.testing.assert_allclose(ops.inductance, model.inductance, atol=1e-18)

    def test_two_loop_quadratic_form(self):
        spec = FilamentSpec(
            passive=(
                Loop(radius=1.0, z=0.0, wire_radius=1e-3, resistance=2.0),
                Loop(radius=1.0, z=0.6, wire_radius=1e-3, resistance=4.0),
            )
        )
        model = generate_filament_model(spec)
        k = np.array([[1.0], [-1.0]]) / np.sqrt(2.0)
        ops = project_operators(model, k)
        np.testing.assert_allclose(ops.resistance, [[(2.0 + 4.0) / 2.0]], rtol=1e-14)

    def test_congruence_preserves_definiteness(self):
        model = generate_filament_model(small_spec(6))
        assemble_constraints(
            model,
            [ConstraintGroup(loops=(0, 1, 2), waveform="a"), ConstraintGroup(loops=(3, 4), waveform="b")],
        )
        system = build_null_system(model)  # raises NotPositiveDefinite on failure
        assert system.size == 4
        assert system.sources["axi"].shape == (4, 0)
        assert system.couple_r.shape == (4, 2)
