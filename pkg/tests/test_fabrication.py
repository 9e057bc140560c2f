"""Machining time model, reference freezing, and the composite index."""

import random

import pytest

from exodss.errors import NonPositiveReference
from exodss.fabrication import (
    FabricationConstants,
    FabricationWeights,
    ReferenceValues,
    compute_reference_values,
    fabrication_complexity,
    machining_time,
)
from exodss.model import (
    DesignBounds,
    DesignConfiguration,
    FacadeGraph,
    GridParams,
    Member,
    Node,
    SectionParams,
    generate_facade,
)
from exodss.structural import MaterialSpec

MATERIAL = MaterialSpec(1.1e7, 470.0, 2.4e4, 0.6, 3.5)


def single_member_graph():
    return FacadeGraph(
        nodes=(Node(0, 0.0, 0.0, 0.0), Node(1, 0.0, 0.0, 1.0)),
        members=(Member(0, 0, 1),),
        supports=frozenset({0}),
        key_points=frozenset({1}),
    )


def empty_graph():
    return FacadeGraph(nodes=(), members=(), supports=frozenset(), key_points=frozenset())


class TestMachiningTime:
    def test_empty_is_zero(self):
        cfg = DesignConfiguration(GridParams(1, 1, 1.0), SectionParams(0.1, 0.1, 1), {})
        assert machining_time(cfg, empty_graph()) == 0.0

    def test_hand_value(self):
        # 1 member of area 0.01, 2 nodes, 1 lamination:
        # 0.05 + 0.5 * 2 * 0.01 + 2 * 0.1 = 0.26 h
        cfg = DesignConfiguration(GridParams(1, 1, 1.0), SectionParams(0.1, 0.1, 1), {})
        assert machining_time(cfg, single_member_graph()) == pytest.approx(0.26, rel=1e-12)

    def test_lamination_scales_joint_term(self):
        graph = single_member_graph()
        one = DesignConfiguration(GridParams(1, 1, 1.0), SectionParams(0.1, 0.1, 1), {})
        two = DesignConfiguration(GridParams(1, 1, 1.0), SectionParams(0.1, 0.1, 2), {})
        joint_one = machining_time(one, graph) - 0.05 - 0.5 * 2 * 0.01
        joint_two = machining_time(two, graph) - 0.05 - 0.5 * 2 * 0.01
        assert joint_two == pytest.approx(1.1 * joint_one, rel=1e-12)


class TestReferenceValues:
    def test_degenerate_bounds_equal_single_config(self):
        bounds = DesignBounds(
            depth_min=0.2, depth_max=0.2, width_min=0.1, width_max=0.1,
            lam_min=2, lam_max=2, offset_max=0.0,
        )
        grid = GridParams(1, 1, 3.0)
        refs = compute_reference_values(bounds, grid, MATERIAL)
        cfg = DesignConfiguration(grid, SectionParams(0.2, 0.1, 2), {})
        graph = generate_facade(grid, cfg)
        from exodss.structural import structure_mass

        assert refs.m_ref == pytest.approx(structure_mass(graph, cfg.section, MATERIAL))
        assert refs.t_ref == pytest.approx(machining_time(cfg, graph))

    def test_wider_bounds_never_decrease_m_ref(self):
        grid = GridParams(1, 1, 3.0)
        narrow = compute_reference_values(DesignBounds(width_max=0.2), grid, MATERIAL)
        wide = compute_reference_values(DesignBounds(width_max=0.3), grid, MATERIAL)
        assert wide.m_ref >= narrow.m_ref

    def test_default_bounds_regression_constant(self):
        # frozen from the exhaustive corner evaluation on the 1x1 test grid;
        # guards against silent model drift
        refs = compute_reference_values(DesignBounds(), GridParams(1, 1, 3.0), MATERIAL)
        assert refs.m_ref == pytest.approx(REFS_1X1_DEFAULT.m_ref, rel=1e-12)
        assert refs.t_ref == pytest.approx(REFS_1X1_DEFAULT.t_ref, rel=1e-12)

    def test_deterministic(self):
        grid = GridParams(2, 2, 2.0)
        a = compute_reference_values(DesignBounds(), grid, MATERIAL)
        b = compute_reference_values(DesignBounds(), grid, MATERIAL)
        assert a == b


# regression constants; see test_default_bounds_regression_constant.
# m_ref: checkerboard +/-0.5 offsets at depth 0.4 x width 0.3, 1 lamination
# (total length 20.789 m); t_ref: same section at 10 laminations.
REFS_1X1_DEFAULT = ReferenceValues(m_ref=1172.5020779782249, t_ref=1.78)


class TestFabricationComplexity:
    refs = ReferenceValues(m_ref=100.0, t_ref=10.0)

    def test_reference_point_is_one(self):
        assert fabrication_complexity(100.0, 10.0, self.refs) == pytest.approx(1.0)

    def test_zero_is_zero(self):
        assert fabrication_complexity(0.0, 0.0, self.refs) == 0.0

    def test_paper_weighting(self):
        # 0.5 * 0.8 + 0.5 * 0.4 = 0.6
        fc = fabrication_complexity(80.0, 4.0, self.refs, FabricationWeights(0.5, 0.5))
        assert fc == pytest.approx(0.6, rel=1e-12)

    def test_nonpositive_reference_rejected(self):
        with pytest.raises(NonPositiveReference):
            fabrication_complexity(1.0, 1.0, ReferenceValues(0.0, 1.0))

    def test_scale_invariance(self):
        rng = random.Random(5)
        for _ in range(50):
            m, t, c = rng.uniform(0, 100), rng.uniform(0, 10), rng.uniform(0.1, 7)
            base = fabrication_complexity(m, t, self.refs)
            scaled = fabrication_complexity(
                c * m, c * t, ReferenceValues(c * self.refs.m_ref, c * self.refs.t_ref)
            )
            assert scaled == pytest.approx(base, rel=1e-12)

    def test_degenerate_weights(self):
        only_m = FabricationWeights(1.0, 0.0)
        only_t = FabricationWeights(0.0, 1.0)
        assert fabrication_complexity(50.0, 3.0, self.refs, only_m) == pytest.approx(0.5)
        assert fabrication_complexity(50.0, 3.0, self.refs, only_t) == pytest.approx(0.3)

    def test_monotone_in_both(self):
        rng = random.Random(6)
        for _ in range(100):
            m = rng.uniform(0, 100)
            t = rng.uniform(0, 10)
            fc = fabrication_complexity(m, t, self.refs)
            assert fabrication_complexity(m + 1, t, self.refs) > fc
            assert fabrication_complexity(m, t + 0.1, self.refs) > fc

    def test_weights_validator(self):
        with pytest.raises(ValueError):
            FabricationWeights(0.7, 0.7).check()
