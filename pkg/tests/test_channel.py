import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmwave_mplp.channel import (PathDescriptor, antenna_model, beam_gain, parallel_candidates,
                                 parallel_gain_via, parallel_path_via, path_gain, pathloss_db,
                                 received_power, station_gains, strongest_path)
from mmwave_mplp.geometry import (BaseStation, BaseStationSet, BeamMark, Category, LayoutSource,
                                  NetworkConfig, Orientation, StreetLayout)

CFG = NetworkConfig()
segments = st.floats(1.0, 5000.0)


def bs(cat, intercept, offset, mark=BeamMark.SIDE_LOBE):
    orient = Orientation.VERTICAL if cat == Category.CROSS else Orientation.HORIZONTAL
    return BaseStation(orient, intercept, offset, cat, mark, 0)


class TestAntenna:
    def test_64(self):
        a = antenna_model(64)
        assert a.g_main == 64
        assert a.beamwidth == pytest.approx(math.sqrt(3) / 8, rel=1e-12)
        assert a.p_t == pytest.approx(0.034458, abs=1e-6)
        assert a.g_side == pytest.approx(0.76459, abs=1e-4)

    def test_single_element(self):
        a = antenna_model(1)
        assert a.g_side == pytest.approx(1.0) and a.g_main == 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            antenna_model(0)


class TestPathloss:
    def test_examples(self):
        assert pathloss_db(PathDescriptor([100], Category.TYPICAL), 2.5, 7, 20) == pytest.approx(50)
        assert pathloss_db(PathDescriptor([10, 10], Category.CROSS), 2.5, 7, 20) == pytest.approx(115)
        assert pathloss_db(PathDescriptor([1, 1, 1], Category.PARALLEL), 2.5, 7, 20) == pytest.approx(40)

    def test_parallel_example(self):
        # 25 log10(80) + 70 log10(30) + 70 log10(20) + 40
        d = PathDescriptor([80, 30, 20], Category.PARALLEL)
        hand = 25 * math.log10(80) + 70 * math.log10(30) + 70 * math.log10(20) + 40
        assert pathloss_db(d, 2.5, 7, 20) == pytest.approx(hand, rel=1e-12)
        assert hand == pytest.approx(282.0478, abs=1e-4)

    def test_gain_consistency(self):
        g = path_gain(PathDescriptor([10, 10], Category.CROSS), CFG).gain_linear
        assert g == pytest.approx(10 ** -11.5, rel=1e-12)

    def test_typical_gain(self):
        assert path_gain(PathDescriptor([37.0], Category.TYPICAL), CFG).gain_linear == \
            pytest.approx(37.0 ** -2.5)

    @given(st.lists(segments, min_size=1, max_size=3))
    def test_db_linear_consistency(self, segs):
        cat = [Category.TYPICAL, Category.CROSS, Category.PARALLEL][len(segs) - 1]
        d = PathDescriptor(segs, cat)
        g = path_gain(d, CFG).gain_linear
        assert g == pytest.approx(10 ** (-pathloss_db(d, 2.5, 7, 20) / 10), rel=1e-9)

    @given(st.lists(segments, min_size=1, max_size=3), st.integers(0, 2), st.floats(1.01, 3.0))
    def test_monotone_in_segments(self, segs, i, factor):
        i = i % len(segs)
        cat = [Category.TYPICAL, Category.CROSS, Category.PARALLEL][len(segs) - 1]
        longer = list(segs)
        longer[i] *= factor
        assert path_gain(PathDescriptor(longer, cat), CFG).gain_linear < \
            path_gain(PathDescriptor(segs, cat), CFG).gain_linear

    @pytest.mark.parametrize("segs,cat", [([0.0], Category.TYPICAL), ([1, 2], Category.TYPICAL),
                                          ([-1, 2], Category.CROSS)])
    def test_descriptor_validation(self, segs, cat):
        with pytest.raises(ValueError):
            PathDescriptor(segs, cat)


class TestPower:
    def test_zero_fading(self):
        pg = path_gain(PathDescriptor([10], Category.TYPICAL), CFG)
        assert received_power(None, pg, 64, 0.0) == 0.0

    def test_product(self):
        pg = path_gain(PathDescriptor([100.0], Category.TYPICAL), CFG.with_(alpha_L=2.5))
        assert received_power(None, pg, 64, 1.0) == pytest.approx(64 * 1e-5)

    def test_beam_gain(self):
        a = antenna_model(64)
        assert beam_gain(bs(Category.TYPICAL, 0, 5, BeamMark.MAIN_LOBE), a) == 64
        assert beam_gain(bs(Category.TYPICAL, 0, 5), a) == a.g_side


class TestStrongestPath:
    LAYOUT = StreetLayout([0.0, 30.0], [20.0, 50.0, 80.0], 500.0, LayoutSource.MPLP)

    def test_typical(self):
        assert strongest_path(bs(Category.TYPICAL, 0, 137), self.LAYOUT, CFG).segments == (137.0,)

    def test_cross(self):
        p = strongest_path(bs(Category.CROSS, 40, 25), self.LAYOUT, CFG)
        assert p.segments == (25.0, 40.0) and p.corners == 1

    def test_parallel_example(self):
        b = bs(Category.PARALLEL, 30, 100)
        p = strongest_path(b, self.LAYOUT, CFG)
        assert p.segments == (80.0, 30.0, 20.0)
        via = {v: pathloss_db(parallel_path_via(b, v, CFG), 2.5, 7, 20) for v in (20, 50, 80)}
        assert via[20] < via[50] and via[20] < via[80]
        assert via[80] == pytest.approx(309.1405, abs=1e-4)

    def test_parallel_without_cross_streets(self):
        lay = StreetLayout([0.0, 30.0], [], 500.0, LayoutSource.MPLP)
        assert strongest_path(bs(Category.PARALLEL, 30, 100), lay, CFG) is None

    def test_clamp(self):
        assert strongest_path(bs(Category.TYPICAL, 0, 0.2), self.LAYOUT, CFG).segments == (1.0,)

    def test_station_gains_match_descriptors(self):
        stations = [bs(Category.TYPICAL, 0, -12), bs(Category.CROSS, 20, 7),
                    bs(Category.PARALLEL, 30, 100), bs(Category.PARALLEL, 30, -60)]
        got = station_gains(BaseStationSet.from_stations(stations), self.LAYOUT, CFG)
        want = [path_gain(strongest_path(s, self.LAYOUT, CFG), CFG).gain_linear for s in stations]
        assert np.allclose(got, want, rtol=1e-12)

    def test_candidate_shape(self):
        assert parallel_candidates([5.0, 9.0], [1.0, 2.0, 3.0]).shape == (2, 4)
        assert parallel_candidates([5.0], [1.0, 2.0], min_segment=1.0).shape == (1, 12)


@settings(max_examples=150, deadline=None)
@given(verticals=st.lists(st.floats(-300, 300), min_size=1, max_size=12, unique=True),
       x_bs=st.floats(-300, 300), y_bs=st.floats(-300, 300).filter(lambda y: abs(y) > 1e-3),
       clamp=st.sampled_from([0.0, 1.0, 5.0]))
def test_parallel_is_global_optimum(verticals, x_bs, y_bs, clamp):
    cfg = CFG.with_(min_segment=clamp)
    v = np.array(sorted(verticals))
    lay = StreetLayout([0.0, y_bs], v, 400.0, LayoutSource.MPLP)
    st_ = BaseStationSet.from_stations([bs(Category.PARALLEL, y_bs, x_bs)])
    got = station_gains(st_, lay, cfg)[0]
    brute = parallel_gain_via(x_bs, y_bs, v, cfg).max()
    assert got >= brute * (1 - 1e-12)


@settings(max_examples=300)
@given(d=st.floats(1.0, 3000.0), v1=st.floats(-3000.0, 3000.0), v2=st.floats(-3000.0, 3000.0),
       h=st.floats(1.0, 500.0), delta_db=st.floats(10.0, 40.0), alpha_L=st.floats(2.0, 3.0))
def test_corner_dominance(d, v1, v2, h, delta_db, alpha_L):
    """A four-corner detour of a typical station loses to the direct path even
    with the best-case beam swap (main lobe on the detour, side lobe direct).

    The detour leaves the station at x = d along the receiver street, turns
    onto a cross street at v1, travels h to a parallel street, returns on a
    second cross street at v2 and reaches the receiver along y = 0.
    """
    cfg = CFG.with_(delta_db=delta_db, alpha_L=alpha_L)
    a = antenna_model(64)
    legs = [max(abs(d - v1), 1.0), h, max(abs(v1 - v2), 1.0), h, max(abs(v2), 1.0)]
    g_detour = a.g_main * legs[0] ** -cfg.alpha_L * np.prod(
        [cfg.corner_gain * x ** -cfg.alpha_N for x in legs[1:]])
    g_direct = a.g_side * path_gain(PathDescriptor([d], Category.TYPICAL), cfg).gain_linear
    assert g_detour < g_direct
