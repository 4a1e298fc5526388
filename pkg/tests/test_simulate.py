import math

import numpy as np
import pytest

from vesselkit import features as feat
from vesselkit.errors import OutOfBoundsError, ParameterError
from vesselkit.phantoms import cow_phantom, default_fbd, two_artery_phantom
from vesselkit.simulate import (
    FourierArtery,
    OrientationPlane,
    RadiusProfile,
    chain_voxels,
    decode_fourier,
    encode_fourier,
    ground_truth_features,
    load_fbd,
    make_plane,
    orient_trace,
    rasterize_tube,
    save_fbd,
    simulate_subject,
)


class TestFourier:
    def test_pure_sinusoid_recovers_b1(self):
        s = np.linspace(0, 1, 100)
        curve = np.stack([np.zeros_like(s), np.sin(2 * np.pi * s)], axis=1)
        fa = encode_fourier(curve, order=3)
        b1 = fa.coeffs_v[3 + 1]
        assert b1 == pytest.approx(1.0, abs=1e-9)
        others = np.concatenate([fa.coeffs_v[:4], fa.coeffs_v[5:], fa.coeffs_u])
        assert np.abs(others).max() < 1e-9

    def test_bandlimited_roundtrip(self):
        rng = np.random.default_rng(0)
        order = 3
        cu = rng.normal(size=2 * order + 1) * 0.1
        cv = rng.normal(size=2 * order + 1) * 0.1
        fa = FourierArtery(order=order, coeffs_u=cu, coeffs_v=cv)
        curve = decode_fourier(fa, 64)
        back = encode_fourier(curve, order=order)
        recon = decode_fourier(back, 64)
        assert np.abs(recon - curve).max() < 1e-6

    def test_underdetermined_rejected(self):
        curve = np.zeros((4, 2))
        with pytest.raises(ParameterError, match="underdetermined"):
            encode_fourier(curve, order=2)

    def test_zero_coeffs_decode_to_origin(self):
        fa = FourierArtery(order=2, coeffs_u=np.zeros(5), coeffs_v=np.zeros(5))
        out = decode_fourier(fa, 10)
        assert np.allclose(out, 0.0)

    def test_constant_a0(self):
        fa = FourierArtery(order=1, coeffs_u=np.array([2.0, 0, 0]), coeffs_v=np.array([-1.0, 0, 0]))
        out = decode_fourier(fa, 7)
        assert np.allclose(out[:, 0], 2.0) and np.allclose(out[:, 1], -1.0)

    def test_sampling_count_independence(self):
        rng = np.random.default_rng(1)
        fa = FourierArtery(order=2, coeffs_u=rng.normal(size=5), coeffs_v=rng.normal(size=5))
        a = decode_fourier(fa, 101)
        b = decode_fourier(fa, 11)
        # shared s values: every 10th of the fine grid
        assert np.abs(a[::10] - b).max() < 1e-12


class TestOrient:
    def test_endpoints_pinned_exactly(self):
        rng = np.random.default_rng(2)
        fbd = default_fbd()
        start, end = np.array([3.0, 4.0, 5.0]), np.array([20.0, 12.0, 9.0])
        plane = make_plane(start, end)
        plane = OrientationPlane(origin=plane.origin, u=plane.u, v=plane.v, jitter_angle=math.radians(10))
        tr = orient_trace(fbd["w05s"], plane, start, end, rng, n_samples=50)
        assert np.abs(tr[0] - start).max() < 1e-9
        assert np.abs(tr[-1] - end).max() < 1e-9

    def test_straight_entry_gives_chord(self):
        fbd = default_fbd()
        start, end = np.array([0.0, 0.0, 0.0]), np.array([10.0, 0.0, 0.0])
        plane = make_plane(start, end)
        plane = OrientationPlane(origin=plane.origin, u=plane.u, v=plane.v, jitter_angle=math.radians(15))
        tr = orient_trace(fbd["straight"], plane, start, end, np.random.default_rng(5), n_samples=20)
        s = np.linspace(0, 1, 20)
        want = start + np.outer(s, end - start)
        assert np.abs(tr - want).max() < 1e-9

    def test_same_seed_identical(self):
        fbd = default_fbd()
        start, end = np.array([1.0, 2.0, 3.0]), np.array([9.0, 8.0, 7.0])
        plane = make_plane(start, end)
        plane = OrientationPlane(origin=plane.origin, u=plane.u, v=plane.v, jitter_angle=math.radians(10))
        a = orient_trace(fbd["w05s"], plane, start, end, np.random.default_rng(7), n_samples=30)
        b = orient_trace(fbd["w05s"], plane, start, end, np.random.default_rng(7), n_samples=30)
        assert np.array_equal(a, b)

    def test_degenerate_plane_rejected(self):
        with pytest.raises(ParameterError):
            make_plane((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
        with pytest.raises(ParameterError):
            OrientationPlane(origin=np.zeros(3), u=np.array([1.0, 0, 0]), v=np.array([1.0, 0, 0]))


class TestRasterize:
    def test_cylinder_voxel_count(self):
        dims = (60, 60, 100)
        n = 201
        pts = np.linspace((15.0, 15.0, 10.0), (15.0, 15.0, 40.0), n)
        r = np.full(n, 2.0)
        bv = rasterize_tube(pts, r, dims, (0.5, 0.5, 0.5))
        # capsule = cylinder plus two hemispherical end caps
        analytic = (math.pi * 4 * 30 + 4.0 / 3.0 * math.pi * 8) / (0.5**3)
        assert abs(bv.foreground_count - analytic) / analytic < 0.05

    def test_min_thickness_chain(self):
        dims = (40, 40, 40)
        n = 50
        pts = np.linspace((5.0, 5.0, 5.0), (15.0, 12.0, 9.0), n)
        r = np.full(n, 0.1)  # far below half a voxel
        bv = rasterize_tube(pts, r, dims, (0.5, 0.5, 0.5))
        chain = chain_voxels(pts, dims, (0.5, 0.5, 0.5))
        assert bv.bits[chain[:, 0], chain[:, 1], chain[:, 2]].all()

    def test_union_idempotent(self):
        dims = (40, 40, 40)
        pts = np.linspace((5.0, 10.0, 10.0), (15.0, 10.0, 10.0), 40)
        r = np.full(40, 1.5)
        a = rasterize_tube(pts, r, dims, (0.5, 0.5, 0.5))
        union = a.bits | a.bits
        assert np.array_equal(union, a.bits)

    def test_out_of_bounds_names_index(self):
        dims = (20, 20, 20)
        pts = np.linspace((1.0, 5.0, 5.0), (30.0, 5.0, 5.0), 10)
        with pytest.raises(OutOfBoundsError) as exc:
            rasterize_tube(pts, np.full(10, 1.0), dims, (0.5, 0.5, 0.5))
        assert exc.value.index is not None

    def test_r_squared_scaling(self):
        dims = (80, 80, 80)
        counts = []
        radii_list = [1.0, 2.0, 3.0, 4.0]
        for r in radii_list:
            pts = np.linspace((20.0, 20.0, 8.0), (20.0, 20.0, 32.0), 101)
            bv = rasterize_tube(pts, np.full(101, r), dims, (0.5, 0.5, 0.5))
            counts.append(bv.foreground_count)
        slope = np.polyfit(np.log(radii_list), np.log(counts), 1)[0]
        assert abs(slope - 2.0) <= 0.1


class TestGroundTruth:
    def test_straight_tube_exact(self):
        n = 50
        pts = np.linspace((0.0, 0.0, 0.0), (10.0, 0.0, 0.0), n)
        r = np.full(n, 1.5)
        row = ground_truth_features(pts, r)
        assert row.tortuosity == pytest.approx(1.0, abs=1e-12)
        assert row.total_volume == pytest.approx(math.pi * 1.5**2 * 10, rel=1e-9)

    def test_matches_feature_module_exactly(self):
        rng = np.random.default_rng(3)
        pts = np.cumsum(rng.normal(size=(40, 3)), axis=0) + 30
        r = rng.uniform(0.5, 2.0, 40)
        row = ground_truth_features(pts, r)
        assert row.total_length == pytest.approx(feat.total_length([pts]), abs=1e-9)
        assert row.total_volume == pytest.approx(feat.segment_volume(pts, r), abs=1e-9)
        assert row.surface_area == pytest.approx(feat.surface_area(pts, r), abs=1e-9)
        assert row.mean_section_area == pytest.approx(feat.mean_section_area(r), abs=1e-9)
        assert row.tortuosity == pytest.approx(feat.tortuosity(pts), abs=1e-9)

    def test_sinusoid_length_quadrature(self):
        fbd = default_fbd()
        start, end = np.array([10.0, 20.0, 20.0]), np.array([40.0, 20.0, 20.0])
        plane = make_plane(start, end)
        tr = orient_trace(fbd["s10"], plane, start, end, np.random.default_rng(0), n_samples=4000)
        # quadrature oracle: chord 30mm, factor int sqrt(1+(0.2 pi cos)^2) = 1.0923835
        want = 30.0 * 1.0923835473311754
        assert feat.polyline_length(tr) == pytest.approx(want, rel=1e-3)


class TestSimulateSubject:
    def test_two_artery_toy(self, toy_phantom):
        vol, binary, truth, landmarks, fbd, config = toy_phantom
        assert len(truth.rows) >= 2 + 1  # two arteries + aggregate rows
        names = {r.artery for r in truth.rows}
        assert {"seg1", "seg2"} <= names
        assert binary.foreground_count > 0
        assert vol.dims == tuple(config["grid"]["dims"])

    def test_determinism(self):
        landmarks, fbd, config = two_artery_phantom(dims=(48, 48, 48), seed=9)
        a = simulate_subject(landmarks, fbd, config)
        b = simulate_subject(landmarks, fbd, config)
        assert np.array_equal(a[0].data, b[0].data)
        assert np.array_equal(a[1].bits, b[1].bits)

    def test_seed_changes_trace_but_not_endpoints(self):
        landmarks, fbd, config = two_artery_phantom(dims=(48, 48, 48), seed=1)
        c2 = dict(config, seed=2)
        a = simulate_subject(landmarks, fbd, config)
        b = simulate_subject(landmarks, fbd, c2)
        assert not np.array_equal(a[1].bits, b[1].bits)

    def test_union_covers_both(self, toy_phantom):
        vol, binary, truth, landmarks, fbd, config = toy_phantom
        one = dict(config, arteries=[config["arteries"][0]])
        v1, b1, t1 = simulate_subject(landmarks, fbd, one)
        assert (b1.bits & ~binary.bits).sum() == 0

    def test_expected_counts_on_cow(self, cow192):
        truth = cow192["truth"]
        assert truth.expected_nodes == 38
        assert truth.expected_traces == 37
        assert len(truth.assignable_labels) >= 16


def test_fbd_file_roundtrip(tmp_path):
    fbd = default_fbd()
    save_fbd(fbd, tmp_path / "fbd.json")
    back = load_fbd(tmp_path / "fbd.json")
    assert set(back) == set(fbd)
    for k in fbd:
        assert np.allclose(back[k].coeffs_v, fbd[k].coeffs_v)
        assert back[k].order == fbd[k].order


def test_radius_profile_interpolation():
    prof = RadiusProfile(samples=np.array([1.0, 2.0]))
    assert prof.at(0.0) == 1.0
    assert prof.at(0.5) == 1.5
    assert prof.at(1.0) == 2.0
    with pytest.raises(ParameterError):
        RadiusProfile(samples=np.array([1.0]))
    with pytest.raises(ParameterError):
        RadiusProfile(samples=np.array([1.0, -1.0]))
