import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from styleterrain import latent as lt
from styleterrain.heightfield import (Heightfield, NormalizedField, RegionMask,
                                      normalize, resample)
from styleterrain.networks import (LatentWPlus, encode, sample_wplus,
                                   synthesize)


def _wp(rng, n_layers=6, dim=16):
    return LatentWPlus(layers=rng.normal(size=(n_layers, dim)).astype(np.float32))


class TestStyleMix:
    def test_index_zero_returns_detail_source(self):
        rng = np.random.default_rng(0)
        u, v = _wp(rng), _wp(rng)
        out = lt.style_mix(lt.StyleMixSpec(0, u, v))
        assert np.array_equal(out.layers, v.layers)

    def test_index_l_returns_structure_source(self):
        rng = np.random.default_rng(1)
        u, v = _wp(rng), _wp(rng)
        out = lt.style_mix(lt.StyleMixSpec(u.num_layers, u, v))
        assert np.array_equal(out.layers, u.layers)

    def test_rows_copied_verbatim(self):
        rng = np.random.default_rng(2)
        a = np.tile(rng.normal(size=16).astype(np.float32), (4, 1))
        b = np.tile(rng.normal(size=16).astype(np.float32), (4, 1))
        out = lt.style_mix(lt.StyleMixSpec(2, LatentWPlus(a), LatentWPlus(b)))
        assert np.array_equal(out.layers[:2], a[:2])
        assert np.array_equal(out.layers[2:], b[2:])

    def test_every_index_bit_exact(self):
        rng = np.random.default_rng(3)
        u, v = _wp(rng), _wp(rng)
        for i in range(u.num_layers + 1):
            out = lt.style_mix(lt.StyleMixSpec(i, u, v))
            assert np.array_equal(out.layers[:i], u.layers[:i])
            assert np.array_equal(out.layers[i:], v.layers[i:])

    def test_out_of_range_index_rejected(self):
        rng = np.random.default_rng(4)
        u, v = _wp(rng), _wp(rng)
        with pytest.raises(ValueError):
            lt.StyleMixSpec(-1, u, v)
        with pytest.raises(ValueError):
            lt.StyleMixSpec(u.num_layers + 1, u, v)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            lt.StyleMixSpec(1, _wp(rng, n_layers=6), _wp(rng, n_layers=4))

    def test_chained_three_source_mix(self):
        rng = np.random.default_rng(6)
        a, b, c = _wp(rng), _wp(rng), _wp(rng)
        ab = lt.style_mix(lt.StyleMixSpec(2, a, b))
        abc = lt.style_mix(lt.StyleMixSpec(4, ab, c))
        assert np.array_equal(abc.layers[:2], a.layers[:2])
        assert np.array_equal(abc.layers[2:4], b.layers[2:4])
        assert np.array_equal(abc.layers[4:], c.layers[4:])


class TestInterpolate:
    def test_endpoints_exact(self):
        rng = np.random.default_rng(0)
        u, v = _wp(rng), _wp(rng)
        assert np.array_equal(lt.interpolate(u, v, 0.0).layers, u.layers)
        assert np.array_equal(lt.interpolate(u, v, 1.0).layers, v.layers)

    def test_linearity(self):
        u = LatentWPlus(np.zeros((4, 8), dtype=np.float32))
        v = LatentWPlus(np.ones((4, 8), dtype=np.float32))
        out = lt.interpolate(u, v, 0.25)
        assert np.allclose(out.layers, 0.25)

    def test_symmetry_exact_at_dyadic_alpha(self):
        rng = np.random.default_rng(1)
        u, v = _wp(rng), _wp(rng)
        for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
            a = lt.interpolate(u, v, alpha)
            b = lt.interpolate(v, u, 1.0 - alpha)
            assert np.array_equal(a.layers, b.layers)

    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_affine_in_alpha(self, alpha):
        rng = np.random.default_rng(2)
        u, v = _wp(rng), _wp(rng)
        out = lt.interpolate(u, v, alpha)
        expect = (1 - alpha) * u.layers + alpha * v.layers
        assert np.allclose(out.layers, expect, atol=1e-6)

    def test_extrapolation_requires_opt_in(self):
        rng = np.random.default_rng(3)
        u, v = _wp(rng), _wp(rng)
        with pytest.raises(ValueError):
            lt.interpolate(u, v, 1.5)
        out = lt.interpolate(u, v, 1.5, allow_extrapolation=True)
        assert np.isfinite(out.layers).all()


class TestRegionBlend:
    def _terrains(self):
        a = Heightfield(elevations=np.full((8, 8), 100.0), cell_size=30.0)
        b = Heightfield(elevations=np.full((8, 8), 200.0), cell_size=30.0)
        return a, b

    def test_mask_zero_returns_a(self):
        a, b = self._terrains()
        out = lt.region_blend(a, b, RegionMask(alpha=np.zeros((8, 8))))
        assert np.array_equal(out.elevations, a.elevations)

    def test_mask_one_returns_b(self):
        a, b = self._terrains()
        out = lt.region_blend(a, b, RegionMask(alpha=np.ones((8, 8))))
        assert np.array_equal(out.elevations, b.elevations)

    def test_half_mask_averages(self):
        a, b = self._terrains()
        out = lt.region_blend(a, b, RegionMask(alpha=np.full((8, 8), 0.5)))
        assert np.all(out.elevations == 150.0)

    def test_hard_mask_regions_preserved(self):
        rng = np.random.default_rng(4)
        a = Heightfield(elevations=rng.uniform(0, 50, (8, 8)), cell_size=30.0)
        b = Heightfield(elevations=rng.uniform(100, 150, (8, 8)), cell_size=30.0)
        alpha = (rng.random((8, 8)) > 0.5).astype(float)
        out = lt.region_blend(a, b, RegionMask(alpha=alpha))
        assert np.array_equal(out.elevations[alpha == 0.0],
                              a.elevations[alpha == 0.0])
        assert np.array_equal(out.elevations[alpha == 1.0],
                              b.elevations[alpha == 1.0])

    def test_dimension_mismatch_rejected(self):
        a, b = self._terrains()
        with pytest.raises(ValueError):
            lt.region_blend(a, b, RegionMask(alpha=np.zeros((4, 4))))


class TestLatentIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        w = _wp(rng, n_layers=10, dim=32)
        path = tmp_path / "w.lat"
        lt.save_latent(w, path, bundle_version="v-abc")
        back, version = lt.load_latent(path)
        assert version == "v-abc"
        assert np.array_equal(back.layers, w.layers)

    def test_truncated_payload_rejected(self, tmp_path):
        rng = np.random.default_rng(6)
        w = _wp(rng)
        path = tmp_path / "w.lat"
        lt.save_latent(w, path)
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(ValueError, match="payload"):
            lt.load_latent(path)


class TestOptimizeInvert:
    def test_fixed_point_when_init_is_source(self, small_bundle):
        w0 = sample_wplus(small_bundle, 1, seed=3)[0]
        target = synthesize(w0, small_bundle, noise_seed=0)
        result = lt.optimize_invert(target, small_bundle, steps=5,
                                    init=w0, noise_seed=0)
        assert result.loss_trace[0] == pytest.approx(0.0, abs=1e-10)
        assert result.best_loss <= result.loss_trace[0] + 1e-12
        assert np.allclose(result.latent.layers, w0.layers, atol=1e-3)

    def test_best_loss_never_exceeds_initial(self, small_bundle):
        rng = np.random.default_rng(7)
        target = NormalizedField(values=rng.random((16, 16)), min_m=0, max_m=1)
        result = lt.optimize_invert(target, small_bundle, steps=30)
        assert result.best_loss <= result.loss_trace[0]
        assert min(result.loss_trace) == result.best_loss

    def test_loss_decreases_from_random_init(self, small_bundle):
        w0 = sample_wplus(small_bundle, 1, seed=11)[0]
        target = synthesize(w0, small_bundle, noise_seed=1)
        far = sample_wplus(small_bundle, 1, seed=99)[0]
        result = lt.optimize_invert(target, small_bundle, steps=60,
                                    init=far, noise_seed=1)
        assert result.best_loss < result.loss_trace[0]

    def test_all_losses_disabled_rejected(self, small_bundle):
        target = NormalizedField(values=np.zeros((16, 16)), min_m=0, max_m=1)
        with pytest.raises(ValueError):
            lt.optimize_invert(target, small_bundle, use_l2=False,
                               use_perceptual=False)

    def test_cancellation_stops_early(self, small_bundle):
        target = NormalizedField(values=np.zeros((16, 16)), min_m=0, max_m=1)
        status = lt.InversionStatus(total_steps=500)
        status.cancel()
        result = lt.optimize_invert(target, small_bundle, steps=500,
                                    status=status)
        assert status.done
        assert status.step == 0
        assert len(result.loss_trace) == 1

    def test_perceptual_only_runs(self, small_bundle):
        w0 = sample_wplus(small_bundle, 1, seed=5)[0]
        target = synthesize(w0, small_bundle, noise_seed=0)
        result = lt.optimize_invert(target, small_bundle, steps=10,
                                    use_l2=False, use_perceptual=True,
                                    noise_seed=0)
        assert np.isfinite(result.loss_trace).all()


class TestRefine:
    def test_output_at_bundle_resolution(self, small_bundle):
        rng = np.random.default_rng(8)
        t = Heightfield(elevations=rng.uniform(0, 300, (24, 24)), cell_size=30.0)
        out = lt.refine(t, small_bundle)
        assert out.width == small_bundle.config.resolution
        assert out.height == small_bundle.config.resolution

    def test_elevation_range_preserved(self, small_bundle):
        rng = np.random.default_rng(9)
        t = Heightfield(elevations=rng.uniform(100, 500, (16, 16)), cell_size=30.0)
        out = lt.refine(t, small_bundle)
        assert out.elevations.min() >= 100.0 - 1e-6
        assert out.elevations.max() <= 500.0 + 1e-6

    def test_composable_twice(self, small_bundle):
        rng = np.random.default_rng(10)
        t = Heightfield(elevations=rng.uniform(0, 200, (16, 16)), cell_size=30.0)
        once = lt.refine(t, small_bundle)
        twice = lt.refine(once, small_bundle)
        assert np.isfinite(twice.elevations).all()
        assert twice.width == small_bundle.config.resolution

    def test_low_res_consistency(self, small_bundle):
        # A smooth generator sample upsampled into refine should come back
        # close to itself at low resolution.
        w0 = sample_wplus(small_bundle, 1, seed=21)[0]
        field = synthesize(w0, small_bundle, noise_seed=0)
        t16 = Heightfield(elevations=field.values * 100.0, cell_size=30.0)
        low = resample(t16, 8, 8)
        up = resample(low, 16, 16)
        refined = lt.refine(up, small_bundle, noise_seed=0)
        back = resample(refined, 8, 8)
        rmse = np.sqrt(np.mean((back.elevations - low.elevations) ** 2))
        assert rmse < 35.0  # loose desk-scale sanity bound, range is 100 m
