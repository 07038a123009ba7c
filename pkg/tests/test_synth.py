import json

import numpy as np
import pytest

from dctforensics.errors import AttackSpecError, BoundsError, DimensionError
from dctforensics.features import betas_for_image, build_matrix, normalize_columns
from dctforensics.gsf_analysis import gsf
from dctforensics.synth import ArtifactSpec, generate_corpus, write_corpus


def corpus_matrix(images, label):
    vectors = [betas_for_image(img, source_id=str(i)) for i, img in enumerate(images)]
    return build_matrix(vectors, label=label)


class TestSpecValidation:
    def test_bad_coefficient(self):
        with pytest.raises(BoundsError):
            ArtifactSpec(target_coefficient=0, strength=2.0)
        with pytest.raises(BoundsError):
            ArtifactSpec(target_coefficient=64, strength=2.0)

    def test_bad_strength(self):
        with pytest.raises(AttackSpecError):
            ArtifactSpec(target_coefficient=5, strength=0.5)

    def test_bad_base(self):
        with pytest.raises(AttackSpecError):
            ArtifactSpec(target_coefficient=5, strength=2.0, base="perlin")

    def test_bad_count_and_size(self):
        with pytest.raises(AttackSpecError):
            generate_corpus(0)
        with pytest.raises(DimensionError):
            generate_corpus(1, size=100)  # not a multiple of 8


class TestGeneration:
    def test_deterministic_per_seed(self):
        a = generate_corpus(3, size=64, seed=5)
        b = generate_corpus(3, size=64, seed=5)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)
        c = generate_corpus(3, size=64, seed=6)
        assert not np.array_equal(a[0], c[0])

    def test_strength_one_is_identity(self):
        clean = generate_corpus(4, size=64, seed=9)
        noop = generate_corpus(4, ArtifactSpec(target_coefficient=20, strength=1.0, seed=9), size=64)
        for x, y in zip(clean, noop):
            assert np.array_equal(x, y)

    def test_images_are_uint8_with_natural_stats(self):
        img = generate_corpus(1, size=128, seed=3)[0]
        assert img.dtype == np.uint8
        assert 100 < img.mean() < 156
        betas = betas_for_image(img).betas
        # beta profile decays from low to high frequencies
        assert betas[:8].mean() > 3 * betas[-8:].mean()

    def test_injection_doubles_target_beta(self):
        seed = 21
        clean = generate_corpus(20, size=128, seed=seed)
        injected = generate_corpus(
            20, ArtifactSpec(target_coefficient=17, strength=2.0, seed=seed), size=128
        )
        b_clean = np.stack([betas_for_image(i).betas for i in clean])
        b_inj = np.stack([betas_for_image(i).betas for i in injected])
        ratio = b_inj[:, 16].mean() / b_clean[:, 16].mean()
        assert 1.9 < ratio < 2.1

    def test_injection_locality(self):
        # paired seeds: same base textures, so only the target column moves
        seed = 33
        clean = generate_corpus(60, size=128, seed=seed)
        injected = generate_corpus(
            60, ArtifactSpec(target_coefficient=30, strength=2.0, seed=seed), size=128
        )
        b_clean = np.stack([betas_for_image(i).betas for i in clean])
        b_inj = np.stack([betas_for_image(i).betas for i in injected])
        diff = b_inj.mean(axis=0) - b_clean.mean(axis=0)
        se = np.sqrt(b_inj.var(axis=0) / 60 + b_clean.var(axis=0) / 60)
        target = 30 - 1
        assert diff[target] > 2 * se[target]
        off = np.ones(63, bool)
        off[target] = False
        assert np.all(np.abs(diff[off]) <= 2 * se[off])


class TestGsfRecovery:
    def test_injected_artifact_recovered_at_17(self):
        clean = corpus_matrix(generate_corpus(200, size=128, seed=1000), "clean")
        spec = ArtifactSpec(target_coefficient=17, strength=2.0, seed=2000)
        injected = corpus_matrix(generate_corpus(200, spec, size=128), "inject17")
        na, nb = normalize_columns((injected, clean))
        assert gsf(na, nb).gsf == 17

    def test_clean_vs_clean_margin_is_noise_level(self):
        a = corpus_matrix(generate_corpus(100, size=128, seed=3000), "a")
        b = corpus_matrix(generate_corpus(100, size=128, seed=3001), "b")
        na, nb = normalize_columns((a, b))
        result = gsf(na, nb)
        # no dominant peak: the winner barely beats the runner-up
        assert result.margin < 0.2 * result.chi2.max()

    def test_injected_peak_dominates(self):
        clean = corpus_matrix(generate_corpus(100, size=128, seed=3000), "clean")
        spec = ArtifactSpec(target_coefficient=40, strength=2.0, seed=4000)
        injected = corpus_matrix(generate_corpus(100, spec, size=128), "inject40")
        na, nb = normalize_columns((injected, clean))
        result = gsf(na, nb)
        assert result.gsf == 40
        assert result.margin > 0.5 * result.chi2.max()
        assert result.chi2.max() > 10.0 * np.median(result.chi2)


class TestWriteCorpus:
    def test_writes_pngs_and_provenance(self, tmp_path):
        spec = ArtifactSpec(target_coefficient=12, strength=2.0, seed=7)
        images = generate_corpus(3, spec, size=64)
        paths = write_corpus(tmp_path, images, "inject12", spec=spec)
        assert len(paths) == 3
        prov = json.loads((tmp_path / "inject12_provenance.json").read_text())
        assert prov["artifact"]["target_coefficient"] == 12
        assert prov["artifact"]["strength"] == 2.0
        assert prov["count"] == 3

        from dctforensics.image_io import decode

        back = decode(paths[0])
        assert np.array_equal(back.samples, images[0].astype(np.float64))
