import numpy as np
import pytest

from eegsync.errors import DataValidationError
from eegsync.model import (
    CHANNELS_10_20_62,
    FeatureConfig,
    FeatureKind,
    FeatureSeries,
    KEY_TEMPORAL_ELECTRODES,
    MONTAGE_10_20_62,
    Montage,
    Recording,
    StimulusCatalog,
    StimulusInfo,
    de_config,
    validate_recording,
)
from eegsync.preprocess import GAMMA


def make_recording(n_channels=3, n_samples=100, **overrides):
    montage = Montage(tuple(f"C{i}" for i in range(n_channels)))
    fields = dict(
        subject_id="s01",
        session_id="1",
        stimulus_id="f01",
        samples=np.zeros((n_channels, n_samples)),
        sample_rate_hz=200.0,
        montage=montage,
    )
    fields.update(overrides)
    return Recording(**fields)


class TestMontage:
    def test_builtin_62(self):
        assert MONTAGE_10_20_62.n_channels == 62
        assert len(set(CHANNELS_10_20_62)) == 62
        assert MONTAGE_10_20_62.key_electrodes == KEY_TEMPORAL_ELECTRODES
        for k in KEY_TEMPORAL_ELECTRODES:
            assert k in MONTAGE_10_20_62

    def test_case_insensitive_lookup(self):
        assert MONTAGE_10_20_62.index("t7") == MONTAGE_10_20_62.index("T7")
        assert "fp1" in MONTAGE_10_20_62

    def test_rejects_duplicates(self):
        with pytest.raises(DataValidationError):
            Montage(("A", "a"))

    def test_rejects_unknown_key_electrode(self):
        with pytest.raises(DataValidationError):
            Montage(("A", "B"), ("C",))

    def test_rejects_empty(self):
        with pytest.raises(DataValidationError):
            Montage(())
        with pytest.raises(DataValidationError):
            Montage(("", "B"))


class TestValidateRecording:
    def test_clean_recording_ok(self):
        montage = Montage(tuple(f"C{i}" for i in range(62)))
        rec = Recording("s", "1", "f", np.zeros((62, 48000)), 200.0, montage)
        assert validate_recording(rec) == []

    def test_dimension_mismatch(self):
        montage = Montage(tuple(f"C{i}" for i in range(62)))
        rec = Recording("s", "1", "f", np.zeros((61, 100)), 200.0, montage)
        assert any("dimension mismatch" in v for v in validate_recording(rec))

    def test_nan_sample(self):
        rec = make_recording()
        bad = rec.samples.copy()
        bad[1, 3] = np.nan
        rec2 = make_recording(samples=bad)
        assert any("non-finite" in v for v in validate_recording(rec2))

    def test_zero_length(self):
        rec = make_recording(n_samples=0)
        assert any("zero-length" in v for v in validate_recording(rec))

    def test_bad_rate(self):
        rec = make_recording(sample_rate_hz=0.0)
        assert any("sample_rate" in v for v in validate_recording(rec))

    def test_samples_immutable(self):
        rec = make_recording()
        with pytest.raises(ValueError):
            rec.samples[0, 0] = 1.0


class TestFeatureConfig:
    def test_de_requires_band(self):
        with pytest.raises(DataValidationError):
            FeatureConfig(FeatureKind.DIFFERENTIAL_ENTROPY, 200)

    def test_non_de_rejects_band(self):
        with pytest.raises(DataValidationError):
            FeatureConfig(FeatureKind.ORIGINAL, 20, GAMMA)

    def test_de_scale_must_match_rate(self):
        cfg = de_config("gamma", 200.0)
        assert cfg.scale == 200
        cfg.validate_for(200.0)
        with pytest.raises(DataValidationError):
            cfg.validate_for(256.0)

    def test_labels(self):
        assert FeatureConfig(FeatureKind.ORIGINAL, 20).label == "orig_s20"
        assert FeatureConfig(FeatureKind.FIRST_DIFFERENCE, 5).label == "fd_s5"
        assert de_config("gamma", 200.0).label == "de_gamma"

    def test_scale_positive(self):
        with pytest.raises(DataValidationError):
            FeatureConfig(FeatureKind.ORIGINAL, 0)


class TestFeatureSeries:
    def test_rate_identity(self):
        cfg = FeatureConfig(FeatureKind.ORIGINAL, 20)
        s = FeatureSeries(cfg, "s01", "1", "f01", "C0", np.ones(10), 200.0)
        assert s.feature_rate_hz * cfg.scale == s.sample_rate_hz
        assert len(s) == 10
        assert s.record_label == "s01/1"

    def test_rejects_non_finite(self):
        cfg = FeatureConfig(FeatureKind.ORIGINAL, 20)
        with pytest.raises(DataValidationError):
            FeatureSeries(cfg, "s", "1", "f", "C0", np.array([1.0, np.inf]), 200.0)


class TestStimulusCatalog:
    def test_by_valence(self):
        cat = StimulusCatalog(
            {
                "f1": StimulusInfo(240.0, "positive"),
                "f2": StimulusInfo(240.0, "negative"),
                "f3": StimulusInfo(240.0, "positive"),
            }
        )
        groups = cat.by_valence()
        assert groups["positive"] == ["f1", "f3"]
        assert groups["negative"] == ["f2"]
        assert groups["neutral"] == []
        assert cat.valence_of("f2") == "negative"

    def test_rejects_unknown_valence(self):
        with pytest.raises(DataValidationError):
            StimulusInfo(1.0, "ecstatic")
