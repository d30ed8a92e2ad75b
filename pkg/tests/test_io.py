import numpy as np
import pytest
import soundfile as sf

from dialogue_scr import SampleBuffer
from dialogue_scr.io import (
    InputFormatError,
    read_audio,
    read_track_csv,
    write_audio,
    write_track_csv,
)
from dialogue_scr.signal import BinaryActivity, ProbabilitySignal


class TestAudio:
    def test_float_roundtrip_exact(self, tmp_path, rng):
        x = rng.uniform(-1, 1, 1000).astype(np.float32).astype(np.float64)
        write_audio(tmp_path / "a.wav", SampleBuffer(x, 48000))
        buf = read_audio(tmp_path / "a.wav")
        np.testing.assert_array_equal(buf.samples[0], x)
        assert buf.sample_rate == 48000

    def test_pcm16_full_scale(self, tmp_path):
        sf.write(tmp_path / "a.wav", np.array([-32768, 0, 32767], dtype=np.int16), 16000,
                 subtype="PCM_16")
        buf = read_audio(tmp_path / "a.wav")
        assert buf.samples[0, 0] == -1.0 and buf.samples[0, 1] == 0.0

    @pytest.mark.parametrize("encoding,bits", [("pcm16", 16), ("pcm24", 24)])
    def test_pcm_within_one_lsb(self, tmp_path, rng, encoding, bits):
        x = rng.uniform(-0.99, 0.99, 1000)
        write_audio(tmp_path / "a.wav", SampleBuffer(x, 16000), encoding)
        back = read_audio(tmp_path / "a.wav").samples[0]
        assert np.max(np.abs(back - x)) <= 2.0 ** -(bits - 1)

    def test_stereo_layout(self, tmp_path, rng):
        x = rng.uniform(-1, 1, (2, 500)).astype(np.float32).astype(np.float64)
        write_audio(tmp_path / "s.wav", SampleBuffer(x, 44100))
        buf = read_audio(tmp_path / "s.wav")
        assert buf.channels == 2
        np.testing.assert_array_equal(buf.samples, x)

    def test_rejects(self, tmp_path):
        (tmp_path / "bad.wav").write_bytes(b"RIFF nonsense")
        with pytest.raises(InputFormatError):
            read_audio(tmp_path / "bad.wav")
        sf.write(tmp_path / "q.wav", np.zeros((10, 4)), 16000, subtype="PCM_16")
        with pytest.raises(InputFormatError, match="channels"):
            read_audio(tmp_path / "q.wav")
        sf.write(tmp_path / "u8.wav", np.zeros(10), 16000, subtype="PCM_U8")
        with pytest.raises(InputFormatError, match="encoding"):
            read_audio(tmp_path / "u8.wav")
        sf.write(tmp_path / "a.flac", np.zeros(10), 16000)
        with pytest.raises(InputFormatError, match="WAVE"):
            read_audio(tmp_path / "a.flac")

    def test_unknown_encoding(self, tmp_path):
        with pytest.raises(ValueError):
            write_audio(tmp_path / "a.wav", SampleBuffer(np.zeros(4), 8000), "mp3")


class TestTracks:
    def test_rate_inferred(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("time_s,value\n0.00,0.1\n0.01,0.9\n0.02,0.5\n")
        p = read_track_csv(path)
        assert p.rate == 100.0
        np.testing.assert_array_equal(p.values, [0.1, 0.9, 0.5])

    def test_roundtrip(self, tmp_path, rng):
        p = ProbabilitySignal(rng.random(300), 100)
        write_track_csv(tmp_path / "p.csv", p)
        q = read_track_csv(tmp_path / "p.csv")
        assert q.rate == 100.0
        np.testing.assert_allclose(q.values, p.values, rtol=1e-8)

    def test_binary(self, tmp_path):
        write_track_csv(tmp_path / "v.csv", BinaryActivity([0, 1, 1, 0], 50))
        v = read_track_csv(tmp_path / "v.csv", "binary")
        assert v.rate == 50.0 and list(v.values) == [0, 1, 1, 0]

    @pytest.mark.parametrize("body,match", [
        ("time_s,value\n0.00,1.5\n", "row 2"),
        ("time_s,value\n", "no data"),
        ("t,v\n0,0.1\n", "header"),
        ("time_s,value\n0.00,0.1\n0.02,0.2\n0.01,0.3\n", "row 4.*increasing"),
        ("time_s,value\n0.00,0.1\n0.01,0.2\n0.03,0.3\n", "non-uniform"),
        ("time_s,value\n0.00,abc\n", "row 2"),
    ])
    def test_errors(self, tmp_path, body, match):
        path = tmp_path / "p.csv"
        path.write_text(body)
        with pytest.raises(InputFormatError, match=match):
            read_track_csv(path)

    def test_binary_rejects_fractions(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("time_s,value\n0.00,0.5\n")
        with pytest.raises(InputFormatError, match="0 or 1"):
            read_track_csv(path, "binary")
