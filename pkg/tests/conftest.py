import numpy as np
import pytest

from dialogue_scr import BinaryActivity, SampleBuffer, ScrParams

FS = 48000


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)


@pytest.fixture
def params():
    return ScrParams()


def mono(x, fs=FS):
    return SampleBuffer(np.asarray(x, dtype=float), fs)


def activity(x, rate=FS):
    return BinaryActivity(np.asarray(x, dtype=float), rate)


def reference_smoother(x, c_f):
    """Plain-loop one-pole filter, both pass orders, averaged."""
    def one_pole(seq):
        out, y = [], seq[0]
        for v in seq:
            y = (1.0 - c_f) * y + c_f * v
            out.append(y)
        return out

    x = list(x)
    fb = one_pole(one_pole(x)[::-1])[::-1]
    bf = one_pole(one_pole(x[::-1])[::-1])
    return np.clip([(a + b) / 2 for a, b in zip(fb, bf)], 0.0, 1.0)
