import numpy as np
import pytest

from nomajam.channel import ChannelRealization, default_geometry, draw_channels
from nomajam.jammer import JammerConfig


@pytest.fixture(scope="session")
def geom():
    return default_geometry()


@pytest.fixture()
def jcfg():
    return JammerConfig()


@pytest.fixture()
def channel(geom):
    return draw_channels(geom, seed=7)


def make_channel(gains, seed=0) -> ChannelRealization:
    return ChannelRealization(gains=np.asarray(gains, dtype=float), seed=seed)
