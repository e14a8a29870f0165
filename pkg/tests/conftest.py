import pytest

from helpers import GENUS_TWO_SIGNATURES
from hypcensus.tricomb import pairing_from_signature


@pytest.fixture(scope="session")
def genus_two_pairings():
    return [pairing_from_signature(s) for s in GENUS_TWO_SIGNATURES]
