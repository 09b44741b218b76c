"""Shared fixtures: a planted modal set and synthetic FRFs derived from it."""
import numpy as np
import pytest

from flutterkit import FrequencyGrid, ModalParameterSet, Mode, synthesize_frf
from flutterkit.fixtures import fixture_grid, fixture_modal_set


@pytest.fixture(scope="session")
def planted_set() -> ModalParameterSet:
    return fixture_modal_set(1, "n4sid")


@pytest.fixture(scope="session")
def clean_frf(planted_set):
    return synthesize_frf(planted_set, fixture_grid(2048))


@pytest.fixture(scope="session")
def small_frf(planted_set):
    # enough bins for exact identification, cheap enough for dense pencils
    return synthesize_frf(planted_set, fixture_grid(256))


def match_by_frequency(reference: ModalParameterSet, candidate: ModalParameterSet):
    """Pair each reference mode with the nearest-frequency candidate mode."""
    pairs = []
    for ref in reference.modes:
        best = min(candidate.modes,
                   key=lambda m: abs(m.frequency_hz - ref.frequency_hz))
        pairs.append((ref, best))
    return pairs


def sdof_mode(f_hz: float, zeta: float, n_channels: int = 1) -> ModalParameterSet:
    return ModalParameterSet(
        (Mode.from_modal(f_hz, zeta, np.ones(n_channels)),))
