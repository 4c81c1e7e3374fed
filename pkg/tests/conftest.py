import re

import numpy as np
import pytest
import torch

from poke2vid.data_pipeline import FlowMap, VideoClip
from poke2vid.evaluation import SyntheticParams, make_synthetic_dataset

torch.manual_seed(0)
# tiny tensors: inter-op threading costs far more than it saves
torch.set_num_threads(1)

_ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::\w*test_c(\d+)_(\w+)", report.nodeid)
    if match and report.when == "call":
        number, name = match.groups()
        _ACCEPTANCE_RESULTS[number] = (name, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(_ACCEPTANCE_RESULTS, key=int):
        name, outcome = _ACCEPTANCE_RESULTS[number]
        tag = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(
            f"[{tag}] criterion {int(number)}: {name.replace('_', ' ')}"
        )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spring_data():
    params = SyntheticParams(num_clips=6, frames_per_clip=20, image_size=16)
    return make_synthetic_dataset("spring_dot", params, np.random.default_rng(7))


@pytest.fixture
def rigid_data():
    params = SyntheticParams(num_clips=4, frames_per_clip=12, image_size=16)
    return make_synthetic_dataset("rigid_patch", params, np.random.default_rng(11))


def make_clip(num_frames=6, size=16, seed=0, clip_id="clip", split="train"):
    rng = np.random.default_rng(seed)
    frames = rng.random((num_frames, size, size, 3)).astype(np.float32)
    return VideoClip(frames=frames, fps=10.0, clip_id=clip_id, split=split)


def make_flow(vectors, source=0, target=1):
    return FlowMap(vectors=np.asarray(vectors, dtype=np.float32),
                   source_index=source, target_index=target)
