from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from iotforge.project import compile_project, corpus_dir, discover_layout, load_specs


@pytest.fixture
def corpus_copy(tmp_path):
    """Copy a bundled corpus app into a scratch directory."""

    def _copy(name: str) -> Path:
        dest = tmp_path / name
        shutil.copytree(corpus_dir() / name, dest)
        return dest

    return _copy


@pytest.fixture
def fire_resolved(corpus_copy):
    return load_specs(discover_layout(corpus_copy("fire_detection_bedroom")))


@pytest.fixture
def fire_build(corpus_copy):
    return compile_project(corpus_copy("fire_detection_bedroom"), seed=42)
