from pathlib import Path

import pytest

from narrative_net.testkit import SyntheticSpec

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


def synthetic_specs(n: int = 50) -> list[SyntheticSpec]:
    """Seeded specs spanning 2-12 speakers and up to 120 scenes."""
    specs = []
    for seed in range(n):
        k = 1 + seed % 3
        per = 2 + seed % 3  # 2..4 speakers per storyline, at most 12 in total
        specs.append(
            SyntheticSpec(
                storyline_count=k,
                speakers_per_storyline=per,
                scene_count=20 + (seed * 37) % 101,
                activation=tuple(1.0 / (i + 1) for i in range(k)),
                seed=seed,
                scenes_per_episode=40,
            )
        )
    return specs
