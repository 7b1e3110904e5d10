import numpy as np
import pytest

from bimetric import builtin_scene, builtin_scene_names


@pytest.fixture(scope="session")
def scenes():
    out = {name: builtin_scene(name) for name in builtin_scene_names()
           if name != "random_smooth"}
    for seed in (3, 11):
        out[f"random_smooth_{seed}"] = builtin_scene("random_smooth",
                                                     seed=seed)
    return out


@pytest.fixture(scope="session")
def sample_points():
    rng = np.random.default_rng(2024)
    return [tuple(rng.uniform(-0.7, 0.7, 4)) for _ in range(3)]
