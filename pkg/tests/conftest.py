import os

os.environ.setdefault("SOFTPERCEPT_THREADS", "1")

import pytest  # noqa: E402

from softpercept.cvae import ModalityConfig, train  # noqa: E402
from softpercept.fingersim import build_dataset, generate_dataset, generate_episode, random_scene  # noqa: E402
from softpercept.rng import stream  # noqa: E402


@pytest.fixture(scope="session")
def small_episode():
    scene = random_scene(stream(11, "sim", 0, 0))
    return generate_episode(scene, 2.0, seed=11)


@pytest.fixture(scope="session")
def small_dataset():
    """Four 3-second episodes with independent box layouts."""
    return build_dataset(generate_dataset(120, seed=5, duration=3.0), seed=5)


@pytest.fixture(scope="session")
def tiny_model(small_dataset):
    """Briefly trained full model (proprio + vision in; proprio, force, flow out)."""
    cfg = ModalityConfig(inputs=("proprio", "vision"), outputs=("proprio", "force", "flow"), latent_dim=8, batch_size=32)
    return train(small_dataset, cfg, epochs=3, seed=0).model


# acceptance verdicts, printed as one line per criterion after the run
VERDICTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def verdict():
    def record(n: int, ok: bool, detail: str) -> bool:
        VERDICTS[n] = (bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
