from abc import ABC
from os import getenv
from pathlib import Path

ROOT = Path(__file__).parent.absolute()
DATA_DIR = ROOT / "data"


class LocalTestConfig(ABC):
    HOST = getenv("GLASSBOX_TEST_HOST", "127.0.0.1")
    HYPOTHESIS_EXAMPLES = int(getenv("GLASSBOX_HYPOTHESIS_EXAMPLES", "1000"))
