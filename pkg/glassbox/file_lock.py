import contextlib
import os
import sys
import tempfile
from pathlib import Path
from typing import Union

import filelock
from pyxtension import validate

DEFAULT_LOCK_TIMEOUT = 30.0
LOCK_SUFFIX = ".lock"


def lock_path_for(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + LOCK_SUFFIX)


class ModelFileLock(filelock.FileLock):
    """
    Inter-process lock over one model file, held on a sibling ``<name>.lock`` file.
    Acquisition gives up after `timeout` seconds with filelock.Timeout; a negative timeout waits forever.

    >>> with ModelFileLock("model.json") as lock:
    ...     lock.replace_text(text)
    """

    def __init__(self, target: Union[str, Path], timeout: float = DEFAULT_LOCK_TIMEOUT) -> None:
        self.target = Path(target)
        super().__init__(str(lock_path_for(self.target)), timeout=timeout)

    def _acquire(self) -> None:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        super()._acquire()

    def _release(self) -> None:
        # flock on macOS leaves the lock file behind
        if sys.platform.startswith("darwin"):
            with contextlib.suppress(OSError):
                os.remove(lock_path_for(self.target))
        super()._release()

    def replace_text(self, text: str) -> None:
        """Writes `text` to a temp file next to the target and renames it into place. The lock must be held."""
        validate(self.is_locked, f"{self.target} must be locked before it is replaced")
        fd, tmp_name = tempfile.mkstemp(prefix=f".{self.target.name}.", suffix=".tmp", dir=self.target.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(text)
            os.replace(tmp_name, self.target)
        except BaseException:
            Path(tmp_name).unlink(missing_ok=True)
            raise
