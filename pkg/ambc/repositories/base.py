from abc import ABC, abstractmethod
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, List, Optional, TextIO

from ambc.utils.exceptions import StorageError


class BaseRepository(ABC):
    """File-backed repository rooted at one directory"""

    def __init__(self, root: Path):
        self.root = Path(root)

    @abstractmethod
    def find_by_name(self, name: str) -> Optional[Any]:
        pass

    @abstractmethod
    def find_all(self) -> List[Any]:
        pass

    def path_for(self, name: str) -> Path:
        return self.root / name

    @contextmanager
    def opened(self, path: Path, mode: str = 'r') -> Iterator[TextIO]:
        """open() with OS errors surfaced as StorageError"""
        try:
            if 'w' in mode:
                path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, mode, encoding='utf-8', newline='') as handle:
                yield handle
        except OSError as e:
            raise StorageError(f"{path}: {e.strerror or e}")
