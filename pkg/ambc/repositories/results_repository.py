import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from jinja2 import Environment, FileSystemLoader, StrictUndefined
from pydantic import ValidationError as PydanticValidationError

from ambc.config import Config
from ambc.models.allocation import AllocationState
from ambc.models.channel import ChannelTapSet, FrequencyGrid
from ambc.repositories.base import BaseRepository
from ambc.schemas.report import AllocationStateSchema
from ambc.utils.exceptions import StorageError, ValidationError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'


class ResultsRepository(BaseRepository):
    """Run directories under the output root and every file written into them"""

    def __init__(self, root: Path = Config.OUTPUT_ROOT, templates_dir: Path = Config.TEMPLATES_DIR):
        super().__init__(root)
        self.templates = Environment(
            loader=FileSystemLoader(str(templates_dir)),
            undefined=StrictUndefined,
            keep_trailing_newline=True,
            trim_blocks=True,
            lstrip_blocks=True,
        )

    def find_by_name(self, name: str) -> Optional[Path]:
        path = self.path_for(name)
        return path if path.is_dir() else None

    def find_all(self) -> List[str]:
        if not self.root.is_dir():
            return []
        return sorted(path.name for path in self.root.iterdir() if path.is_dir())

    def create_run(self, name: str) -> Path:
        """Run directory for name; an existing one is reused and its files overwritten"""
        path = self.path_for(name)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create run directory {path}: {e.strerror or e}")
        logger.info(f"Writing results to {path}")
        return path

    def write_json(self, run_dir: Path, name: str, data: Any) -> Path:
        path = run_dir / name
        with self.opened(path, 'w') as handle:
            json.dump(data, handle, indent=2)
            handle.write('\n')
        return path

    def write_frame(self, run_dir: Path, name: str, frame: pd.DataFrame) -> Path:
        path = run_dir / name
        with self.opened(path, 'w') as handle:
            frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return path

    def write_state_csv(self, run_dir: Path, state: AllocationState, name: str = 'final_state.csv') -> Path:
        """One row per BD: tau, alpha and the power on every subcarrier"""
        frame = pd.DataFrame({'m': np.arange(state.num_bds), 'tau': state.tau, 'alpha': state.alpha})
        powers = pd.DataFrame(state.power, columns=[f"p_{k}" for k in range(state.power.shape[1])])
        return self.write_frame(run_dir, name, pd.concat([frame, powers], axis=1))

    def save_state(self, path: Path, state: AllocationState, seed: Optional[int] = None) -> Path:
        with self.opened(path, 'w') as handle:
            handle.write(AllocationStateSchema.from_state(state, seed).model_dump_json(indent=2))
            handle.write('\n')
        return path

    def load_state(self, path: Path) -> AllocationStateSchema:
        with self.opened(Path(path)) as handle:
            text = handle.read()
        try:
            return AllocationStateSchema.model_validate_json(text)
        except PydanticValidationError as e:
            first = e.errors()[0]
            where = '.'.join(str(part) for part in first['loc'])
            raise ValidationError(f"Malformed state file {path}: {where or 'document'}: {first['msg']}")

    def write_channels(self, run_dir: Path, taps: ChannelTapSet, grid: FrequencyGrid,
                       name: str = 'channels.csv') -> Path:
        """Taps (f, g, h, v) and responses (F, G, H, V) in long format"""
        blocks = [
            ('f', taps.forward_taps), ('g', taps.backward_taps),
            ('h', taps.direct_taps[None, :]), ('v', taps.interference_taps),
            ('F', grid.F), ('G', grid.G), ('H', grid.H[None, :]), ('V', grid.V),
        ]
        frames = []
        for link, values in blocks:
            rows, columns = np.indices(values.shape)
            frames.append(pd.DataFrame({
                'link': link,
                'm': rows.ravel(),
                'index': columns.ravel(),
                're': values.real.ravel(),
                'im': values.imag.ravel(),
            }))
        return self.write_frame(run_dir, name, pd.concat(frames, ignore_index=True))

    def write_summary(self, run_dir: Path, context: Dict[str, Any], name: str = 'summary.md') -> Path:
        text = self.templates.get_template('run_summary.md.j2').render(**context)
        path = run_dir / name
        with self.opened(path, 'w') as handle:
            handle.write(text)
        return path
