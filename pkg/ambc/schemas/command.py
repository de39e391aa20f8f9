from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from ambc.utils.validators import Validators

Subcommand = Literal['solve', 'sweep', 'bench', 'validate', 'dump-channels']


class CommandSpec(BaseModel):
    """Parsed command line"""
    subcommand: Subcommand
    config_path: Optional[Path] = None
    preset: Optional[str] = None
    seed: Optional[int] = None
    output_dir: Path
    verbosity: int = Field(0, ge=0)
    overrides: List[str] = Field(default_factory=list)
    jobs: int = Field(1, ge=1)
    state_path: Optional[Path] = None
    bench_full_budget: bool = False

    @field_validator('overrides')
    @classmethod
    def check_overrides(cls, values: List[str]) -> List[str]:
        for item in values:
            if not Validators.validate_override(item):
                raise ValueError(f"override must look like key=value, got {item!r}")
        return values
