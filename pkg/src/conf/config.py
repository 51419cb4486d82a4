from pathlib import Path
from typing import Optional, Union

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.exceptions import InvalidParameterError
from src.schemas import PipelineConfig


class Settings(BaseSettings):
    workers: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    debug: bool = False

    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding="utf-8",
        env_prefix="MCIR_",
        extra="ignore",
    )


settings = Settings()


def load_pipeline_config(path: Optional[Union[str, Path]] = None, seed: Optional[int] = None,
                         acceleration: Optional[float] = None, out_dir: Optional[str] = None) -> PipelineConfig:
    """
    The load_pipeline_config function reads a JSON run configuration, applies command line
    overrides and validates the result.

    :param path: JSON file, defaults are used when None
    :type path: str | Path | None
    :param seed: Base seed override
    :type seed: int | None
    :param acceleration: Acceleration override
    :type acceleration: float | None
    :param out_dir: Output directory override
    :type out_dir: str | None
    :return: Validated configuration
    :rtype: PipelineConfig
    """
    if path is None:
        data = PipelineConfig().model_dump()
    else:
        path = Path(path)
        if not path.is_file():
            raise InvalidParameterError(f"config file {path} does not exist")
        data = PipelineConfig.model_validate_json(path.read_text(encoding="utf-8")).model_dump()
    if seed is not None:
        data["seed"] = seed
    if acceleration is not None:
        data["masks"]["acceleration"] = acceleration
    if out_dir is not None:
        data["out_dir"] = out_dir
    return PipelineConfig.model_validate(data)
