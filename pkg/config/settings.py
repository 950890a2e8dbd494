import os
from typing import Annotated

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

ENV_FILE = os.getenv("ENV_FILE_PATH", "config/settings.env")


class Settings(BaseSettings):
    # Logging
    LOG_PATH: Annotated[str, Field(description="Directory for application logs")] = "logs"
    LOG_FILE: Annotated[str, Field(description="Log file name inside LOG_PATH")] = "stackvault.log"
    LOG_LEVEL: Annotated[str, Field(description="Root level for stackvault loggers")] = "INFO"
    LOG_TO_FILE: Annotated[bool, Field(description="Also write logs to LOG_PATH/LOG_FILE")] = True
    LOG_MAX_BYTES: Annotated[int, Field(description="Log file is trimmed to this many bytes on startup", gt=0)] = 5 * 1024 * 1024

    # Compute
    N_JOBS: Annotated[int, Field(description="Worker threads for fold-parallel fits (1 = serial)", ge=1)] = 1

    # Paths
    DEFAULT_CONFIG_PATH: Annotated[str, Field(description="Pipeline config used when --config is not given")] = "config/pipeline.json"

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_file_encoding="utf-8",
        env_prefix="STACKVAULT_",
        extra="ignore",
    )


settings = Settings()
