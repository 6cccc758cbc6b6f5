#! /usr/bin/env python3

from typing import Dict, Optional

from .changepoint_config import RunConfig


class AppBase:
    """
    """
    def __init__(self, config_file: Optional[str] = None,
                 overrides: Optional[Dict] = None):
        """
        Loads the run configuration, from config_file when given, and applies
        the overrides on top of it.

        Args:
            config_file (str, optional): A JSON RunConfig file.
            overrides (dict, optional): Config keys to replace; None values
                                        are ignored.

        """
        config = RunConfig.from_file(config_file) \
            if config_file is not None else RunConfig.from_dict({})
        self.config = config.updated(overrides or {})

    def validate_config(self):
        """
        Validates the configuration to ensure that input is appropriate
        for use.

        Raises:
            ConfigError

        """
        self.config.validate()
