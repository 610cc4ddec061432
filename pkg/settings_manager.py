# settings_manager.py
import logging
from pathlib import Path
from typing import Any, Dict

import yaml

from config import Config

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS: Dict[str, Any] = {
    "seed": Config.DEFAULT_SEED,
    "strategy": "auto",          # auto | direct | basis
    "render": "exact",           # exact | float
    "t_cap": Config.T_CAP,
    "heuristic": "min-fill",     # min-degree | min-fill
    "dense_cutoff": Config.DENSE_CUTOFF,
}


class SettingsManager:
    def __init__(self, config_path: Path = Config.SETTINGS_FILE):
        self.config_path = Path(config_path)
        self.default_settings = dict(DEFAULT_SETTINGS)
        self.user_settings = self._load_user_settings()

    def _load_user_settings(self) -> dict:
        """加载运行配置（首次运行/文件损坏时自动初始化配置文件）"""
        try:
            if not self.config_path.exists():
                self._init_default_config()
                return dict(self.default_settings)
            with open(self.config_path, "r", encoding="utf-8") as f:
                user_settings = yaml.safe_load(f) or {}
            if not isinstance(user_settings, dict):
                raise ValueError(f"top level must be a mapping, got {type(user_settings).__name__}")
            # 补充缺失的默认字段
            for key, value in self.default_settings.items():
                user_settings.setdefault(key, value)
            return user_settings
        except Exception as e:
            logger.warning(f"Settings file {self.config_path} unreadable ({e}), rebuilding defaults")
            self._init_default_config()
            return dict(self.default_settings)

    def _init_default_config(self) -> None:
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        self._write(self.default_settings)

    def _write(self, settings: dict) -> None:
        with open(self.config_path, "w", encoding="utf-8") as f:
            yaml.safe_dump(settings, f, allow_unicode=True, sort_keys=True)

    def get(self, key: str, default: Any = None) -> Any:
        return self.user_settings.get(key, default)

    def save_setting(self, key: str, value: Any) -> None:
        """保存单个配置项（支持新增/修改）"""
        self.user_settings[key] = value
        self._write(self.user_settings)

    def reset_setting(self, key: str) -> bool:
        """将配置项重置为默认值，未知键返回 False"""
        if key not in self.default_settings:
            return False
        self.user_settings[key] = self.default_settings[key]
        self._write(self.user_settings)
        return True

    def as_run_defaults(self) -> dict:
        return {key: self.user_settings[key] for key in self.default_settings}
