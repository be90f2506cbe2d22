"""
预设管理模块 - 系统参数预设
"""
import json
from pathlib import Path
from typing import List

from core.errors import ConfigError, InvalidParams
from core.plant_params import PlantParams

PRESETS_DIR = Path(__file__).resolve().parent


class PresetManager:
    """预设管理器，每个预设是一个扁平键的 JSON 文件"""

    def __init__(self, presets_dir=PRESETS_DIR):
        self.presets_dir = Path(presets_dir)
        self.presets_dir.mkdir(parents=True, exist_ok=True)

    def list_presets(self) -> List[str]:
        """列出所有预设"""
        return sorted(p.stem for p in self.presets_dir.glob("*.json"))

    def preset_path(self, preset_name: str) -> Path:
        return self.presets_dir / f"{preset_name}.json"

    def load_preset(self, preset_name: str) -> PlantParams:
        """加载预设"""
        preset_path = self.preset_path(preset_name)
        if not preset_path.exists():
            available = ', '.join(self.list_presets()) or '无'
            raise ConfigError(f"未知预设 {preset_name!r}，可用预设: {available}")

        try:
            with open(preset_path, 'r', encoding='utf-8') as f:
                params_dict = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"预设格式错误: {e.msg}", path=str(preset_path), line=e.lineno)

        try:
            return PlantParams.from_dict(params_dict)
        except InvalidParams as e:
            raise ConfigError(str(e), path=str(preset_path))

    def save_preset(self, preset_name: str, params: PlantParams):
        """保存预设"""
        with open(self.preset_path(preset_name), 'w', encoding='utf-8') as f:
            f.write(params.to_json())
            f.write('\n')

    def delete_preset(self, preset_name: str):
        """删除预设"""
        preset_path = self.preset_path(preset_name)
        if preset_path.exists():
            preset_path.unlink()

    def create_default_presets(self) -> List[str]:
        """写出内置预设"""
        self.save_preset('paper-smib', PlantParams())
        return ['paper-smib']
