from .track import Track, TurnSpec, get_track, TRACK_IDS
from .vehicle import VehicleState, step, WHEELBASE, MAX_WHEEL_ANGLE_RAD, SPEED, DT
from .weather import WeatherParams, load_weather_table, save_weather_table, default_weather_table
from .scene import SceneState
from .render import render
from .expert import expert_steering, LOOKAHEAD
from .episode import run_episode, InLaneRecord, FrameRecord, EXPERT, EPISODE_FRAMES
from .dataset import Sample, Dataset, collect_dataset, save_dataset, load_dataset

__all__ = [
    "Track", "TurnSpec", "get_track", "TRACK_IDS",
    "VehicleState", "step", "WHEELBASE", "MAX_WHEEL_ANGLE_RAD", "SPEED", "DT",
    "WeatherParams", "load_weather_table", "save_weather_table", "default_weather_table",
    "SceneState", "render",
    "expert_steering", "LOOKAHEAD",
    "run_episode", "InLaneRecord", "FrameRecord", "EXPERT", "EPISODE_FRAMES",
    "Sample", "Dataset", "collect_dataset", "save_dataset", "load_dataset",
]
