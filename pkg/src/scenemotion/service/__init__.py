from .app import create_app, serve
from .store import RunRecord, RunStore, SceneStore
