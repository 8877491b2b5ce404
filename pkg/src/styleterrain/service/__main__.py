"""Run the authoring service: python3 -m styleterrain.service [config.json]"""

import sys

import uvicorn

from .app import create_app
from .config import ServiceConfig


def run() -> None:
    config_path = sys.argv[1] if len(sys.argv) > 1 else None
    config = ServiceConfig.load(config_path)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    run()
