import logging
import os

from flask import Flask

from config import Config


def _configure_logging(app):
    package_logger = logging.getLogger("relaynet")
    level = logging.getLevelName(str(app.config.get("LOG_LEVEL", "INFO")).upper())
    if not isinstance(level, int):
        level = logging.INFO
    package_logger.setLevel(level)

    if app.debug or app.testing or getattr(package_logger, "_relaynet_configured", False):
        return

    from logging.handlers import RotatingFileHandler

    log_dir = app.config["LOG_DIR"]
    if not os.path.exists(log_dir):
        os.makedirs(log_dir, exist_ok=True)
    file_handler = RotatingFileHandler(
        os.path.join(log_dir, "relaynet.log"), maxBytes=10240, backupCount=10
    )
    file_handler.setFormatter(
        logging.Formatter(
            "%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]"
        )
    )
    file_handler.setLevel(level)
    package_logger.addHandler(file_handler)

    # progress on stderr as well
    stream_handler = logging.StreamHandler()
    stream_handler.setLevel(level)
    package_logger.addHandler(stream_handler)

    package_logger._relaynet_configured = True
    package_logger.info("relaynet startup")


def create_app(config_class=Config):
    app = Flask(__name__)
    app.config.from_object(config_class)

    _configure_logging(app)

    from relaynet.cli import COMMANDS

    for command in COMMANDS:
        app.cli.add_command(command)

    return app
