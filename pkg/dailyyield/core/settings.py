"""Access to the default and instance configuration.

Defaults live in config.py at the repository root and can be overridden with config.py in the
instance folder.
"""

from pathlib import Path

_config = None


def import_config(instance_dir="instance"):
    """Import default and instance config."""
    import config
    my_config = {item: getattr(config, item) for item in dir(config) if item.isupper()}

    instance_config_path = Path(instance_dir) / "config.py"
    if instance_config_path.is_file():
        namespace = {}
        exec(compile(instance_config_path.read_text(encoding="UTF-8"), str(instance_config_path), "exec"), namespace)
        my_config.update({item: value for item, value in namespace.items() if item.isupper()})

    return my_config


def get(key, default=None):
    """Get a config value, loading the config on first use."""
    global _config
    if _config is None:
        _config = import_config()
    return _config.get(key, default)
