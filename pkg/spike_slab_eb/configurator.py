import os
import yaml
from pathlib import Path
from .utils import ConfigurationError


class Config:
    DEFAULTS = {
        "node_count": 200,
        "truncation_radius": 10.0,
        "relative_tolerance": 1e-9,
        "n_max": 1000000,
        "grid_step": 0.005,
        "cache_dir": str(Path.home() / ".spike_slab_eb/cache"),
        "cache_expiration": 30 * 86400,
        "ell_floor": "log2",
        "coverage_high_band": 0.9,
        "coverage_low_band": 0.1,
        "quantile_draws": 10000,
        "workers": 1,
    }

    def __init__(self):
        config_path = Path.home() / ".spike_slab_eb/config.yml"
        config = {}
        if config_path.exists():
            with open(config_path, "r", encoding="utf-8") as f:
                config = yaml.safe_load(f) or {}

        # Apply defaults, then override
        for k, v in {**self.DEFAULTS, **config}.items():
            if v is None and k not in config:
                v = self.DEFAULTS.get(k)
            setattr(self, k, v)

        workers = os.environ.get("SPIKE_SLAB_EB_WORKERS", None)
        if workers:
            self.workers = int(workers)

    def quadrature_kwargs(self):
        return {
            "node_count": int(self.node_count),
            "truncation_radius": float(self.truncation_radius),
            "relative_tolerance": float(self.relative_tolerance),
        }

    @staticmethod
    def read_experiment(config_path, allowed_keys, verbose=False):
        """
        Reads a simulation configuration file (YAML, or JSON which YAML also parses)
        and checks its keys.

        Parameters:
        -----------
        config_path : str or Path
            Path to the configuration file.
        allowed_keys : iterable of str
            Keys the experiment schema accepts.

        Returns:
        --------
        dict
            The parsed mapping.

        """
        if verbose:
            print(f"Reading experiment configuration from {config_path}")
        config_path = Path(config_path)

        if not config_path.exists():
            raise FileNotFoundError(f"The experiment configuration file {config_path} does not exist.")

        try:
            with open(config_path, "r", encoding='utf-8') as f:
                raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise yaml.YAMLError(f"Error parsing YAML file: {e}")

        if not isinstance(raw, dict):
            raise ConfigurationError(f"Experiment configuration must be a mapping, got {type(raw).__name__}")

        unknown = sorted(set(raw) - set(allowed_keys))
        if unknown:
            raise ConfigurationError(f"Unknown configuration key(s): {', '.join(unknown)}")
        return raw
