import json
import time
from pathlib import Path
from hashlib import md5

import numpy as np


class ConfigurationError(ValueError):
	"""Raised when model or experiment parameters are outside their valid range"""
	pass

class InvalidInputError(ValueError):
	"""Raised when a vector, length or ordering handed to an operation is unusable"""
	pass

class ParseError(InvalidInputError):
	"""Raised when a data file cannot be parsed into real numbers"""

	def __init__(self, message, line_number=None):
		super().__init__(message)
		self.line_number = line_number

class NumericalError(ArithmeticError):
	"""Raised when a quadrature or root finder cannot reach its tolerance"""

	def __init__(self, message, achieved_error=None):
		super().__init__(message)
		self.achieved_error = achieved_error


def format_float(value):
	# 17 significant digits round-trips every double
	return format(float(value), ".17g")

def replicate_generator(seed, *keys):
	"""
	Counter-based generator for one work item.

	The stream is a Philox generator keyed by the root seed and the
	spawn key (replicate index, purpose, ...), so a given item draws the
	same numbers no matter which worker runs it or in which order.
	"""
	sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
	return np.random.Generator(np.random.Philox(sequence))

# Caching to disk functionality

def get_cache_key(identifier):
    # Handles special characters and nested parameters cleanly
    return md5(str(identifier).encode()).hexdigest() + ".json"

def save_to_cache(identifier, data, cache_dir):
    """
    Save a dict of tables (lists or numpy arrays) to a cache file.
    """
    key = get_cache_key(identifier)
    data = {name: np.asarray(values).tolist() for name, values in data.items()}

    if cache_dir:
        # Expand ~ if present and ensure the cache directory exists
        cache_dir = Path(cache_dir).expanduser()
        cache_dir.mkdir(parents=True, exist_ok=True)

        # Save the data along with a timestamp
        with open(cache_dir / key, "w", encoding='utf-8') as f:
            json.dump({
                "timestamp": int(time.time()),
                "identifier": str(identifier),
                "data": data
            }, f)

def load_from_cache(identifier, cache_dir, max_age_seconds=86400, verbose=False):
    key = get_cache_key(identifier)
    if cache_dir:
        cache_dir = Path(cache_dir).expanduser()
        path = cache_dir / key

        if path.exists():
            with open(path, "r", encoding='utf-8') as f:
                try:
                    cached = json.load(f)
                except json.JSONDecodeError:
                    return None
            age = time.time() - cached["timestamp"]
            if age < max_age_seconds and cached.get("identifier") == str(identifier):
                if verbose:
                    print(f"\tReading from cache: {path}")
                return {name: np.asarray(values, dtype=float) for name, values in cached["data"].items()}
        return None
