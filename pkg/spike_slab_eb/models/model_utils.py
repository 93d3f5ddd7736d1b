from jsonmodels import errors


def filter_empty_fields(obj):
    """
    Recursively filters out empty fields from a nested data structure.
    Empty values are defined as: None, '', [], {}
    """
    if isinstance(obj, dict):
        # If obj is a dictionary, filter out empty values
        return {k: filter_empty_fields(v) for k, v in obj.items() if v not in [None, '', [], {}]}
    elif isinstance(obj, list):
        # If obj is a list, recursively filter each item
        return [filter_empty_fields(v) for v in obj if v not in [None, '', [], {}]]
    else:
        # If it's a basic value (not a list or dict), return it
        return obj


def field_names(model_cls):
    return [name for name, _ in model_cls.iterate_over_fields()]


def record_from_mapping(model_cls, mapping):
    """
    Build a jsonmodels record from a plain mapping, rejecting keys the model
    does not declare.

    jsonmodels silently ignores unknown keys, which would let a misspelled
    experiment option fall back to its default, so the check happens here.

    Raises:
        jsonmodels.errors.ValidationError: naming the first unknown key or
        the first field that fails validation.
    """
    known = set(field_names(model_cls))
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise errors.ValidationError(f"Unknown key(s) for {model_cls.__name__}: {', '.join(unknown)}")
    record = model_cls(**mapping)
    record.validate()
    return record


def as_float_list(values):
    # ListField(float) casts anything that is not already a float through float(**value)
    return [float(v) for v in values]
