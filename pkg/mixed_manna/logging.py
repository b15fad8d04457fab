"""Optional logging of solver runs and benchmark batches to wandb"""

from contextlib import nullcontext
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple
from warnings import warn
import inspect
import os
import pickle

from decorator import decorate
import pandas as pd
import wandb

from mixed_manna.instance import Instance

PROJECT = "mixed_manna"

# Keep wandb quiet unless something goes wrong
os.environ["WANDB_SILENT"] = "true"

# Identity of the most recent run created by this module
last_run_info: Dict[str, Optional[str]] = {
    "id": None,
    "name": None,
    "path": None,
    "url": None,
}

# Arguments the module insists on when it creates a run
_FORCED_INIT_ARGS = {
    "reinit": True,
    "project": PROJECT,
    "save_code": True,
    "allow_val_change": True,
}


def get_or_init_run(**init_args) -> Tuple[Any, Any]:
    """Return the active wandb run, creating one if there is none, along
    with a context manager to wrap the logged work in.  The manager is the
    run itself when it was created here (so it finishes on exit) and a
    no-op otherwise, in which case the caller that created the run owns
    its lifetime."""
    global last_run_info  # pylint: disable=global-statement
    if wandb.run is not None:
        run = wandb.run
        # Nested loggable calls append their config instead of clobbering
        if "config" in init_args:
            children = list(run.config.get("child_configs", []))
            run.config["child_configs"] = children + [init_args["config"]]
        return run, nullcontext()
    for key, value in _FORCED_INIT_ARGS.items():
        if key in init_args:
            warn(f"Ignoring init argument {key}; it is always {value}.")
        init_args[key] = value
    run = wandb.init(**init_args)
    if run is not None:
        last_run_info = {
            "id": run.id,
            "name": run.name,
            "path": run.path,
            "url": run.url,
        }
    return run, run


def log_object(run: Any, obj: Any, logged_name: str):
    """Pickle an object into the run directory; wandb uploads it when the
    run finishes."""
    folder = os.path.join(run.dir, "logged_objects")
    os.makedirs(folder, exist_ok=True)
    with open(os.path.join(folder, f"{logged_name}.pkl"), "wb") as file:
        pickle.dump(obj, file)


def log_tables(run: Any, obj: Any, logged_name: str):
    """Log any DataFrame found in a return value as a wandb Table."""
    values = obj if isinstance(obj, tuple) else (obj,)
    for position, value in enumerate(values):
        if isinstance(value, pd.DataFrame):
            run.log({f"{logged_name}_{position}": wandb.Table(dataframe=value)})


def convert_object_to_wandb_config(obj: Any) -> Any:
    """Convert an argument into something wandb can store as config:
    rationals become "p/q" strings, instances a size summary, dataclasses
    and containers are converted recursively."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Instance):
        return {
            "agents": obj.num_agents,
            "items": obj.num_items,
            "segments": obj.total_segments,
            "setting": obj.setting.value,
        }
    if is_dataclass(obj) and not isinstance(obj, type):
        return convert_object_to_wandb_config(asdict(obj))
    if isinstance(obj, dict):
        return {key: convert_object_to_wandb_config(v) for key, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [convert_object_to_wandb_config(value) for value in obj]
    return obj


def get_function_args(func: Callable) -> List[str]:
    """Names of a function's explicit parameters (no *args/**kwargs)."""
    return [
        param.name
        for param in inspect.signature(func).parameters.values()
        if param.kind
        not in (inspect.Parameter.VAR_POSITIONAL, inspect.Parameter.VAR_KEYWORD)
    ]


def _loggable(func: Callable, *args, **kwargs) -> Any:
    """Caller for the `loggable` decorator."""
    all_args = dict(zip(get_function_args(func), args))
    all_args.update(kwargs)
    log = all_args.get("log", False)
    if log is False:
        return func(*args, **kwargs)
    log_args = {} if log is True else log
    config = {
        key: convert_object_to_wandb_config(value)
        for key, value in all_args.items()
        if key != "log"
    }
    run, manager = get_or_init_run(
        job_type=func.__name__,
        config=config,
        tags=log_args.get("tags", None),
        group=log_args.get("group", None),
        notes=log_args.get("notes", None),
    )
    with manager:
        func_return = func(*args, **kwargs)
        log_object(run, func_return, logged_name=func.__name__)
        log_tables(run, func_return, logged_name=func.__name__)
    return func_return


def loggable(func):
    """Decorator adding optional wandb logging of a function's arguments
    and return value.  The decorated function must take a keyword
    argument `log: Union[bool, Dict] = False`; pass `True`, or a dict with
    any of `tags`, `group` and `notes`, to log the call."""
    return decorate(func, _loggable)  # type: ignore


def get_objects_from_run(run_path: str, folder: str = "wandb_restored") -> Dict:
    """Download and unpickle every object a run stored with `log_object`,
    keyed by the name of the function that returned it."""
    run = wandb.Api().run(run_path)
    objects = {}
    for file in run.files():
        if os.path.dirname(file.name) != "logged_objects":
            continue
        root = os.path.join(folder, run.name)
        wandb.restore(file.name, run_path=run_path, replace=False, root=root).close()
        with open(os.path.join(root, file.name), "rb") as open_file:
            objects[os.path.splitext(os.path.basename(file.name))[0]] = pickle.load(
                open_file
            )
    return objects
