from blindeq.cli.commands import cmd_constellation, cmd_convergence, cmd_gradcheck, cmd_sweep, load_config
from blindeq.cli.error_handler import EXIT_CONFIG, EXIT_FAILURE, EXIT_NUMERICAL, EXIT_OK, handle_exception

__all__ = [
    "EXIT_CONFIG",
    "EXIT_FAILURE",
    "EXIT_NUMERICAL",
    "EXIT_OK",
    "cmd_constellation",
    "cmd_convergence",
    "cmd_gradcheck",
    "cmd_sweep",
    "handle_exception",
    "load_config",
]
