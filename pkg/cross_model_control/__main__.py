import sys
from pathlib import Path

top_level_dir = str(Path(__file__).parent)
sys.path.append(top_level_dir)
# We need to make sure non-packaged dependencies
# (i.e. packages with native extension code, e.g. torch)
# are available
from cross_model_control.bootstrap_utils import ensure_pkg_dependencies
ensure_pkg_dependencies()

def configure_logging(verbosity: int) -> None:
    import logging

    level = (logging.WARNING if verbosity <= 0
             else logging.INFO if verbosity == 1
             else logging.DEBUG)
    logging.basicConfig(
        # Log to console
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        force=True,
    )

def cli_main(argv: list[str] | None = None) -> int:
    '''
    Exit status: 0 on success, 2 config error, 3 data error, 4 any other failure.
    '''
    import logging
    from cross_model_control import cmd_opts
    from cross_model_control.tasks import task_for
    from cross_model_control.util.custom_types import error_kind_for, exit_code_for
    from cross_model_control.util.tui import print_error, print_success

    try:
        cfg, verbosity = cmd_opts.run(argv)  # argparse reads cmd args
        configure_logging(verbosity)
        manifest_path = task_for(cfg).run()
    except KeyboardInterrupt:
        raise
    except Exception as e:
        logging.getLogger(__name__).debug("Run failed", exc_info=True)
        print_error(error_kind_for(e), str(e) or type(e).__name__)
        return exit_code_for(e)

    print_success(f"Done; manifest saved to {manifest_path}.")
    return 0

if __name__ in {"__main__", "__mp_main__"}:
    sys.exit(cli_main())
