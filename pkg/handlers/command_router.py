# handlers/command_router.py
import argparse
import logging

from config.run_config import RunConfig, build_run_config
from dynamics.observables import TimeGrid
from handlers import evolve_handlers, oracle_handlers, qite_handlers, spectrum_handlers
from utils.error_handling import EXIT_FAILURE, EXIT_VALIDATION, SimulationError, exit_code_for

logger = logging.getLogger(__name__)

# flag dest -> "section.key" in the run config
FLAG_SETTINGS = {
    "sites": "model.sites",
    "coupling": "model.coupling",
    "field": "model.field",
    "negate_h": "model.negate_h",
    "dtau": "qite.dtau",
    "steps": "qite.steps",
    "svd_cutoff": "qite.svd_cutoff",
    "c_order": "qite.c_expansion_order",
    "linear_system": "qite.linear_system_mode",
    "shots": "noise.shots",
    "readout": "noise.readout",
    "depol": "noise.depol",
    "layers": "noise.layers",
    "delta": "qlanczos.accept_delta",
    "krylov_dim": "qlanczos.dim",
    "krylov_source": "qlanczos.krylov_source",
    "mode": "run.mode",
    "runs": "run.runs",
    "seed": "run.seed",
    "jobs": "run.jobs",
    "out": "run.out",
    "plan": "run.plan",
}


def handle_spectrum(cfg: RunConfig, args: argparse.Namespace) -> int:
    return spectrum_handlers.cmd_spectrum(cfg)


def handle_qite(cfg: RunConfig, args: argparse.Namespace) -> int:
    modes = [m for m in args.modes.split(",") if m.strip()] if args.modes else None
    return qite_handlers.cmd_qite(cfg, args.initial, modes)


def handle_evolve(cfg: RunConfig, args: argparse.Namespace) -> int:
    grid = TimeGrid(args.tmin, args.tmax, args.samples)
    site = None if args.sites_all else args.site
    return evolve_handlers.cmd_evolve(
        cfg, args.source, grid, args.spectrum_file, args.transition or (), args.occupation or (), site,
        args.magnetization or ())


def handle_oracle(cfg: RunConfig, args: argparse.Namespace) -> int:
    return oracle_handlers.cmd_oracle(cfg, args.beta or ())


# Map command names to handler functions
COMMAND_HANDLERS = {
    "spectrum": handle_spectrum,
    "qite": handle_qite,
    "evolve": handle_evolve,
    "oracle": handle_oracle,
}


def overrides_from_args(args: argparse.Namespace) -> dict[str, object]:
    overrides = {}
    for dest, key in FLAG_SETTINGS.items():
        value = getattr(args, dest, None)
        # store_true flags only override when set
        if value is not None and value is not False:
            overrides[key] = value
    return overrides


def route_command(args: argparse.Namespace) -> int:
    """
    Build the run configuration and dispatch to the command handler.

    Returns:
        int: 0 on success, 2 on validation errors, 3 on missing convergence or levels, 1 otherwise.
    """
    handler = COMMAND_HANDLERS.get(args.command)
    if handler is None:
        logger.error(f"[CLI] Unknown command '{args.command}'")
        return EXIT_VALIDATION
    try:
        cfg = build_run_config(args.config, overrides_from_args(args))
        logger.info(f"[CLI] {args.command}: {cfg.provenance()}")
        return handler(cfg, args)
    except SimulationError as e:
        code = exit_code_for(e)
        logger.error(f"[CLI] {args.command} failed ({type(e).__name__}): {e}", exc_info=code == EXIT_FAILURE)
        return code
    except OSError as e:
        logger.error(f"[CLI] {args.command} failed on file access: {e}", exc_info=True)
        return EXIT_FAILURE
