import argparse
import logging
import sys

from handlers.command_router import COMMAND_HANDLERS, route_command
from models.noise_model import MeasurementMode
from utils.logging_utils import setup_logging


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    model = shared.add_argument_group("model")
    model.add_argument("--sites", type=int, help="chain length N (default 3)")
    model.add_argument("--coupling", type=float, help="coupling J (default 0.6)")
    model.add_argument("--field", type=float, help="transverse field h_T (default 1)")
    model.add_argument("--negate-h", dest="negate_h", action="store_true", help="evolve with -H")

    qite = shared.add_argument_group("imaginary-time evolution")
    qite.add_argument("--dtau", type=float, help="imaginary time step (default 0.1)")
    qite.add_argument("--steps", type=int, help="number of steps (default 30)")
    qite.add_argument("--svd-cutoff", dest="svd_cutoff", type=float, help="relative eigenvalue cutoff")
    qite.add_argument("--c-order", dest="c_order", type=int, choices=(1, 2), help="normalization expansion order")
    qite.add_argument("--linear-system", dest="linear_system", choices=("auto", "exact", "measured"),
                      help="source of the update linear system in noisy modes")

    noise = shared.add_argument_group("measurement")
    noise.add_argument("--mode", choices=[m.value for m in MeasurementMode], help="measurement mode")
    noise.add_argument("--shots", type=int, help="shots per measured string (default 8192)")
    noise.add_argument("--readout", type=float, help="symmetric readout flip probability")
    noise.add_argument("--depol", type=float, help="depolarizing error per layer")
    noise.add_argument("--layers", type=int, help="circuit layers for depolarization")
    noise.add_argument("--runs", type=int, help="repetitions for error bars (default 3)")
    noise.add_argument("--seed", type=int, help="base seed (default 2021)")

    lanczos = shared.add_argument_group("lanczos")
    lanczos.add_argument("--delta", type=float, help="uncertainty acceptance threshold (default 0.8)")
    lanczos.add_argument("--krylov-dim", dest="krylov_dim", type=int, help="Krylov dimension (default 2)")
    lanczos.add_argument("--krylov-source", dest="krylov_source", choices=("auto", "energies", "overlap"))

    run = shared.add_argument_group("run")
    run.add_argument("--out", help="output directory")
    run.add_argument("--jobs", type=int, help="parallel workers (-1 for all cores)")
    run.add_argument("--config", help="INI run configuration file")
    run.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    return shared


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlanczos", description="QITE and QLanczos spectra and dynamics of the transverse-field Ising chain.")
    commands = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    spectrum = commands.add_parser("spectrum", parents=[shared], help="assemble the full spectrum")
    spectrum.add_argument("--plan", help="INI plan file (default: built-in plan for N=3 or 4)")

    qite = commands.add_parser("qite", parents=[shared], help="energy versus imaginary time")
    qite.add_argument("--initial", required=True, help="'lib:<name>' or '+100,-010,...'")
    qite.add_argument("--modes", help="comma list of measurement modes, one column group each")

    evolve = commands.add_parser("evolve", parents=[shared], help="real-time observables")
    evolve.add_argument("--source", choices=("oracle", "file", "both"), default="oracle")
    evolve.add_argument("--spectrum-file", dest="spectrum_file", help="spectrum CSV from 'spectrum' or 'oracle'")
    evolve.add_argument("--transition", action="append", help="<in>:<fin>, e.g. 100:010 (repeatable)")
    evolve.add_argument("--occupation", action="append", help="initial bitstring (repeatable)")
    evolve.add_argument("--site", type=int, help="single site for --occupation")
    evolve.add_argument("--sites-all", dest="sites_all", action="store_true", help="every site for --occupation")
    evolve.add_argument("--magnetization", action="append", help="initial bitstring (repeatable)")
    evolve.add_argument("--tmin", type=float, default=0.0)
    evolve.add_argument("--tmax", type=float, default=10.0)
    evolve.add_argument("--samples", type=int, default=400)

    oracle = commands.add_parser("oracle", parents=[shared], help="exact diagonalization")
    oracle.add_argument("--beta", type=float, action="append", help="inverse temperature (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    logger = logging.getLogger(__name__)
    logger.info(f"Starting '{args.command}' ({len(COMMAND_HANDLERS)} commands available)")
    return route_command(args)


if __name__ == '__main__':
    sys.exit(main())
