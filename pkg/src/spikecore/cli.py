"""Command-line entry point: compile, run, simulate, diff, stats, inspect-memory.

Exit codes: 0 success, 2 usage, 3 validation/format, 4 capacity or region
overflow, 5 divergence found by diff.  Errors print one machine-parseable
line to stderr.  All outputs are byte-deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import compiler, memimage, metrics, network
from .errors import (
    CapacityExceeded,
    ImageFormatError,
    InputOutOfRange,
    InvalidCostModel,
    NetworkSyntaxError,
    NetworkValidationError,
    NoSuchSynapse,
    RasterSyntaxError,
    SchemaError,
    SynapseRegionOverflow,
    TopologyMismatch,
    UnknownKey,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_CAPACITY = 4
EXIT_DIVERGENCE = 5

_VALIDATION_ERRORS = (
    NetworkSyntaxError,
    NetworkValidationError,
    SchemaError,
    RasterSyntaxError,
    UnknownKey,
    NoSuchSynapse,
    InputOutOfRange,
    ImageFormatError,
    InvalidCostModel,
    OSError,
)
_CAPACITY_ERRORS = (CapacityExceeded, SynapseRegionOverflow, TopologyMismatch)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise SchemaError("$", "run configuration must be a JSON object")
    return raw


def _topology_from(config: dict, arg: str | None) -> compiler.Topology:
    if arg:
        parts = arg.split(",")
        if len(parts) != 3:
            raise SchemaError("--topology", "expected cores_per_board,boards_per_server,servers")
        return compiler.Topology(int(parts[0]), int(parts[1]), int(parts[2]))
    raw = config.get("topology", {})
    return compiler.Topology(
        cores_per_board=int(raw.get("cores_per_board", 32)),
        boards_per_server=int(raw.get("boards_per_server", 8)),
        servers=int(raw.get("servers", 5)),
    )


def _cost_model_from(config: dict) -> metrics.CostModel:
    return metrics.CostModel.from_mapping(config.get("cost_model", {}))


def _read_network(path: str) -> network.ValidatedNetwork:
    return network.validate_network(network.parse_network(Path(path).read_text(encoding="utf-8")))


def _read_raster(path: str) -> network.SpikeRaster:
    return network.SpikeRaster.parse(Path(path).read_text(encoding="utf-8"))


def _emit_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _run_output(result, steps: int, args, cost_model, system=None) -> str:
    parts = [result.raster.serialize()]
    if getattr(args, "membranes", False) and result.membrane_traces is not None:
        for t, snap in enumerate(result.membrane_traces):
            for key in sorted(snap):
                parts.append(f"# membrane {t} {key} {snap[key]}\n")
    if getattr(args, "counters", False) and result.counters is not None:
        extra = {}
        if system is not None:
            entries = sum(
                memimage.image_stats(img).valid_entries for img in system.images
            )
            allocated = sum(img.synapse_rows_used * 8 for img in system.images)
            extra = {
                "neurons": sum(img.num_neurons for img in system.images),
                "axons": sum(img.num_axons for img in system.images),
                "density": (entries / allocated) if allocated else 0.0,
            }
        text = metrics.report(result, steps, model=cost_model, **extra)
        parts.extend(f"# {line}\n" for line in text.rstrip("\n").split("\n"))
    return "".join(parts)


def cmd_compile(args) -> int:
    net = _read_network(args.net)
    config = _load_config(args.config)
    geometry = memimage.parse_geometry(args.geometry) if args.geometry else memimage.MemoryGeometry()
    topology = _topology_from(config, args.topology)
    system = compiler.compile_system(
        net,
        cores=args.cores,
        capacity=args.capacity,
        geometry=geometry,
        topology=topology,
        packed=not args.naive,
    )
    if system.cores == 1:
        blob = memimage.emit_image(system.images[0])
    else:
        blob = compiler.emit_pack(system)
    Path(args.output).write_bytes(blob)
    for image in system.images:
        st = memimage.image_stats(image)
        sys.stdout.write(
            f"core {image.core_id}: neurons={st.neuron_count} axons={st.axon_count}"
            f" synapse_rows={st.synapse_rows_used} entries={st.valid_entries}"
            f" density={st.density:.6f}\n"
        )
    sys.stdout.write(f"wrote {args.output} ({len(blob)} bytes)\n")
    return EXIT_OK


def cmd_run(args) -> int:
    from .router import System

    system = compiler.load_any(Path(args.img).read_bytes())
    config = _load_config(args.config)
    raster = _read_raster(args.spikes)
    runner = System(system, seed=args.seed)
    result = runner.run(raster, args.steps, collect_membranes=args.membranes)
    _emit_text(
        _run_output(result, args.steps, args, _cost_model_from(config), system=system),
        args.output,
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .oracle import oracle_run

    net = _read_network(args.net)
    raster = _read_raster(args.spikes)
    result = oracle_run(net, raster, args.steps, seed=args.seed, collect_membranes=args.membranes)
    _emit_text(_run_output(result, args.steps, args, None), args.output)
    return EXIT_OK


def cmd_diff(args) -> int:
    from .oracle import oracle_run
    from .router import System

    net = _read_network(args.net)
    system = compiler.load_any(Path(args.img).read_bytes())
    raster = _read_raster(args.spikes)

    engine = System(system, seed=args.seed).run(raster, args.steps, collect_membranes=True)
    golden = oracle_run(net, raster, args.steps, seed=args.seed, collect_membranes=True)

    for t in range(args.steps):
        got = engine.raster.keys_at(t)
        want = golden.raster.keys_at(t)
        if got != want:
            sys.stdout.write(
                f"divergence at step {t}: engine={sorted(got)} oracle={sorted(want)}\n"
            )
            return EXIT_DIVERGENCE
        if engine.membrane_traces[t] != golden.membrane_traces[t]:
            diffs = [
                k
                for k in golden.membrane_traces[t]
                if golden.membrane_traces[t][k] != engine.membrane_traces[t].get(k)
            ]
            sys.stdout.write(f"divergence at step {t}: membranes differ at {sorted(diffs)[:5]}\n")
            return EXIT_DIVERGENCE
    sys.stdout.write(
        f"identical: {args.steps} steps, {len(golden.raster)} output spikes\n"
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.img:
        system = compiler.load_any(Path(args.img).read_bytes())
        for image in system.images:
            if system.cores > 1:
                sys.stdout.write(f"== core {image.core_id} ==\n")
            sys.stdout.write(memimage.image_stats(image).as_text())
        return EXIT_OK
    neurons, fanout = args.capacity_check
    geometry = memimage.parse_geometry(args.geometry) if args.geometry else memimage.MemoryGeometry()
    rep = compiler.analytical_footprint(
        neurons=neurons,
        mean_fanout=fanout,
        axons=args.axons,
        axon_fanout=args.axon_fanout,
        geometry=geometry,
    )
    sys.stdout.write(rep.as_text())
    return EXIT_OK


def cmd_inspect(args) -> int:
    system = compiler.load_any(Path(args.img).read_bytes())
    kind = "neuron" if args.neuron is not None else "axon"
    key = args.neuron if args.neuron is not None else args.axon
    for image in system.images:
        keys = image.neuron_keys if kind == "neuron" else image.axon_keys
        if key not in keys:
            continue
        local = keys.index(key)
        loc = image.locator(kind, local)
        flags = []
        if loc.is_padding:
            flags.append("padding")
        if loc.is_relay:
            flags.append("relay")
        sys.stdout.write(f"core {image.core_id} {kind} {key!r} local={local}\n")
        sys.stdout.write(
            f"locator: base_row={loc.base_row} row_count={loc.row_count}"
            f" model={loc.model_id} flags={','.join(flags) or '-'}\n"
        )
        for sid in image.entry_slot_ids(kind, local):
            valid, out, target, weight = memimage.decode_synapse(image.syn_rows.reshape(-1)[sid])
            row, slot = divmod(int(sid), memimage.SLOTS_PER_ROW)
            column = (row % 2) * memimage.SLOTS_PER_ROW + slot
            name = image.neuron_keys[target] if target < image.num_neurons else "-"
            mark = " [output]" if out else ""
            sys.stdout.write(
                f"  row {row} col {column} target {target} ({name}) weight {weight}{mark}\n"
            )
        return EXIT_OK
    raise UnknownKey(kind, key)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikecore",
        description="Compile and execute event-driven spiking networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a network document into a memory image")
    p.add_argument("--net", required=True, help="network document (JSON)")
    p.add_argument("--cores", type=int, default=1, help="number of cores to partition over")
    p.add_argument("--capacity", type=int, default=None, help="neurons per core (default: even split)")
    p.add_argument("--geometry", default=None, help="memory size, e.g. 8GiB, 64MiB, 4096rows")
    p.add_argument("--topology", default=None, help="cores_per_board,boards_per_server,servers")
    p.add_argument("--naive", action="store_true", help="disable segment sharing in the packer")
    p.add_argument("--config", default=None, help="run configuration JSON")
    p.add_argument("-o", "--output", required=True, help="output image/pack path")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="execute a compiled image on the event-driven runtime")
    p.add_argument("--img", required=True)
    p.add_argument("--spikes", required=True, help="input spike-train file")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--membranes", action="store_true", help="append membrane traces as comments")
    p.add_argument("--counters", action="store_true", help="append access/energy report as comments")
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--output", default=None, help="write the output raster here (default stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="execute a network on the golden-model simulator")
    p.add_argument("--net", required=True)
    p.add_argument("--spikes", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--membranes", action="store_true")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diff", help="run both paths and report the first divergent step")
    p.add_argument("--net", required=True)
    p.add_argument("--img", required=True)
    p.add_argument("--spikes", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("stats", help="image statistics or analytical capacity footprint")
    p.add_argument("--img", default=None)
    p.add_argument(
        "--capacity-check",
        nargs=2,
        type=int,
        metavar=("NEURONS", "FANOUT"),
        default=None,
        help="analytical footprint for a synthetic network (no allocation)",
    )
    p.add_argument("--axons", type=int, default=0)
    p.add_argument("--axon-fanout", type=int, default=0)
    p.add_argument("--geometry", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("inspect-memory", help="print one source's locator and entries")
    p.add_argument("--img", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--neuron", default=None)
    group.add_argument("--axon", default=None)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "stats" and not args.img and not args.capacity_check:
        parser.error("stats needs --img or --capacity-check")
    if getattr(args, "steps", 0) < 0:
        parser.error("--steps must be >= 0")
    try:
        return args.func(args)
    except _CAPACITY_ERRORS as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_CAPACITY
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
