import argparse
import os
import sys
from datetime import datetime
from typing import Dict, List, Optional

from apps.results_app.results_dashboard import ResultsDashboard
from neuro.analysis import (classify_arrivals, cutoff_rate, firing_windows,
                            isi_series, min_firing_potential, save_windows_csv)
from neuro.encoder import replay
from neuro.lif import LifTrace, NeuronParams, run
from neuro.measurement_filter import FilterConfig, MeasurementFilter
from pipeline.manager import PipelineManager
from pipeline.transport import parse_ports
from scenario.report import emit_report
from scenario.runner import run_gate, run_scenario, run_world, threshold_search
from scenario.script import ScenarioScript
from scenario.world import WorldModel
from utils.config import load_config, load_params_file
from utils.csv_writer import save_to_csv
from utils.logger import setup_logger
from utils.parser import InputParser

logger = setup_logger('main')


def _params(args, config: Dict) -> NeuronParams:
    overrides = dict(config['neuron'])
    overrides.update(load_params_file(getattr(args, 'params', None)))
    return NeuronParams.from_dict(overrides)


def _filter_cfg(args, config: Dict) -> FilterConfig:
    data = dict(config['filter'])
    if getattr(args, 'max_hits', None) is not None:
        data['max_hits'] = args.max_hits
    if getattr(args, 'max_error', None) is not None:
        data['max_error'] = args.max_error
    return FilterConfig.from_dict(data)


def _out_dir(args, config: Dict, kind: str) -> str:
    if args.out:
        return args.out
    stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    return os.path.join(config['scenario']['out_dir'], f"{kind}_{stamp}")


def _apply_sensor_flags(args, config: Dict):
    if getattr(args, 'period_ms', None) is not None:
        config['sensor']['period_ms'] = args.period_ms
    if getattr(args, 'noise_mm', None) is not None:
        config['sensor']['noise_mm'] = args.noise_mm
    if getattr(args, 'seed', None) is not None:
        config['sensor']['seed'] = args.seed


def cmd_encode(args, config: Dict) -> int:
    measurements = InputParser.parse_tof_csv(args.tof_csv)
    spikes = replay(measurements, horizon=args.horizon)
    save_to_csv(({'t_ms': int(e.t) if float(e.t).is_integer() else e.t} for e in spikes), ['t_ms'], args.out,
                {'source': args.tof_csv, 'measurements': len(measurements)})
    print(f"{len(spikes)} спайков -> {args.out}")
    return 0


def cmd_filter(args, config: Dict) -> int:
    cfg = _filter_cfg(args, config)
    measurement_filter = MeasurementFilter(cfg)
    rows = []
    for t_ms, raw in InputParser.parse_raw_csv(args.raw_csv):
        emitted = measurement_filter.push(raw)
        if emitted is not None:
            rows.append({'t_ms': t_ms, 'tof_us': emitted})
    save_to_csv(rows, ['t_ms', 'tof_us'], args.out,
                {'max_hits': cfg.max_hits, 'max_error': cfg.max_error, 'consumed': measurement_filter.consumed})
    print(f"{measurement_filter.consumed} измерений, {len(rows)} достоверных -> {args.out}")
    return 0


def cmd_analyze(args, config: Dict) -> int:
    params = _params(args, config)
    train = InputParser.parse_spike_csv(args.spikes)
    if args.trace:
        trace = LifTrace.from_csv(args.trace)
    else:
        horizon = args.horizon or (max((e.t for e in train), default=0.0) + 1000.0)
        _, trace = run(params, train, horizon)
    windows = firing_windows(trace, params, train)
    outcomes = classify_arrivals(trace, params, train, windows)
    out_dir = _out_dir(args, config, 'analyze')
    save_windows_csv(windows, os.path.join(out_dir, 'windows.csv'), {'spikes': args.spikes})
    isi_series(train).to_csv(os.path.join(out_dir, 'isi.csv'), {'spikes': args.spikes})
    if not args.trace:
        trace.to_csv(os.path.join(out_dir, 'trace.csv'))
    fired_in_window = sum(1 for o in outcomes if o.fired and o.in_window)
    print(f"Окон: {len(windows)}, приходов: {len(outcomes)}, сработавших в окне: {fired_in_window} -> {out_dir}")
    return 0


def cmd_minfire(args, config: Dict) -> int:
    v_min = min_firing_potential(_params(args, config))
    print(f"{v_min:.4f}")
    return 0


def cmd_cutoff(args, config: Dict) -> int:
    rate = cutoff_rate(_params(args, config), horizon=config['scenario']['cutoff_horizon_ms'])
    print(f"{rate:.3f}")
    return 0


def cmd_pipeline(args, config: Dict) -> int:
    _apply_sensor_flags(args, config)
    if args.ports:
        config['pipeline']['ports'] = parse_ports(args.ports)
    script = ScenarioScript.from_json(args.script) if args.script else None
    world = WorldModel.from_dict(InputParser.load_json(args.world), config['world']) if args.world else None
    if script is None and world is None:
        raise ValueError("Нужен --script или --world")
    manager = PipelineManager(config, _params(args, config), _filter_cfg(args, config))
    if args.sim_clock:
        result = manager.run_sim(script, world, args.horizon)
    else:
        result = manager.run_realtime(script, world, args.horizon)
    out_dir = _out_dir(args, config, 'pipeline')
    result.run_log.to_csv(os.path.join(out_dir, 'run_log.csv'), {'sim_clock': args.sim_clock})
    save_to_csv(({'t_ms': int(e.t)} for e in result.robot_spikes), ['t_ms'],
                os.path.join(out_dir, 'robot_spikes.csv'))
    print(f"Робот получил {len(result.robot_spikes)} спайков; счётчики: {result.counters} -> {out_dir}")
    return 0


def cmd_scenario(args, config: Dict) -> int:
    _apply_sensor_flags(args, config)
    params = _params(args, config)
    cfg = _filter_cfg(args, config)
    if args.action == 'threshold':
        boundary = threshold_search(params, args.lo, args.hi, cfg, config, args.resolution)
        print(f"{boundary:.2f}")
        return 0

    out_dir = _out_dir(args, config, args.action)
    if args.action == 'run':
        if not args.script:
            raise ValueError("scenario run требует --script")
        report = run_scenario(ScenarioScript.from_json(args.script), params, cfg, config)
    elif args.action == 'world':
        if args.world:
            world = WorldModel.from_dict(InputParser.load_json(args.world), config['world'])
        else:
            world = WorldModel.closed_arena(speed_cm_s=config['world']['speed_cm_s'],
                                            turn_rate_deg_s=config['world']['turn_rate_deg_s'])
        report = run_world(world, params, cfg, args.horizon or 60000.0, config)
    else:  # fig3, gate
        report, windows, series = run_gate(params, config=config)
        save_windows_csv(windows, os.path.join(out_dir, 'windows.csv'))
        series.to_csv(os.path.join(out_dir, 'isi.csv'))
    emit_report(report, out_dir)
    print(f"Выходных спайков: {int(report.out_spike.sum())} -> {out_dir}")
    return 0


def cmd_dashboard(args, config: Dict) -> int:
    ResultsDashboard(args.out, config).run(port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Спайковый детектор препятствий")
    parser.add_argument('--config', default='config.yaml', help="YAML с настройками")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('encode', help="ToF CSV -> поток спайков инжектора")
    p.add_argument('--tof-csv', required=True)
    p.add_argument('--horizon', type=float)
    p.add_argument('--out', default='spikes.csv')
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser('filter', help="сырые измерения -> достоверные")
    p.add_argument('--raw-csv', required=True)
    p.add_argument('--max-hits', type=int)
    p.add_argument('--max-error', type=float)
    p.add_argument('--out', default='filtered.csv')
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser('analyze', help="окна срабатывания и ряд ISI")
    p.add_argument('--spikes', required=True)
    p.add_argument('--trace')
    p.add_argument('--horizon', type=float)
    p.add_argument('--params')
    p.add_argument('--out')
    p.set_defaults(func=cmd_analyze)

    for name, func, text in (('minfire', cmd_minfire, "минимальный потенциал срабатывания"),
                             ('cutoff', cmd_cutoff, "частота среза")):
        p = sub.add_parser(name, help=text)
        p.add_argument('--params')
        p.set_defaults(func=func)

    p = sub.add_parser('pipeline', help="три конечные точки: робот, мост, движок")
    p.add_argument('--script')
    p.add_argument('--world')
    p.add_argument('--ports', help="robot,bridge,engine")
    p.add_argument('--sim-clock', action='store_true')
    p.add_argument('--horizon', type=float)
    p.add_argument('--params')
    p.add_argument('--out')
    p.add_argument('--period-ms', type=float)
    p.add_argument('--noise-mm', type=float)
    p.add_argument('--seed', type=int)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser('scenario', help="эксперименты")
    p.add_argument('action', choices=['run', 'threshold', 'world', 'fig3', 'gate'])
    p.add_argument('--script')
    p.add_argument('--world')
    p.add_argument('--params')
    p.add_argument('--out')
    p.add_argument('--horizon', type=float)
    p.add_argument('--lo', type=float, default=10.0)
    p.add_argument('--hi', type=float, default=100.0)
    p.add_argument('--resolution', type=float, default=0.1)
    p.add_argument('--max-hits', type=int)
    p.add_argument('--max-error', type=float)
    p.add_argument('--period-ms', type=float)
    p.add_argument('--noise-mm', type=float)
    p.add_argument('--seed', type=int)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser('dashboard', help="веб-панель прогонов")
    p.add_argument('--out')
    p.add_argument('--port', type=int)
    p.set_defaults(func=cmd_dashboard)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    try:
        return args.func(args, config)
    except (ValueError, OSError, RuntimeError) as e:
        logger.error(f"Команда {args.command} завершилась ошибкой: {e}")
        print(f"Ошибка: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
