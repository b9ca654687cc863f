# coding: utf-8
# @Author: bgtech
"""
共识实验室命令行
  python cli.py generate  --family lz --n 400 --seed 1 --out graph.json
  python cli.py weigh     --graph graph.json --scheme angular --epsilon 0.5 --out weights.json
  python cli.py analyze   --weights weights.json --method auto --out report.json
  python cli.py simulate  --weights weights.json --x0 gaussian --seed 7 --out run.json
  python cli.py continuum --n 100 --epsilon 0.1 --out gap.json
  python cli.py sweep     --preset fig3 --jobs 4 --out report/sweeps/fig3
  python cli.py sweep     --preset fig8 --samples 5 --out report/sweeps/fig8
  python cli.py draw      --n 400 --seed 1 --out report/examples
"""

import argparse
import sys
from typing import List, Optional

from common.config import get_config
from common.consensus_sim import initial_state, run_consensus
from common.continuum import continuum_report
from common.graph_core import FAMILIES, generate, generate_connected
from common.harness import (
    EXAMPLE_FAMILIES, emit_example_graphs, emit_outputs, load_experiment_configs, preset_names, run_sweep,
)
from common.log import info, error
from common.serialization import load_graph, load_weights, save_graph, save_weights, write_json
from common.spectral import convergence_rate
from common.weights import WEIGHT_SCHEMES, AxisWeights, build_weights, support_matches


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(',') if x.strip()]


def _float_list(text: str) -> List[float]:
    return [float(x) for x in text.split(',') if x.strip()]


def cmd_generate(args) -> int:
    if args.connected:
        g, resamples = generate_connected(args.family, args.n, args.seed, args.dims)
    else:
        g, resamples = generate(args.family, args.n, args.seed, args.dims), 0
    save_graph(args.out, g)
    info(f"生成 {args.family} 图: N={g.n}，边数={len(g.edges)}，连通={g.connected}，重采样={resamples}")
    return 0


def cmd_weigh(args) -> int:
    g = load_graph(args.graph)
    axis = AxisWeights(tuple(args.a), tuple(args.c)) if args.a else None
    W = build_weights(args.scheme, g, epsilon=args.epsilon, self_weight=args.self_weight,
                      alpha=args.alpha, axis=axis)
    save_weights(args.out, W)
    info(f"权重方案 {W.scheme}: N={W.n}，非零元={W.matrix.nnz}")
    return 0


def cmd_analyze(args) -> int:
    W = load_weights(args.weights)
    report = convergence_rate(W, method=args.method)
    payload = report.to_dict()
    payload['two_sided_rate'] = report.two_sided_rate
    if args.graph:
        g = load_graph(args.graph)
        payload['graph'] = {'n': g.n, 'connected': g.connected, 'support_on_edges': support_matches(W, g)}
    write_json(args.out, payload)
    return 0


def cmd_simulate(args) -> int:
    W = load_weights(args.weights)
    x0 = initial_state(args.x0, W.n, args.seed)
    run = run_consensus(W, x0, tol=args.tol, max_iter=args.max_iter, log_stride=args.log_stride)
    write_json(args.out, run.to_dict())
    return 0 if run.converged else 1


def cmd_continuum(args) -> int:
    write_json(args.out, continuum_report(args.n, args.epsilon, args.dims))
    return 0


def cmd_sweep(args) -> int:
    overrides = {'jobs': args.jobs, 'output_dir': args.out, 'samples': args.samples, 'sizes': args.sizes}
    failed = 0
    for config in load_experiment_configs(args.preset, args.config, overrides):
        rows = run_sweep(config)
        if not rows:
            info(f"实验 {config.name} 没有结果行")
            continue
        emit_outputs(rows, config)
        failed += sum(1 for r in rows if not r.ok)
    return 1 if failed else 0


def cmd_draw(args) -> int:
    emit_example_graphs(args.n, args.seed, args.out, epsilon=args.epsilon, families=args.families)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="非对称权重共识协议实验室",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help="生成图")
    p.add_argument('--family', choices=FAMILIES, required=True)
    p.add_argument('--n', type=int, default=0, help="节点数（格点图可由--dims给出）")
    p.add_argument('--dims', type=_int_list, help="格点规格，如 4,5")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--connected', action='store_true', help="不连通时以seed+offset重采样")
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('weigh', help="为图构造权重矩阵")
    p.add_argument('--graph', required=True)
    p.add_argument('--scheme', choices=WEIGHT_SCHEMES + ('asymmetric',), required=True)
    p.add_argument('--epsilon', type=float, default=get_config('harness.epsilon', default=0.5))
    p.add_argument('--self-weight', type=float, default=0.0)
    p.add_argument('--alpha', type=float, help="均匀基线的α，缺省 1/(最大度+1)")
    p.add_argument('--a', type=_float_list, help="格点轴向权重 a_d，如 0.2 或 0.1,0.15")
    p.add_argument('--c', type=_float_list, help="格点轴向权重 c_d")
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_weigh)

    p = sub.add_parser('analyze', help="计算本质谱半径与收敛速率")
    p.add_argument('--weights', required=True)
    p.add_argument('--graph')
    p.add_argument('--method', choices=('auto', 'dense', 'iterative'), default='auto')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('simulate', help="运行共识迭代")
    p.add_argument('--weights', required=True)
    p.add_argument('--x0', default='gaussian', help="gaussian | indices | file:<path>")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--tol', type=float)
    p.add_argument('--max-iter', type=int)
    p.add_argument('--log-stride', type=int)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('continuum', help="离散与Sturm-Liouville μ2比较")
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--epsilon', type=float, required=True)
    p.add_argument('--dims', type=_int_list)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_continuum)

    p = sub.add_parser('sweep', help="运行实验预设或自定义实验")
    p.add_argument('--preset', choices=preset_names() + ['custom'], default='custom')
    p.add_argument('--config', help="实验配置JSON（字段同ExperimentConfig）")
    p.add_argument('--jobs', type=int)
    p.add_argument('--samples', type=int, help="覆盖每个N的样本数")
    p.add_argument('--sizes', type=_int_list, help="覆盖节点数列表，如 100,400")
    p.add_argument('--out', help="输出目录")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('draw', help="绘制各几何图族的示例图与g(θ)")
    p.add_argument('--n', type=int, default=400, help="节点数（lz要求完全平方数）")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--epsilon', type=float, default=get_config('harness.epsilon', default=0.5))
    p.add_argument('--families', nargs='+', choices=EXAMPLE_FAMILIES, default=list(EXAMPLE_FAMILIES))
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_draw)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        error(f"{args.command} 执行失败: {type(e).__name__}: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
