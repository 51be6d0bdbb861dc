#
# Copyright (c) 2023 Commonwealth Scientific and Industrial Research Organisation (CSIRO). All rights reserved.
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file. See the AUTHORS file for names of contributors.
#
"""
Command line surface: every pipeline stage as a subcommand working on PGM
and CONN files, plus training, inference, evaluation and the ablation runs.

Exit codes: 0 success, 1 usage error, 2 malformed input, 3 numerical failure.
"""
import os
import sys
from argparse import ArgumentParser
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .cio import LocalIOAdapter
from .codec import decode_connectivity, encode_connectivity, extract_edge_mask
from .config import Config, append_train_arguments, load_train_config, train_overrides, verify_file
from .itypes import AggregationMode, BiconError, CheckpointMismatch, InvalidInput, MalformedFile
from .itypes import NumericalFailure, UnpairedFiles, UsageError, VariantMismatch
from .logger import logger, set_level, sys_logger
from .loss import LossWeights, bicon_total_loss, connectivity_consistency_loss, get_loss_hook, loss_hook_names
from .metrics import evaluate, evaluate_corpus
from .ops import aggregate, bilateral_vote
from .pipeline import REPORT_COLUMNS, Trainer, generate_dataset, infer, run_ablation, run_weight_sweep

PROG = 'bicon-sod'

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

EVAL_COLUMNS = ['name', 'mae', 'f_ave', 'e_m']
TRAIN_LOG_COLUMNS = ['epoch', 'loss']

class _ArgumentParser(ArgumentParser):
    """ArgumentParser reporting usage errors as exceptions instead of exiting with 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

#### argument types

def parse_weights(value: str) -> LossWeights:
    parts = value.split(',')
    try:
        if len(parts) != 2:
            raise ValueError(f"expected 'w1,w2', got '{value}'")
        return LossWeights(w1=float(parts[0]), w2=float(parts[1]))
    except (ValueError, ValidationError) as err:
        raise UsageError(f"cannot parse weights '{value}': {err}")

def parse_seeds(value: str) -> List[int]:
    try:
        return [int(s) for s in value.split(',') if s.strip()]
    except ValueError:
        raise UsageError(f"cannot parse seeds '{value}', expected e.g. '0,1,2'")

#### pipeline stages

def cmd_encode(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    io.write_conn(args['output'], encode_connectivity(io.read_mask(args['input'])))
    return EXIT_OK

def cmd_decode(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    grid = io.read_conn(args['input'])
    if np.any((grid != 0.0) & (grid != 1.0)):
        logger.warning("decode: '%s' is not binary, thresholding at 0.5", args['input'])
        grid = (grid >= 0.5).astype(np.float64)
    io.write_mask(args['output'], decode_connectivity(grid))
    return EXIT_OK

def cmd_edges(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    io.write_mask(args['output'], extract_edge_mask(encode_connectivity(io.read_mask(args['input']))))
    return EXIT_OK

def cmd_bv(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    io.write_conn(args['output'], bilateral_vote(io.read_conn(args['input'])))
    return EXIT_OK

def cmd_aggregate(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    mode = AggregationMode(args['mode'])
    edges = None
    if mode == AggregationMode.DECOUPLED:
        if not args['edges']:
            raise UsageError("aggregate: '--mode decoupled' requires '--edges'")
        edges = io.read_mask(args['edges'])
    io.write_map(args['output'], aggregate(io.read_conn(args['input']), mode, edges))
    return EXIT_OK

def cmd_loss(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    weights = args['weights'] or LossWeights()
    conn = io.read_conn(args['pred'])
    gt = io.read_mask(args['gt'])
    conn_gt = encode_connectivity(gt)
    value, _ = bicon_total_loss(conn, conn_gt, gt, weights, get_loss_hook(args['optional_loss']),
                                decouple=not args['no_decouple'])
    print(weights)
    for name, v in value.terms().items():
        if name != 'saliency':
            print(f"{name} {v:.6f}")
    if args['emit_maps']:
        consistency, _ = connectivity_consistency_loss(conn, bilateral_vote(conn), conn_gt, weights)
        conmap, bimap = consistency.maps.per_pixel()
        top = max(float(conmap.max()), float(bimap.max()))
        if top > 0.0:
            conmap, bimap = conmap / top, bimap / top
        io.write_map(os.path.join(args["emit_maps"], "conmap.pgm"), conmap)
        io.write_map(os.path.join(args["emit_maps"], "bimap.pgm"), bimap)
    return EXIT_OK

#### evaluation

def cmd_eval(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    preds = io.list_images(args['pred_dir'])
    gts = io.list_images(args['gt_dir'])
    unpaired = sorted(set(preds) ^ set(gts))
    if unpaired:
        raise UnpairedFiles(unpaired)
    if not preds:
        raise InvalidInput(f"no '.pgm' files in '{args['pred_dir']}'")
    rows = []
    pairs = []
    for name in preds:
        pred = io.read_map(os.path.join(args['pred_dir'], name))
        gt = io.read_mask(os.path.join(args['gt_dir'], name))
        report = evaluate(pred, gt)
        rows.append(dict(name=name, **report.to_dict()))
        pairs.append((pred, gt))
    mean = evaluate_corpus(pairs)
    rows.append(dict(name='mean', **mean.to_dict()))
    io.write_report(args['report'], EVAL_COLUMNS, rows)
    print(f"mae {mean.mae:.6f} f_ave {mean.f_ave:.6f} e_m {mean.e_m:.6f} n {mean.n_images}")
    return EXIT_OK

#### training and inference

def cmd_train(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    overrides = train_overrides(args)
    if args['resume']:
        trainer = Trainer.load(io, args['resume'])
        changed = {k: v for k, v in overrides.items() if v is not None}
        if changed:
            trainer.reconfigure(**changed)
        logger.info("train: resuming '%s' at epoch %d", args['resume'], trainer.epoch)
    else:
        trainer = Trainer(load_train_config(args['config'], overrides))
    cfg = trainer.config
    train, test = generate_dataset(cfg.seed, cfg.n_train, cfg.n_test, cfg.image_size)
    history = trainer.fit(train)
    trainer.save(io, args['checkpoint'])
    log = [dict(epoch=i + 1, loss=v) for i, v in enumerate(history.epoch_losses)]
    io.write_report(args['log'], TRAIN_LOG_COLUMNS, log)
    report = trainer.evaluate(test)
    print(f"mae {report.mae:.6f} f_ave {report.f_ave:.6f} e_m {report.e_m:.6f} n {report.n_images}")
    return EXIT_OK

def cmd_infer(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    config = load_train_config(args['config']) if args['config'] else None
    trainer = Trainer.load(io, args['checkpoint'], config)
    smap = infer(trainer.model, io.read_map(args['image']), use_bv=not args['no_bv'])
    io.write_map(args['output'], smap)
    if args['gt']:
        report = evaluate(smap, io.read_mask(args['gt']))
        print(f"mae {report.mae:.6f} f_ave {report.f_ave:.6f} e_m {report.e_m:.6f}")
    return EXIT_OK

def cmd_ablate(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    base = load_train_config(args['config'], train_overrides(args))
    rows = run_ablation(base, args['presets'], args['seeds'])
    io.write_report(args['report'], REPORT_COLUMNS, [r.to_row() for r in rows])
    return EXIT_OK

def cmd_sweep_weights(args: Dict[str, Any], io: LocalIOAdapter) -> int:
    base = load_train_config(args['config'], train_overrides(args))
    rows = run_weight_sweep(base, args['seeds'])
    io.write_report(args['report'], REPORT_COLUMNS, [r.to_row() for r in rows])
    return EXIT_OK

#### parser

def _add_command(sub, name: str, handler: Callable[[Dict[str, Any], LocalIOAdapter], int], help: str) -> ArgumentParser:
    ap = sub.add_parser(name, help=help, description=help)
    ap.set_defaults(func=handler)
    return ap

def _add_train_flags(ap: ArgumentParser) -> None:
    ap.add_argument("--config", metavar="FILE", type=verify_file, help="key=value training config file")
    append_train_arguments(ap)

def build_parser() -> ArgumentParser:
    ap = _ArgumentParser(prog=PROG, description='Bidirectional connectivity tools for salient object detection.')
    Config.add_arguments(ap)
    sub = ap.add_subparsers(dest='command', metavar='COMMAND', required=True)

    p = _add_command(sub, 'encode', cmd_encode, "Saliency mask (PGM) to connectivity mask (CONN)")
    p.add_argument('input')
    p.add_argument('output')

    p = _add_command(sub, 'decode', cmd_decode, "Connectivity mask (CONN) to saliency mask (PGM)")
    p.add_argument('input')
    p.add_argument('output')

    p = _add_command(sub, 'edges', cmd_edges, "Edge mask (PGM) of a saliency mask (PGM)")
    p.add_argument('input')
    p.add_argument('output')

    p = _add_command(sub, 'bv', cmd_bv, "Bilateral voting on a Conn map")
    p.add_argument('input')
    p.add_argument('output')

    p = _add_command(sub, 'aggregate', cmd_aggregate, "Collapse a Bicon map to a saliency map (PGM)")
    p.add_argument('--mode', choices=[m.value for m in AggregationMode], default=AggregationMode.GLOBAL.value,
                   help="aggregation mode [global]")
    p.add_argument('--edges', metavar='PGM', help="edge mask, required by '--mode decoupled'")
    p.add_argument('input')
    p.add_argument('output')

    p = _add_command(sub, 'loss', cmd_loss, "Print the Bicon loss of a Conn map against a saliency mask")
    p.add_argument('--weights', metavar='W1,W2', type=parse_weights, help="consistency weights [0.8,0.2]")
    p.add_argument('--optional-loss', metavar='NAME', choices=loss_hook_names(), help="optional loss hook")
    p.add_argument('--no-decouple', action='store_true', help="leave out the edge-decoupled term")
    p.add_argument('--emit-maps', metavar='DIR', help="write per-pixel conmap.pgm and bimap.pgm to DIR")
    p.add_argument('pred')
    p.add_argument('gt')

    p = _add_command(sub, 'eval', cmd_eval, "MAE, mean F-measure and E-measure over paired directories")
    p.add_argument('--report', metavar='CSV', default='eval.csv', help="report file [eval.csv]")
    p.add_argument('pred_dir')
    p.add_argument('gt_dir')

    p = _add_command(sub, 'train', cmd_train, "Train the toy model on the synthetic dataset")
    _add_train_flags(p)
    p.add_argument('--checkpoint', metavar='NPZ', default='model.npz', help="checkpoint to write [model.npz]")
    p.add_argument('--log', metavar='CSV', default='train_log.csv', help="per-epoch loss log [train_log.csv]")
    p.add_argument('--resume', metavar='NPZ', help="continue training from this checkpoint")

    p = _add_command(sub, 'infer', cmd_infer, "Saliency map of an image from a trained checkpoint")
    p.add_argument('--checkpoint', metavar='NPZ', required=True, help="trained checkpoint")
    p.add_argument('--config', metavar='FILE', type=verify_file, help="config whose hash must match the checkpoint")
    p.add_argument('--no-bv', action='store_true', help="skip bilateral voting")
    p.add_argument('--gt', metavar='PGM', help="ground truth mask; prints metrics of the result")
    p.add_argument('image')
    p.add_argument('output')

    p = _add_command(sub, 'ablate', cmd_ablate, "Train and score every ablation preset")
    _add_train_flags(p)
    p.add_argument('--presets', metavar='NAMES', type=lambda s: [n for n in s.split(',') if n],
                   help="comma separated preset names [all]")
    p.add_argument('--seeds', metavar='SEEDS', type=parse_seeds, help="comma separated seeds [config seed]")
    p.add_argument('--report', metavar='CSV', default='ablation.csv', help="report file [ablation.csv]")

    p = _add_command(sub, 'sweep-weights', cmd_sweep_weights, "Full Bicon loss over w2 = 0.0 .. 0.9")
    _add_train_flags(p)
    p.add_argument('--seeds', metavar='SEEDS', type=parse_seeds, help="comma separated seeds [config seed]")
    p.add_argument('--report', metavar='CSV', default='sweep.csv', help="report file [sweep.csv]")
    return ap

def exit_code(err: BaseException) -> int:
    if isinstance(err, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(err, (MalformedFile, InvalidInput, UnpairedFiles, CheckpointMismatch)):
        return EXIT_INPUT
    return EXIT_USAGE

def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = vars(build_parser().parse_args(argv))
        cfg = Config(args)
        set_level(cfg.LOG_LEVEL)
        handler = args.pop('func')
        sys_logger.debug("%s %s with %s", PROG, args.pop('command'), args)
        return handler(args, cfg.IO_ADAPTER)
    except (UsageError, VariantMismatch) as err:
        sys_logger.error("%s", err)
        return EXIT_USAGE
    except BiconError as err:
        sys_logger.error("%s", err)
        return exit_code(err)
    except Exception as err:
        sys_logger.exception(err)
        return EXIT_USAGE

def run():
    sys.exit(main())
