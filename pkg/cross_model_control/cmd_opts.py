import argparse
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.compose import CompositionMode
from cross_model_control.decode import DecodingMode
from cross_model_control.run_config import RunConfig, load_run_config
from cross_model_control.synthetic import TaskKind
from cross_model_control.tokenmap import MappingStrategy, VocabFormat
from cross_model_control.train import LossMask, OptimizerKind
from cross_model_control.util import EnumAction
from cross_model_control.util.funcs import parse_float_list, parse_int_list
from cross_model_control.vocab import TokenizerScheme

'''
To add a new command option, add a field to `RunConfig`
(run_config.py), then add the flag to one of the `add_*_args`
groups below. The flag's dest must be the field name.

Flags default to "not given" so that only the flags actually typed
override the `--config` file.
'''

# Only function from this file
# to be called by others
# is `run()`
__all__ = ['run',]

# region Argument groups

def add_common_args(cmd: ArgumentParser):
    cmd \
    .add_argument(
        '--config',
        type=Path,
        help='flat TOML run config, or the manifest.json of an earlier run to replay'
    )
    cmd \
    .add_argument(
        '--out-dir',
        type=Path,
        dest='out_dir',
        help='directory receiving every artifact and manifest.json'
    )
    cmd \
    .add_argument(
        '--seed',
        type=int,
        help='seed for data generation, initialization, batching and sampling'
    )
    cmd \
    .add_argument(
        '-v', '--verbose',
        action='count',
        dest='verbose',
        default=0,
        help='-v for progress logging, -vv for debug logging'
    )

def add_vocab_args(cmd: ArgumentParser, *, delta: bool = False):
    cmd \
    .add_argument(
        '--vocab',
        type=Path,
        help='vocabulary file of the template / user model'
    )
    if delta:
        cmd \
        .add_argument(
            '--delta-vocab',
            type=Path,
            dest='delta_vocab',
            help='vocabulary file of the delta model, when it differs from --vocab'
        )

def add_model_shape_args(cmd: ArgumentParser):
    cmd \
    .add_argument(
        '--arch',
        choices=('base', 'delta'),
        help='shape preset (base: 4 layers x 128, delta: 2 layers x 64)'
    )
    for name in ('context-len', 'd-model', 'n-layers', 'n-heads', 'd-ff'):
        cmd \
        .add_argument(
            f'--{name}',
            type=int,
            dest=name.replace('-', '_'),
            help=f'override the preset {name.replace("-", " ")}'
        )

def add_train_args(cmd: ArgumentParser):
    cmd \
    .add_argument(
        '--data',
        type=Path,
        help='training corpus (JSON lines)'
    )
    cmd \
    .add_argument(
        '--learning-rate', '--lr',
        type=float,
        dest='learning_rate',
    )
    cmd \
    .add_argument(
        '--batch-size',
        type=int,
        dest='batch_size',
    )
    cmd \
    .add_argument(
        '--epochs',
        type=int,
    )
    cmd \
    .add_argument(
        '--optimizer',
        type=OptimizerKind,
        action=EnumAction,
    )
    cmd \
    .add_argument(
        '--grad-clip',
        type=float,
        dest='grad_clip',
        help='max gradient norm'
    )
    cmd \
    .add_argument(
        '--loss-mask',
        type=LossMask,
        action=EnumAction,
        dest='loss_mask',
        help='which positions carry loss'
    )
    cmd \
    .add_argument(
        '--save-epochs',
        type=parse_int_list,
        dest='save_epochs',
        help='comma-separated epochs after which to also save the model, e.g. "2,4"'
    )
    cmd \
    .add_argument(
        '--progress',
        action='store_true',
        help='show a progress bar over epochs'
    )

def add_delta_args(cmd: ArgumentParser, *, many: bool = False):
    cmd \
    .add_argument(
        '--delta',
        type=Path,
        action='extend',
        nargs='+' if many else 1,
        help='delta checkpoint(s)' if many else 'delta checkpoint to start from (default: a fresh delta)'
    )
    cmd \
    .add_argument(
        '--no-logsoftmax-on-base',
        action='store_false',  # => default (flag not present) is True
        dest='logsoftmax_on_base',
        help='add the delta to raw base logits instead of log-probabilities'
    )

def add_composition_args(cmd: ArgumentParser):
    cmd \
    .add_argument(
        '--model',
        type=Path,
        help='user model checkpoint'
    )
    cmd \
    .add_argument(
        '--mapping',
        type=Path,
        help='token mapping from --vocab into --delta-vocab'
    )
    cmd \
    .add_argument(
        '--mode',
        type=CompositionMode,
        action=EnumAction,
        help='how the delta steers the user model'
    )
    cmd \
    .add_argument(
        '--alpha',
        type=float,
        help='strength of the delta adjustment'
    )
    cmd \
    .add_argument(
        '--antiexpert',
        type=Path,
        help='anti-expert checkpoint (proxy mode)'
    )

def add_generation_args(cmd: ArgumentParser):
    cmd \
    .add_argument(
        '--max-new-tokens',
        type=int,
        dest='max_new_tokens',
    )
    cmd \
    .add_argument(
        '--decoding',
        type=DecodingMode,
        action=EnumAction,
    )
    cmd \
    .add_argument(
        '--temperature',
        type=float,
    )
    cmd \
    .add_argument(
        '--top-k',
        type=int,
        dest='top_k',
    )
    cmd \
    .add_argument(
        '--stop',
        type=str,
        help='end generation once this text appears (kept in the output)'
    )
    cmd \
    .add_argument(
        '--incremental',
        action='store_true',
        help='re-encode only the unstable tail of the delta-side text each step'
    )
    cmd \
    .add_argument(
        '--format-pattern',
        type=str,
        dest='format_pattern',
        help='regular expression a compliant continuation matches from its start'
    )

# endregion Argument groups

def parse_args(argv: Sequence[str] | None = None) -> Namespace:
    '''
    Set up parser and use it.

    Returns:
        Namespace holding `task`, `config`, `verbose`
        and every flag given on the command line.
    '''
    top_level_parser = ArgumentParser(
        prog='cmc',
        description='Train a small delta model once and use it to steer'
                    ' other language models, across vocabularies.',
        usage="%(prog)s TASK [TASK OPTIONS]",
    )
    subparsers = top_level_parser.add_subparsers(dest='task', required=True)
    top_level_parser._positionals.title = "TASK"

    def add_task(name: str, description: str) -> ArgumentParser:
        cmd = subparsers \
            .add_parser(
                name,  # stored under args.task
                description=description,
                help=f"`%(prog)s {name} --help`",
                argument_default=argparse.SUPPRESS,
            )
        add_common_args(cmd)
        return cmd

    # gen-data
    gen_data_cmd = add_task('gen-data', "write a seeded synthetic corpus")
    gen_data_cmd \
    .add_argument(
        '--kind',
        type=TaskKind,
        action=EnumAction,
    )
    gen_data_cmd \
    .add_argument(
        '--size',
        type=int,
        help='number of examples (entities for forget-retain-facts)'
    )
    gen_data_cmd \
    .add_argument(
        '--forget-fraction',
        type=float,
        dest='forget_fraction',
    )
    gen_data_cmd \
    .add_argument(
        '--holdout-fraction',
        type=float,
        dest='holdout_fraction',
    )
    gen_data_cmd \
    .add_argument(
        '--plain',
        action='store_true',
        help='instruction data without the answer format (pretraining text)'
    )

    # build-vocab
    build_vocab_cmd = add_task('build-vocab', "build a tokenizer from corpora")
    build_vocab_cmd \
    .add_argument(
        '--corpus',
        type=Path,
        action='extend',
        nargs='+',
        help='JSON-lines corpora or plain text files'
    )
    build_vocab_cmd \
    .add_argument(
        '--scheme',
        type=TokenizerScheme,
        action=EnumAction,
    )
    build_vocab_cmd \
    .add_argument(
        '--vocab-size',
        type=int,
        dest='vocab_size',
        help='target size, special tokens included'
    )

    # pretrain / finetune
    pretrain_cmd = add_task('pretrain', "train a fresh model on a corpus")
    add_vocab_args(pretrain_cmd)
    add_model_shape_args(pretrain_cmd)
    add_train_args(pretrain_cmd)

    finetune_cmd = add_task('finetune', "continue training a model checkpoint")
    add_vocab_args(finetune_cmd)
    add_train_args(finetune_cmd)
    finetune_cmd \
    .add_argument(
        '--model',
        type=Path,
        help='checkpoint to fine-tune'
    )

    # train-delta / unlearn-delta
    for name, description in (
            ('train-delta', "train a delta against a frozen template model"),
            ('unlearn-delta', "train a delta that makes the template forget the forget split"),
    ):
        delta_cmd = add_task(name, description)
        add_vocab_args(delta_cmd)
        add_model_shape_args(delta_cmd)
        add_train_args(delta_cmd)
        add_delta_args(delta_cmd)
        delta_cmd \
        .add_argument(
            '--model',
            type=Path,
            help='template model checkpoint'
        )

    # map-vocab
    map_vocab_cmd = add_task('map-vocab', "map a user vocabulary into a delta vocabulary")
    add_vocab_args(map_vocab_cmd, delta=True)
    map_vocab_cmd \
    .add_argument(
        '--strategy',
        type=MappingStrategy,
        action=EnumAction,
    )
    map_vocab_cmd \
    .add_argument(
        '--format',
        type=VocabFormat,
        action=EnumAction,
        help='format of both vocabulary files'
    )
    map_vocab_cmd \
    .add_argument(
        '--strip-prefix',
        type=str,
        dest='strip_prefix',
        help='marker removed from the start of foreign tokens, e.g. "▁"'
    )
    map_vocab_cmd \
    .add_argument(
        '--report',
        action='store_true',
        help='print mapping statistics and the hardest mapped tokens'
    )

    # generate
    generate_cmd = add_task('generate', "steered generation")
    add_vocab_args(generate_cmd, delta=True)
    add_composition_args(generate_cmd)
    add_delta_args(generate_cmd)
    add_generation_args(generate_cmd)
    generate_cmd \
    .add_argument(
        '--prompt',
        type=str,
    )
    generate_cmd \
    .add_argument(
        '--prompts',
        type=Path,
        help='JSON-lines file whose records have a "prompt" field'
    )

    # analyze-shift
    shift_cmd = add_task('analyze-shift', "compare fine-tuning effects of two model families")
    add_vocab_args(shift_cmd)
    shift_cmd \
    .add_argument(
        '--data',
        type=Path,
        help='supervised corpus whose responses are analyzed'
    )
    for flag, help_text in (
            ('--model', 'vanilla model of the first family'),
            ('--tuned', 'fine-tuned model of the first family'),
            ('--other-model', 'vanilla model of the second family'),
            ('--other-tuned', 'fine-tuned model of the second family'),
            ('--other-vocab', 'vocabulary file of the second family'),
            ('--mapping', 'token mapping from --vocab into --other-vocab'),
    ):
        shift_cmd \
        .add_argument(
            flag,
            type=Path,
            dest=flag[2:].replace('-', '_'),
            help=help_text
        )
    shift_cmd \
    .add_argument(
        '--strategy',
        type=MappingStrategy,
        action=EnumAction,
        help='mapping strategy when no --mapping is given'
    )
    shift_cmd \
    .add_argument(
        '--epsilon',
        type=float,
        help='entropic regularization of the Sinkhorn divergence'
    )
    shift_cmd \
    .add_argument(
        '--sinkhorn-iters',
        type=int,
        dest='sinkhorn_iters',
    )
    shift_cmd \
    .add_argument(
        '--responses',
        type=int,
        help='number of responses of --data to analyze'
    )
    shift_cmd \
    .add_argument(
        '--heatmap-k',
        type=int,
        dest='heatmap_k',
        help='also export k-column heatmap matrices for the first response'
    )

    # eval
    eval_cmd = add_task('eval', "score steered models on a corpus")
    add_vocab_args(eval_cmd, delta=True)
    add_composition_args(eval_cmd)
    add_delta_args(eval_cmd, many=True)
    add_generation_args(eval_cmd)
    eval_cmd \
    .add_argument(
        '--data',
        type=Path,
        help='forget/retain corpus, or a supervised corpus scored with --format-pattern'
    )
    eval_cmd \
    .add_argument(
        '--alpha-grid',
        type=parse_float_list,
        dest='alpha_grid',
        help='comma-separated alphas, e.g. "0.5,0.75,1.0,1.5,2.0"'
    )
    eval_cmd \
    .add_argument(
        '--splits',
        type=lambda s: tuple(p.strip() for p in s.split(',') if p.strip()),
        help='comma-separated forget/retain splits to score'
    )

    return top_level_parser.parse_args(argv)

class Setup_Collection(NamedTuple):
    config: RunConfig
    verbosity: int

def setup_per_args(args: Namespace) -> Setup_Collection:
    ''' Merge the given flags over the config file into a `RunConfig`. '''
    overrides = vars(args).copy()
    task = overrides.pop('task')
    config_path = overrides.pop('config', None)
    verbosity = overrides.pop('verbose', 0)
    return Setup_Collection(load_run_config(task, config_path, overrides), verbosity)

def run(argv: Sequence[str] | None = None) -> Setup_Collection:
    args = parse_args(argv)
    return setup_per_args(args)
