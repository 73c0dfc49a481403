import sys
from math import ceil, floor
from shutil import get_terminal_size
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import colorama
import pandas as pd


def center_text(text: str, line_width: int, padding_char: str) -> str:
    '''
    If it must, centered text will be one char closer to the left side.

    >>> center_text(" map ", 11, '=')
    '=== map ==='
    '''
    total_padding_len = line_width - len(text)
    left_padding = padding_char * floor(total_padding_len / 2)
    right_padding = padding_char * ceil(total_padding_len / 2)
    return f"{left_padding}{text}{right_padding}"

colorama_initialized = False
def ensure_colorama_init() -> None:
    global colorama_initialized

    if not colorama_initialized:
        colorama.just_fix_windows_console()
        colorama_initialized = True

def print_header(header_text: str, file: TextIO | None = None) -> None:
    ''' A full-width `=== header ===` line in bright style. '''
    ensure_colorama_init()
    width = min(get_terminal_size().columns, 100)
    text = center_text(f" {header_text} ", max(width, len(header_text) + 4), '=')
    print(colorama.Style.BRIGHT + text + colorama.Style.RESET_ALL, file=file or sys.stdout)

def print_table(df: pd.DataFrame, title: str | None = None, *, file: TextIO | None = None) -> None:
    if title is not None:
        print_header(title, file=file)
    print(df.to_string(index=False), file=file or sys.stdout)

def print_stats(stats: Mapping[str, Any], title: str, *, file: TextIO | None = None) -> None:
    print_header(title, file=file)
    key_width = max((len(k) for k in stats), default=0)
    for key, value in stats.items():
        print(f"{key.ljust(key_width)}  {value}", file=file or sys.stdout)

def print_error(kind: str, message: str) -> None:
    ''' One red diagnostic line on stderr; newlines in `message` are flattened. '''
    ensure_colorama_init()
    flat = ' '.join(message.split())
    print(f"{colorama.Fore.RED}error ({kind}):{colorama.Style.RESET_ALL} {flat}", file=sys.stderr)

def print_success(message: str) -> None:
    ensure_colorama_init()
    print(f"{colorama.Fore.GREEN}{message}{colorama.Style.RESET_ALL}")
