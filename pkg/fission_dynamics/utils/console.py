import sys
from typing import Any, Optional, Sequence

# rich is optional; every helper has a plain-text fallback
try:
    from rich.console import Console
    from rich.table import Table

    RICH_AVAILABLE = True
    _console: Optional[Console] = Console()
except ImportError:
    RICH_AVAILABLE = False
    _console = None


def format_value(value: Any) -> str:
    """Render a table cell: floats in short scientific-friendly form, everything else via str."""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if value != 0.0 and (abs(value) < 1e-3 or abs(value) >= 1e5):
            return f"{value:.4e}"
        return f"{value:.6g}"
    return str(value)


def print_step(title: str) -> None:
    """Print a step header."""
    if RICH_AVAILABLE and _console:
        _console.rule(f"[bold blue]{title}[/]")
    else:
        print(f"\n--- {title} ---")


def print_success(message: str) -> None:
    if RICH_AVAILABLE and _console:
        _console.print(f"[bold green]SUCCESS:[/] {message}")
    else:
        print(f"SUCCESS: {message}")


def print_warning(message: str) -> None:
    if RICH_AVAILABLE and _console:
        _console.print(f"[bold yellow]WARNING:[/] {message}")
    else:
        print(f"WARNING: {message}")


def print_error(message: str, exit_code: Optional[int] = None) -> None:
    """Print an error message and optionally exit with the given code."""
    if RICH_AVAILABLE and _console:
        _console.print(f"[bold red]ERROR:[/] {message}")
    else:
        print(f"ERROR: {message}")

    if exit_code is not None:
        sys.exit(exit_code)


def print_table(title: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    """Print a table; cells go through format_value."""
    cells = [[format_value(v) for v in row] for row in rows]
    if RICH_AVAILABLE and _console:
        table = Table(title=title)
        for col in columns:
            table.add_column(col)
        for row in cells:
            table.add_row(*row)
        _console.print(table)
        return

    print(f"\n{title}")
    if not cells:
        print("(No data)")
        return

    widths = [len(c) for c in columns]
    for row in cells:
        for i, val in enumerate(row):
            widths[i] = max(widths[i], len(val))

    header = " | ".join(c.ljust(w) for c, w in zip(columns, widths))
    print(header)
    print("-" * len(header))
    for row in cells:
        print(" | ".join(v.ljust(w) for v, w in zip(row, widths)))
    print("")
