from typing import Sequence


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Render rows as a markdown pipe table with padded columns."""
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    def line(values):
        return "| " + " | ".join(f"{v:{widths[i]}}" for i, v in enumerate(values)) + " |"

    out = [line(headers), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out.extend(line(row) for row in cells)
    return "\n".join(out)


def bench_table(reports) -> str:
    headers = ["kernel", "shape", "iters", "median ms", "p10 ms", "p90 ms", "comparisons"]
    rows = [
        [
            r.kernel,
            "x".join(str(d) for d in r.shape),
            r.iterations,
            r.median_ns / 1e6,
            r.p10_ns / 1e6,
            r.p90_ns / 1e6,
            r.comparison_count,
        ]
        for r in reports
    ]
    return format_table(headers, rows)


def sweep_table(rows) -> str:
    headers = ["variant", "rate", "repeats", "val acc", "std", "val error %", "train acc"]
    body = [
        [r.variant, f"{r.rate:.2f}", r.repeats, r.mean_val_acc, r.std_val_acc, r.mean_val_error_pct, r.mean_train_acc]
        for r in rows
    ]
    return format_table(headers, body)
