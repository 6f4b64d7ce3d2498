from pathlib import Path

import numpy as np

DATA = Path(__file__).parent / "data"


def load_reference(name):
    """(category names, one-letter keys, matrix) from a tab-separated fixture."""
    names, keys, rows = [], [], []
    for line in (DATA / name).read_text(encoding="utf-8").splitlines():
        if line.startswith("#") or not line.strip():
            continue
        parts = line.split("\t")
        names.append(parts[0])
        keys.append(parts[1])
        rows.append([float(x) for x in parts[2:]])
    return names, keys, np.array(rows)


def metrics_oracle(v):
    """Accuracy, macro P, macro R and F1 by explicit loops over a confusion matrix."""
    m = len(v)
    total = sum(sum(row) for row in v)
    correct = sum(v[i][i] for i in range(m))
    precisions, recalls = [], []
    for c in range(m):
        actual = sum(v[c][p] for p in range(m))
        if actual == 0:
            continue
        predicted = sum(v[a][c] for a in range(m))
        precisions.append(v[c][c] / predicted if predicted else 0.0)
        recalls.append(v[c][c] / actual)
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return correct / total, p, r, f1


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    ACCEPTANCE_LINES.append(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
                            + (f" ({detail})" if detail else ""))
    print(ACCEPTANCE_LINES[-1])
    assert ok, ACCEPTANCE_LINES[-1]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
