"""CSV output: convergence history, final solution profile and run report."""

import csv
import os

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_history(path, residuals):
    return write_csv(path, ["iter", "residual"],
                     ((k, float(r)) for k, r in enumerate(residuals, start=1)))


def write_solution(path, x, u):
    u = np.asarray(u, dtype=complex)
    return write_csv(path, ["x", "re", "im", "abs"],
                     ((float(xi), float(ui.real), float(ui.imag), float(abs(ui)))
                      for xi, ui in zip(x, u)))


def read_solution(path):
    """Return ``(x, u)`` from a solution_final.csv file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def write_report(path, rows):
    return write_csv(path, ["key", "value"], rows)


def write_bundle(out_dir, x=None, u=None, report=None, extra_rows=()):
    """Write the output bundle; the solution is skipped when ``u`` is None."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    if report is not None:
        paths["history"] = write_history(os.path.join(out_dir, "convergence_history.csv"),
                                         report.residual_history)
    if u is not None:
        paths["solution"] = write_solution(os.path.join(out_dir, "solution_final.csv"), x, u)
    rows = list(report.rows()) if report is not None else []
    rows.extend(extra_rows)
    paths["report"] = write_report(os.path.join(out_dir, "report.csv"), rows)
    return paths


def write_timings(path, timings):
    """Wall times go to a separate file so the bundle stays reproducible."""
    return write_csv(path, ["phase", "seconds"], sorted(timings.items()))
