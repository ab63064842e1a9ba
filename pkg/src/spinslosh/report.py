"""Plain-text run summaries and static SVG plots of a trace."""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .exceptions import ValidationError  # noqa: E402
from .slosh import EventKind  # noqa: E402

SETTLING_BAND = 0.02
TAIL_FRACTION = 0.05


@dataclass
class ReportSummary:
    duration: float
    samples: int
    settling_time: float
    terminal_omega_z: float
    force_asymptote: np.ndarray
    torque_asymptote: np.ndarray
    collisions: int
    separations: int
    wall_clock_s: float
    real_time_factor: float

    def text(self):
        def vec(v):
            return "n/a" if v is None else "(" + ", ".join(f"{x:.6g}" for x in v) + ")"

        def num(x, fmt=".6g"):
            return "n/a" if x is None or not np.isfinite(x) else format(x, fmt)

        lines = [
            f"simulated time       : {self.duration:.6g} s ({self.samples} samples)",
            f"settling time        : {num(self.settling_time)} s (within {SETTLING_BAND:.0%} of the final rate)",
            f"terminal omega_z     : {num(self.terminal_omega_z, '.9g')} rad/s",
            f"force asymptote      : {vec(self.force_asymptote)} N",
            f"force asymptote |F|  : {num(None if self.force_asymptote is None else np.linalg.norm(self.force_asymptote))} N",
            f"torque asymptote     : {vec(self.torque_asymptote)} N m",
            f"events               : {self.collisions} collision, {self.separations} separation",
            f"wall clock           : {num(self.wall_clock_s, '.3f')} s",
            f"real-time factor     : {num(self.real_time_factor, '.1f')}",
        ]
        return "\n".join(lines) + "\n"


def _tail_mean(trace, cols):
    if not all(c in trace for c in cols):
        return None
    n = len(trace)
    k = max(1, int(round(TAIL_FRACTION * n)))
    return np.array([float(np.mean(trace[c][n - k:])) for c in cols])


def settling_time(t, omega, band=SETTLING_BAND):
    """First time after which ``omega`` stays within ``band`` of its final value."""
    final = omega[-1]
    tol = band * abs(final) if final != 0 else band
    outside = np.nonzero(np.abs(omega - final) > tol)[0]
    if outside.size == 0:
        return float(t[0])
    return float(t[outside[-1] + 1])


def summarize(trace):
    if len(trace) == 0:
        raise ValidationError("cannot report on an empty trace", "non-empty trace")
    t = trace.t
    duration = float(t[-1] - t[0])
    wz = trace["wz"] if "wz" in trace else None
    wall = trace.meta.get("wall_clock_s")
    rtf = duration / wall if wall else float("nan")
    return ReportSummary(
        duration=duration,
        samples=len(trace),
        settling_time=settling_time(t, wz) if wz is not None else float("nan"),
        terminal_omega_z=float(wz[-1]) if wz is not None else float("nan"),
        force_asymptote=_tail_mean(trace, ("Fx", "Fy", "Fz")),
        torque_asymptote=_tail_mean(trace, ("Tx", "Ty", "Tz")),
        collisions=trace.count(EventKind.COLLISION),
        separations=trace.count(EventKind.SEPARATION),
        wall_clock_s=float(wall) if wall else float("nan"),
        real_time_factor=rtf,
    )


def _plot(path, t, series, ylabel, title):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for label, y in series:
        ax.plot(t, y, label=label, linewidth=1.0)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_report(trace, outdir):
    """Write ``summary.txt`` plus SVG plots of F, T and omega into ``outdir``.

    Channels missing from the trace are skipped. Returns the summary.
    """
    summary = summarize(trace)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(summary.text(), encoding="utf-8")
    groups = (
        ("force.svg", ("Fx", "Fy", "Fz"), "force [N]", "Liquid force on the spacecraft (body frame)"),
        ("torque.svg", ("Tx", "Ty", "Tz"), "torque [N m]", "Liquid torque about the body origin"),
        ("omega.svg", ("wx", "wy", "wz", "w_ref"), "rate [rad/s]", "Body angular velocity"),
    )
    for name, cols, ylabel, title in groups:
        series = [(c, trace[c]) for c in cols if c in trace]
        if series:
            _plot(out / name, trace.t, series, ylabel, title)
    return summary
