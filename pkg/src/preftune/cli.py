"""`tune` command line: serve the live session, run batch studies, run one episode."""

from __future__ import annotations

import json
import sys

import click

from .clf_plant import EpisodeConfig, gains_from_action, simulate_episode
from .session import SessionConfig, run_batch, write_curves_csv


@click.group()
def main():
    """Preference-based gain tuning toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path, port, host):
    """Start a live session and serve the operator HTTP API."""
    import uvicorn

    from .service import create_app
    from .session import Session

    session = Session.start(SessionConfig.from_json_file(config_path))
    if session.config.feedback_source == "human" and session.config.episode:
        session.episode_metrics(session.current_action)
    uvicorn.run(create_app(session), host=host, port=port)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--runs", default=10, show_default=True, type=int)
@click.option("--iters", default=100, show_default=True, type=int)
@click.option(
    "--mode",
    default="pref+ord",
    show_default=True,
    type=click.Choice(["pref", "pref+ord", "random"]),
)
@click.option("--noise", default=0.9, show_default=True, type=float,
              help="probability of correct synthetic feedback (1.0 = noise free)")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", default="curves.csv", show_default=True,
              type=click.Path())
def batch(config_path, runs, iters, mode, noise, seed, out_path):
    """Run seeded synthetic-feedback sessions and write convergence curves."""
    base = SessionConfig.from_json_file(config_path).to_dict()
    base.update(
        budget=iters,
        seed=seed,
        feedback_source="synthetic",
        feedback_mode="pref" if mode == "random" else mode,
        selection="random" if mode == "random" else "thompson",
        log_path=None,
    )
    base.setdefault("oracle", {})
    base["oracle"] = {**base["oracle"], "correct_prob": noise}
    config = SessionConfig.from_dict(base)
    label = f"{mode}/noise{noise:g}"
    report = run_batch(config, runs, mode_label=label)
    write_curves_csv([report], out_path)
    click.echo(f"{label}: final mean error {report.mean[-1]:.4f} "
               f"(iteration 1: {report.mean[0]:.4f}); wrote {out_path}")


@main.command()
@click.option("--gains", "gains_path", required=True, type=click.Path(exists=True),
              help="JSON file: {\"profile\": \"toy\"|\"amber\", \"values\": [...], ...}")
@click.option("--duration", default=1.5, show_default=True, type=float)
@click.option("--controller", default="delta", show_default=True,
              type=click.Choice(["delta", "plus"]))
def episode(gains_path, duration, controller):
    """Simulate one plant episode and print its metrics as JSON."""
    spec = json.loads(open(gains_path).read())
    gains = gains_from_action(
        spec["values"],
        profile=spec.get("profile", "toy"),
        torque_limit=float(spec.get("torque_limit", 80.0)),
        epsilon=float(spec.get("epsilon", 0.15)),
        w_vdot=float(spec.get("w_vdot", 2.0)),
    )
    cfg = EpisodeConfig(dt=float(spec.get("dt", 1e-3)), controller=controller)
    metrics = simulate_episode(gains, cfg, duration)
    json.dump(
        {
            "tracking_rms": metrics.tracking_rms,
            "torque_chatter": metrics.torque_chatter,
            "saturation_frac": metrics.saturation_frac,
            "vdot_violation": metrics.vdot_violation,
            "failed": metrics.failed,
        },
        sys.stdout,
        indent=2,
    )
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
