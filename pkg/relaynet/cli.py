import logging
import sys

import click
from flask import current_app
from flask.cli import FlaskGroup, with_appcontext

from relaynet.errors import USAGE_EXIT_CODE
from relaynet.errors.handlers import exit_on_error
from relaynet.utils.settings import apply_config_file, apply_overrides

logger = logging.getLogger(__name__)


def common_options(f):
    f = click.option("--seed", type=int, default=None, help="Override SEED.")(f)
    f = click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Flat KEY=VALUE file layered over the environment.",
    )(f)
    return f


def _settings(config_path, seed):
    config = current_app.config
    if config_path:
        apply_config_file(config, config_path)
    apply_overrides(config, SEED=seed)
    return config


def _experiment(config):
    from relaynet.harness import ExperimentConfig

    return ExperimentConfig.from_config(config)


def _load(path, cls):
    from relaynet.models import load_checkpoint

    return load_checkpoint(path, cls) if path else None


@click.command("gen-testset")
@click.option("--count", type=click.IntRange(min=1), default=None, help="Defaults to TEST_DEPLOYMENTS.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@common_options
@with_appcontext
@exit_on_error
def gen_testset_command(count, out, config_path, seed):
    """Sample test deployments (jammer outside both guard zones)."""
    from relaynet.harness import gen_testset

    config = _settings(config_path, seed)
    count = count or config["TEST_DEPLOYMENTS"]
    gen_testset(_experiment(config), count, out, config["SEED"])
    click.echo(f"Wrote {count} deployments to {out}")


@click.command("datagen")
@click.argument("strategy", type=click.Choice(["rlgp", "rw", "wcc"]))
@click.option("--count", type=click.IntRange(min=1), default=None, help="Defaults to TRAIN_DEPLOYMENTS.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--actor", type=click.Path(exists=True, dir_okay=False), default=None, help="Trained actor for rlgp.")
@click.option("--workers", type=click.IntRange(min=1), default=1)
@click.option("--resume", is_flag=True, help="Keep fully written deployments already in --out.")
@click.option("--audit", type=click.FloatRange(0.0, 1.0), default=0.0, help="Share of labels rechecked by exhaustive min-cut.")
@common_options
@with_appcontext
@exit_on_error
def datagen_command(strategy, count, out, actor, workers, resume, audit, config_path, seed):
    """Generate a labeled training dataset by walking relays.

    The rlgp strategy first trains a PPO explorer, which adds a few minutes at
    the desk-scale PPO defaults.
    """
    from relaynet.datagen import PpoConfig, audit_labels, generate_dataset, read_dataset
    from relaynet.models import ActorModel

    config = _settings(config_path, seed)
    cfg = _experiment(config)
    count = count or config["TRAIN_DEPLOYMENTS"]
    total = generate_dataset(
        strategy,
        count,
        cfg,
        out,
        config["SEED"],
        ppo_cfg=PpoConfig.from_config(config),
        actor=_load(actor, ActorModel),
        workers=workers,
        resume=resume,
    )
    click.echo(f"Wrote {total} samples to {out}")
    if audit > 0:
        checked = audit_labels(read_dataset(out), cfg, fraction=audit, seed=config["SEED"])
        click.echo(f"Audited {checked} labels against exhaustive min-cut")


@click.command("train")
@click.argument("kind", type=click.Choice(["mfl", "gl"]))
@click.option("--dataset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Checkpoint path.")
@click.option("--epochs", type=click.IntRange(min=0), default=None)
@click.option("--lr", type=float, default=None)
@common_options
@with_appcontext
@exit_on_error
def train_command(kind, dataset, out, epochs, lr, config_path, seed):
    """Train the max-flow regressor (mfl) or the direction predictor (gl)."""
    from relaynet.datagen import read_dataset
    from relaynet.harness.training import TrainHyper, train_gl, train_mfl
    from relaynet.models import save_checkpoint

    config = _settings(config_path, seed)
    hyper = TrainHyper.from_config(config, kind, epochs=epochs, lr=lr)
    samples = read_dataset(dataset)
    params = _experiment(config).channel
    result = (train_mfl if kind == "mfl" else train_gl)(samples, params, hyper)
    save_checkpoint(result.model, out)
    final = result.losses[-1] if result.losses else float("nan")
    click.echo(f"Trained {kind} for {hyper.epochs} epochs, final loss {final:.6g}; saved {out}")


@click.command("ppo-train")
@click.option("--deployments", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Train on these deployments (the RL baseline uses the test set).")
@click.option("--actor-out", type=click.Path(dir_okay=False), required=True)
@click.option("--critic-out", type=click.Path(dir_okay=False), default=None)
@click.option("--epochs", type=click.IntRange(min=1), default=None)
@common_options
@with_appcontext
@exit_on_error
def ppo_train_command(deployments, actor_out, critic_out, epochs, config_path, seed):
    """Train the PPO actor and critic.

    With the desk-scale defaults (T = 200 transitions per epoch, at most 50
    epochs) this takes a few minutes; full-scale settings take hours.
    """
    from relaynet.datagen import PpoConfig, train_ppo
    from relaynet.harness import read_deployments, sample_deployments
    from relaynet.models import save_checkpoint
    from relaynet.utils import seeding

    config = _settings(config_path, seed)
    cfg = _experiment(config)
    if deployments:
        scenarios = [dep for _, dep in read_deployments(deployments)]
        default_epochs = config["RL_BASELINE_EPOCHS"]
    else:
        scenarios = sample_deployments(cfg, config["TRAIN_DEPLOYMENTS"], seeding.TRAIN, config["SEED"])
        default_epochs = config["PPO_MAX_EPOCHS"]
    ppo_cfg = PpoConfig.from_config(config, max_epochs=epochs or default_epochs)
    result = train_ppo(cfg.channel, scenarios, ppo_cfg, half_width=cfg.half_width if cfg.clamp else None)
    save_checkpoint(result.actor, actor_out)
    if critic_out:
        save_checkpoint(result.critic, critic_out)
    state = "converged" if result.converged else "stopped at the epoch cap"
    click.echo(f"PPO {state} after {result.epochs} epochs; actor saved to {actor_out}")


@click.command("optimize")
@click.argument("method", type=click.Choice(["mfl", "gl", "wcc", "hybrid", "rl"]))
@click.option("--testset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--mfl", "mfl_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--gl", "gl_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--actor", "actor_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--steps", type=click.IntRange(min=0), default=None, help="Defaults to STEPS.")
@click.option("--workers", type=click.IntRange(min=1), default=1)
@common_options
@with_appcontext
@exit_on_error
def optimize_command(method, testset, out, mfl_path, gl_path, actor_path, steps, workers, config_path, seed):
    """Optimize every test deployment with one method and record the trajectories."""
    from relaynet.harness import read_deployments
    from relaynet.models import ActorModel, GlModel, MflModel
    from relaynet.optimize import optimize_deployments, write_trajectories

    config = _settings(config_path, seed)
    apply_overrides(config, STEPS=steps)
    models = {
        name: model
        for name, model in (
            ("mfl", _load(mfl_path, MflModel)),
            ("gl", _load(gl_path, GlModel)),
            ("actor", _load(actor_path, ActorModel)),
        )
        if model is not None
    }
    trajectories = optimize_deployments(method, models, _experiment(config), read_deployments(testset), workers=workers)
    write_trajectories(out, trajectories)
    click.echo(f"Optimized {len(trajectories)} deployments with {method}; wrote {out}")


@click.command("evaluate")
@click.argument("trajectory_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--baseline", default=None, help="Defaults to BASELINE.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--mfl", "mfl_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Also report the model's output fidelity at the MFL final deployments.")
@common_options
@with_appcontext
@exit_on_error
def evaluate_command(trajectory_files, baseline, out_dir, mfl_path, config_path, seed):
    """Compare final max-flows of several methods against a baseline."""
    from relaynet.errors import InputError
    from relaynet.harness.evaluate import add_fidelity, evaluate, summary_text, write_report
    from relaynet.models import MflModel
    from relaynet.optimize import read_trajectories

    config = _settings(config_path, seed)
    runs = {}
    for path in trajectory_files:
        trajectories = read_trajectories(path)
        if not trajectories:
            raise InputError(f"{path} contains no trajectories")
        method = next(iter(trajectories.values())).method
        if method in runs:
            raise InputError(f"two trajectory files for method {method}")
        runs[method] = trajectories
    report = evaluate(
        runs,
        baseline or config["BASELINE"],
        bins=config["HIST_BINS"],
        fraction=config["TRUNCATE_FRACTION"],
    )
    add_fidelity(
        report,
        runs,
        _experiment(config).channel,
        mfl_model=_load(mfl_path, MflModel),
        endpoint_factor=config["WCC_ENDPOINT_FACTOR"],
        fraction=config["FIDELITY_TRUNCATE_FRACTION"],
    )
    write_report(report, out_dir)
    click.echo(summary_text(report), nl=False)


@click.command("synthcheck")
@click.option("--function", "function", type=click.Choice(["f1", "f2"]), default="f1")
@click.option("--samples", type=click.IntRange(min=1), default=None, help="Defaults to SYNTH_SAMPLES.")
@click.option("--epochs", type=click.IntRange(min=0), default=None, help="Defaults to SYNTH_EPOCHS.")
@common_options
@with_appcontext
@exit_on_error
def synthcheck_command(function, samples, epochs, config_path, seed):
    """Fit a known graph function and report value and derivative errors."""
    from relaynet.harness.synth import synth_check

    config = _settings(config_path, seed)
    report = synth_check(
        function,
        samples or config["SYNTH_SAMPLES"],
        config["SYNTH_EPOCHS"] if epochs is None else epochs,
        lr=config["SYNTH_LR"],
        batch_size=config["BATCH_SIZE"],
        test_samples=config["SYNTH_TEST_SAMPLES"],
        seed=config["SEED"],
    )
    for line in report.summary_lines():
        click.echo(line)


@click.command("maxflow")
@click.argument("deployment_file", type=click.Path(exists=True, dir_okay=False))
@common_options
@with_appcontext
@exit_on_error
def maxflow_command(deployment_file, config_path, seed):
    """Print the exact max-flow of every deployment in a file."""
    from relaynet.harness import read_deployments
    from relaynet.optimize import flow_value

    config = _settings(config_path, seed)
    params = _experiment(config).channel
    for index, dep in read_deployments(deployment_file):
        click.echo(f"{index}\t{flow_value(params, dep)!r}")


@click.command("ablation-layer")
@click.option("--dataset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--testset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--mfl", "mfl_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Reuse a trained GraphConv model instead of training one.")
@click.option("--workers", type=click.IntRange(min=1), default=1)
@common_options
@with_appcontext
@exit_on_error
def ablation_layer_command(dataset, testset, out_dir, mfl_path, workers, config_path, seed):
    """Compare GraphConv against a first-order convolution on the same data."""
    from relaynet.datagen import read_dataset
    from relaynet.harness import read_deployments
    from relaynet.harness.ablation import ablation_layer
    from relaynet.harness.evaluate import summary_text, write_report
    from relaynet.harness.training import TrainHyper
    from relaynet.models import MflModel

    config = _settings(config_path, seed)
    report = ablation_layer(
        read_dataset(dataset),
        read_deployments(testset),
        _experiment(config),
        TrainHyper.from_config(config, "mfl"),
        graphconv=_load(mfl_path, MflModel),
        bins=config["HIST_BINS"],
        fraction=config["TRUNCATE_FRACTION"],
        workers=workers,
    )
    write_report(report, out_dir)
    click.echo(summary_text(report), nl=False)


COMMANDS = [
    gen_testset_command,
    datagen_command,
    train_command,
    ppo_train_command,
    optimize_command,
    evaluate_command,
    synthcheck_command,
    maxflow_command,
    ablation_layer_command,
]


def _create_app():
    from relaynet import create_app

    return create_app()


cli = FlaskGroup(
    name="relaynet",
    create_app=_create_app,
    add_default_commands=False,
    add_version_option=False,
    help="Relay placement in jammed wireless networks.",
)


def main(argv=None) -> int:
    """Run the CLI and return its exit status instead of exiting."""
    try:
        result = cli.main(args=argv, prog_name="relaynet", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return e.exit_code if e.exit_code else USAGE_EXIT_CODE
    except Exception:
        logger.exception("relaynet failed unexpectedly")
        return 1
    return result if isinstance(result, int) else 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
