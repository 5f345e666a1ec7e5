from relaynet.harness.scenario import (  # noqa: F401
    ExperimentConfig,
    gen_testset,
    initial_deployment,
    read_deployments,
    sample_deployments,
    sample_jammer,
)
