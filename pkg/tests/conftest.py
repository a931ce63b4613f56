import pytest

from diacomp import SyntheticSpec, TimeSpanConfig, generate_synthetic_corpus


@pytest.fixture(scope="session")
def small_synth(tmp_path_factory):
    """A compact planted-signal corpus shared by pipeline-level tests."""
    spec = SyntheticSpec(
        n_compounds=12,
        tokens_per_span=150,
        cutoff=60,
        spans=TimeSpanConfig(20, 1800, 2000),
        divergence_span=5,
        seed=3,
    )
    out = tmp_path_factory.mktemp("synth-small")
    result = generate_synthetic_corpus(spec, out)
    return spec, result
