"""Differential checks against the reference matcher in oracle_naive.

The reference engine re-derives the full match set from scratch on every
cycle, so agreement here pins down the incremental network's bookkeeping:
join consistency, negation, refraction and conflict resolution.
"""

import pytest

import oracle_programs
from prodex.engine.kernel import Kernel
from prodex.engine.loader import load_text

LIMIT = 50


def engine_fired(text, limit=LIMIT):
    kernel = Kernel()
    load_text(kernel, text)
    kernel.reset()
    fired = []
    real_pop = kernel.agenda.pop_top

    def spy():
        act = real_pop()
        if act is not None:
            fired.append((act.rule.name, act.fact_ids))
        return act

    kernel.agenda.pop_top = spy
    kernel.run(limit)
    return kernel, fired


def agenda_keys(kernel):
    return {act.key() for act in kernel.agenda.snapshot()}


def naive_agenda_keys(naive):
    return {key for key, _ in naive.matches() if key not in naive.refraction}


@pytest.mark.parametrize("seed", range(40))
def test_firing_sequences_agree(seed):
    program = oracle_programs.generate(seed)
    program.naive.reset()
    expected = program.naive.run(LIMIT)
    _, got = engine_fired(program.text)
    assert got == expected, f"seed {seed}: divergence at step {_first_diff(got, expected)}"


@pytest.mark.parametrize("seed", range(40))
def test_agenda_sets_agree_at_every_pause(seed):
    """Stop after each firing and compare the full remaining agenda, not just
    the chosen activation."""
    program = oracle_programs.generate(seed)

    naive = program.naive
    naive.reset()

    kernel = Kernel()
    load_text(kernel, program.text)
    kernel.reset()

    for _ in range(12):
        assert agenda_keys(kernel) == naive_agenda_keys(naive)
        stepped = naive.run(1)
        fired = kernel.run(1)
        assert fired == len(stepped)
        if fired == 0:
            break


def _first_diff(a, b):
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return f"{i}: {x} != {y}"
    return f"length {len(a)} vs {len(b)}"
