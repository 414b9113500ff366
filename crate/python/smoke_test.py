"""Smoke test for the bspre extension module."""

import math

import bspre


def main():
    assert bspre.instruction_count() == 65

    ident = bspre.assemble("APPEND var1[00]\nRET\nJZ 0001\nEXIT\n")
    assert ident.execute([[7]]) == ("positive", [7], 2)
    assert bspre.Codelet.from_bytes(ident.to_bytes()).disassemble() == ident.disassemble()
    assert bspre.validate("APPEND var1[00]\nRET\n") == ["MissingExit"]

    gen = bspre.generate(7)
    assert bspre.validate(gen.disassemble()) == []
    both = bspre.concatenate(ident, ident)
    assert both.execute([[-3]])[:2] == ("positive", [-3])

    assert abs(bspre.reward_argmax() - 1 / math.e) < 1e-15
    assert abs(bspre.intrinsic_reward(0.56) - 0.4684407099215875) < 1e-12
    assert bspre.sequence_reward(0.3, 0.6) > bspre.merged_reward(0.3, 0.6)
    assert abs(bspre.td_update(0.1, 1.0, [(2.0, 0.5), (1.0, 0.5)]) - 0.37) < 1e-12
    assert bspre.selection_probability([1.0, 3.0], 1) == 0.75
    assert bspre.exploration_probability(1.0, 1.0) == 0.5
    assert len(bspre.vertical_bar_subset()) == 14

    engine = bspre.Engine("letters", seed=42)
    engine.run(50)
    snap = engine.snapshot()
    resumed = bspre.Engine.restore(snap, "letters", seed=42)
    for _ in range(20):
        assert engine.step() == resumed.step()
    assert engine.snapshot() == resumed.snapshot()
    assert engine.tick == 70
    summary = engine.summary()
    assert summary["concepts"] == len(engine.concepts())
    assert "sensory" in engine.inspect()
    print("smoke test ok:", summary)


if __name__ == "__main__":
    main()
