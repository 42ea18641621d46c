import random

import pytest
from hypothesis import given, settings, strategies as st

from builders import SCENES, chain, episode
from flexnav.execute import (
    MoveTo,
    Stop,
    VoteResult,
    execute_guidance,
    guidance_context,
    parse_follower_reply,
    parse_letter,
    plurality,
    step_votes,
    tie_break,
    tiebreak_prompt,
)
from flexnav.mocks import FailingProvider, FirstNeighborFollower, ScriptedFollower, ScriptedResponder
from flexnav.plan import Guidance
from flexnav.state import EpisodeState

REQ = {"neighbors": [{"id": "b"}, {"id": "c"}]}


def test_guidance_context():
    gs = ["go forward", "turn left at the sofa"]
    assert guidance_context("multi", gs) == "go forward. turn left at the sofa"
    assert guidance_context("single", gs) == "turn left at the sofa"
    with pytest.raises(ValueError):
        guidance_context("multi", [])


def test_parse_follower_reply():
    assert parse_follower_reply(" b ", ["b", "c"]) == MoveTo("b")
    assert parse_follower_reply("stop.", ["b"]) == Stop()
    assert parse_follower_reply("zz", ["b"]) is None


def test_unanimous_vote():
    v = step_votes([lambda r: "b"] * 3, REQ)
    assert v.unanimous and v.action == MoveTo("b")


def test_split_vote_options_in_first_proposal_order():
    v = step_votes([lambda r: "b", lambda r: "b", lambda r: "STOP"], REQ)
    assert not v.unanimous
    assert v.options == (MoveTo("b"), Stop())


def test_single_follower_always_unanimous():
    for ans in ("b", "c", "STOP"):
        assert step_votes([lambda r, a=ans: a], REQ).unanimous


def test_failing_follower_abstains():
    w = []
    v = step_votes([FailingProvider(), lambda r: "b", lambda r: "nonsense"], REQ, w)
    assert v.unanimous and v.proposals == (None, MoveTo("b"), None)
    assert len(w) == 2
    assert step_votes([FailingProvider()] * 3, REQ) is None


def test_tiebreak_prompt_golden(golden):
    text = tiebreak_prompt("go forward. turn left at the sofa", "go forward to lamp, facing toward a hallway.",
                           ["turn left to sofa, facing toward a living room.", "stop here"])
    assert text == golden("tiebreak_prompt.txt")


@pytest.mark.parametrize("raw,idx", [("B", 1), ("b", 1), ("Answer: A.", 0), ("(C)", None), ("none", None)])
def test_parse_letter(raw, idx):
    assert parse_letter(raw, 2) == idx


def test_tie_break_answer_b():
    vote = VoteResult((MoveTo("b"), Stop()), (MoveTo("b"), Stop()))
    action, fallback = tie_break(ScriptedResponder(["B"]), "ctx", "", vote, ["move", "stop here"])
    assert action == Stop() and not fallback


def test_tie_break_falls_back_to_plurality():
    props = (Stop(), MoveTo("b"), MoveTo("b"))
    vote = VoteResult(props, (Stop(), MoveTo("b")))
    w = []
    assert tie_break(ScriptedResponder(["???"]), "c", "", vote, ["s", "m"], w) == (MoveTo("b"), True)
    assert tie_break(FailingProvider(), "c", "", vote, ["s", "m"], w) == (MoveTo("b"), True)
    assert len(w) == 2


def test_plurality_ties_go_to_lowest_index():
    assert plurality([MoveTo("c"), MoveTo("b"), None]) == MoveTo("c")
    assert plurality([None, Stop(), MoveTo("b")]) == Stop()


def _state(graph, start="n0"):
    return EpisodeState(episode(start=start, goals=("n9",)), start, 90.0, random.Random(0))


def test_four_moves_then_stop():
    g = chain(10, scenes=SCENES)
    st_ = _state(g)
    script = ["n1", "n2", "n3", "n4", "STOP"]
    seg = execute_guidance(g, st_, Guidance("", 0, "go forward"), [ScriptedFollower(script)] * 1,
                           FailingProvider())
    assert len(seg.moves) == 4 and seg.stopped
    assert st_.node == "n4"
    assert st_.trajectory == ["n1", "n2", "n3", "n4"]


def test_never_stopping_followers_capped_at_five():
    g = chain(10, scenes=SCENES)
    st_ = _state(g)
    seg = execute_guidance(g, st_, Guidance("", 0, "go forward"), [FirstNeighborFollower()] * 3, FailingProvider())
    assert len(seg.moves) == 5 and not seg.stopped


def test_multi_context_accumulates_guidances():
    g = chain(4, scenes=SCENES)
    st_ = _state(g)
    seen = []

    def follower(req):
        seen.append(req["context"])
        return "STOP"
    execute_guidance(g, st_, Guidance("", 0, "go forward"), [follower], FailingProvider())
    execute_guidance(g, st_, Guidance("", 0, "turn left."), [follower], FailingProvider())
    assert seen == ["go forward", "go forward. turn left"]


def test_memory_map_kept_across_guidances():
    g = chain(6, scenes=SCENES)
    st_ = _state(g)
    execute_guidance(g, st_, Guidance("", 0, "go"), [ScriptedFollower(["n1", "n2", "STOP"])], FailingProvider())
    assert st_.memory.visited == ["n0", "n1", "n2"]
    assert "n1-n2" in st_.memory.summary()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["n_prev", "n_next", "STOP"]), min_size=3, max_size=3),
                min_size=1, max_size=5))
def test_tiebreaker_called_once_per_split_step(pattern):
    g = chain(12, scenes=SCENES)
    st_ = _state(g, "n6")
    row = iter(pattern)
    current = {}

    def follower(i):
        def call(req):
            if i == 0:
                current["votes"] = next(row, ["STOP"] * 3)
            idx = int(req["node"][1:])
            v = current["votes"][i]
            return {"n_prev": f"n{idx - 1}", "n_next": f"n{idx + 1}"}.get(v, v)
        return call
    tb = ScriptedResponder(["A"])
    execute_guidance(g, st_, Guidance("", 0, "go"), [follower(i) for i in range(3)], tb)
    assert len(tb.requests) == st_.split_steps
