import pytest
from hypothesis import given, strategies as st

from builders import SCENES, obj, square, vp
from flexnav.envgraph import NavGraph
from flexnav.mocks import FailingProvider, ScriptedResponder, echo_perceiver
from flexnav.perceive import (
    Observation,
    PerceptionError,
    ViewDescriptor,
    discretize_views,
    format_observation,
    infer_floor,
    nearest_bucket,
    perceive,
)
from flexnav.providers import ProviderError


def _obs(objects=("lamp", "maroon pillow")):
    views = (
        ViewDescriptor(0, "front", "a long hallway"),
        ViewDescriptor(90, "right", "a kitchen with a white fridge."),
        ViewDescriptor(180, "back", "a closed wooden door"),
        ViewDescriptor(270, "left", "a staircase leading up"),
    )
    return Observation("a", 2.5, 0, "in a hallway", views, tuple(objects))


def test_observation_golden(golden):
    assert format_observation(_obs()) == golden("observation.txt")


def test_observation_no_objects(golden):
    views = tuple(ViewDescriptor(b, lab, "a blank wall") for b, lab in
                  ((0, "front"), (90, "right"), (180, "back"), (270, "left")))
    obs = Observation("a", 0.0, 0, "", views, ())
    assert obs.formatted_text == golden("observation_empty.txt")
    assert obs.formatted_text.endswith("Objects in 3m: none.")


@pytest.mark.parametrize("heading,front", [(0, 0), (90, 90), (100, 90), (44.9, 0), (45, 90), (359, 0), (-90, 270)])
def test_front_view_bucket(heading, front):
    g = square(scenes=SCENES)
    assert discretize_views(g, "a", heading)[0].scene_text == SCENES[front]


def test_views_rotate_with_heading():
    g = square(scenes=SCENES)
    views = discretize_views(g, "a", 90)
    assert [v.orientation_label for v in views] == ["front", "right", "back", "left"]
    assert [v.scene_text for v in views] == [SCENES[90], SCENES[180], SCENES[270], SCENES[0]]
    compass = discretize_views(g, "a", 90, label_mode="absolute")
    assert [v.orientation_label for v in compass] == ["east", "south", "west", "north"]


@given(st.floats(-720, 720, allow_nan=False))
def test_nearest_bucket_is_closest(h):
    b = nearest_bucket(h)
    assert b in (0, 90, 180, 270)
    gap = abs((h - b + 180) % 360 - 180)
    assert gap <= 45 + 1e-9


@pytest.mark.parametrize("z,floor", [(0.0, 0), (3.1, 1), (2.9, 0), (1.4, 0), (-0.5, 0), (7.5, 2)])
def test_infer_floor(z, floor):
    assert infer_floor(z) == floor


def test_perceive_with_echo_mock():
    g = NavGraph([vp("a", 0, 0, 1.4, objects=[obj("o1", "lamp", 1, 0, 1.4)], scenes=SCENES),
                  vp("b", 5, 0, 1.4, objects=[obj("o2", "lamp", 4.5, 0, 1.4)], scenes=SCENES)], [("a", "b")])
    obs = perceive(echo_perceiver, g, "a", 0.0)
    assert [v.scene_text for v in obs.views] == [SCENES[b] for b in (0, 90, 180, 270)]
    assert obs.height_m == 1.4 and obs.floor_index == 0
    assert obs.objects_in_3m == ("lamp",)
    assert obs.position_desc == "in a bright living room"


def test_perceive_without_objects():
    g = NavGraph([vp("a", 0, 0, scenes=SCENES)], [])
    obs = perceive(echo_perceiver, g, "a", 0.0, with_position=False)
    assert obs.objects_in_3m == ()
    assert obs.position_desc == ""
    assert "Objects in 3m: none." in obs.formatted_text


def test_perceive_requests_two_rounds():
    g = square(scenes=SCENES)
    p = ScriptedResponder(["front: x\nright: y\nback: z\nleft: w", "in a hall"])
    obs = perceive(p, g, "a", 0.0)
    assert [r["round"] for r in p.requests] == [1, 2]
    assert p.requests[1]["descriptions"] == ["x", "y", "z", "w"]
    assert obs.position_desc == "in a hall"


def test_perceive_incomplete_reply():
    g = square(scenes=SCENES)
    with pytest.raises(PerceptionError, match="left"):
        perceive(ScriptedResponder(["front: x\nright: y\nback: z"]), g, "a", 0.0)


def test_perceive_provider_failure_propagates():
    g = square(scenes=SCENES)
    with pytest.raises(ProviderError):
        perceive(FailingProvider(), g, "a", 0.0)


def test_missing_scenes_use_image_payloads():
    g = square()
    with pytest.raises(PerceptionError):
        discretize_views(g, "a", 0)
    p = ScriptedResponder(["front: x\nright: y\nback: z\nleft: w", "somewhere"])
    obs = perceive(p, g, "a", 90.0)
    assert [v["payload"] for v in p.requests[0]["views"]] == [
        "image://a/90", "image://a/180", "image://a/270", "image://a/0"]
    assert obs.view(0).scene_text == "x"
