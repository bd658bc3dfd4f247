#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "hlsm/sim.hpp"
#include "test_util.hpp"

using namespace hlsm;
using hlsm_test::cls;

namespace {

WorldState scene_from(const std::string& text) {
  std::istringstream in(text);
  return load_scene(in, hlsm_test::classes());
}

const char* kMinimalScene = R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 0
floor 1 1 11 11
wall 0 0 12 0 0 7
wall 0 12 12 12 0 7
wall 0 0 0 12 0 7
wall 12 0 12 12 0 7
object table1 Table box 5 9 1 6 9 2
object mug1 Mug voxel 5 9 3
task PickAndPlace Mug Table
)";

// Mask of exactly the pixels showing a given object id.
Mask2D mask_of(const WorldState& w, const std::string& id) {
  const SceneRaycast rc = raycast_scene(w);
  const int idx = w.object_index.at(id);
  Mask2D m(w.camera.width, w.camera.height, 0);
  for (int u = 0; u < w.camera.width; ++u)
    for (int v = 0; v < w.camera.height; ++v)
      if (rc.hit_object.at(u, v) == idx) m.at(u, v) = 1;
  return m;
}

}  // namespace

TEST_CASE("minimal scene loads deterministically") {
  const WorldState w = scene_from(kMinimalScene);
  CHECK(w.grid.dims_x == 13);
  CHECK(w.agent.x == 6);
  CHECK(w.objects.size() == 2);
  CHECK(w.task.type == TaskType::PickAndPlace);
  CHECK(w.static_class.at(0, 0, 3) == cls("Wall"));
  CHECK(w.static_class.at(5, 5, 0) == cls("Floor"));
}

TEST_CASE("scene validation names the offending object") {
  SECTION("voxel out of bounds") {
    const std::string bad = std::string(kMinimalScene) + "object stray Mug voxel 99 0 0\n";
    try {
      scene_from(bad);
      FAIL("expected SceneError");
    } catch (const SceneError& e) {
      CHECK(std::string(e.what()).find("stray") != std::string::npos);
    }
  }
  SECTION("duplicate id") {
    const std::string bad = std::string(kMinimalScene) + "object mug1 Mug voxel 4 4 1\n";
    REQUIRE_THROWS_AS(scene_from(bad), SceneError);
  }
  SECTION("overlapping objects") {
    const std::string bad = std::string(kMinimalScene) + "object mug2 Mug voxel 5 9 3\n";
    REQUIRE_THROWS_AS(scene_from(bad), SceneError);
  }
  SECTION("missing container") {
    const std::string bad = std::string(kMinimalScene) + "object mug2 Mug voxel 4 4 1 in=ghost\n";
    REQUIRE_THROWS_AS(scene_from(bad), SceneError);
  }
}

TEST_CASE("MoveAhead into a wall fails without mutating the world") {
  WorldState w = scene_from(kMinimalScene);
  w.agent = {6, 11, Yaw::North, 0};  // wall at y = 12
  const auto [w2, ok] = transition(w, EnvAction::nav(EnvAction::Kind::MoveAhead));
  CHECK_FALSE(ok);
  CHECK(w2.agent.y == 11);
  const auto [w3, ok3] = transition(w, EnvAction::nav(EnvAction::Kind::RotateRight));
  CHECK(ok3);
  CHECK(w3.agent.yaw == Yaw::East);
}

TEST_CASE("MoveAhead into free space advances one cell") {
  const WorldState w = scene_from(kMinimalScene);
  const auto [w2, ok] = transition(w, EnvAction::nav(EnvAction::Kind::MoveAhead));
  CHECK(ok);
  CHECK(w2.agent.y == 7);
}

TEST_CASE("look actions clamp to the pitch range") {
  WorldState w = scene_from(kMinimalScene);
  w.agent.pitch = -30;
  const auto [w2, ok] = transition(w, EnvAction::nav(EnvAction::Kind::LookUp));
  CHECK_FALSE(ok);
  const auto [w3, ok3] = transition(w, EnvAction::nav(EnvAction::Kind::LookDown));
  CHECK(ok3);
  CHECK(w3.agent.pitch == 0);
}

TEST_CASE("PickUp via the instance mask picks the mug") {
  WorldState w = scene_from(kMinimalScene);
  w.agent = {5, 7, Yaw::North, 30};  // two cells south of the mug, looking at it
  const auto [w2, ok] = transition(w, EnvAction::interact(SubgoalType::PickUp, mask_of(w, "mug1")));
  REQUIRE(ok);
  CHECK(w2.held == "mug1");
  CHECK(w2.find("mug1")->voxels.empty());
  CHECK(w2.inventory().held_class() == cls("Mug"));
  // a second pickup with a full hand fails
  const auto [w3, ok3] =
      transition(w2, EnvAction::interact(SubgoalType::PickUp, mask_of(w2, "table1")));
  CHECK_FALSE(ok3);
}

TEST_CASE("interactions out of reach fail") {
  WorldState w = scene_from(kMinimalScene);
  w.agent = {6, 2, Yaw::North, 0};  // 7 cells from the mug
  const auto [w2, ok] = transition(w, EnvAction::interact(SubgoalType::PickUp, mask_of(w, "mug1")));
  CHECK_FALSE(ok);
}

TEST_CASE("ToggleOn on a non-togglable target fails") {
  WorldState w = scene_from(kMinimalScene);
  w.agent = {5, 7, Yaw::North, 30};
  const auto [w2, ok] =
      transition(w, EnvAction::interact(SubgoalType::ToggleOn, mask_of(w, "table1")));
  CHECK_FALSE(ok);
}

TEST_CASE("Put places the held object on the receptacle and containment tracks it") {
  WorldState w = scene_from(kMinimalScene);
  w.agent = {5, 7, Yaw::North, 30};
  auto [w2, ok] = transition(w, EnvAction::interact(SubgoalType::PickUp, mask_of(w, "mug1")));
  REQUIRE(ok);
  auto [w3, ok3] = transition(w2, EnvAction::interact(SubgoalType::Put, mask_of(w2, "table1")));
  REQUIRE(ok3);
  CHECK_FALSE(w3.held.has_value());
  const ObjectInstance* mug = w3.find("mug1");
  REQUIRE(mug->contained_in == "table1");
  REQUIRE(mug->voxels.size() == 1);
  CHECK(mug->voxels[0].z == 3);  // one above the table top
  const auto [sat, total] = goal_conditions(w3.task, w3);
  CHECK(sat == 1);
  CHECK(total == 1);
}

TEST_CASE("transition is deterministic") {
  const WorldState w = scene_from(kMinimalScene);
  const auto a = transition(w, EnvAction::nav(EnvAction::Kind::MoveAhead));
  const auto b = transition(w, EnvAction::nav(EnvAction::Kind::MoveAhead));
  CHECK(a.second == b.second);
  CHECK(a.first.agent == b.first.agent);
}

TEST_CASE("oracle depth puts a wall one meter ahead in bin 10") {
  // free-standing wall column at (6,10): front face 0.875 m from the camera,
  // chord midpoint exactly 1.0 m
  const WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 0
floor 1 1 11 11
wall 6 10 6 10 0 7
task Examine Book
object book1 Book voxel 2 2 1
)"));
  const Observation o = render(w);
  // the pixel straight ahead: u = 31 or 32 both graze the axis; use 32
  const int u = 32, v = 32;
  CHECK(o.depth.argmax_bin(u, v) == 10);
  CHECK(o.depth.at(u, v, 10) == 1.0);
  CHECK(o.seg.argmax_class(u, v) == cls("Wall"));
}

TEST_CASE("rendering respects occlusion") {
  // mug behind the free-standing wall: no pixel may show it
  const WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 0
floor 1 1 11 11
wall 4 9 8 9 0 7
object mug1 Mug voxel 6 10 1
task PickAndPlace Mug Table
object table1 Table box 2 2 1 2 2 2
)"));
  const SceneRaycast rc = raycast_scene(w);
  const int mug_idx = w.object_index.at("mug1");
  for (int u = 0; u < 64; ++u)
    for (int v = 0; v < 64; ++v) REQUIRE(rc.hit_object.at(u, v) != mug_idx);
}

TEST_CASE("closed receptacles hide their contents from rendering") {
  WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 30
floor 1 1 11 11
object micro1 Microwave box 6 9 1 6 9 2
object apple1 Apple voxel 6 9 3 in=micro1
task HeatAndPlace Apple Table
object table1 Table box 2 2 1 2 2 2
)"));
  const int apple_idx = w.object_index.at("apple1");
  {
    const SceneRaycast rc = raycast_scene(w);
    bool seen = false;
    for (int u = 0; u < 64 && !seen; ++u)
      for (int v = 0; v < 64 && !seen; ++v) seen = rc.hit_object.at(u, v) == apple_idx;
    REQUIRE_FALSE(seen);  // door closed
  }
  w.find("micro1")->open = true;
  {
    const SceneRaycast rc = raycast_scene(w);
    bool seen = false;
    for (int u = 0; u < 64 && !seen; ++u)
      for (int v = 0; v < 64 && !seen; ++v) seen = rc.hit_object.at(u, v) == apple_idx;
    REQUIRE(seen);
  }
}

TEST_CASE("depth noise spreads mass over neighboring bins and still sums to one") {
  const WorldState w = scene_from(kMinimalScene);
  NoiseConfig noise;
  noise.depth_sigma = 0.1;
  Rng rng(7);
  const Observation o = render(w, SimConfig{}, noise, &rng);
  const int u = 32, v = 32;
  double total = 0.0;
  int nonzero = 0;
  for (int b = 0; b < o.depth.bins(); ++b) {
    total += o.depth.at(u, v, b);
    nonzero += o.depth.at(u, v, b) > 1e-6 ? 1 : 0;
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
  CHECK(nonzero >= 3);
}

TEST_CASE("heat, cool, and clean state machines trigger on the right actions") {
  WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 30
floor 1 1 11 11
object micro1 Microwave box 6 8 1 6 8 2 open
object apple1 Apple voxel 6 8 3 in=micro1
object fridge1 Fridge box 3 6 1 3 6 3 open
object tomato1 Tomato voxel 3 6 4 in=fridge1
object sink1 Sink box 9 6 1 9 6 2
object mug1 Mug voxel 9 6 3 in=sink1
object faucet1 Faucet voxel 9 7 4
task HeatAndPlace Apple Table
object table1 Table box 2 2 1 2 2 2
)"));
  // heat: close -> on -> off, facing the microwave
  auto r = transition(w, EnvAction::interact(SubgoalType::Close, mask_of(w, "micro1")));
  REQUIRE(r.second);
  r = transition(r.first, EnvAction::interact(SubgoalType::ToggleOn, mask_of(r.first, "micro1")));
  REQUIRE(r.second);
  REQUIRE_FALSE(r.first.find("apple1")->hot);
  r = transition(r.first, EnvAction::interact(SubgoalType::ToggleOff, mask_of(r.first, "micro1")));
  REQUIRE(r.second);
  CHECK(r.first.find("apple1")->hot);

  // cool: closing the fridge chills contents
  r.first.agent = {5, 6, Yaw::West, 30};
  r = transition(r.first, EnvAction::interact(SubgoalType::Close, mask_of(r.first, "fridge1")));
  REQUIRE(r.second);
  CHECK(r.first.find("tomato1")->cold);

  // clean: faucet on washes sink contents
  r.first.agent = {7, 6, Yaw::East, 30};
  REQUIRE_FALSE(r.first.find("mug1")->clean);
  r = transition(r.first, EnvAction::interact(SubgoalType::ToggleOn, mask_of(r.first, "faucet1")));
  REQUIRE(r.second);
  CHECK(r.first.find("mug1")->clean);
}

TEST_CASE("slice replaces the instance with a fresh deterministic id") {
  WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 30
floor 1 1 11 11
object knife1 Knife voxel 5 7 1
object bread1 Bread voxel 6 8 1
task PickAndPlace Bread Table sliced
object table1 Table box 2 2 1 2 2 2
)"));
  w.agent = {5, 6, Yaw::North, 60};
  auto r = transition(w, EnvAction::interact(SubgoalType::PickUp, mask_of(w, "knife1")));
  REQUIRE(r.second);
  const size_t count_before = r.first.objects.size();
  r = transition(r.first, EnvAction::interact(SubgoalType::Slice, mask_of(r.first, "bread1")));
  REQUIRE(r.second);
  CHECK(r.first.objects.size() == count_before);  // replaced, not added
  CHECK(r.first.find("bread1") == nullptr);
  const ObjectInstance* part = r.first.find("bread1_sliced");
  REQUIRE(part != nullptr);
  CHECK(part->sliced);
  CHECK(part->cls == cls("Bread"));
  // slicing without a knife fails
  const auto bad = transition(w, EnvAction::interact(SubgoalType::Slice, mask_of(w, "bread1")));
  CHECK_FALSE(bad.second);
}

TEST_CASE("goal_conditions counts partial progress") {
  WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 64 64 90 1.5
agent 6 6 North 30
floor 1 1 11 11
object table1 Table box 2 2 1 2 2 2
object apple1 Apple voxel 2 2 3 in=table1
task HeatAndPlace Apple Table
)"));
  const auto [sat, total] = goal_conditions(w.task, w);
  CHECK(total == 2);
  CHECK(sat == 1);  // placed but not hot
  w.find("apple1")->hot = true;
  const auto [sat2, total2] = goal_conditions(w.task, w);
  CHECK(sat2 == 2);
}

TEST_CASE("random action streams never create or destroy instances except Slice") {
  WorldState w = scene_from(std::string(R"(HLSMSCENE v1
dims 13 13 10
voxel_size 0.25
camera 32 32 90 1.5
agent 6 6 North 30
floor 1 1 11 11
wall 0 0 12 0 0 7
wall 0 12 12 12 0 7
wall 0 0 0 12 0 7
wall 12 0 12 12 0 7
object table1 Table box 5 9 1 6 9 2
object mug1 Mug voxel 5 9 3
object knife1 Knife voxel 4 4 1
object bread1 Bread voxel 8 4 1
task PickAndPlace Mug Table
)"));
  Rng rng(99);
  size_t expected_count = w.objects.size();
  for (int step = 0; step < 300; ++step) {
    EnvAction a;
    const int kind = static_cast<int>(rng.next_below(7));
    if (kind < 4) {
      const EnvAction::Kind nav[] = {EnvAction::Kind::MoveAhead, EnvAction::Kind::RotateLeft,
                                     EnvAction::Kind::RotateRight, EnvAction::Kind::LookDown};
      a = EnvAction::nav(nav[kind]);
    } else {
      // aim at a random object's pixels (possibly empty if not visible)
      const auto& obj = w.objects[rng.next_below(w.objects.size())];
      a = EnvAction::interact(static_cast<SubgoalType>(rng.next_below(7)), mask_of(w, obj.id));
    }
    const bool was_slice = a.kind == EnvAction::Kind::Interact &&
                           a.interaction == SubgoalType::Slice;
    auto [next, ok] = transition(w, a);
    if (ok && was_slice) {
      // replacement, not addition
      REQUIRE(next.objects.size() == expected_count);
    } else {
      REQUIRE(next.objects.size() == expected_count);
    }
    // no two solids ever share a voxel
    Grid3<int> occ(13, 13, 10, -1);
    for (size_t i = 0; i < next.objects.size(); ++i) {
      for (const Voxel& v : next.objects[i].voxels) {
        REQUIRE(next.static_class.at(v) < 0);
        REQUIRE(occ.at(v) < 0);
        occ.at(v) = static_cast<int>(i);
      }
    }
    // the agent never ends up inside an obstacle column
    REQUIRE_FALSE(next.column_blocked(next.agent.x, next.agent.y, 7));
    w = std::move(next);
  }
}

TEST_CASE("augment is the identity at sigma zero and clamps at extreme sigma") {
  Rng render_rng(3);
  RgbImage img(16, 16);
  for (auto& v : img.v) v = render_rng.next_double();
  SegImage seg(16, 16, 4);
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 16; ++u) seg.set_delta(u, v, (u + v) % 4);

  SECTION("sigma 0 is bit-identity for any seed") {
    for (uint64_t seed : {0ull, 1ull, 99ull}) {
      Rng rng(seed);
      const RgbImage out = augment(img, seg, {1, 2, 3}, AugmentParams{0.0, 0.0, 0.0}, rng);
      REQUIRE(out == img);
    }
  }
  SECTION("extreme sigma stays in bounds") {
    Rng rng(17);
    const RgbImage out = augment(img, seg, {1, 2, 3}, AugmentParams{1e4, 1e4, 1e4}, rng);
    for (double v : out.v) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
  }
  SECTION("classes outside the variable set are untouched") {
    Rng rng(17);
    const RgbImage out = augment(img, seg, {2}, AugmentParams{}, rng);
    for (int v = 0; v < 16; ++v)
      for (int u = 0; u < 16; ++u) {
        if ((u + v) % 4 == 2) continue;
        for (int ch = 0; ch < 3; ++ch) REQUIRE(out.at(ch, u, v) == img.at(ch, u, v));
      }
  }
}
