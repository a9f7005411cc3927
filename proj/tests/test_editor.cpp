#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sscr/editor.hpp"
#include "sscr/episodes.hpp"
#include "sscr/grammar.hpp"
#include "sscr/render.hpp"
#include "support/gradcheck.hpp"

using namespace sscr;

namespace {

Tensor scene_image(const Scene& scene) { return image_to_tensor(render(scene)); }

Scene two_object_scene() {
  Scene s;
  s.placements.push_back({{Color::Red, Shape3::Cube}, 4, 4});
  s.placements.push_back({{Color::Blue, Shape3::Sphere}, 3, 4});
  return s;
}

}  // namespace

TEST_CASE("construction is seed-deterministic") {
  EditorModel a(EditorConfig{}, 11), b(EditorConfig{}, 11), c(EditorConfig{}, 12);
  CHECK(a.generator_store().checksum() == b.generator_store().checksum());
  CHECK(a.discriminator_store().checksum() == b.discriminator_store().checksum());
  CHECK(a.generator_store().checksum() != c.generator_store().checksum());
  CHECK(a.discriminator_store().checksum() != c.discriminator_store().checksum());
}

TEST_CASE("instruction code reacts to a single changed token across 100 seeds") {
  std::vector<int> a = encode_instruction("add a red cube at the center");
  std::vector<int> b = encode_instruction("add a blue cube at the center");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EditorModel model(EditorConfig{}, seed);
    Tensor da = model.encode_instruction(a);
    Tensor db = model.encode_instruction(b);
    CHECK(da.dim(0) == model.config().instruction_dim());
    bool differs = false;
    for (size_t i = 0; i < da.values().size(); ++i) {
      if (da.values()[i] != db.values()[i]) differs = true;
    }
    CHECK(differs);
  }
}

TEST_CASE("padding after EOS does not change the instruction code") {
  EditorModel model(EditorConfig{}, 3);
  std::vector<int> padded = encode_instruction("add a red cube at the center");
  std::vector<int> stripped;
  for (int id : padded) {
    if (id == kPadId) break;
    stripped.push_back(id);
  }
  CHECK(model.encode_instruction(padded).values() ==
        model.encode_instruction(stripped).values());
}

TEST_CASE("history depends on instruction order across 100 seeds") {
  std::vector<int> a = encode_instruction("add a red cube at the center");
  std::vector<int> b = encode_instruction("add a blue sphere behind the red cube");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EditorModel model(EditorConfig{}, seed);
    Tensor h0 = model.initial_history();
    Tensor ab = model.history_step(model.encode_instruction(b),
                                   model.history_step(model.encode_instruction(a), h0));
    Tensor ba = model.history_step(model.encode_instruction(a),
                                   model.history_step(model.encode_instruction(b), h0));
    bool differs = false;
    for (size_t i = 0; i < ab.values().size(); ++i) {
      if (ab.values()[i] != ba.values()[i]) differs = true;
    }
    CHECK(differs);
  }
}

TEST_CASE("initial history is zero") {
  EditorModel model(EditorConfig{}, 5);
  Tensor h0 = model.initial_history();
  for (double v : h0.values()) CHECK(v == 0.0);
}

TEST_CASE("generate keeps image shape and open-interval range") {
  EditorModel model(EditorConfig{}, 9);
  Tensor h = model.history_step(
      model.encode_instruction(encode_instruction("add a red cube at the center")),
      model.initial_history());
  Tensor out = model.generate(scene_image(two_object_scene()), h);
  REQUIRE(out.rank() == 3);
  CHECK(out.dim(0) == kImageSize);
  CHECK(out.dim(1) == kImageSize);
  CHECK(out.dim(2) == 3);
  for (double v : out.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("untrained generator approximately copies the previous canvas") {
  // The residual path dominates random weights at init, so detection results
  // survive a generator pass untouched.
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    EditorModel model(EditorConfig{}, seed);
    Tensor h = model.history_step(
        model.encode_instruction(encode_instruction("add a gray cube at the center")),
        model.initial_history());
    Scene scene = two_object_scene();
    Tensor out = model.generate(scene_image(scene), h);
    CHECK(detect(tensor_to_image(out)) == scene);
  }
}

TEST_CASE("repeated untrained passes keep an empty canvas empty") {
  EditorModel model(EditorConfig{}, 4);
  Tensor h = model.history_step(
      model.encode_instruction(encode_instruction("add a red cube at the center")),
      model.initial_history());
  Tensor canvas = scene_image(Scene{});
  for (int i = 0; i < 5; ++i) canvas = model.generate(canvas, h).detached();
  CHECK(detect(tensor_to_image(canvas)).placements.empty());
}

TEST_CASE("generate is deterministic") {
  EditorModel model(EditorConfig{}, 13);
  Tensor h = model.history_step(
      model.encode_instruction(encode_instruction("add a cyan cylinder at the center")),
      model.initial_history());
  Tensor img = scene_image(two_object_scene());
  CHECK(model.generate(img, h).values() == model.generate(img, h).values());
}

TEST_CASE("discriminator returns a finite scalar sensitive to the history") {
  EditorModel model(EditorConfig{}, 21);
  Tensor img = scene_image(two_object_scene());
  Tensor ha = model.history_step(
      model.encode_instruction(encode_instruction("add a red cube at the center")),
      model.initial_history());
  Tensor hb = model.history_step(
      model.encode_instruction(encode_instruction("add a blue cube at the center")),
      model.initial_history());
  Tensor la = model.discriminate(img, ha);
  Tensor lb = model.discriminate(img, hb);
  REQUIRE(la.dim(0) == 1);
  CHECK(std::isfinite(la.scalar_value()));
  CHECK(la.scalar_value() != lb.scalar_value());
}

TEST_CASE("generator and discriminator stores update independently") {
  EditorModel model(EditorConfig{}, 17);
  Tensor img = scene_image(two_object_scene());
  Tensor h = model.history_step(
      model.encode_instruction(encode_instruction("add a red cube at the center")),
      model.initial_history());

  const std::uint64_t g0 = model.generator_store().checksum();
  const std::uint64_t d0 = model.discriminator_store().checksum();

  // Discriminator step: gradients flow into both stores, but only the
  // discriminator store is stepped.
  backward(model.discriminate(model.generate(img, h), h));
  model.discriminator_store().adam_step({});
  model.generator_store().zero_grads();
  CHECK(model.discriminator_store().checksum() != d0);
  CHECK(model.generator_store().checksum() == g0);
  CHECK(model.discriminator_store().step_count() == 1);
  CHECK(model.generator_store().step_count() == 0);

  // Generator step through a loss that never touches the discriminator.
  const std::uint64_t d1 = model.discriminator_store().checksum();
  backward(mean_all(model.generate(img, h)));
  model.generator_store().adam_step({});
  CHECK(model.generator_store().checksum() != g0);
  CHECK(model.discriminator_store().checksum() == d1);
  CHECK(model.generator_store().step_count() == 1);
}

TEST_CASE("composite gradients: generator, discriminator, history chain") {
  EditorModel model(EditorConfig{}, 33);
  Tensor img = scene_image(two_object_scene());
  Tensor prev = scene_image(Scene{});
  std::vector<int> ids = encode_instruction("add a blue sphere behind the red cube");

  std::vector<std::pair<std::string, Tensor>> gen_leaves;
  for (const std::string& name :
       {"embed", "hist_wn", "instr_fwd_wz", "enc_w", "gen_pos", "gen_wq", "gen_w1", "gen_w2",
        "gen_b2"}) {
    gen_leaves.emplace_back(name, model.generator_store().get(name));
  }
  std::vector<std::pair<std::string, Tensor>> disc_leaves;
  for (const std::string& name : {"disc_w1", "disc_b1", "disc_wo", "disc_bo", "disc_wp", "disc_wq"}) {
    disc_leaves.emplace_back(name, model.discriminator_store().get(name));
  }

  auto rollout_loss = [&] {
    Tensor h = model.history_step(model.encode_instruction(ids), model.initial_history());
    Tensor fake = model.generate(prev, h);
    return softplus_t(scale(model.discriminate(fake, h), -1.0));
  };

  auto all = gen_leaves;
  all.insert(all.end(), disc_leaves.begin(), disc_leaves.end());
  auto failures = sscr::testing::sampled_gradcheck(all, rollout_loss, 60, 99);
  for (const auto& f : failures) {
    CAPTURE(f.where);
    CAPTURE(f.analytic);
    CAPTURE(f.numeric);
    CHECK(f.rel_err <= 1e-4);
  }
  CHECK(failures.empty());

  auto d_loss = [&] {
    Tensor h = model.history_step(model.encode_instruction(ids), model.initial_history());
    return bce_with_logits(model.discriminate(img, h.detached()), 1.0);
  };
  auto d_failures = sscr::testing::sampled_gradcheck(disc_leaves, d_loss, 40, 7);
  CHECK(d_failures.empty());
}
