#include "sscr/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sscr/render.hpp"

namespace sscr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Tensor scene_tensor(const Scene& scene) { return image_to_tensor(render(scene)); }

std::vector<std::vector<int>> past_token_ids(const Episode& ep, int turn) {
  std::vector<std::vector<int>> past;
  past.reserve(turn);
  for (int k = 0; k < turn; ++k) past.push_back(encode_instruction(ep.turns[k].text));
  return past;
}

// Counts reads of pre-final ground-truth scenes so tests can audit that
// evaluation never peeks at intermediate targets.
struct SceneAccess {
  const Episode& ep;
  long* intermediate_reads;

  const Scene& after_turn(int t) const {
    if (t + 1 < static_cast<int>(ep.turns.size())) ++*intermediate_reads;
    return ep.turns[static_cast<size_t>(t)].scene;
  }
};

struct WindowAverage {
  double sum_g = 0, sum_d = 0, sum_e = 0, sum_cf = 0;
  long count = 0;

  void reset() { *this = WindowAverage{}; }
};

// Instance noise on discriminator image inputs. Rendered scenes are saturated
// (exact 0/1 channels) while generator outputs pass through a sigmoid, so an
// unjittered discriminator can win on pixel micro-texture alone and never
// learn whether the picture matches the instruction history.
Tensor jitter(const Tensor& img, Rng& rng) {
  std::vector<double> noise(static_cast<size_t>(img.numel()));
  for (double& v : noise) v = rng.uniform(-0.05, 0.05);
  return add(img, Tensor::constant(img.shape(), std::move(noise)));
}

}  // namespace

const char* train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Baseline: return "baseline";
    case TrainMode::CtcOnly: return "ctc";
    case TrainMode::Sscr: return "sscr";
  }
  throw std::logic_error("unknown train mode");
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "baseline") return TrainMode::Baseline;
  if (name == "ctc") return TrainMode::CtcOnly;
  if (name == "sscr") return TrainMode::Sscr;
  throw std::invalid_argument("unknown train mode: " + name);
}

const char* cf_loss_source_name(CfLossSource source) {
  return source == CfLossSource::Explainer ? "explainer" : "discriminator";
}

CfLossSource cf_loss_source_from_name(const std::string& name) {
  if (name == "explainer") return CfLossSource::Explainer;
  if (name == "discriminator") return CfLossSource::Discriminator;
  throw std::invalid_argument("unknown counterfactual loss source: " + name);
}

TrainStats train_editor(EditorModel& model, ExplainerModel* explainer,
                        const std::vector<Episode>& data, TrainMode mode, const TrainConfig& cfg,
                        const std::function<void(int)>& on_epoch) {
  if (data.empty()) throw std::invalid_argument("train_editor: no episodes");
  if (mode != TrainMode::Baseline && explainer == nullptr) {
    throw std::invalid_argument("train_editor: reconstruction modes need an explainer");
  }

  TrainStats stats;
  Rng rng(cfg.seed);
  AdamConfig g_adam;
  g_adam.lr = cfg.lr_g;
  AdamConfig d_adam;
  d_adam.lr = cfg.lr_d;
  const int n = static_cast<int>(data.size());
  WindowAverage window;
  long iteration = 0;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (int idx : order) {
      const Episode& ep = data[static_cast<size_t>(idx)];
      const Episode& wrong_ep =
          data[static_cast<size_t>(n == 1 ? idx : (idx + 1 + rng.uniform_int(n - 1)) % n)];

      Tensor h = model.initial_history();
      Scene prev_scene;
      Tensor g_total = Tensor::scalar(0.0);
      Tensor d_total = Tensor::scalar(0.0);
      double rep_g = 0, rep_d = 0, rep_e = 0;

      for (size_t t = 0; t < ep.turns.size(); ++t) {
        std::vector<int> ids = encode_instruction(ep.turns[t].text);
        Tensor h_prev = h;
        h = model.history_step(model.encode_instruction(ids), h);

        Tensor prev_img = scene_tensor(prev_scene);
        Tensor real_img = scene_tensor(ep.turns[t].scene);
        Tensor fake = model.generate(prev_img, h);

        // Non-saturating generator objective; reported value is ln D(fake).
        Tensor g_gan = softplus_t(scale(model.discriminate(jitter(fake, rng), h), -1.0));
        g_total = add(g_total, g_gan);
        rep_g += -g_gan.scalar_value();

        if (mode != TrainMode::Baseline) {
          HistoryEncoding eh = explainer->encode_history(past_token_ids(ep, static_cast<int>(t)));
          Tensor l_e = ctc_loss(explainer->reconstruction_logits(fake, prev_img, eh, ids), ids);
          ++stats.explainer_calls;
          g_total = add(g_total, scale(l_e, cfg.ctc_weight));
          rep_e += l_e.scalar_value();
        }

        // Discriminator terms: real pair, detached fake, and the real image
        // against a history whose current instruction comes from another
        // episode at the same turn index.
        Tensor h_det = h.detached();
        std::vector<int> wrong_ids = encode_instruction(wrong_ep.turns[t].text);
        Tensor h_wrong =
            model.history_step(model.encode_instruction(wrong_ids), h_prev).detached();
        Tensor d_real = bce_with_logits(model.discriminate(jitter(real_img, rng), h_det), 1.0);
        Tensor d_fake =
            bce_with_logits(model.discriminate(jitter(fake.detached(), rng), h_det), 0.0);
        Tensor d_wrong = bce_with_logits(model.discriminate(jitter(real_img, rng), h_wrong), 0.0);
        Tensor d_loss = add(d_real, scale(add(d_fake, d_wrong), 0.5));
        d_total = add(d_total, d_loss);
        rep_d += -d_loss.scalar_value();

        prev_scene = ep.turns[t].scene;
      }

      backward(g_total);
      model.generator_store().adam_step(g_adam);
      ++stats.generator_steps;
      // The generator pass leaked grads into the discriminator (and frozen
      // explainer) stores; drop them before the discriminator's own step.
      model.discriminator_store().zero_grads();
      if (explainer != nullptr) explainer->store().zero_grads();

      backward(d_total);
      model.discriminator_store().adam_step(d_adam);
      ++stats.discriminator_steps;

      ++iteration;
      window.sum_g += rep_g;
      window.sum_d += rep_d;
      window.sum_e += rep_e;
      ++window.count;
      if (iteration % cfg.log_every == 0) {
        stats.curves.push_back({iteration, window.sum_g / window.count,
                                window.sum_d / window.count,
                                mode == TrainMode::Baseline ? kNaN : window.sum_e / window.count,
                                kNaN});
        window.reset();
      }
    }
    if (on_epoch) on_epoch(epoch);
  }
  if (window.count > 0) {
    stats.curves.push_back({iteration, window.sum_g / window.count, window.sum_d / window.count,
                            mode == TrainMode::Baseline ? kNaN : window.sum_e / window.count,
                            kNaN});
  }
  return stats;
}

void counterfactual_phase(EditorModel& model, ExplainerModel* explainer,
                          const std::vector<Episode>& data, const TrainConfig& cfg,
                          TrainStats& stats) {
  if (data.empty()) throw std::invalid_argument("counterfactual_phase: no episodes");
  if (cfg.cf_source == CfLossSource::Explainer && explainer == nullptr) {
    throw std::invalid_argument("counterfactual_phase: explainer loss needs an explainer");
  }

  AdamConfig cf_adam;
  cf_adam.lr = cfg.lr_cf;
  const int n = static_cast<int>(data.size());
  const long start = stats.counterfactual_steps;
  WindowAverage window;

  for (int k = 0; k < cfg.cf_iterations; ++k) {
    const long iter = start + k;
    Rng r = Rng(cfg.seed).child(static_cast<std::uint64_t>(iter));
    const Episode& ep = data[static_cast<size_t>(r.uniform_int(n))];

    Tensor h_prev = model.initial_history();
    Scene prev_scene;
    Tensor total = Tensor::scalar(0.0);
    double rep_cf = 0;

    for (size_t t = 0; t < ep.turns.size(); ++t) {
      ParsedEdit cf_edit = intervene(ep.turns[t].edit, r);
      std::vector<int> cf_ids = encode_instruction(synthesize(cf_edit));
      Tensor h_cf = model.history_step(model.encode_instruction(cf_ids), h_prev);
      Tensor prev_img = scene_tensor(prev_scene);
      Tensor v_cf = model.generate(prev_img, h_cf);

      Tensor loss_t;
      if (cfg.cf_source == CfLossSource::Explainer) {
        HistoryEncoding eh = explainer->encode_history(past_token_ids(ep, static_cast<int>(t)));
        loss_t = ctc_loss(explainer->reconstruction_logits(v_cf, prev_img, eh, cf_ids), cf_ids);
        ++stats.explainer_calls;
      } else {
        loss_t = softplus_t(scale(model.discriminate(v_cf, h_cf), -1.0));
      }
      total = add(total, loss_t);
      rep_cf += loss_t.scalar_value();

      // Real history and teacher-forced canvas advance regardless of the
      // counterfactual branch.
      h_prev = model.history_step(
          model.encode_instruction(encode_instruction(ep.turns[t].text)), h_prev);
      prev_scene = ep.turns[t].scene;
    }

    backward(total);
    model.generator_store().adam_step(cf_adam);
    model.discriminator_store().zero_grads();
    if (explainer != nullptr) explainer->store().zero_grads();
    ++stats.counterfactual_steps;

    window.sum_cf += rep_cf;
    ++window.count;
    if (stats.counterfactual_steps % cfg.log_every == 0) {
      stats.curves.push_back({stats.generator_steps + stats.counterfactual_steps, kNaN, kNaN, kNaN,
                              window.sum_cf / window.count});
      window.reset();
    }
  }
  if (window.count > 0) {
    stats.curves.push_back({stats.generator_steps + stats.counterfactual_steps, kNaN, kNaN, kNaN,
                            window.sum_cf / window.count});
  }
}

EvalResult evaluate_editor(const EditorModel& model, const std::vector<Episode>& episodes) {
  EvalResult res;
  for (const Episode& ep : episodes) {
    SceneAccess access{ep, &res.intermediate_scene_reads};
    Tensor h = model.initial_history();
    Tensor canvas = scene_tensor(Scene{});
    for (size_t t = 0; t < ep.turns.size(); ++t) {
      std::vector<int> ids = encode_instruction(ep.turns[t].text);
      h = model.history_step(model.encode_instruction(ids), h).detached();
      canvas = model.generate(canvas, h).detached();
    }
    Scene pred = detect(tensor_to_image(canvas));
    const Scene& truth = access.after_turn(static_cast<int>(ep.turns.size()) - 1);

    F1Counts ep_counts;
    ep_counts.add(pred, truth);
    double ep_relsim = relsim(pred, truth);
    res.counts.add(pred, truth);
    res.relsim += ep_relsim;
    res.per_episode.push_back({ep.id, f1_from_counts(ep_counts).f1, ep_relsim});
    ++res.episodes;
  }
  if (res.episodes > 0) res.relsim /= static_cast<double>(res.episodes);
  res.objects = f1_from_counts(res.counts);
  return res;
}

EvalResult evaluate_oracle(const std::vector<Episode>& episodes) {
  EvalResult res;
  for (const Episode& ep : episodes) {
    SceneAccess access{ep, &res.intermediate_scene_reads};
    Scene state;
    for (const Turn& turn : ep.turns) state = apply_edit(state, parse(turn.text));
    Scene pred = detect(render(state));
    const Scene& truth = access.after_turn(static_cast<int>(ep.turns.size()) - 1);

    F1Counts ep_counts;
    ep_counts.add(pred, truth);
    double ep_relsim = relsim(pred, truth);
    res.counts.add(pred, truth);
    res.relsim += ep_relsim;
    res.per_episode.push_back({ep.id, f1_from_counts(ep_counts).f1, ep_relsim});
    ++res.episodes;
  }
  if (res.episodes > 0) res.relsim /= static_cast<double>(res.episodes);
  res.objects = f1_from_counts(res.counts);
  return res;
}

ExplainerQuality pretrain_explainer(ExplainerModel& model, const std::vector<Episode>& train,
                                    const std::vector<Episode>& val, const PretrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("pretrain_explainer: no episodes");
  Rng rng(cfg.seed);
  AdamConfig adam;
  adam.lr = cfg.lr;

  std::vector<std::pair<int, int>> samples;
  for (size_t i = 0; i < train.size(); ++i) {
    for (size_t t = 0; t < train[i].turns.size(); ++t) {
      samples.emplace_back(static_cast<int>(i), static_cast<int>(t));
    }
  }

  std::vector<double> train_ppl;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.lr = epoch >= cfg.decay_after ? cfg.lr * cfg.decay_factor : cfg.lr;
    rng.shuffle(samples);
    double nll = 0;
    long tokens = 0;
    for (auto [i, t] : samples) {
      const Episode& ep = train[static_cast<size_t>(i)];
      std::vector<int> ids = encode_instruction(ep.turns[static_cast<size_t>(t)].text);
      HistoryEncoding eh = model.encode_history(past_token_ids(ep, t));
      Tensor prev_img = scene_tensor(t == 0 ? Scene{} : ep.turns[static_cast<size_t>(t - 1)].scene);
      Tensor img = scene_tensor(ep.turns[static_cast<size_t>(t)].scene);
      Tensor loss = ctc_loss(model.reconstruction_logits(img, prev_img, eh, ids), ids);
      nll += loss.scalar_value();
      tokens += reference_target_count(ids);
      backward(loss);
      model.store().adam_step(adam);
    }
    train_ppl.push_back(perplexity(nll, tokens));
  }

  model.freeze();
  ExplainerQuality q = evaluate_explainer(model, val);
  q.train_ppl_per_epoch = std::move(train_ppl);
  return q;
}

ExplainerQuality evaluate_explainer(const ExplainerModel& model,
                                    const std::vector<Episode>& episodes) {
  ExplainerQuality q;
  double nll = 0;
  long tokens = 0;
  long correct = 0;
  long total = 0;
  std::vector<std::vector<int>> hyps, refs;

  for (const Episode& ep : episodes) {
    for (size_t t = 0; t < ep.turns.size(); ++t) {
      std::vector<int> ids = encode_instruction(ep.turns[t].text);
      HistoryEncoding eh = model.encode_history(past_token_ids(ep, static_cast<int>(t)));
      Tensor prev_img = scene_tensor(t == 0 ? Scene{} : ep.turns[t - 1].scene);
      Tensor img = scene_tensor(ep.turns[t].scene);

      auto logits = model.reconstruction_logits(img, prev_img, eh, ids);
      nll += ctc_loss(logits, ids).scalar_value();
      tokens += static_cast<long>(logits.size());

      int targets = reference_target_count(ids);
      std::vector<int> decoded = model.explain(img, prev_img, eh, model.config().max_len);
      std::vector<int> hyp, ref;
      for (int i = 0; i < targets; ++i) {
        ++total;
        if (decoded[static_cast<size_t>(i)] == ids[static_cast<size_t>(i + 1)]) ++correct;
        if (ids[static_cast<size_t>(i + 1)] != kEosId) ref.push_back(ids[static_cast<size_t>(i + 1)]);
      }
      for (int id : decoded) {
        if (id == kEosId || id == kPadId) break;
        hyp.push_back(id);
      }
      hyps.push_back(std::move(hyp));
      refs.push_back(std::move(ref));
    }
  }

  q.ppl = perplexity(nll, tokens);
  q.bleu = bleu4(hyps, refs);
  q.token_accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  return q;
}

}  // namespace sscr
