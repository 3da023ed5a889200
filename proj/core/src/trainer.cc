// Copyright 2026 The xtts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xtts/trainer.h"

#include <glog/logging.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "xtts/optim.h"

namespace xtts {

namespace {

// Named random streams derived from TrainConfig::seed.
constexpr std::uint64_t kStreamSampler = 11;
constexpr std::uint64_t kStreamCross = 12;
constexpr std::uint64_t kStreamDropout = 13;
constexpr std::uint64_t kStreamValidation = 14;

constexpr int kValidationItems = 16;

}  // namespace

std::string StageName(Stage stage) {
  switch (stage) {
    case Stage::kBaseline: return "baseline";
    case Stage::kMtl: return "mtl";
    case Stage::kSpkClassifier: return "spk_classifier";
    case Stage::kJoint: return "joint";
  }
  return "unknown";
}

Stage ParseStage(const std::string& name) {
  if (name == "baseline") return Stage::kBaseline;
  if (name == "mtl") return Stage::kMtl;
  if (name == "spk_classifier") return Stage::kSpkClassifier;
  if (name == "joint") return Stage::kJoint;
  throw std::invalid_argument("unknown stage '" + name + "' (expected baseline, mtl, spk_classifier or joint)");
}

// ---- TrainConfig ---------------------------------------------------------------

TrainConfig TrainConfig::FromKv(const KvConfig& kv, const std::string& prefix) {
  return FromKv(kv, prefix, TrainConfig());
}

TrainConfig TrainConfig::FromKv(const KvConfig& kv, const std::string& prefix, const TrainConfig& base) {
  TrainConfig c = base;
  auto key = [&](const char* k) { return prefix + k; };
  c.batch_size = static_cast<int>(kv.GetInt(key("batch_size"), c.batch_size));
  c.steps = static_cast<int>(kv.GetInt(key("steps"), c.steps));
  c.lr = kv.GetDouble(key("lr"), c.lr);
  c.decay_start = static_cast<int>(kv.GetInt(key("decay_start"), c.decay_start));
  c.decay_rate = kv.GetDouble(key("decay_rate"), c.decay_rate);
  c.min_lr = kv.GetDouble(key("min_lr"), c.min_lr);
  c.lambda_mel = kv.GetDouble(key("lambda_mel"), c.lambda_mel);
  c.lambda_stop = kv.GetDouble(key("lambda_stop"), c.lambda_stop);
  c.lambda_spk_mtl = kv.GetDouble(key("lambda_spk_mtl"), c.lambda_spk_mtl);
  c.lambda_lang_mtl = kv.GetDouble(key("lambda_lang_mtl"), c.lambda_lang_mtl);
  c.lambda_cross = kv.GetDouble(key("lambda_cross"), c.lambda_cross);
  c.joint_period = static_cast<int>(kv.GetInt(key("joint_period"), c.joint_period));
  c.cross_draws = static_cast<int>(kv.GetInt(key("cross_draws"), c.cross_draws));
  c.joint_trains_xvector = kv.GetInt(key("joint_trains_xvector"), c.joint_trains_xvector ? 1 : 0) != 0;
  c.joint_with_mtl = kv.GetInt(key("joint_with_mtl"), c.joint_with_mtl ? 1 : 0) != 0;
  c.stop_pos_weight = kv.GetDouble(key("stop_pos_weight"), c.stop_pos_weight);
  c.adam_beta1 = kv.GetDouble(key("adam_beta1"), c.adam_beta1);
  c.adam_beta2 = kv.GetDouble(key("adam_beta2"), c.adam_beta2);
  c.adam_eps = kv.GetDouble(key("adam_eps"), c.adam_eps);
  c.grad_clip = kv.GetDouble(key("grad_clip"), c.grad_clip);
  c.patience = static_cast<int>(kv.GetInt(key("patience"), c.patience));
  c.val_interval = static_cast<int>(kv.GetInt(key("val_interval"), c.val_interval));
  c.p_new = kv.GetDouble(key("p_new"), c.p_new);
  c.checkpoint_interval = static_cast<int>(kv.GetInt(key("checkpoint_interval"), c.checkpoint_interval));
  c.start_step = static_cast<int>(kv.GetInt(key("start_step"), c.start_step));
  c.seed = static_cast<std::uint64_t>(kv.GetInt(key("seed"), static_cast<long long>(c.seed)));
  return c;
}

KvConfig TrainConfig::ToKv() const {
  KvConfig kv;
  kv.Set("batch_size", batch_size);
  kv.Set("steps", steps);
  kv.Set("lr", lr);
  kv.Set("decay_start", decay_start);
  kv.Set("decay_rate", decay_rate);
  kv.Set("min_lr", min_lr);
  kv.Set("lambda_mel", lambda_mel);
  kv.Set("lambda_stop", lambda_stop);
  kv.Set("lambda_spk_mtl", lambda_spk_mtl);
  kv.Set("lambda_lang_mtl", lambda_lang_mtl);
  kv.Set("lambda_cross", lambda_cross);
  kv.Set("joint_period", joint_period);
  kv.Set("cross_draws", cross_draws);
  kv.Set("joint_trains_xvector", joint_trains_xvector ? 1 : 0);
  kv.Set("joint_with_mtl", joint_with_mtl ? 1 : 0);
  kv.Set("stop_pos_weight", stop_pos_weight);
  kv.Set("adam_beta1", adam_beta1);
  kv.Set("adam_beta2", adam_beta2);
  kv.Set("adam_eps", adam_eps);
  kv.Set("grad_clip", grad_clip);
  kv.Set("patience", patience);
  kv.Set("val_interval", val_interval);
  kv.Set("p_new", p_new);
  kv.Set("checkpoint_interval", checkpoint_interval);
  kv.Set("start_step", start_step);
  kv.Set("seed", static_cast<long long>(seed));
  return kv;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (lr <= 0.0 || min_lr <= 0.0) throw std::invalid_argument("learning rates must be positive");
  if (min_lr > lr) throw std::invalid_argument("min_lr must not exceed lr");
  if (decay_rate <= 0.0 || decay_rate > 1.0) throw std::invalid_argument("decay_rate must be in (0, 1]");
  for (double l : {lambda_mel, lambda_stop, lambda_spk_mtl, lambda_lang_mtl, lambda_cross}) {
    if (l < 0.0) throw std::invalid_argument("loss weights must be >= 0");
  }
  if (joint_period < 1) throw std::invalid_argument("joint_period must be >= 1");
  if (cross_draws < 1) throw std::invalid_argument("cross_draws must be >= 1");
  if (p_new < 0.0 || p_new > 1.0) throw std::invalid_argument("p_new must be in [0, 1]");
  if (val_interval < 1) throw std::invalid_argument("val_interval must be >= 1");
  if (start_step < 0 || start_step > steps) throw std::invalid_argument("start_step must be in [0, steps]");
}

int TrainConfig::EffectiveDecayStart() const {
  return decay_start >= 0 ? decay_start : static_cast<int>(0.4 * steps);
}

double TrainConfig::LearningRate(int step) const {
  return ExponentialDecayLr(lr, EffectiveDecayStart(), decay_rate, min_lr, step);
}

// ---- Losses ----------------------------------------------------------------------

TtsLossTerms TtsLoss(Var mel_pred, Var stop_logits, const Mat& target, double stop_pos_weight) {
  if (mel_pred.rows() != target.rows() || mel_pred.cols() != target.cols()) {
    throw std::invalid_argument("TtsLoss: prediction and target shapes differ");
  }
  if (stop_logits.rows() != target.rows() || stop_logits.cols() != 1) {
    throw std::invalid_argument("TtsLoss: stop logits must be [frames x 1]");
  }
  Mat stop_target = Mat::Zero(target.rows(), 1);
  stop_target(target.rows() - 1, 0) = 1.0;
  return {MseLoss(mel_pred, target), BceWithLogits(stop_logits, stop_target, stop_pos_weight)};
}

MtlLossTerms MtlLoss(const MtlLogits& logits, int speaker_index, int language_index) {
  return {CrossEntropy(logits.speaker, speaker_index), CrossEntropy(logits.language, language_index)};
}

void LossBundle::Add(const std::string& name, double weight, double value) {
  components.emplace_back(name, value);
  weights.emplace_back(name, weight);
  total += weight * value;
}

std::optional<double> LossBundle::Get(const std::string& name) const {
  for (const auto& [n, v] : components) {
    if (n == name) return v;
  }
  return std::nullopt;
}

// ---- Data ------------------------------------------------------------------------

TrainingSet TrainingSet::FromCorpus(const Corpus& corpus) {
  TrainingSet ts;
  const CorpusConfig& c = corpus.config;
  ts.utterances.reserve(corpus.utterances.size());
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    Utterance u = corpus.utterances[i];
    u.mel = TrimSilence(u.mel, c.trim_frames, c.silence_floor, c.silence_level);
    ts.utterances.push_back(std::move(u));
    if (corpus.manifest.records[i].split == "train") {
      ts.train.push_back(static_cast<int>(i));
    } else {
      ts.held_out.push_back(static_cast<int>(i));
    }
  }
  ts.languages = corpus.Languages();
  return ts;
}

std::vector<int> TrainingSet::OfLanguage(int lang) const {
  std::vector<int> out;
  for (int i : train) {
    if (utterances[static_cast<size_t>(i)].lang_id == lang) out.push_back(i);
  }
  return out;
}

std::vector<int> TrainingSet::OfSpeaker(int speaker) const {
  std::vector<int> out;
  for (size_t i = 0; i < utterances.size(); ++i) {
    if (utterances[i].speaker_id == speaker) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> TrainingSet::TrainLanguagesOf(const std::vector<int>& items) const {
  std::vector<int> out;
  out.reserve(items.size());
  for (int i : items) out.push_back(utterances[static_cast<size_t>(i)].lang_id);
  return out;
}

LanguageBalancedSampler::LanguageBalancedSampler(const std::vector<int>& items,
                                                 const std::vector<int>& item_langs, std::uint64_t seed)
    : rng_(seed) {
  if (items.size() != item_langs.size()) throw std::invalid_argument("sampler: items and languages differ in size");
  if (items.empty()) throw std::invalid_argument("sampler: no items");
  std::set<int> langs(item_langs.begin(), item_langs.end());
  langs_.assign(langs.begin(), langs.end());
  by_lang_.resize(langs_.size());
  for (size_t i = 0; i < items.size(); ++i) {
    const auto pos = std::lower_bound(langs_.begin(), langs_.end(), item_langs[i]) - langs_.begin();
    by_lang_[static_cast<size_t>(pos)].push_back(items[i]);
  }
}

namespace {
std::vector<int> Iota(size_t n) {
  std::vector<int> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}
}  // namespace

LanguageBalancedSampler::LanguageBalancedSampler(const std::vector<int>& item_langs, std::uint64_t seed)
    : LanguageBalancedSampler(Iota(item_langs.size()), item_langs, seed) {}

void LanguageBalancedSampler::SetPriorityGroup(int lang, std::vector<int> items, double p) {
  if (items.empty()) throw std::invalid_argument("sampler: empty priority group");
  if (!std::binary_search(langs_.begin(), langs_.end(), lang)) {
    throw std::invalid_argument("sampler: priority group language has no base items");
  }
  priority_lang_ = lang;
  priority_items_ = std::move(items);
  priority_p_ = p;
}

int LanguageBalancedSampler::Next() {
  std::uniform_int_distribution<size_t> pick_lang(0, langs_.size() - 1);
  const size_t li = pick_lang(rng_);
  if (langs_[li] == priority_lang_) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < priority_p_) {
      std::uniform_int_distribution<size_t> pick(0, priority_items_.size() - 1);
      return priority_items_[pick(rng_)];
    }
  }
  const auto& pool = by_lang_[li];
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  return pool[pick(rng_)];
}

// ---- Cross-lingual loss ----------------------------------------------------------------

CrossLingualSample GenerateCrossLingual(TtsModel& model, const TrainingSet& data, int speaker_id,
                                        int source_lang, std::mt19937_64& rng) {
  std::vector<int> others;
  for (int l : data.languages) {
    if (l != source_lang) others.push_back(l);
  }
  if (others.empty() || data.languages.size() < 2) {
    throw std::invalid_argument("cross-lingual generation needs at least two languages");
  }
  std::uniform_int_distribution<size_t> pick_lang(0, others.size() - 1);
  CrossLingualSample s;
  s.speaker_id = speaker_id;
  s.source_lang = source_lang;
  s.target_lang = others[pick_lang(rng)];
  const std::vector<int> pool = data.OfLanguage(s.target_lang);
  if (pool.empty()) throw std::invalid_argument("no training utterances for language " + std::to_string(s.target_lang));
  std::uniform_int_distribution<size_t> pick_utt(0, pool.size() - 1);
  s.phones = data.utterances[static_cast<size_t>(pool[pick_utt(rng)])].phones;
  InferResult r = model.Infer(s.phones, speaker_id, s.target_lang, model.config().max_frames);
  s.generated = std::move(r.mel);
  s.hit_max_frames = r.hit_max_frames;
  s.teacher_input = TtsModel::ShiftRight(s.generated);
  return s;
}

Var CrossLingualDistance(Tape& tape, XVectorModel& xvec, Var reference_mel, Var synthesized_mel) {
  Var a = xvec.Embed(tape, reference_mel, /*frozen=*/true);
  Var b = xvec.Embed(tape, synthesized_mel, /*frozen=*/true);
  return L2Distance(a, b);
}

std::optional<Var> CrossLingualLoss(Tape& tape, TtsModel& model, XVectorModel& xvec, const Utterance& reference,
                                    const CrossLingualSample& sample) {
  if (sample.generated.rows() < xvec.config().MinFrames()) {
    LOG(WARNING) << "cross-lingual sample for speaker " << sample.speaker_id << " in language "
                 << sample.target_lang << " has " << sample.generated.rows() << " frames (< "
                 << xvec.config().MinFrames() << "); skipping";
    return std::nullopt;
  }
  TtsForward f = model.Forward(tape, sample.phones, sample.speaker_id, sample.target_lang, sample.teacher_input);
  return CrossLingualDistance(tape, xvec, tape.Constant(reference.mel), f.out.mel);
}

// ---- Reports -----------------------------------------------------------------------

int StageReport::CrossSteps() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [](const StepRecord& r) { return r.loss.Get("cross").has_value(); }));
}

std::string StageReport::ToText() const {
  std::string s;
  for (const StepRecord& r : steps) {
    s += "stage=" + StageName(stage) + "\tstep=" + std::to_string(r.step) + "\tlr=" + FormatDouble(r.lr) +
         "\ttotal=" + FormatDouble(r.loss.total);
    for (const auto& [name, v] : r.loss.components) s += "\t" + name + "=" + FormatDouble(v);
    if (r.xvec_ce) s += "\txvec_ce=" + FormatDouble(*r.xvec_ce);
    s += "\n";
  }
  return s;
}

// ---- Training loop -------------------------------------------------------------------

namespace {

AdamOptions OptionsFrom(const TrainConfig& c) {
  AdamOptions o;
  o.beta1 = c.adam_beta1;
  o.beta2 = c.adam_beta2;
  o.eps = c.adam_eps;
  o.clip_norm = c.grad_clip;
  return o;
}

struct TtsStepTerms {
  double mel = 0.0, stop = 0.0, spk = 0.0, lang = 0.0;
};

// Forward/backward of the TTS losses on one utterance; gradients are scaled
// by `scale` and accumulated into the model parameters.
TtsStepTerms TtsUtteranceStep(TtsModel& model, const Utterance& u, const TrainConfig& c, bool use_mtl,
                              double scale, std::mt19937_64* dropout_rng, bool backward = true) {
  Tape tape(backward);
  TtsForward f = model.Forward(tape, u.phones, u.speaker_id, u.lang_id, TtsModel::ShiftRight(u.mel), dropout_rng);
  TtsLossTerms terms = TtsLoss(f.out.mel, f.out.stop, u.mel, c.stop_pos_weight);
  Var total = Add(Scale(terms.mel, c.lambda_mel), Scale(terms.stop, c.lambda_stop));
  TtsStepTerms out;
  out.mel = terms.mel.scalar();
  out.stop = terms.stop.scalar();
  if (use_mtl) {
    MtlLogits logits = model.MtlHeads(tape, f.cond.s_cond, f.cond.l_cond);
    MtlLossTerms mtl = MtlLoss(logits, model.SpeakerIndex(u.speaker_id), model.LanguageIndex(u.lang_id));
    total = Add(total, Add(Scale(mtl.speaker, c.lambda_spk_mtl), Scale(mtl.language, c.lambda_lang_mtl)));
    out.spk = mtl.speaker.scalar();
    out.lang = mtl.language.scalar();
  }
  if (backward) tape.Backward(Scale(total, scale));
  return out;
}

double XVectorUtteranceStep(XVectorModel& xvec, const Utterance& u, double scale, bool backward = true) {
  Tape tape(backward);
  Var logits = xvec.Classify(tape, xvec.Embed(tape, tape.Constant(u.mel)));
  Var ce = CrossEntropy(logits, xvec.SpeakerIndex(u.speaker_id));
  if (backward) tape.Backward(Scale(ce, scale));
  return ce.scalar();
}

StageReport RunLoop(Stage stage, TtsModel* tts, XVectorModel* xvec, const TrainingSet& data,
                    const TrainConfig& c, LanguageBalancedSampler& sampler, const TrainHooks* hooks) {
  const bool use_mtl = stage == Stage::kMtl || (stage == Stage::kJoint && c.joint_with_mtl);
  const bool trains_tts = stage != Stage::kSpkClassifier;
  const bool trains_xvec = stage == Stage::kSpkClassifier || (stage == Stage::kJoint && c.joint_trains_xvector);

  Adam tts_opt(OptionsFrom(c));
  Adam xvec_opt(OptionsFrom(c));
  std::mt19937_64 cross_rng(MixSeed(c.seed, kStreamCross));
  std::mt19937_64 dropout_rng(MixSeed(c.seed, kStreamDropout));

  std::vector<int> validation;
  if (c.patience > 0) {
    LanguageBalancedSampler vs(data.train, data.TrainLanguagesOf(data.train), MixSeed(c.seed, kStreamValidation));
    for (int i = 0; i < kValidationItems; ++i) validation.push_back(vs.Next());
  }
  auto validation_loss = [&]() {
    double sum = 0.0;
    for (int idx : validation) {
      const Utterance& u = data.utterances[static_cast<size_t>(idx)];
      if (trains_tts) {
        TtsStepTerms t = TtsUtteranceStep(*tts, u, c, false, 1.0, nullptr, false);
        sum += c.lambda_mel * t.mel + c.lambda_stop * t.stop;
      } else {
        sum += XVectorUtteranceStep(*xvec, u, 1.0, false);
      }
    }
    return sum / static_cast<double>(validation.size());
  };
  double best_val = std::numeric_limits<double>::infinity();
  int best_step = 0;

  StageReport report;
  report.stage = stage;
  const double inv_batch = 1.0 / c.batch_size;
  for (long long i = 0; i < static_cast<long long>(c.start_step) * c.batch_size; ++i) sampler.Next();
  for (int step = c.start_step + 1; step <= c.steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = step;
    rec.lr = c.LearningRate(step);
    std::vector<int> batch;
    batch.reserve(static_cast<size_t>(c.batch_size));
    for (int b = 0; b < c.batch_size; ++b) batch.push_back(sampler.Next());

    if (trains_tts) {
      TtsStepTerms sum;
      for (int idx : batch) {
        TtsStepTerms t = TtsUtteranceStep(*tts, data.utterances[static_cast<size_t>(idx)], c, use_mtl, inv_batch,
                                          &dropout_rng);
        sum.mel += t.mel * inv_batch;
        sum.stop += t.stop * inv_batch;
        sum.spk += t.spk * inv_batch;
        sum.lang += t.lang * inv_batch;
      }
      rec.loss.Add("mel", c.lambda_mel, sum.mel);
      rec.loss.Add("stop", c.lambda_stop, sum.stop);
      if (use_mtl) {
        rec.loss.Add("spk_mtl", c.lambda_spk_mtl, sum.spk);
        rec.loss.Add("lang_mtl", c.lambda_lang_mtl, sum.lang);
      }
      if (stage == Stage::kJoint && step % c.joint_period == 0) {
        double cross = 0.0;
        int applied = 0;
        for (int d = 0; d < c.cross_draws; ++d) {
          const Utterance& ref = data.utterances[static_cast<size_t>(batch[static_cast<size_t>(d) % batch.size()])];
          CrossLingualSample sample = GenerateCrossLingual(*tts, data, ref.speaker_id, ref.lang_id, cross_rng);
          Tape tape;
          std::optional<Var> loss = CrossLingualLoss(tape, *tts, *xvec, ref, sample);
          if (!loss) continue;
          tape.Backward(Scale(*loss, c.lambda_cross));
          cross += loss->scalar();
          ++applied;
        }
        if (applied > 0) rec.loss.Add("cross", c.lambda_cross, cross);
      }
      tts_opt.Step(tts->params(), rec.lr);
      if (!tts->params().AllFinite()) {
        throw std::runtime_error("non-finite TTS parameter after step " + std::to_string(step));
      }
    }
    if (trains_xvec) {
      double ce = 0.0;
      for (int idx : batch) ce += XVectorUtteranceStep(*xvec, data.utterances[static_cast<size_t>(idx)], inv_batch) * inv_batch;
      if (stage == Stage::kSpkClassifier) {
        rec.loss.Add("xvec_ce", 1.0, ce);
      } else {
        rec.xvec_ce = ce;
      }
      xvec_opt.Step(xvec->params(), rec.lr);
      if (!xvec->params().AllFinite()) {
        throw std::runtime_error("non-finite x-vector parameter after step " + std::to_string(step));
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.steps.push_back(std::move(rec));

    if (hooks != nullptr && hooks->on_checkpoint && c.checkpoint_interval > 0 && step % c.checkpoint_interval == 0) {
      hooks->on_checkpoint(step);
    }
    if (c.patience > 0 && step % c.val_interval == 0) {
      const double v = validation_loss();
      if (v < best_val) {
        best_val = v;
        best_step = step;
      } else if (step - best_step >= c.patience) {
        VLOG(1) << StageName(stage) << ": validation plateau at step " << step;
        report.early_stopped = true;
        break;
      }
    }
  }
  const std::string name = StageName(stage);
  if (trains_tts && !tts->HasCompleted(name)) tts->completed_stages().push_back(name);
  if (stage == Stage::kSpkClassifier && !xvec->HasCompleted(name)) xvec->completed_stages().push_back(name);
  return report;
}

}  // namespace

StageReport TrainStage(Stage stage, TtsModel* tts, XVectorModel* xvec, const TrainingSet& data,
                       const TrainConfig& config, const TrainHooks* hooks) {
  config.Validate();
  if (stage != Stage::kSpkClassifier && tts == nullptr) {
    throw std::invalid_argument("stage " + StageName(stage) + " needs a TTS model");
  }
  if ((stage == Stage::kSpkClassifier || stage == Stage::kJoint) && xvec == nullptr) {
    throw std::invalid_argument("stage " + StageName(stage) + " needs an x-vector model");
  }
  if (stage == Stage::kJoint) {
    if (!tts->HasCompleted("baseline") && !tts->HasCompleted("mtl")) {
      throw PrerequisiteError("joint stage needs a TTS model that completed the baseline or mtl stage");
    }
    if (!xvec->HasCompleted("spk_classifier")) {
      throw PrerequisiteError("joint stage needs an x-vector model that completed the spk_classifier stage");
    }
  }
  if (data.train.empty()) throw std::invalid_argument("training set is empty");
  LanguageBalancedSampler sampler(data.train, data.TrainLanguagesOf(data.train), MixSeed(config.seed, kStreamSampler));
  return RunLoop(stage, tts, xvec, data, config, sampler, hooks);
}

StageReport ExtendSpeaker(TtsModel& tts, XVectorModel* xvec, const TrainingSet& data, int speaker_id,
                          Stage refine, const TrainConfig& config) {
  config.Validate();
  if (refine == Stage::kSpkClassifier) throw std::invalid_argument("speaker extension refines the TTS model");
  if (tts.HasSpeaker(speaker_id)) {
    throw std::invalid_argument("speaker " + std::to_string(speaker_id) + " is already in the model");
  }
  std::vector<int> items;
  for (int i : data.held_out) {
    if (data.utterances[static_cast<size_t>(i)].speaker_id == speaker_id) items.push_back(i);
  }
  if (items.empty()) throw std::invalid_argument("no held-out utterances for speaker " + std::to_string(speaker_id));
  std::set<int> langs;
  for (int i : items) langs.insert(data.utterances[static_cast<size_t>(i)].lang_id);
  if (langs.size() != 1) throw std::invalid_argument("a new speaker must be monoglot");
  if (refine == Stage::kJoint && xvec == nullptr) throw std::invalid_argument("joint refinement needs an x-vector model");

  tts.AppendSpeaker(speaker_id);
  if (xvec != nullptr && !xvec->HasSpeaker(speaker_id)) xvec->AppendSpeaker(speaker_id);

  LanguageBalancedSampler sampler(data.train, data.TrainLanguagesOf(data.train), MixSeed(config.seed, kStreamSampler));
  sampler.SetPriorityGroup(*langs.begin(), items, config.p_new);
  StageReport report = RunLoop(refine, &tts, xvec, data, config, sampler, nullptr);
  const std::string tag = "extend:" + std::to_string(speaker_id);
  tts.completed_stages().push_back(tag);
  return report;
}

}  // namespace xtts
