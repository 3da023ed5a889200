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

#include "xtts/experiment.h"

#include <glog/logging.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace xtts {

namespace {

constexpr const char* kTrainStages[] = {"baseline", "mtl", "spk_classifier", "joint", "extend"};

TrainConfig* StageField(ExperimentConfig& c, const std::string& name) {
  if (name == "baseline") return &c.baseline;
  if (name == "mtl") return &c.mtl;
  if (name == "spk_classifier") return &c.spk_classifier;
  if (name == "joint") return &c.joint;
  if (name == "extend") return &c.extend;
  return nullptr;
}

const TrainConfig& StageField(const ExperimentConfig& c, const std::string& name) {
  return *StageField(const_cast<ExperimentConfig&>(c), name);
}

// Sub-config keys on top of a base config, unless the keys pick a preset.
KvConfig Overlay(const KvConfig& base, const KvConfig& keys) {
  if (keys.Has("preset")) return keys;
  KvConfig out = base;
  out.Merge(keys);
  return out;
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string Fmt(const std::optional<double>& v) { return v ? Fmt(*v) : std::string("-"); }

}  // namespace

// ---- ExperimentConfig ------------------------------------------------------------

ExperimentConfig ExperimentConfig::Desk() {
  ExperimentConfig c;
  c.corpus.new_speaker_utterances = 2;
  c.corpus.new_speaker_language = 0;

  TrainConfig tts;
  tts.batch_size = 8;
  tts.steps = 1500;
  tts.lr = 1e-3;
  tts.decay_rate = 0.998;
  c.baseline = tts;
  c.baseline.seed = 1;
  c.mtl = tts;
  c.mtl.seed = 1;  // same data stream as the baseline

  c.spk_classifier.batch_size = 8;
  c.spk_classifier.steps = 600;
  c.spk_classifier.seed = 3;

  c.joint = tts;
  c.joint.steps = 400;
  c.joint.seed = 4;

  c.extend = tts;
  c.extend.steps = 300;
  c.extend.seed = 5;
  return c;
}

ExperimentConfig ExperimentConfig::FromKv(const KvConfig& kv) {
  ExperimentConfig c = Desk();
  c.seed = static_cast<std::uint64_t>(kv.GetInt("seed", static_cast<long long>(c.seed)));
  c.corpus = CorpusConfig::FromKv(Overlay(c.corpus.ToKv(), kv.Subset("corpus.")));
  c.model = ModelConfig::FromKv(Overlay(c.model.ToKv(), kv.Subset("model.")));
  c.xvector = XVectorConfig::FromKv(Overlay(c.xvector.ToKv(), kv.Subset("xvector.")));
  for (const char* stage : kTrainStages) {
    TrainConfig* t = StageField(c, stage);
    *t = TrainConfig::FromKv(kv, std::string("train.") + stage + ".", *t);
  }
  c.eval_utterances_per_pair = static_cast<int>(kv.GetInt("eval.utterances_per_pair", c.eval_utterances_per_pair));
  c.eval_scorer = ParseScorerKind(kv.GetString("eval.scorer", ScorerKindName(c.eval_scorer)));
  c.eval_seed = static_cast<std::uint64_t>(kv.GetInt("eval.seed", static_cast<long long>(c.eval_seed)));
  if (kv.Has("stages")) {
    c.stages.clear();
    std::stringstream ss(kv.GetString("stages", ""));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) c.stages.push_back(ParseStage(item));
    }
  }
  return c;
}

KvConfig ExperimentConfig::ToKv() const {
  KvConfig kv;
  kv.Set("seed", static_cast<long long>(seed));
  kv.MergePrefixed("corpus.", corpus.ToKv());
  kv.MergePrefixed("model.", model.ToKv());
  kv.MergePrefixed("xvector.", xvector.ToKv());
  for (const char* stage : kTrainStages) {
    kv.MergePrefixed(std::string("train.") + stage + ".", StageField(*this, stage).ToKv());
  }
  kv.Set("eval.utterances_per_pair", eval_utterances_per_pair);
  kv.Set("eval.scorer", ScorerKindName(eval_scorer));
  kv.Set("eval.seed", static_cast<long long>(eval_seed));
  std::string order;
  for (size_t i = 0; i < stages.size(); ++i) order += (i ? "," : "") + StageName(stages[i]);
  kv.Set("stages", order);
  return kv;
}

void ExperimentConfig::Validate() const {
  corpus.Validate();
  model.Validate();
  xvector.Validate();
  if (model.n_mels != corpus.n_mels || xvector.n_mels != corpus.n_mels) {
    throw std::invalid_argument("model.n_mels and xvector.n_mels must equal corpus.n_mels");
  }
  if (model.n_phones < corpus.TotalPhones()) {
    throw std::invalid_argument("model.n_phones (" + std::to_string(model.n_phones) + ") is smaller than the corpus phone inventory (" +
                                std::to_string(corpus.TotalPhones()) + ")");
  }
  for (const char* stage : kTrainStages) StageField(*this, stage).Validate();
  if (eval_utterances_per_pair < 1) throw std::invalid_argument("eval.utterances_per_pair must be >= 1");
  bool tts_done = false, xvec_done = false;
  for (Stage s : stages) {
    if (s == Stage::kBaseline || s == Stage::kMtl) tts_done = true;
    if (s == Stage::kSpkClassifier) xvec_done = true;
    if (s == Stage::kJoint && !(tts_done && xvec_done)) {
      throw std::invalid_argument("stage order: joint must come after baseline/mtl and spk_classifier");
    }
  }
}

TrainConfig ExperimentConfig::ForStage(Stage stage) const {
  TrainConfig t = StageField(*this, StageName(stage));
  t.seed = MixSeed(seed, t.seed);
  return t;
}

TrainConfig ExperimentConfig::ForExtension() const {
  TrainConfig t = extend;
  t.seed = MixSeed(seed, t.seed);
  return t;
}

EvalPlan ExperimentConfig::Plan(const Corpus& c) const {
  EvalPlan plan = EvalPlan::AllPairs(c.TrainSpeakers(), c.Languages());
  plan.utterances_per_pair = eval_utterances_per_pair;
  plan.scorer = eval_scorer;
  plan.seed = MixSeed(seed, eval_seed);
  return plan;
}

ExperimentSeeds ExperimentSeeds::From(std::uint64_t seed) {
  return {seed, MixSeed(seed, 201), MixSeed(seed, 202), MixSeed(seed, 203), MixSeed(seed, 204), MixSeed(seed, 205)};
}

// ---- Model helpers ------------------------------------------------------------------

TtsModel NewTtsModel(const ModelConfig& config, const Corpus& corpus, std::uint64_t seed) {
  return TtsModel(config, corpus.TrainSpeakers(), corpus.Languages(), seed);
}

XVectorModel NewXVectorModel(const XVectorConfig& config, const Corpus& corpus, std::uint64_t seed) {
  return XVectorModel(config, corpus.TrainSpeakers(), seed);
}

TtsModel CloneModel(const TtsModel& model) { return TtsModel::FromCheckpoint(model.ToCheckpoint()); }
XVectorModel CloneModel(const XVectorModel& model) { return XVectorModel::FromCheckpoint(model.ToCheckpoint()); }

MtlAccuracy EvaluateMtlHeads(TtsModel& model) {
  MtlAccuracy acc;
  const std::vector<int>& speakers = model.speaker_ids();
  const std::vector<int>& languages = model.language_ids();
  Tape tape(false);
  int spk_ok = 0;
  for (int s : speakers) {
    MtlLogits logits = model.MtlHeads(tape, model.SpeakerNetwork(tape, s), model.LanguageNetwork(tape, languages.front()));
    Eigen::Index arg = 0;
    logits.speaker.value().row(0).maxCoeff(&arg);
    if (arg == model.SpeakerIndex(s)) ++spk_ok;
  }
  int lang_ok = 0;
  for (int l : languages) {
    MtlLogits logits = model.MtlHeads(tape, model.SpeakerNetwork(tape, speakers.front()), model.LanguageNetwork(tape, l));
    Eigen::Index arg = 0;
    logits.language.value().row(0).maxCoeff(&arg);
    if (arg == model.LanguageIndex(l)) ++lang_ok;
  }
  acc.speaker = static_cast<double>(spk_ok) / static_cast<double>(speakers.size());
  acc.language = static_cast<double>(lang_ok) / static_cast<double>(languages.size());
  return acc;
}

double XVectorAccuracy(XVectorModel& model, std::span<const Utterance> utterances) {
  if (utterances.empty()) throw std::invalid_argument("XVectorAccuracy: no utterances");
  int ok = 0;
  for (const Utterance& u : utterances) {
    Tape tape(false);
    Var logits = model.Classify(tape, model.Embed(tape, tape.Constant(u.mel), true), true);
    Eigen::Index arg = 0;
    logits.value().row(0).maxCoeff(&arg);
    if (arg == model.SpeakerIndex(u.speaker_id)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(utterances.size());
}

std::vector<Utterance> RenderHeldOut(const Corpus& corpus, int per_speaker, std::uint64_t seed) {
  const CorpusConfig& c = corpus.config;
  std::vector<Utterance> out;
  int id = 0;
  for (int s : corpus.TrainSpeakers()) {
    const SpeakerSpec& spk = corpus.specs.Speaker(s);
    const LanguageSpec& lang = corpus.specs.Language(spk.native_lang);
    for (int i = 0; i < per_speaker; ++i) {
      std::mt19937_64 rng(MixSeed(MixSeed(seed, static_cast<std::uint64_t>(s)), static_cast<std::uint64_t>(i)));
      const std::vector<int> phones = SamplePhoneSequence(lang, c, rng);
      std::uniform_int_distribution<int> sil(c.min_silence, c.max_silence);
      const int lead = sil(rng);
      const int trail = sil(rng);
      Utterance u = RenderUtterance(phones, spk, lang, corpus.specs.phone_templates, c, lead, trail, rng());
      u.utt_id = id++;
      u.mel = TrimSilence(u.mel, c.trim_frames, c.silence_floor, c.silence_level);
      out.push_back(std::move(u));
    }
  }
  return out;
}

// ---- Comparison --------------------------------------------------------------------

std::string ComparisonRun::Summary() const {
  std::string s = "seed " + std::to_string(seed) + "\n";
  if (!oracle.empty()) s += "oracle scorer\n" + CompareSystems(oracle).ToText();
  if (!xvector.empty()) s += "independent x-vector scorer\n" + CompareSystems(xvector).ToText();
  s += "mtl head accuracy: speaker " + Fmt(mtl_accuracy.speaker) + "  language " + Fmt(mtl_accuracy.language) + "\n";
  s += "x-vector held-out accuracy: joint " + Fmt(xvec_accuracy) + "  scorer " + Fmt(scorer_accuracy) + "\n";
  if (extension) {
    const ExtensionResult& e = *extension;
    s += "extension (speaker " + std::to_string(e.new_speaker) + "): cross Baseline " +
         Fmt(e.baseline.CrossMeanOf(e.new_speaker)) + "  +MTL+Joint " + Fmt(e.joint.CrossMeanOf(e.new_speaker)) +
         "  existing intra Baseline " + Fmt(e.baseline.IntraMeanExcluding(e.new_speaker)) + "  +MTL+Joint " +
         Fmt(e.joint.IntraMeanExcluding(e.new_speaker)) + "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "wall time %.1f s\n", seconds);
  return s + buf;
}

ComparisonRun RunComparison(const ExperimentConfig& config, bool with_extension, const ProgressFn& progress) {
  config.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto note = [&](const std::string& msg) {
    LOG(INFO) << "seed " << config.seed << ": " << msg;
    if (progress) progress(msg);
  };
  const ExperimentSeeds seeds = ExperimentSeeds::From(config.seed);

  CorpusConfig cc = config.corpus;
  if (!with_extension) cc.new_speaker_utterances = 0;
  const Corpus corpus = BuildCorpus(cc, seeds.corpus);
  const TrainingSet data = TrainingSet::FromCorpus(corpus);
  const EvalPlan plan = config.Plan(corpus);

  ComparisonRun run;
  run.seed = config.seed;

  note("baseline");
  TtsModel baseline = NewTtsModel(config.model, corpus, seeds.tts_init);
  run.traces.push_back(TrainStage(Stage::kBaseline, &baseline, nullptr, data, config.ForStage(Stage::kBaseline)));

  note("mtl");
  TtsModel mtl = NewTtsModel(config.model, corpus, seeds.tts_init);
  run.traces.push_back(TrainStage(Stage::kMtl, &mtl, nullptr, data, config.ForStage(Stage::kMtl)));
  run.mtl_accuracy = EvaluateMtlHeads(mtl);

  note("spk_classifier");
  XVectorModel xvec = NewXVectorModel(config.xvector, corpus, seeds.xvec_init);
  run.traces.push_back(TrainStage(Stage::kSpkClassifier, nullptr, &xvec, data, config.ForStage(Stage::kSpkClassifier)));

  note("joint");
  TtsModel joint = CloneModel(mtl);
  run.traces.push_back(TrainStage(Stage::kJoint, &joint, &xvec, data, config.ForStage(Stage::kJoint)));

  XVectorModel scorer = NewXVectorModel(config.xvector, corpus, seeds.scorer_init);
  if (config.eval_scorer != ScorerKind::kOracle) {
    note("independent scorer");
    TrainConfig sc = config.ForStage(Stage::kSpkClassifier);
    sc.seed = seeds.scorer_train;
    TrainStage(Stage::kSpkClassifier, nullptr, &scorer, data, sc);
  }
  const std::vector<Utterance> held_out = RenderHeldOut(corpus, 4, seeds.held_out);
  run.xvec_accuracy = XVectorAccuracy(xvec, held_out);
  if (config.eval_scorer != ScorerKind::kOracle) run.scorer_accuracy = XVectorAccuracy(scorer, held_out);

  EvalContext ctx;
  ctx.corpus = &corpus;
  ctx.utterances = data.utterances;
  ctx.independent_xvector = &scorer;
  TtsModel* systems[] = {&baseline, &mtl, &joint};
  for (size_t i = 0; i < 3; ++i) {
    note("eval " + SystemLabels()[i]);
    for (SimilarityReport& r : RunEval(*systems[i], plan, ctx, SystemLabels()[i])) {
      (r.scorer == "oracle" ? run.oracle : run.xvector).push_back(std::move(r));
    }
  }

  if (with_extension) {
    ExtensionResult ext;
    ext.new_speaker = corpus.specs.speakers.back().speaker_id;
    EvalPlan ext_plan;
    for (int l : corpus.Languages()) ext_plan.pairs.push_back({ext.new_speaker, l});
    for (int s : corpus.TrainSpeakers()) ext_plan.pairs.push_back({s, corpus.specs.Speaker(s).native_lang});
    ext_plan.utterances_per_pair = plan.utterances_per_pair;
    ext_plan.scorer = ScorerKind::kOracle;
    ext_plan.seed = plan.seed;

    note("extend Baseline");
    TtsModel base_ext = CloneModel(baseline);
    run.traces.push_back(ExtendSpeaker(base_ext, nullptr, data, ext.new_speaker, Stage::kBaseline, config.ForExtension()));
    ext.baseline = RunEval(base_ext, ext_plan, ctx, "Baseline").front();

    note("extend +MTL+Joint");
    TtsModel joint_ext = CloneModel(joint);
    XVectorModel xvec_ext = CloneModel(xvec);
    run.traces.push_back(ExtendSpeaker(joint_ext, &xvec_ext, data, ext.new_speaker, Stage::kJoint, config.ForExtension()));
    ext.joint = RunEval(joint_ext, ext_plan, ctx, "+MTL+Joint").front();
    run.extension = std::move(ext);
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace xtts
