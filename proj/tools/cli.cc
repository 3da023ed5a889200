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

#include "cli.h"

#include <glog/logging.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "xtts/checkpoint.h"
#include "xtts/corpus.h"
#include "xtts/eval.h"
#include "xtts/experiment.h"
#include "xtts/provenance.h"
#include "xtts/trainer.h"
#include "xtts/tts_model.h"
#include "xtts/xvector.h"

namespace xtts::cli {

namespace fs = std::filesystem;

namespace {

// Configuration or usage problem detected after parsing; maps to exit 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void AddCommon(CLI::App* app, CommonOptions& o, bool needs_out = true) {
  app->add_option("--config", o.config_file, "Flat key = value experiment config")->check(CLI::ExistingFile);
  app->add_option("--set", o.sets, "Override one config key (KEY=VALUE); repeatable");
  app->add_option("--seed", o.seed, "Global seed (overrides the config file)");
  auto* out = app->add_option("--out", o.out, "Output directory (relative paths resolve against $XTTS_OUTPUT_ROOT)");
  if (needs_out) out->required();
}

// Precedence: flags > config file > built-in defaults.
ExperimentConfig ResolveConfig(const CommonOptions& o) {
  KvConfig kv;
  if (!o.config_file.empty()) kv = KvConfig::Load(o.config_file);
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
    kv.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) kv.Set("seed", static_cast<long long>(*o.seed));
  return ExperimentConfig::FromKv(kv);
}

std::string ResolveOut(const std::string& out) {
  fs::path p(out);
  const char* root = std::getenv(kOutputRootEnv);
  if (p.is_relative() && root != nullptr && *root != '\0') p = fs::path(root) / p;
  fs::create_directories(p);
  return p.string();
}

std::vector<int> ParseIntList(const std::string& csv, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not an integer");
    }
  }
  return out;
}

void AddCorpusInputs(const std::string& dir, Provenance& p) {
  for (const char* f : {"corpus.cfg", "manifest.tsv", "mels.bin"}) {
    const std::string path = (fs::path(dir) / f).string();
    p.inputs[path] = Sha256File(path);
  }
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

Corpus LoadCorpusChecked(const std::string& dir, ExperimentConfig& cfg) {
  Corpus corpus = LoadCorpus(dir);
  cfg.corpus = corpus.config;
  cfg.Validate();
  return corpus;
}

// ---- corpus ------------------------------------------------------------------

int CmdCorpus(const CommonOptions& o, std::ostream& out) {
  ExperimentConfig cfg = ResolveConfig(o);
  cfg.Validate();
  const std::string dir = ResolveOut(o.out);
  const ExperimentSeeds seeds = ExperimentSeeds::From(cfg.seed);
  const Corpus corpus = BuildCorpus(cfg.corpus, seeds.corpus);
  WriteCorpus(corpus, dir);
  Provenance p;
  p.command = "corpus";
  p.config = cfg.ToKv();
  p.seeds = {{"global", cfg.seed}, {"corpus", seeds.corpus}};
  WriteProvenance(p, dir);
  out << "corpus: " << corpus.utterances.size() << " utterances, " << corpus.Languages().size() << " languages -> "
      << dir << "\n";
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

struct TrainOptions {
  std::string stage, corpus, init, xvector;
  std::optional<int> steps;
  bool independent = false;
};

int CmdTrain(const CommonOptions& o, const TrainOptions& t, std::ostream& out) {
  ExperimentConfig cfg = ResolveConfig(o);
  Stage stage;
  try {
    stage = ParseStage(t.stage);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Corpus corpus = LoadCorpusChecked(t.corpus, cfg);
  const TrainingSet data = TrainingSet::FromCorpus(corpus);
  const ExperimentSeeds seeds = ExperimentSeeds::From(cfg.seed);
  TrainConfig tc = cfg.ForStage(stage);
  if (t.independent) {
    if (stage != Stage::kSpkClassifier) throw UsageError("--independent applies to --stage spk_classifier only");
    tc.seed = seeds.scorer_train;
  }
  if (t.steps) tc.steps = *t.steps;

  if (stage == Stage::kJoint && (t.init.empty() || t.xvector.empty())) {
    throw PrerequisiteError(
        "the joint stage needs --init <tts checkpoint from the baseline or mtl stage> and "
        "--xvector <x-vector checkpoint from the spk_classifier stage>");
  }

  Provenance p;
  p.command = "train --stage " + StageName(stage);
  AddCorpusInputs(t.corpus, p);

  std::optional<TtsModel> tts;
  std::optional<XVectorModel> xvec;
  if (stage != Stage::kSpkClassifier) {
    if (!t.init.empty()) {
      tts.emplace(TtsModel::FromCheckpoint(LoadCheckpoint(t.init)));
      p.inputs[t.init] = Sha256File(t.init);
    } else {
      tts.emplace(NewTtsModel(cfg.model, corpus, seeds.tts_init));
    }
  }
  if (stage == Stage::kSpkClassifier || stage == Stage::kJoint) {
    if (!t.xvector.empty()) {
      xvec.emplace(XVectorModel::FromCheckpoint(LoadCheckpoint(t.xvector)));
      p.inputs[t.xvector] = Sha256File(t.xvector);
    } else {
      xvec.emplace(NewXVectorModel(cfg.xvector, corpus, t.independent ? seeds.scorer_init : seeds.xvec_init));
    }
  }

  const std::string dir = ResolveOut(o.out);
  TrainHooks hooks;
  hooks.on_checkpoint = [&](int step) {
    fs::create_directories(fs::path(dir) / "checkpoints");
    const std::string suffix = "_step" + std::to_string(step) + ".ckpt";
    if (tts) SaveCheckpoint(tts->ToCheckpoint(), (fs::path(dir) / "checkpoints" / ("tts" + suffix)).string());
    if (xvec) SaveCheckpoint(xvec->ToCheckpoint(), (fs::path(dir) / "checkpoints" / ("xvector" + suffix)).string());
  };
  const StageReport report =
      TrainStage(stage, tts ? &*tts : nullptr, xvec ? &*xvec : nullptr, data, tc, &hooks);

  if (tts) SaveCheckpoint(tts->ToCheckpoint(), (fs::path(dir) / "tts.ckpt").string());
  if (xvec) SaveCheckpoint(xvec->ToCheckpoint(), (fs::path(dir) / "xvector.ckpt").string());
  WriteText((fs::path(dir) / "report.tsv").string(), report.ToText());

  p.config = cfg.ToKv();
  p.config.MergePrefixed("run.", tc.ToKv());
  p.seeds = {{"global", cfg.seed}, {"train", tc.seed}, {"tts_init", seeds.tts_init},
             {"xvec_init", t.independent ? seeds.scorer_init : seeds.xvec_init}};
  WriteProvenance(p, dir);

  const StepRecord* last = report.steps.empty() ? nullptr : &report.steps.back();
  out << "train " << StageName(stage) << ": " << report.steps.size() << " steps";
  if (last) out << ", final loss " << last->loss.total;
  if (report.CrossSteps() > 0) out << ", " << report.CrossSteps() << " cross-lingual steps";
  out << " -> " << dir << "\n";
  return kExitOk;
}

// ---- extend ------------------------------------------------------------------

struct ExtendOptions {
  std::string corpus, model, xvector, refine;
  std::optional<int> speaker, steps;
};

int CmdExtend(const CommonOptions& o, const ExtendOptions& e, std::ostream& out) {
  ExperimentConfig cfg = ResolveConfig(o);
  const Corpus corpus = LoadCorpusChecked(e.corpus, cfg);
  const TrainingSet data = TrainingSet::FromCorpus(corpus);
  int speaker = -1;
  if (e.speaker) {
    speaker = *e.speaker;
  } else {
    if (data.held_out.empty()) throw UsageError("the corpus has no held-out speaker; pass --speaker");
    speaker = data.utterances[static_cast<size_t>(data.held_out.front())].speaker_id;
  }
  Stage refine = e.xvector.empty() ? Stage::kBaseline : Stage::kJoint;
  if (!e.refine.empty()) {
    try {
      refine = ParseStage(e.refine);
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }
  }
  if (refine == Stage::kJoint && e.xvector.empty()) {
    throw PrerequisiteError("--refine joint needs --xvector <x-vector checkpoint from the spk_classifier stage>");
  }
  TrainConfig tc = cfg.ForExtension();
  if (e.steps) tc.steps = *e.steps;

  Provenance p;
  p.command = "extend --refine " + StageName(refine);
  AddCorpusInputs(e.corpus, p);
  TtsModel tts = TtsModel::FromCheckpoint(LoadCheckpoint(e.model));
  p.inputs[e.model] = Sha256File(e.model);
  std::optional<XVectorModel> xvec;
  if (!e.xvector.empty()) {
    xvec.emplace(XVectorModel::FromCheckpoint(LoadCheckpoint(e.xvector)));
    p.inputs[e.xvector] = Sha256File(e.xvector);
  }
  const StageReport report = ExtendSpeaker(tts, xvec ? &*xvec : nullptr, data, speaker, refine, tc);

  const std::string dir = ResolveOut(o.out);
  SaveCheckpoint(tts.ToCheckpoint(), (fs::path(dir) / "tts.ckpt").string());
  if (xvec) SaveCheckpoint(xvec->ToCheckpoint(), (fs::path(dir) / "xvector.ckpt").string());
  WriteText((fs::path(dir) / "report.tsv").string(), report.ToText());
  p.config = cfg.ToKv();
  p.config.MergePrefixed("run.", tc.ToKv());
  p.config.Set("run.speaker", speaker);
  p.seeds = {{"global", cfg.seed}, {"train", tc.seed}};
  WriteProvenance(p, dir);
  out << "extend: speaker " << speaker << " added, " << report.steps.size() << " refinement steps -> " << dir << "\n";
  return kExitOk;
}

// ---- synth -------------------------------------------------------------------

struct SynthOptions {
  std::string model, phones;
  int speaker = 0, lang = 0;
  std::optional<int> max_frames;
};

int CmdSynth(const CommonOptions& o, const SynthOptions& s, std::ostream& out) {
  TtsModel tts = TtsModel::FromCheckpoint(LoadCheckpoint(s.model));
  if (!tts.HasSpeaker(s.speaker)) {
    throw std::out_of_range("unknown speaker id " + std::to_string(s.speaker) + " (extend the model first)");
  }
  const std::vector<int> phones = ParseIntList(s.phones, "--phones");
  if (phones.empty()) throw UsageError("--phones must name at least one phone id");
  const InferResult r = tts.Infer(phones, s.speaker, s.lang, s.max_frames.value_or(tts.config().max_frames));
  const std::string dir = ResolveOut(o.out);
  const std::string name = "synth_s" + std::to_string(s.speaker) + "_l" + std::to_string(s.lang) + ".mel";
  WriteMelFile(r.mel, (fs::path(dir) / name).string());
  Provenance p;
  p.command = "synth";
  p.inputs[s.model] = Sha256File(s.model);
  p.config.Set("speaker", s.speaker);
  p.config.Set("lang", s.lang);
  p.config.Set("phones", s.phones);
  p.config.Set("hit_max_frames", r.hit_max_frames ? 1 : 0);
  WriteProvenance(p, dir);
  out << "synth: " << r.mel.rows() << " frames" << (r.hit_max_frames ? " (hit max_frames)" : "") << " -> "
      << (fs::path(dir) / name).string() << "\n";
  return kExitOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalOptions {
  std::string model, corpus, system, scorer = "oracle", scorer_model, speakers, languages;
  std::optional<int> utterances;
};

int CmdEval(const CommonOptions& o, const EvalOptions& e, std::ostream& out) {
  ExperimentConfig cfg = ResolveConfig(o);
  const Corpus corpus = LoadCorpusChecked(e.corpus, cfg);
  const TrainingSet data = TrainingSet::FromCorpus(corpus);
  TtsModel tts = TtsModel::FromCheckpoint(LoadCheckpoint(e.model));

  EvalPlan plan = cfg.Plan(corpus);
  try {
    plan.scorer = ParseScorerKind(e.scorer);
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
  if (e.utterances) plan.utterances_per_pair = *e.utterances;
  std::vector<int> speakers = e.speakers.empty() ? tts.speaker_ids() : ParseIntList(e.speakers, "--speakers");
  const std::vector<int> languages = e.languages.empty() ? corpus.Languages() : ParseIntList(e.languages, "--languages");
  for (int s : speakers) {
    if (!tts.HasSpeaker(s)) throw std::out_of_range("model has no speaker " + std::to_string(s));
  }
  plan.pairs = EvalPlan::AllPairs(speakers, languages).pairs;

  std::optional<XVectorModel> scorer;
  Provenance p;
  p.command = "eval";
  AddCorpusInputs(e.corpus, p);
  p.inputs[e.model] = Sha256File(e.model);
  if (plan.scorer != ScorerKind::kOracle) {
    if (e.scorer_model.empty()) {
      throw UsageError("--scorer " + e.scorer + " needs --scorer-model <independently trained x-vector checkpoint>");
    }
    scorer.emplace(XVectorModel::FromCheckpoint(LoadCheckpoint(e.scorer_model)));
    p.inputs[e.scorer_model] = Sha256File(e.scorer_model);
  }
  EvalContext ctx;
  ctx.corpus = &corpus;
  ctx.utterances = data.utterances;
  ctx.independent_xvector = scorer ? &*scorer : nullptr;
  const std::string system = e.system.empty() ? SystemLabel(tts.completed_stages()) : e.system;
  const std::vector<SimilarityReport> reports = RunEval(tts, plan, ctx, system);

  const std::string dir = ResolveOut(o.out);
  for (const SimilarityReport& r : reports) {
    WriteText((fs::path(dir) / ("report." + r.scorer + ".tsv")).string(), r.ToTsv());
    WriteText((fs::path(dir) / ("report." + r.scorer + ".txt")).string(), r.ToTable());
    out << r.ToTable();
  }
  p.config = cfg.ToKv();
  p.config.Set("run.plan", plan.Fingerprint());
  p.config.Set("run.scorer", ScorerKindName(plan.scorer));
  p.config.Set("run.system", system);
  p.seeds = {{"global", cfg.seed}, {"eval_plan", plan.seed}};
  WriteProvenance(p, dir);
  return kExitOk;
}

// ---- report ------------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> inputs;
  bool markdown = false;
};

int CmdReport(const CommonOptions& o, const ReportOptions& r, std::ostream& out) {
  std::vector<SimilarityReport> reports;
  Provenance p;
  p.command = "report";
  for (const std::string& path : r.inputs) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    reports.push_back(ParseReport(ss.str()));
    p.inputs[path] = Sha256Hex(ss.str());
  }
  Comparison c;
  try {
    c = CompareSystems(reports);
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
  out << (r.markdown ? c.ToMarkdown() : c.ToText());
  if (!o.out.empty()) {
    const std::string dir = ResolveOut(o.out);
    WriteText((fs::path(dir) / "comparison.txt").string(), c.ToText());
    WriteText((fs::path(dir) / "comparison.md").string(), c.ToMarkdown());
    WriteProvenance(p, dir);
  }
  return kExitOk;
}

}  // namespace

std::string SystemLabel(const std::vector<std::string>& stages) {
  auto has = [&](const char* s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  if (has("joint")) return has("mtl") ? "+MTL+Joint" : "+Joint";
  if (has("mtl")) return "+MTL";
  if (has("baseline")) return "Baseline";
  return "untrained";
}

int Run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual TTS speaker-similarity experiments on a synthetic corpus", "xtts"};
  app.require_subcommand(1);

  CommonOptions common;
  TrainOptions train;
  ExtendOptions extend;
  SynthOptions synth;
  EvalOptions eval;
  ReportOptions report;

  auto* c_corpus = app.add_subcommand("corpus", "Generate the synthetic corpus");
  AddCommon(c_corpus, common);

  auto* c_train = app.add_subcommand("train", "Run one training stage");
  AddCommon(c_train, common);
  c_train->add_option("--stage", train.stage, "baseline | mtl | spk_classifier | joint")->required();
  c_train->add_option("--corpus", train.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  c_train->add_option("--init", train.init, "TTS checkpoint to continue from")->check(CLI::ExistingFile);
  c_train->add_option("--xvector", train.xvector, "x-vector checkpoint")->check(CLI::ExistingFile);
  c_train->add_option("--steps", train.steps, "Step budget (overrides train.<stage>.steps)")->check(CLI::NonNegativeNumber);
  c_train->add_flag("--independent", train.independent, "Train the independent scorer (own seeds)");

  auto* c_extend = app.add_subcommand("extend", "Add an unseen speaker and refine the whole model");
  AddCommon(c_extend, common);
  c_extend->add_option("--corpus", extend.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  c_extend->add_option("--model", extend.model, "TTS checkpoint")->required()->check(CLI::ExistingFile);
  c_extend->add_option("--xvector", extend.xvector, "x-vector checkpoint (joint refinement)")->check(CLI::ExistingFile);
  c_extend->add_option("--speaker", extend.speaker, "Speaker id (default: the corpus's held-out speaker)");
  c_extend->add_option("--refine", extend.refine, "baseline | mtl | joint");
  c_extend->add_option("--steps", extend.steps, "Refinement steps")->check(CLI::NonNegativeNumber);

  auto* c_synth = app.add_subcommand("synth", "Synthesize one phone sequence to a mel file");
  AddCommon(c_synth, common);
  c_synth->add_option("--model", synth.model, "TTS checkpoint")->required()->check(CLI::ExistingFile);
  c_synth->add_option("--speaker", synth.speaker, "Speaker id")->required();
  c_synth->add_option("--lang", synth.lang, "Language id")->required();
  c_synth->add_option("--phones", synth.phones, "Comma-separated phone ids")->required();
  c_synth->add_option("--max-frames", synth.max_frames, "Frame limit")->check(CLI::PositiveNumber);

  auto* c_eval = app.add_subcommand("eval", "Objective speaker-similarity evaluation");
  AddCommon(c_eval, common);
  c_eval->add_option("--model", eval.model, "TTS checkpoint")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--corpus", eval.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--system", eval.system, "System label (default from the stage history)");
  c_eval->add_option("--scorer", eval.scorer, "oracle | independent_xvector | both");
  c_eval->add_option("--scorer-model", eval.scorer_model, "Independent x-vector checkpoint")->check(CLI::ExistingFile);
  c_eval->add_option("--utterances", eval.utterances, "Utterances per (speaker, language)")->check(CLI::PositiveNumber);
  c_eval->add_option("--speakers", eval.speakers, "Comma-separated speaker ids (default: all in the model)");
  c_eval->add_option("--languages", eval.languages, "Comma-separated language ids (default: all)");

  auto* c_report = app.add_subcommand("report", "Compare similarity reports side by side");
  AddCommon(c_report, common, /*needs_out=*/false);
  c_report->add_option("reports", report.inputs, "report.*.tsv files")->required()->check(CLI::ExistingFile);
  c_report->add_flag("--markdown", report.markdown, "Print the markdown table");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "xtts: " << e.what() << "\n";
    if (const CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run 'xtts " << sub->get_name() << " --help' for usage\n";
    } else {
      err << "run 'xtts --help' for usage\n";
    }
    return kExitUsage;
  }

  try {
    if (c_corpus->parsed()) return CmdCorpus(common, out);
    if (c_train->parsed()) return CmdTrain(common, train, out);
    if (c_extend->parsed()) return CmdExtend(common, extend, out);
    if (c_synth->parsed()) return CmdSynth(common, synth, out);
    if (c_eval->parsed()) return CmdEval(common, eval, out);
    if (c_report->parsed()) return CmdReport(common, report, out);
  } catch (const PrerequisiteError& e) {
    err << "xtts: missing prerequisite: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "xtts: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::logic_error& e) {
    // invalid_argument / out_of_range: bad config values or unknown ids.
    err << "xtts: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "xtts: runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace xtts::cli
