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

#include "xtts/eval.h"

#include <glog/logging.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xtts/kvconfig.h"

namespace xtts {

namespace {

std::string Cell(const std::optional<double>& v, int precision = 4) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v);
  return buf;
}

std::string SignedCell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.4f", *v);
  return buf;
}

std::optional<double> MeanOf(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string PadRight(const std::string& s, size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
std::string PadLeft(const std::string& s, size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

std::string AlignedTable(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (size_t c = 0; c < r.size(); ++c) {
      if (c) line += "  ";
      line += c == 0 ? PadRight(r[c], width[c]) : PadLeft(r[c], width[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::string ScorerKindName(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kOracle: return "oracle";
    case ScorerKind::kIndependentXvector: return "independent_xvector";
    case ScorerKind::kBoth: return "both";
  }
  return "unknown";
}

ScorerKind ParseScorerKind(const std::string& name) {
  if (name == "oracle") return ScorerKind::kOracle;
  if (name == "independent_xvector" || name == "xvector") return ScorerKind::kIndependentXvector;
  if (name == "both") return ScorerKind::kBoth;
  throw std::invalid_argument("unknown scorer '" + name + "' (expected oracle, independent_xvector or both)");
}

// ---- EvalPlan ----------------------------------------------------------------

EvalPlan EvalPlan::AllPairs(const std::vector<int>& speakers, const std::vector<int>& languages) {
  EvalPlan plan;
  for (int s : speakers) {
    for (int l : languages) plan.pairs.push_back({s, l});
  }
  return plan;
}

void EvalPlan::Validate(const Corpus& corpus) const {
  if (pairs.empty()) throw std::invalid_argument("evaluation plan has no pairs");
  if (utterances_per_pair < 1) throw std::invalid_argument("utterances_per_pair must be >= 1");
  const std::vector<int> langs = corpus.Languages();
  for (const EvalPair& p : pairs) {
    if (std::find(langs.begin(), langs.end(), p.lang_id) == langs.end()) {
      throw std::invalid_argument("evaluation plan: unknown language " + std::to_string(p.lang_id));
    }
    try {
      corpus.specs.Speaker(p.speaker_id);
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("evaluation plan: unknown speaker " + std::to_string(p.speaker_id));
    }
  }
}

std::string EvalPlan::Fingerprint() const {
  std::string s = "n=" + std::to_string(utterances_per_pair) + ";seed=" + std::to_string(seed) + ";pairs=";
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(pairs[i].speaker_id) + ':' + std::to_string(pairs[i].lang_id);
  }
  return s;
}

std::vector<int> EvalPlan::Text(const Corpus& corpus, const EvalPair& pair, int index) const {
  std::uint64_t h = MixSeed(seed, static_cast<std::uint64_t>(pair.speaker_id));
  h = MixSeed(h, static_cast<std::uint64_t>(pair.lang_id));
  h = MixSeed(h, static_cast<std::uint64_t>(index));
  std::mt19937_64 rng(h);
  return SamplePhoneSequence(corpus.specs.Language(pair.lang_id), corpus.config, rng);
}

// ---- Scorers -------------------------------------------------------------------

RowVec OracleScorer::Embed(const Mat& mel, std::span<const int> phones, int lang_id) {
  return OracleSpeakerVector(mel, phones, corpus_.specs.Language(lang_id), corpus_.specs, corpus_.config);
}

RowVec XVectorScorer::Embed(const Mat& mel, std::span<const int>, int) { return model_.EmbedValue(mel); }

double ScorePair(std::span<const RowVec> references, const RowVec& synthesized) {
  if (references.empty()) throw std::invalid_argument("ScorePair: no reference embeddings");
  RowVec mean = RowVec::Zero(references.front().size());
  for (const RowVec& r : references) mean += r;
  mean /= static_cast<double>(references.size());
  return CosineDistance(mean, synthesized);
}

std::optional<double> ScorePair(Scorer& scorer, std::span<const Utterance> references, const Mat& synthesized,
                                std::span<const int> phones, int lang_id) {
  if (synthesized.rows() < scorer.MinFrames()) return std::nullopt;
  std::vector<RowVec> refs;
  refs.reserve(references.size());
  for (const Utterance& u : references) refs.push_back(scorer.Embed(u.mel, u.phones, u.lang_id));
  try {
    return ScorePair(refs, scorer.Embed(synthesized, phones, lang_id));
  } catch (const std::invalid_argument& e) {
    VLOG(1) << "unscorable synthesis: " << e.what();
    return std::nullopt;
  }
}

// ---- SimilarityReport -------------------------------------------------------------

std::vector<LanguageAggregate> SimilarityReport::ByLanguage() const {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by;
  std::set<int> langs;
  for (const PairResult& p : pairs) {
    langs.insert(p.lang_id);
    if (!p.mean_distance) continue;
    (p.intra() ? by[p.lang_id].first : by[p.lang_id].second).push_back(*p.mean_distance);
  }
  std::vector<LanguageAggregate> out;
  for (int l : langs) {
    LanguageAggregate a;
    a.lang_id = l;
    a.intra = MeanOf(by[l].first);
    a.cross = MeanOf(by[l].second);
    a.n_intra = static_cast<int>(by[l].first.size());
    a.n_cross = static_cast<int>(by[l].second.size());
    out.push_back(a);
  }
  return out;
}

std::optional<double> SimilarityReport::IntraMean() const { return IntraMeanExcluding(-1); }

std::optional<double> SimilarityReport::IntraMeanExcluding(int speaker_id) const {
  std::vector<double> v;
  for (const PairResult& p : pairs) {
    if (p.intra() && p.mean_distance && p.speaker_id != speaker_id) v.push_back(*p.mean_distance);
  }
  return MeanOf(v);
}

std::optional<double> SimilarityReport::CrossMean() const {
  std::vector<double> v;
  for (const PairResult& p : pairs) {
    if (!p.intra() && p.mean_distance) v.push_back(*p.mean_distance);
  }
  return MeanOf(v);
}

std::optional<double> SimilarityReport::CrossMeanOf(int speaker_id) const {
  std::vector<double> v;
  for (const PairResult& p : pairs) {
    if (!p.intra() && p.mean_distance && p.speaker_id == speaker_id) v.push_back(*p.mean_distance);
  }
  return MeanOf(v);
}

std::string SimilarityReport::ToTsv() const {
  std::string s = "# xtts similarity report\n";
  s += "# system=" + system + "\n";
  s += "# scorer=" + scorer + "\n";
  s += "# seed=" + std::to_string(seed) + "\n";
  s += "# plan=" + plan + "\n";
  s += "# speaker\tlang\tnative\tkind\tmean_distance\tn_scored\tn_missing\tn_hit_max\n";
  for (const PairResult& p : pairs) {
    s += std::to_string(p.speaker_id) + '\t' + std::to_string(p.lang_id) + '\t' + std::to_string(p.native_lang) +
         '\t' + (p.intra() ? "intra" : "cross") + '\t' + (p.mean_distance ? FormatDouble(*p.mean_distance) : "NA") +
         '\t' + std::to_string(p.n_scored) + '\t' + std::to_string(p.n_missing) + '\t' + std::to_string(p.n_hit_max) +
         '\n';
  }
  return s;
}

SimilarityReport ParseReport(const std::string& tsv) {
  SimilarityReport r;
  std::istringstream in(tsv);
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "system") r.system = value;
      if (key == "scorer") r.scorer = value;
      if (key == "seed") r.seed = std::stoull(value);
      if (key == "plan") r.plan = value;
      saw_header = true;
      continue;
    }
    std::istringstream f(line);
    PairResult p;
    std::string kind, mean;
    if (!(f >> p.speaker_id >> p.lang_id >> p.native_lang >> kind >> mean >> p.n_scored >> p.n_missing >> p.n_hit_max)) {
      throw std::runtime_error("malformed report line: " + line);
    }
    if (mean != "NA") p.mean_distance = std::stod(mean);
    r.pairs.push_back(p);
  }
  if (!saw_header) throw std::runtime_error("not a similarity report (missing header)");
  return r;
}

std::string SimilarityReport::ToTable() const {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"language", "intra", "cross", "n_intra", "n_cross"});
  for (const LanguageAggregate& a : ByLanguage()) {
    rows.push_back({"lang " + std::to_string(a.lang_id), Cell(a.intra), Cell(a.cross), std::to_string(a.n_intra),
                    std::to_string(a.n_cross)});
  }
  rows.push_back({"mean", Cell(IntraMean()), Cell(CrossMean()), "", ""});
  int missing = 0, hit_max = 0;
  for (const PairResult& p : pairs) {
    missing += p.n_missing;
    hit_max += p.n_hit_max;
  }
  return "system: " + system + "   scorer: " + scorer + "   seed: " + std::to_string(seed) + "\n" +
         AlignedTable(rows) + "missing: " + std::to_string(missing) + "   hit_max_frames: " + std::to_string(hit_max) +
         "\n";
}

// ---- RunEval ---------------------------------------------------------------------

std::vector<SimilarityReport> RunEval(TtsModel& model, const EvalPlan& plan, const EvalContext& context,
                                      const std::string& system) {
  if (context.corpus == nullptr) throw std::invalid_argument("evaluation needs the corpus");
  const Corpus& corpus = *context.corpus;
  plan.Validate(corpus);

  std::vector<std::unique_ptr<Scorer>> scorers;
  if (plan.scorer != ScorerKind::kIndependentXvector) scorers.push_back(std::make_unique<OracleScorer>(corpus));
  if (plan.scorer != ScorerKind::kOracle) {
    if (context.independent_xvector == nullptr) {
      throw std::invalid_argument("scorer '" + ScorerKindName(plan.scorer) + "' needs an independent x-vector model");
    }
    scorers.push_back(std::make_unique<XVectorScorer>(*context.independent_xvector));
  }

  std::vector<SimilarityReport> reports(scorers.size());
  for (size_t k = 0; k < scorers.size(); ++k) {
    reports[k].system = system;
    reports[k].scorer = scorers[k]->Name();
    reports[k].seed = plan.seed;
    reports[k].plan = plan.Fingerprint();
  }

  // Reference embeddings are computed once per (speaker, scorer).
  std::map<std::pair<int, size_t>, std::vector<RowVec>> ref_cache;
  auto references = [&](int speaker, size_t k) -> const std::vector<RowVec>& {
    auto key = std::make_pair(speaker, k);
    auto it = ref_cache.find(key);
    if (it != ref_cache.end()) return it->second;
    std::vector<RowVec> refs;
    for (const Utterance& u : context.utterances) {
      if (u.speaker_id == speaker && u.n_frames() >= scorers[k]->MinFrames()) {
        refs.push_back(scorers[k]->Embed(u.mel, u.phones, u.lang_id));
      }
    }
    if (refs.empty()) throw std::invalid_argument("no reference recordings for speaker " + std::to_string(speaker));
    return ref_cache.emplace(key, std::move(refs)).first->second;
  };

  for (const EvalPair& pair : plan.pairs) {
    const int native = corpus.specs.Speaker(pair.speaker_id).native_lang;
    std::vector<std::vector<double>> dists(scorers.size());
    std::vector<PairResult> results(scorers.size());
    for (PairResult& r : results) {
      r.speaker_id = pair.speaker_id;
      r.lang_id = pair.lang_id;
      r.native_lang = native;
    }
    for (int i = 0; i < plan.utterances_per_pair; ++i) {
      const std::vector<int> phones = plan.Text(corpus, pair, i);
      const InferResult syn = model.Infer(phones, pair.speaker_id, pair.lang_id, model.config().max_frames);
      for (size_t k = 0; k < scorers.size(); ++k) {
        if (syn.hit_max_frames) ++results[k].n_hit_max;
        std::optional<double> d;
        if (syn.mel.rows() >= scorers[k]->MinFrames()) {
          try {
            d = ScorePair(references(pair.speaker_id, k), scorers[k]->Embed(syn.mel, phones, pair.lang_id));
          } catch (const std::invalid_argument& e) {
            VLOG(1) << "unscorable synthesis: " << e.what();
          }
        }
        if (d) {
          dists[k].push_back(*d);
          ++results[k].n_scored;
        } else {
          ++results[k].n_missing;
        }
      }
    }
    for (size_t k = 0; k < scorers.size(); ++k) {
      results[k].mean_distance = MeanOf(dists[k]);
      reports[k].pairs.push_back(results[k]);
    }
  }
  return reports;
}

// ---- CompareSystems -----------------------------------------------------------------

Comparison CompareSystems(const std::vector<SimilarityReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("nothing to compare");
  for (const SimilarityReport& r : reports) {
    if (r.plan != reports.front().plan) {
      throw std::invalid_argument("reports '" + reports.front().system + "' and '" + r.system +
                                  "' were produced with different evaluation plans");
    }
    if (r.scorer != reports.front().scorer) {
      throw std::invalid_argument("reports '" + reports.front().system + "' and '" + r.system +
                                  "' use different scorers");
    }
  }
  Comparison c;
  c.scorer = reports.front().scorer;
  for (const SimilarityReport& r : reports) c.systems.push_back(r.system);

  std::vector<std::vector<LanguageAggregate>> agg;
  for (const SimilarityReport& r : reports) agg.push_back(r.ByLanguage());

  auto add_row = [&](const std::string& label, auto&& get) {
    ComparisonRow row;
    row.label = label;
    for (size_t i = 0; i < reports.size(); ++i) row.values.push_back(get(i));
    for (size_t i = 0; i < reports.size(); ++i) {
      if (row.values[i] && row.values[0]) {
        row.deltas.push_back(*row.values[i] - *row.values[0]);
      } else {
        row.deltas.push_back(std::nullopt);
      }
      if (row.values[i] && (row.best < 0 || *row.values[i] < *row.values[static_cast<size_t>(row.best)])) {
        row.best = static_cast<int>(i);
      }
    }
    c.rows.push_back(std::move(row));
  };

  const std::vector<LanguageAggregate>& first = agg.front();
  for (size_t j = 0; j < first.size(); ++j) {
    const int lang = first[j].lang_id;
    auto find = [&](size_t i) -> const LanguageAggregate* {
      for (const LanguageAggregate& a : agg[i]) {
        if (a.lang_id == lang) return &a;
      }
      return nullptr;
    };
    add_row("lang " + std::to_string(lang) + " intra", [&](size_t i) -> std::optional<double> {
      const LanguageAggregate* a = find(i);
      return a ? a->intra : std::nullopt;
    });
    add_row("lang " + std::to_string(lang) + " cross", [&](size_t i) -> std::optional<double> {
      const LanguageAggregate* a = find(i);
      return a ? a->cross : std::nullopt;
    });
  }
  add_row("mean intra", [&](size_t i) { return reports[i].IntraMean(); });
  add_row("mean cross", [&](size_t i) { return reports[i].CrossMean(); });
  return c;
}

std::string Comparison::ToText() const {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"scorer: " + scorer};
  for (size_t i = 0; i < systems.size(); ++i) {
    header.push_back(systems[i]);
    if (i > 0) header.push_back("delta");
  }
  rows.push_back(header);
  for (const ComparisonRow& r : this->rows) {
    std::vector<std::string> line = {r.label};
    for (size_t i = 0; i < r.values.size(); ++i) {
      line.push_back(Cell(r.values[i]) + (static_cast<int>(i) == r.best && systems.size() > 1 ? "*" : ""));
      if (i > 0) line.push_back(SignedCell(r.deltas[i]));
    }
    rows.push_back(line);
  }
  return AlignedTable(rows);
}

std::string Comparison::ToMarkdown() const {
  std::string s = "| " + scorer + " |";
  std::string sep = "|---|";
  for (size_t i = 0; i < systems.size(); ++i) {
    s += " " + systems[i] + " |";
    sep += "---:|";
    if (i > 0) {
      s += " delta |";
      sep += "---:|";
    }
  }
  s += "\n" + sep + "\n";
  for (const ComparisonRow& r : rows) {
    s += "| " + r.label + " |";
    for (size_t i = 0; i < r.values.size(); ++i) {
      const bool bold = static_cast<int>(i) == r.best && systems.size() > 1;
      s += " " + std::string(bold ? "**" : "") + Cell(r.values[i]) + (bold ? "**" : "") + " |";
      if (i > 0) s += " " + SignedCell(r.deltas[i]) + " |";
    }
    s += "\n";
  }
  return s;
}

}  // namespace xtts
