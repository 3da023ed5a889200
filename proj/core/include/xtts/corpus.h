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

// Synthetic multilingual mel corpus with known speaker and language factors.
//
// A voiced frame for phone p of speaker s in language l at speech frame t is
//
//   template[p] + signature[s] + tilt[s] * ramp + contour_l(t) + noise
//
// where ramp[b] = b / (n_mels - 1) - 0.5 and contour_l is a scalar sinusoid
// added to every bin. Silence frames are the constant silence level. Every
// speaker is monoglot and the phone sets of different languages are disjoint.

#ifndef XTTS_CORPUS_H_
#define XTTS_CORPUS_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xtts/autodiff.h"
#include "xtts/kvconfig.h"

namespace xtts {

inline constexpr int kCorpusGeneratorVersion = 1;

struct CorpusConfig {
  int n_languages = 4;
  int speakers_per_language = 3;
  int phones_per_language = 8;
  int n_mels = 20;
  // Utterance count of the best-resourced language; the others follow a
  // geometric ladder down to utterances_per_language / imbalance_ratio.
  int utterances_per_language = 60;
  double imbalance_ratio = 5.0;
  int min_phones = 3;
  int max_phones = 6;
  int min_duration = 2;
  int max_duration = 4;
  // Rendered silence per side is drawn from [min_silence, max_silence];
  // training trims it to trim_frames.
  int min_silence = 2;
  int max_silence = 5;
  int trim_frames = 2;
  double silence_level = -4.0;
  double silence_floor = -3.0;
  double template_scale = 1.0;
  double signature_min = 2.5;
  double signature_max = 3.5;
  double tilt_max = 1.0;
  double contour_min = 0.2;
  double contour_max = 0.6;
  double noise_sigma = 0.1;
  // Optional unseen speaker, stored in the manifest with split "new".
  int new_speaker_utterances = 0;
  int new_speaker_language = 0;

  static CorpusConfig FromKv(const KvConfig& kv);
  KvConfig ToKv() const;
  /// Throws std::invalid_argument on configurations that cannot support a
  /// cross-lingual experiment.
  void Validate() const;
  int TotalPhones() const { return n_languages * phones_per_language; }
  std::vector<int> LanguageCounts() const;
};

struct LanguageSpec {
  int lang_id = 0;
  std::vector<int> phone_set;
  std::vector<int> durations;  // frames, parallel to phone_set
  double contour_amplitude = 0.0;
  double contour_period = 8.0;
  double contour_phase = 0.0;

  bool HasPhone(int phone) const;
  int Duration(int phone) const;
  double Contour(int speech_frame) const;
  /// Mean of Contour(t) for t in [0, n).
  double ContourMean(int n) const;
};

struct SpeakerSpec {
  int speaker_id = 0;
  int native_lang = 0;
  RowVec signature;
  double tilt = 0.0;

  /// signature + tilt * ramp: the exact speaker contribution to every voiced frame.
  RowVec Identity() const;
};

struct CorpusSpecs {
  std::vector<LanguageSpec> languages;
  std::vector<SpeakerSpec> speakers;  // includes the optional new speaker last
  Mat phone_templates;                // [total phones x n_mels]

  const LanguageSpec& Language(int lang_id) const;
  const SpeakerSpec& Speaker(int speaker_id) const;
};

struct Utterance {
  int utt_id = 0;
  int speaker_id = 0;
  int lang_id = 0;
  std::vector<int> phones;
  Mat mel;  // [n_frames x n_mels]
  int n_frames() const { return static_cast<int>(mel.rows()); }
};

struct UtteranceRecord {
  int utt_id = 0;
  int speaker_id = 0;
  int lang_id = 0;
  int n_frames = 0;
  std::uint64_t offset = 0;
  std::string split = "train";
  std::vector<int> phones;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  int generator_version = kCorpusGeneratorVersion;
  std::vector<int> language_counts;  // train split only
  std::vector<UtteranceRecord> records;
};

struct Corpus {
  CorpusConfig config;
  std::uint64_t seed = 0;
  CorpusSpecs specs;
  CorpusManifest manifest;
  std::vector<Utterance> utterances;  // parallel to manifest.records, untrimmed

  /// Indices of utterances in the given split.
  std::vector<int> Split(const std::string& split) const;
  /// Train speakers (excludes the new speaker).
  std::vector<int> TrainSpeakers() const;
  std::vector<int> Languages() const;
};

/// splitmix64 step; used to derive independent per-item seeds.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

CorpusSpecs MakeSpecs(const CorpusConfig& config, std::uint64_t seed);

Corpus BuildCorpus(const CorpusConfig& config, std::uint64_t seed);

/// Renders one utterance with `lead` and `trail` silence frames. Values are
/// rounded to float32 so in-memory and on-disk mels agree bit-for-bit.
Utterance RenderUtterance(std::span<const int> phones, const SpeakerSpec& speaker,
                          const LanguageSpec& language, const Mat& phone_templates,
                          const CorpusConfig& config, int lead, int trail, std::uint64_t seed);

/// Uniformly random phone sequence of the language, length in
/// [min_phones, max_phones].
std::vector<int> SamplePhoneSequence(const LanguageSpec& language, const CorpusConfig& config,
                                     std::mt19937_64& rng);

bool IsSilenceFrame(const Mat& mel, Eigen::Index row, double floor);

/// Trims or pads leading/trailing silence to exactly `target` frames on each
/// side. Interior frames are copied unchanged. Padding uses `silence_level`.
Mat TrimSilence(const Mat& mel, int target, double floor, double silence_level);

/// Analytic speaker vector: mean of voiced frames minus the expected phone and
/// contour contribution for `phones` in `language`. Throws on an all-silence
/// input.
RowVec OracleSpeakerVector(const Mat& mel, std::span<const int> phones, const LanguageSpec& language,
                           const CorpusSpecs& specs, const CorpusConfig& config);

// ---- On-disk format ------------------------------------------------------
//
// <dir>/corpus.cfg    flat key-value config including `seed`
// <dir>/manifest.tsv  '#'-prefixed header lines, then one record per line:
//                     utt_id speaker lang n_frames offset split phones(csv)
// <dir>/mels.bin      16-byte header (magic "XMEL", version, n_mels, 0) then
//                     little-endian float32 rows

void WriteCorpus(const Corpus& corpus, const std::string& dir);
Corpus LoadCorpus(const std::string& dir);

std::string ManifestToString(const CorpusManifest& manifest);
CorpusManifest ParseManifest(const std::string& text);

/// Writes a single mel in the mel-store format (used by `synth`).
void WriteMelFile(const Mat& mel, const std::string& path);
Mat ReadMelFile(const std::string& path);

}  // namespace xtts

#endif  // XTTS_CORPUS_H_
