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

#include "xtts/corpus.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace xtts {

namespace {

constexpr char kMelMagic[4] = {'X', 'M', 'E', 'L'};
constexpr std::uint32_t kMelVersion = 1;
constexpr std::uint64_t kHeaderBytes = 16;

// Named seed streams.
constexpr std::uint64_t kStreamSpecs = 0x5bec5;
constexpr std::uint64_t kStreamText = 0x7e47;
constexpr std::uint64_t kStreamRender = 0x4e4d;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t GetU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void AppendRows(std::string& out, const Mat& mel) {
  for (Eigen::Index r = 0; r < mel.rows(); ++r) {
    for (Eigen::Index c = 0; c < mel.cols(); ++c) {
      const float f = static_cast<float>(mel(r, c));
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof(bits));
      PutU32(out, bits);
    }
  }
}

Mat DecodeRows(const unsigned char* p, int rows, int cols) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::uint32_t bits = GetU32(p);
      float f = 0.0f;
      std::memcpy(&f, &bits, sizeof(f));
      m(r, c) = f;
      p += 4;
    }
  }
  return m;
}

std::string MelHeader(int n_mels) {
  std::string h(kMelMagic, 4);
  PutU32(h, kMelVersion);
  PutU32(h, static_cast<std::uint32_t>(n_mels));
  PutU32(h, 0);
  return h;
}

int CheckMelHeader(const std::string& bytes, const std::string& what) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMelMagic, 4) != 0) {
    throw std::runtime_error(what + ": not a mel store (bad magic)");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (GetU32(p + 4) != kMelVersion) throw std::runtime_error(what + ": unsupported mel store version");
  return static_cast<int>(GetU32(p + 8));
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string JoinInts(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> SplitInts(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

}  // namespace

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---- CorpusConfig --------------------------------------------------------

CorpusConfig CorpusConfig::FromKv(const KvConfig& kv) {
  CorpusConfig c;
  c.n_languages = static_cast<int>(kv.GetInt("n_languages", c.n_languages));
  c.speakers_per_language = static_cast<int>(kv.GetInt("speakers_per_language", c.speakers_per_language));
  c.phones_per_language = static_cast<int>(kv.GetInt("phones_per_language", c.phones_per_language));
  c.n_mels = static_cast<int>(kv.GetInt("n_mels", c.n_mels));
  c.utterances_per_language = static_cast<int>(kv.GetInt("utterances_per_language", c.utterances_per_language));
  c.imbalance_ratio = kv.GetDouble("imbalance_ratio", c.imbalance_ratio);
  c.min_phones = static_cast<int>(kv.GetInt("min_phones", c.min_phones));
  c.max_phones = static_cast<int>(kv.GetInt("max_phones", c.max_phones));
  c.min_duration = static_cast<int>(kv.GetInt("min_duration", c.min_duration));
  c.max_duration = static_cast<int>(kv.GetInt("max_duration", c.max_duration));
  c.min_silence = static_cast<int>(kv.GetInt("min_silence", c.min_silence));
  c.max_silence = static_cast<int>(kv.GetInt("max_silence", c.max_silence));
  c.trim_frames = static_cast<int>(kv.GetInt("trim_frames", c.trim_frames));
  c.silence_level = kv.GetDouble("silence_level", c.silence_level);
  c.silence_floor = kv.GetDouble("silence_floor", c.silence_floor);
  c.template_scale = kv.GetDouble("template_scale", c.template_scale);
  c.signature_min = kv.GetDouble("signature_min", c.signature_min);
  c.signature_max = kv.GetDouble("signature_max", c.signature_max);
  c.tilt_max = kv.GetDouble("tilt_max", c.tilt_max);
  c.contour_min = kv.GetDouble("contour_min", c.contour_min);
  c.contour_max = kv.GetDouble("contour_max", c.contour_max);
  c.noise_sigma = kv.GetDouble("noise_sigma", c.noise_sigma);
  c.new_speaker_utterances = static_cast<int>(kv.GetInt("new_speaker_utterances", c.new_speaker_utterances));
  c.new_speaker_language = static_cast<int>(kv.GetInt("new_speaker_language", c.new_speaker_language));
  return c;
}

KvConfig CorpusConfig::ToKv() const {
  KvConfig kv;
  kv.Set("n_languages", n_languages);
  kv.Set("speakers_per_language", speakers_per_language);
  kv.Set("phones_per_language", phones_per_language);
  kv.Set("n_mels", n_mels);
  kv.Set("utterances_per_language", utterances_per_language);
  kv.Set("imbalance_ratio", imbalance_ratio);
  kv.Set("min_phones", min_phones);
  kv.Set("max_phones", max_phones);
  kv.Set("min_duration", min_duration);
  kv.Set("max_duration", max_duration);
  kv.Set("min_silence", min_silence);
  kv.Set("max_silence", max_silence);
  kv.Set("trim_frames", trim_frames);
  kv.Set("silence_level", silence_level);
  kv.Set("silence_floor", silence_floor);
  kv.Set("template_scale", template_scale);
  kv.Set("signature_min", signature_min);
  kv.Set("signature_max", signature_max);
  kv.Set("tilt_max", tilt_max);
  kv.Set("contour_min", contour_min);
  kv.Set("contour_max", contour_max);
  kv.Set("noise_sigma", noise_sigma);
  kv.Set("new_speaker_utterances", new_speaker_utterances);
  kv.Set("new_speaker_language", new_speaker_language);
  return kv;
}

void CorpusConfig::Validate() const {
  if (n_languages < 2) throw std::invalid_argument("corpus needs at least 2 languages for cross-lingual synthesis");
  if (speakers_per_language < 2) throw std::invalid_argument("corpus needs at least 2 speakers per language");
  if (phones_per_language < 1) throw std::invalid_argument("phones_per_language must be >= 1");
  if (n_mels < 2) throw std::invalid_argument("n_mels must be >= 2");
  if (utterances_per_language < 1) throw std::invalid_argument("utterances_per_language must be >= 1");
  if (imbalance_ratio < 1.0) throw std::invalid_argument("imbalance_ratio must be >= 1");
  if (min_phones < 1 || max_phones < min_phones) throw std::invalid_argument("bad phone-count range");
  if (min_duration < 1 || max_duration < min_duration) throw std::invalid_argument("bad duration range");
  if (min_silence < 0 || max_silence < min_silence) throw std::invalid_argument("bad silence range");
  if (trim_frames < 0) throw std::invalid_argument("trim_frames must be >= 0");
  if (silence_level >= silence_floor) throw std::invalid_argument("silence_level must be below silence_floor");
  if (signature_min <= 0.0 || signature_max < signature_min) throw std::invalid_argument("bad signature band");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (new_speaker_utterances < 0) throw std::invalid_argument("new_speaker_utterances must be >= 0");
  if (new_speaker_language < 0 || new_speaker_language >= n_languages) {
    throw std::invalid_argument("new_speaker_language out of range");
  }
}

std::vector<int> CorpusConfig::LanguageCounts() const {
  std::vector<int> counts(static_cast<size_t>(n_languages));
  for (int l = 0; l < n_languages; ++l) {
    const double frac = n_languages == 1 ? 0.0 : static_cast<double>(l) / (n_languages - 1);
    const double c = utterances_per_language * std::pow(imbalance_ratio, -frac);
    counts[static_cast<size_t>(l)] = std::max(1, static_cast<int>(std::lround(c)));
  }
  return counts;
}

// ---- Specs ---------------------------------------------------------------

bool LanguageSpec::HasPhone(int phone) const {
  return std::find(phone_set.begin(), phone_set.end(), phone) != phone_set.end();
}

int LanguageSpec::Duration(int phone) const {
  for (size_t i = 0; i < phone_set.size(); ++i) {
    if (phone_set[i] == phone) return durations[i];
  }
  throw std::invalid_argument("phone " + std::to_string(phone) + " not in language " + std::to_string(lang_id));
}

double LanguageSpec::Contour(int speech_frame) const {
  return contour_amplitude * std::sin(2.0 * std::numbers::pi * speech_frame / contour_period + contour_phase);
}

double LanguageSpec::ContourMean(int n) const {
  if (n <= 0) return 0.0;
  double s = 0.0;
  for (int t = 0; t < n; ++t) s += Contour(t);
  return s / n;
}

RowVec SpeakerSpec::Identity() const {
  const Eigen::Index n = signature.cols();
  RowVec out = signature;
  for (Eigen::Index b = 0; b < n; ++b) {
    out(b) += tilt * (static_cast<double>(b) / static_cast<double>(n - 1) - 0.5);
  }
  return out;
}

const LanguageSpec& CorpusSpecs::Language(int lang_id) const {
  for (const auto& l : languages) {
    if (l.lang_id == lang_id) return l;
  }
  throw std::out_of_range("unknown language " + std::to_string(lang_id));
}

const SpeakerSpec& CorpusSpecs::Speaker(int speaker_id) const {
  for (const auto& s : speakers) {
    if (s.speaker_id == speaker_id) return s;
  }
  throw std::out_of_range("unknown speaker " + std::to_string(speaker_id));
}

CorpusSpecs MakeSpecs(const CorpusConfig& config, std::uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(MixSeed(seed, kStreamSpecs));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  CorpusSpecs specs;
  const int n_mels = config.n_mels;
  specs.phone_templates = Mat(config.TotalPhones(), n_mels);
  for (Eigen::Index i = 0; i < specs.phone_templates.size(); ++i) {
    specs.phone_templates.data()[i] = config.template_scale * gauss(rng);
  }
  for (int l = 0; l < config.n_languages; ++l) {
    LanguageSpec lang;
    lang.lang_id = l;
    std::uniform_int_distribution<int> dur(config.min_duration, config.max_duration);
    for (int p = 0; p < config.phones_per_language; ++p) {
      lang.phone_set.push_back(l * config.phones_per_language + p);
      lang.durations.push_back(dur(rng));
    }
    lang.contour_amplitude = uniform(config.contour_min, config.contour_max);
    lang.contour_period = uniform(6.0, 12.0);
    lang.contour_phase = uniform(0.0, 2.0 * std::numbers::pi);
    specs.languages.push_back(std::move(lang));
  }
  auto make_speaker = [&](int id, int lang) {
    SpeakerSpec s;
    s.speaker_id = id;
    s.native_lang = lang;
    s.signature = RowVec(n_mels);
    for (int b = 0; b < n_mels; ++b) s.signature(b) = gauss(rng);
    s.signature *= uniform(config.signature_min, config.signature_max) / s.signature.norm();
    s.tilt = uniform(-config.tilt_max, config.tilt_max);
    return s;
  };
  for (int l = 0; l < config.n_languages; ++l) {
    for (int k = 0; k < config.speakers_per_language; ++k) {
      specs.speakers.push_back(make_speaker(l * config.speakers_per_language + k, l));
    }
  }
  if (config.new_speaker_utterances > 0) {
    specs.speakers.push_back(make_speaker(config.n_languages * config.speakers_per_language,
                                          config.new_speaker_language));
  }
  return specs;
}

std::vector<int> SamplePhoneSequence(const LanguageSpec& language, const CorpusConfig& config,
                                     std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(config.min_phones, config.max_phones);
  std::uniform_int_distribution<size_t> pick(0, language.phone_set.size() - 1);
  const int n = len(rng);
  std::vector<int> phones;
  phones.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) phones.push_back(language.phone_set[pick(rng)]);
  return phones;
}

Utterance RenderUtterance(std::span<const int> phones, const SpeakerSpec& speaker,
                          const LanguageSpec& language, const Mat& phone_templates,
                          const CorpusConfig& config, int lead, int trail, std::uint64_t seed) {
  if (phones.empty()) throw std::invalid_argument("cannot render an empty phone sequence");
  int speech = 0;
  for (int p : phones) {
    if (!language.HasPhone(p)) {
      throw std::invalid_argument("phone " + std::to_string(p) + " is not in language " +
                                  std::to_string(language.lang_id));
    }
    speech += language.Duration(p);
  }
  const int n_mels = config.n_mels;
  Mat mel = Mat::Constant(lead + speech + trail, n_mels, config.silence_level);
  const RowVec identity = speaker.Identity();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, config.noise_sigma);
  int t = 0;
  for (int p : phones) {
    const int d = language.Duration(p);
    for (int k = 0; k < d; ++k, ++t) {
      RowVec frame = phone_templates.row(p) + identity;
      frame.array() += language.Contour(t);
      if (config.noise_sigma > 0.0) {
        for (int b = 0; b < n_mels; ++b) frame(b) += noise(rng);
      }
      mel.row(lead + t) = frame;
    }
  }
  // Round through float32: the store format is single precision.
  mel = mel.cast<float>().cast<double>();
  Utterance u;
  u.speaker_id = speaker.speaker_id;
  u.lang_id = language.lang_id;
  u.phones.assign(phones.begin(), phones.end());
  u.mel = std::move(mel);
  return u;
}

Corpus BuildCorpus(const CorpusConfig& config, std::uint64_t seed) {
  config.Validate();
  Corpus corpus;
  corpus.config = config;
  corpus.seed = seed;
  corpus.specs = MakeSpecs(config, seed);
  corpus.manifest.seed = seed;
  corpus.manifest.language_counts = config.LanguageCounts();

  std::mt19937_64 text_rng(MixSeed(seed, kStreamText));
  std::uniform_int_distribution<int> sil(config.min_silence, config.max_silence);
  std::uint64_t offset = kHeaderBytes;
  auto add = [&](const SpeakerSpec& spk, const std::string& split) {
    const LanguageSpec& lang = corpus.specs.Language(spk.native_lang);
    std::vector<int> phones = SamplePhoneSequence(lang, config, text_rng);
    const int lead = sil(text_rng);
    const int trail = sil(text_rng);
    const int id = static_cast<int>(corpus.utterances.size());
    Utterance u = RenderUtterance(phones, spk, lang, corpus.specs.phone_templates, config, lead, trail,
                                  MixSeed(seed, kStreamRender + static_cast<std::uint64_t>(id) * 7919u));
    u.utt_id = id;
    UtteranceRecord rec;
    rec.utt_id = id;
    rec.speaker_id = u.speaker_id;
    rec.lang_id = u.lang_id;
    rec.n_frames = u.n_frames();
    rec.offset = offset;
    rec.split = split;
    rec.phones = u.phones;
    offset += static_cast<std::uint64_t>(u.n_frames()) * static_cast<std::uint64_t>(config.n_mels) * 4u;
    corpus.manifest.records.push_back(std::move(rec));
    corpus.utterances.push_back(std::move(u));
  };
  const int spl = config.speakers_per_language;
  for (int l = 0; l < config.n_languages; ++l) {
    const int count = corpus.manifest.language_counts[static_cast<size_t>(l)];
    for (int j = 0; j < count; ++j) add(corpus.specs.speakers[static_cast<size_t>(l * spl + j % spl)], "train");
  }
  for (int j = 0; j < config.new_speaker_utterances; ++j) add(corpus.specs.speakers.back(), "new");
  return corpus;
}

std::vector<int> Corpus::Split(const std::string& split) const {
  std::vector<int> out;
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    if (manifest.records[i].split == split) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Corpus::TrainSpeakers() const {
  std::vector<int> out;
  for (int i = 0; i < config.n_languages * config.speakers_per_language; ++i) out.push_back(i);
  return out;
}

std::vector<int> Corpus::Languages() const {
  std::vector<int> out;
  for (int l = 0; l < config.n_languages; ++l) out.push_back(l);
  return out;
}

// ---- Silence and oracle ----------------------------------------------------

bool IsSilenceFrame(const Mat& mel, Eigen::Index row, double floor) {
  return (mel.row(row).array() < floor).all();
}

Mat TrimSilence(const Mat& mel, int target, double floor, double silence_level) {
  const Eigen::Index n = mel.rows();
  Eigen::Index lead = 0;
  while (lead < n && IsSilenceFrame(mel, lead, floor)) ++lead;
  if (lead == n) throw std::invalid_argument("TrimSilence: input is all silence");
  Eigen::Index trail = 0;
  while (trail < n - lead && IsSilenceFrame(mel, n - 1 - trail, floor)) ++trail;
  if (lead < target || trail < target) {
    LOG(INFO) << "TrimSilence: padding (lead " << lead << ", trail " << trail << ", target " << target << ")";
  }
  const Eigen::Index interior = n - lead - trail;
  Mat out(interior + 2 * target, mel.cols());
  const Eigen::Index keep_lead = std::min<Eigen::Index>(lead, target);
  const Eigen::Index keep_trail = std::min<Eigen::Index>(trail, target);
  // Padding frames go on the outside; retained silence frames keep their values.
  out.topRows(target - keep_lead).setConstant(silence_level);
  out.middleRows(target - keep_lead, keep_lead) = mel.middleRows(lead - keep_lead, keep_lead);
  out.middleRows(target, interior) = mel.middleRows(lead, interior);
  out.middleRows(target + interior, keep_trail) = mel.middleRows(lead + interior, keep_trail);
  out.bottomRows(target - keep_trail).setConstant(silence_level);
  return out;
}

RowVec OracleSpeakerVector(const Mat& mel, std::span<const int> phones, const LanguageSpec& language,
                           const CorpusSpecs& specs, const CorpusConfig& config) {
  RowVec sum = RowVec::Zero(mel.cols());
  int voiced = 0;
  for (Eigen::Index r = 0; r < mel.rows(); ++r) {
    if (IsSilenceFrame(mel, r, config.silence_floor)) continue;
    sum += mel.row(r);
    ++voiced;
  }
  if (voiced == 0) throw std::invalid_argument("oracle: utterance has no voiced frames");
  if (phones.empty()) throw std::invalid_argument("oracle: empty phone sequence");
  RowVec expected = RowVec::Zero(mel.cols());
  int total = 0;
  for (int p : phones) {
    const int d = language.Duration(p);
    expected += static_cast<double>(d) * specs.phone_templates.row(p);
    total += d;
  }
  expected /= static_cast<double>(total);
  expected.array() += language.ContourMean(voiced);
  return sum / static_cast<double>(voiced) - expected;
}

// ---- I/O -----------------------------------------------------------------

std::string ManifestToString(const CorpusManifest& m) {
  std::string s = "# xtts corpus manifest\n";
  s += "# seed=" + std::to_string(m.seed) + "\n";
  s += "# generator_version=" + std::to_string(m.generator_version) + "\n";
  s += "# language_counts=" + JoinInts(m.language_counts) + "\n";
  s += "# utt_id\tspeaker\tlang\tn_frames\toffset\tsplit\tphones\n";
  for (const auto& r : m.records) {
    s += std::to_string(r.utt_id) + '\t' + std::to_string(r.speaker_id) + '\t' + std::to_string(r.lang_id) +
         '\t' + std::to_string(r.n_frames) + '\t' + std::to_string(r.offset) + '\t' + r.split + '\t' +
         JoinInts(r.phones) + '\n';
  }
  return s;
}

CorpusManifest ParseManifest(const std::string& text) {
  CorpusManifest m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto kv = [&](const std::string& key) -> std::string {
        const std::string prefix = "# " + key + "=";
        return line.rfind(prefix, 0) == 0 ? line.substr(prefix.size()) : std::string();
      };
      if (auto v = kv("seed"); !v.empty()) m.seed = std::stoull(v);
      if (auto v = kv("generator_version"); !v.empty()) m.generator_version = std::stoi(v);
      if (auto v = kv("language_counts"); !v.empty()) m.language_counts = SplitInts(v);
      continue;
    }
    std::istringstream fields(line);
    UtteranceRecord r;
    std::string phones;
    if (!(fields >> r.utt_id >> r.speaker_id >> r.lang_id >> r.n_frames >> r.offset >> r.split >> phones)) {
      throw std::runtime_error("malformed manifest line: " + line);
    }
    r.phones = SplitInts(phones);
    m.records.push_back(std::move(r));
  }
  return m;
}

void WriteCorpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  KvConfig kv = corpus.config.ToKv();
  kv.Set("seed", std::to_string(corpus.seed));
  kv.Save(dir + "/corpus.cfg");
  WriteFile(dir + "/manifest.tsv", ManifestToString(corpus.manifest));
  std::string store = MelHeader(corpus.config.n_mels);
  for (const auto& u : corpus.utterances) AppendRows(store, u.mel);
  WriteFile(dir + "/mels.bin", store);
}

Corpus LoadCorpus(const std::string& dir) {
  const KvConfig kv = KvConfig::Load(dir + "/corpus.cfg");
  Corpus corpus;
  corpus.config = CorpusConfig::FromKv(kv);
  corpus.seed = std::stoull(kv.GetString("seed", "0"));
  corpus.specs = MakeSpecs(corpus.config, corpus.seed);
  corpus.manifest = ParseManifest(ReadFile(dir + "/manifest.tsv"));
  if (corpus.manifest.generator_version != kCorpusGeneratorVersion) {
    throw std::runtime_error("corpus generator version mismatch in " + dir);
  }
  const std::string store = ReadFile(dir + "/mels.bin");
  const int n_mels = CheckMelHeader(store, dir + "/mels.bin");
  if (n_mels != corpus.config.n_mels) throw std::runtime_error("mel store n_mels disagrees with corpus.cfg");
  const auto* base = reinterpret_cast<const unsigned char*>(store.data());
  for (const auto& r : corpus.manifest.records) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(r.n_frames) * static_cast<std::uint64_t>(n_mels) * 4u;
    if (r.offset + bytes > store.size()) throw std::runtime_error("mel store truncated");
    Utterance u;
    u.utt_id = r.utt_id;
    u.speaker_id = r.speaker_id;
    u.lang_id = r.lang_id;
    u.phones = r.phones;
    u.mel = DecodeRows(base + r.offset, r.n_frames, n_mels);
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

void WriteMelFile(const Mat& mel, const std::string& path) {
  std::string bytes = MelHeader(static_cast<int>(mel.cols()));
  AppendRows(bytes, mel);
  WriteFile(path, bytes);
}

Mat ReadMelFile(const std::string& path) {
  const std::string bytes = ReadFile(path);
  const int n_mels = CheckMelHeader(bytes, path);
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (n_mels <= 0 || payload % (static_cast<std::uint64_t>(n_mels) * 4u) != 0) {
    throw std::runtime_error(path + ": payload is not a whole number of frames");
  }
  const int rows = static_cast<int>(payload / (static_cast<std::uint64_t>(n_mels) * 4u));
  return DecodeRows(reinterpret_cast<const unsigned char*>(bytes.data()) + kHeaderBytes, rows, n_mels);
}

}  // namespace xtts
