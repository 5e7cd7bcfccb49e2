#include "respcls/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "respcls/log.hpp"
#include "respcls/mel.hpp"
#include "respcls/strfmt.hpp"
#include "respcls/wav.hpp"

namespace respcls {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool parse_double(const std::string& tok, double* out) {
  try {
    std::size_t used = 0;
    *out = std::stod(tok, &used);
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_bit(const std::string& tok, int* out) {
  if (tok == "0") {
    *out = 0;
    return true;
  }
  if (tok == "1") {
    *out = 1;
    return true;
  }
  return false;
}

}  // namespace

const char* to_string(Split s) {
  return s == Split::Train ? "train" : "test";
}

std::vector<CycleAnnotation> parse_annotation_file(const std::string& text) {
  std::vector<CycleAnnotation> out;
  std::istringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 4) {
      throw ParseError("annotation line " + std::to_string(line_no) +
                       ": expected 4 columns, got " +
                       std::to_string(toks.size()));
    }
    CycleAnnotation a;
    if (!parse_double(toks[0], &a.start_s) || a.start_s < 0.0) {
      throw ParseError("annotation line " + std::to_string(line_no) +
                       ": bad start time '" + toks[0] + "'");
    }
    if (!parse_double(toks[1], &a.end_s)) {
      throw ParseError("annotation line " + std::to_string(line_no) +
                       ": bad end time '" + toks[1] + "'");
    }
    if (a.end_s <= a.start_s) {
      throw ParseError("annotation line " + std::to_string(line_no) +
                       ": end time " + toks[1] + " is not after start time " +
                       toks[0]);
    }
    if (!parse_bit(toks[2], &a.crackle)) {
      throw ParseError("annotation line " + std::to_string(line_no) +
                       ": crackle bit must be 0 or 1, got '" + toks[2] + "'");
    }
    if (!parse_bit(toks[3], &a.wheeze)) {
      throw ParseError("annotation line " + std::to_string(line_no) +
                       ": wheeze bit must be 0 or 1, got '" + toks[3] + "'");
    }
    out.push_back(a);
  }
  return out;
}

std::map<std::string, Split> parse_split_file(const std::string& text) {
  std::map<std::string, Split> out;
  std::istringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) {
      throw ParseError("split line " + std::to_string(line_no) +
                       ": expected 'recording_id<TAB>train|test'");
    }
    Split s;
    if (toks[1] == "train") {
      s = Split::Train;
    } else if (toks[1] == "test") {
      s = Split::Test;
    } else {
      throw ParseError("split line " + std::to_string(line_no) +
                       ": unknown split tag '" + toks[1] + "'");
    }
    auto [it, inserted] = out.emplace(toks[0], s);
    (void)it;
    if (!inserted) {
      throw ParseError("split line " + std::to_string(line_no) +
                       ": duplicate recording id '" + toks[0] + "'");
    }
  }
  return out;
}

PatientId patient_from_recording_id(const std::string& recording_id) {
  if (recording_id.empty()) {
    throw ParseError("recording id must be non-empty");
  }
  auto pos = recording_id.find('_');
  return PatientId(pos == std::string::npos ? recording_id
                                            : recording_id.substr(0, pos));
}

std::vector<RespiratoryCycle> slice_cycles(
    const std::vector<double>& samples, const RecordingMeta& meta,
    const std::vector<CycleAnnotation>& annotations, SliceStats* stats) {
  const auto n = static_cast<long long>(samples.size());
  const double sr = meta.sample_rate;
  std::vector<RespiratoryCycle> out;
  out.reserve(annotations.size());
  for (std::size_t k = 0; k < annotations.size(); ++k) {
    const auto& a = annotations[k];
    long long lo = std::llround(a.start_s * sr);
    long long hi = std::llround(a.end_s * sr);
    long long clo = std::clamp(lo, 0LL, n);
    long long chi = std::clamp(hi, 0LL, n);
    if (clo != lo || chi != hi) {
      if (stats) ++stats->clamped;
      log_warn("recording " + meta.recording_id + " cycle " +
               std::to_string(k) + ": annotation exceeds audio, clamped");
    }
    if (chi <= clo) {
      if (stats) ++stats->dropped;
      log_warn("recording " + meta.recording_id + " cycle " +
               std::to_string(k) + ": empty after clamping, dropped");
      continue;
    }
    RespiratoryCycle c;
    c.samples.assign(samples.begin() + clo, samples.begin() + chi);
    c.sample_rate = meta.sample_rate;
    c.label = label3_from_annotation_bits(a.crackle, a.wheeze);
    c.patient = meta.patient;
    c.recording_id = meta.recording_id;
    c.cycle_index = static_cast<int>(k);
    c.split = meta.split;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<RespiratoryCycle> Dataset::cycles_for(Split s) const {
  std::vector<RespiratoryCycle> out;
  for (const auto& c : cycles) {
    if (c.split == s) out.push_back(c);
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& audio_dir,
                     const std::filesystem::path& split_file) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(audio_dir)) {
    throw ParseError("audio directory not found: " + audio_dir.string());
  }
  std::ifstream sf(split_file);
  if (!sf) throw ParseError("cannot open split file: " + split_file.string());
  std::stringstream sbuf;
  sbuf << sf.rdbuf();
  auto split_map = parse_split_file(sbuf.str());

  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(audio_dir)) {
    if (entry.path().extension() == ".wav") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());

  Dataset ds;
  for (const auto& rid : ids) {
    auto split_it = split_map.find(rid);
    if (split_it == split_map.end()) {
      throw ParseError("recording '" + rid + "' missing from split file");
    }
    fs::path txt = audio_dir / (rid + ".txt");
    std::ifstream tf(txt);
    if (!tf) throw ParseError("annotation file missing: " + txt.string());
    std::stringstream tbuf;
    tbuf << tf.rdbuf();
    std::vector<CycleAnnotation> anns;
    try {
      anns = parse_annotation_file(tbuf.str());
    } catch (const ParseError& e) {
      throw ParseError(txt.string() + ": " + e.what());
    }

    WavData wav = read_wav(audio_dir / (rid + ".wav"));
    std::vector<double> samples = std::move(wav.samples);
    int rate = wav.sample_rate;
    if (rate != kTargetSampleRate) {
      samples = resample_to_16k(samples, static_cast<double>(rate));
      rate = kTargetSampleRate;
    }

    RecordingMeta meta;
    meta.recording_id = rid;
    meta.patient = patient_from_recording_id(rid);
    meta.sample_rate = rate;
    meta.split = split_it->second;

    auto cycles = slice_cycles(samples, meta, anns);
    ds.recordings.push_back(meta);
    for (auto& c : cycles) ds.cycles.push_back(std::move(c));
  }
  return ds;
}

void write_manifest_csv(const std::filesystem::path& path,
                        const Dataset& dataset) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write manifest: " + path.string());
  f << "cycle_id,recording_id,patient_id,split,normal,crackle,wheeze,"
       "duration_s\n";
  for (const auto& c : dataset.cycles) {
    double dur = static_cast<double>(c.samples.size()) / c.sample_rate;
    f << c.cycle_id() << ',' << c.recording_id << ',' << c.patient.id << ','
      << to_string(c.split) << ',' << label3_to_csv(c.label) << ','
      << fmt_double(dur) << '\n';
  }
  if (!f) throw std::runtime_error("short manifest write: " + path.string());
}

}  // namespace respcls
