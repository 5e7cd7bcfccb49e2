#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "respcls/labels.hpp"

namespace respcls {

enum class Split { Train, Test };

const char* to_string(Split s);

struct RecordingMeta {
  std::string recording_id;
  PatientId patient;
  int sample_rate = 0;
  Split split = Split::Train;
};

// One row of an ICBHI annotation file: "start end crackle wheeze".
struct CycleAnnotation {
  double start_s = 0.0;
  double end_s = 0.0;
  int crackle = 0;
  int wheeze = 0;
};

struct RespiratoryCycle {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = 0;
  Label3 label;
  PatientId patient;
  std::string recording_id;
  int cycle_index = 0;  // annotation row index within the recording
  Split split = Split::Train;

  std::string cycle_id() const {
    return recording_id + "#" + std::to_string(cycle_index);
  }
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Whitespace-separated rows "start end crackle wheeze"; blank lines are
// skipped. Errors name the offending 1-based line.
std::vector<CycleAnnotation> parse_annotation_file(const std::string& text);

// Rows "recording_id<TAB>(train|test)". Duplicate ids and unknown tags are
// errors.
std::map<std::string, Split> parse_split_file(const std::string& text);

// First underscore-delimited token of the recording filename.
PatientId patient_from_recording_id(const std::string& recording_id);

struct SliceStats {
  std::size_t clamped = 0;
  std::size_t dropped = 0;
};

// Cuts annotation windows out of a recording. Sample bounds are
// round(start*sr)..round(end*sr); out-of-range annotations are clamped with
// a warning, and slices that end up empty are dropped.
std::vector<RespiratoryCycle> slice_cycles(
    const std::vector<double>& samples, const RecordingMeta& meta,
    const std::vector<CycleAnnotation>& annotations,
    SliceStats* stats = nullptr);

struct Dataset {
  std::vector<RespiratoryCycle> cycles;
  std::vector<RecordingMeta> recordings;

  std::vector<RespiratoryCycle> cycles_for(Split s) const;
};

// Loads every <id>.wav / <id>.txt pair under audio_dir (by recording id, in
// lexicographic order) together with the split file. Audio is resampled to
// 16 kHz before slicing.
Dataset load_dataset(const std::filesystem::path& audio_dir,
                     const std::filesystem::path& split_file);

void write_manifest_csv(const std::filesystem::path& path,
                        const Dataset& dataset);

}  // namespace respcls
