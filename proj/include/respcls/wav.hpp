#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace respcls {

struct WavData {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = 0;
  int source_channels = 1;
};

// 16-bit PCM RIFF/WAVE, mono or stereo; stereo is averaged to mono.
WavData read_wav(const std::filesystem::path& path);

void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, int sample_rate);

// Snaps a sample onto the 16-bit PCM grid, so written files read back
// bit-identically.
double quantize_pcm16(double s);

}  // namespace respcls
