#include "respcls/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace respcls {

namespace {

constexpr double kPcm16Scale = 32767.0;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] |
                                    (static_cast<std::uint16_t>(p[1]) << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

double quantize_pcm16(double s) {
  double c = std::clamp(s, -1.0, 1.0);
  return std::round(c * kPcm16Scale) / kPcm16Scale;
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open wav file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t size = read_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (body + size > bytes.size()) size = static_cast<std::uint32_t>(bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && size >= 16) {
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw std::runtime_error("wav missing fmt or data chunk: " + path.string());
  }
  if (format != 1 || bits != 16) {
    throw std::runtime_error("unsupported wav encoding (want 16-bit PCM): " +
                             path.string());
  }
  if (channels < 1 || channels > 2) {
    throw std::runtime_error("unsupported wav channel count: " +
                             std::to_string(channels));
  }
  if (rate == 0) throw std::runtime_error("wav sample rate is zero");

  std::size_t frame_bytes = 2u * channels;
  std::size_t n_frames = data_size / frame_bytes;

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.source_channels = channels;
  out.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const unsigned char* p = data + i * frame_bytes;
    double acc = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      std::int16_t s = static_cast<std::int16_t>(read_u16(p + 2 * ch));
      acc += static_cast<double>(s) / kPcm16Scale;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, int sample_rate) {
  if (sample_rate <= 0) throw std::invalid_argument("sample rate must be > 0");
  std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_size);
  for (double s : samples) {
    double c = std::clamp(s, -1.0, 1.0);
    auto q = static_cast<std::int16_t>(std::lround(c * kPcm16Scale));
    put_u16(out, static_cast<std::uint16_t>(q));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write wav file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write: " + path.string());
}

}  // namespace respcls
