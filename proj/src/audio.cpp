#include "disparity/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "disparity/errors.hpp"

namespace disparity {
namespace {

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

std::string chunk_id(const unsigned char* p) {
  return std::string(reinterpret_cast<const char*>(p), 4);
}

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void append_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioSignal load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || chunk_id(bytes.data()) != "RIFF" ||
      chunk_id(bytes.data() + 8) != "WAVE") {
    throw DataError("not a RIFF/WAVE file: " + path);
  }

  bool have_fmt = false;
  std::uint16_t audio_format = 0, num_channels = 0, bits_per_sample = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = chunk_id(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw DataError("truncated chunk '" + id + "' in " + path);
    }
    if (id == "fmt ") {
      if (size < 16) throw DataError("short 'fmt ' chunk in " + path);
      audio_format = read_u16(bytes.data() + body);
      num_channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits_per_sample = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw DataError("missing 'fmt ' chunk in " + path);
  if (data == nullptr) throw DataError("missing 'data' chunk in " + path);
  if (audio_format != 1) {
    throw DataError("unsupported encoding in 'fmt ' chunk (format tag " +
                    std::to_string(audio_format) + ", want PCM=1): " + path);
  }
  if (bits_per_sample != 8 && bits_per_sample != 16) {
    throw DataError("unsupported sample width in 'fmt ' chunk (" +
                    std::to_string(bits_per_sample) + " bits, want 8 or 16): " +
                    path);
  }
  if (num_channels == 0) throw DataError("zero channels in 'fmt ' chunk: " + path);
  if (sample_rate == 0) throw DataError("zero sample rate in 'fmt ' chunk: " + path);

  const std::size_t bytes_per_sample = bits_per_sample / 8;
  const std::size_t stride = bytes_per_sample * num_channels;
  const std::size_t num_frames = data_size / stride;
  if (num_frames == 0) throw DataError("empty 'data' chunk in " + path);

  AudioSignal out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(num_frames);
  for (std::size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < num_channels; ++c) {
      const unsigned char* p = data + i * stride + c * bytes_per_sample;
      if (bits_per_sample == 16) {
        const std::int16_t v =
            static_cast<std::int16_t>(p[0] | (static_cast<std::uint16_t>(p[1]) << 8));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        acc += (static_cast<double>(p[0]) - 128.0) / 128.0;
      }
    }
    out.samples[i] = acc / num_channels;
  }
  return out;
}

void save_wav(const std::string& path, const AudioSignal& signal) {
  if (signal.sample_rate <= 0) throw DataError("save_wav: invalid sample rate");
  const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint32_t data_size = n * 2;

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  append_u32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  append_u32(out, 16);
  append_u16(out, 1);  // PCM
  append_u16(out, 1);  // mono
  append_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  append_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  append_u16(out, 2);
  append_u16(out, 16);
  out += "data";
  append_u32(out, data_size);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double clipped = std::clamp(signal.samples[i], -1.0, 1.0);
    const int scaled = static_cast<int>(std::lrint(clipped * 32767.0));
    append_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write WAV file: " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace disparity
