#pragma once

#include <string>
#include <vector>

namespace disparity {

// One mono audio recording, samples normalized to [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Reads a RIFF/WAVE file with 8- or 16-bit integer PCM samples.
// Multichannel audio is averaged down to mono. 16-bit samples are scaled
// by 1/32768, 8-bit (unsigned) by (v - 128)/128. Throws DataError on
// malformed headers or unsupported encodings, naming the offending chunk.
AudioSignal load_wav(const std::string& path);

// Writes a mono 16-bit PCM WAV. Samples are clipped to [-1, 1].
void save_wav(const std::string& path, const AudioSignal& signal);

}  // namespace disparity
