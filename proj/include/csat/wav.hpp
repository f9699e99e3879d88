#pragma once

#include <string>
#include <vector>

namespace csat {

struct WavData {
  int sample_rate = 16000;
  std::vector<double> samples;  // mono, in [-1, 1]
};

// 16-bit PCM mono RIFF/WAVE only; anything else raises DataError.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const WavData& data);

}  // namespace csat
