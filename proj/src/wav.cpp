#include "csat/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "csat/errors.hpp"

namespace csat {

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open wav file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) {
    throw DataError("not a RIFF file: " + path);
  }
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) {
    throw DataError("not a WAVE file: " + path);
  }

  WavData wav;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  while (in.read(tag, 4)) {
    const std::uint32_t chunk_size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const std::uint16_t format = read_u16(in);
      channels = read_u16(in);
      wav.sample_rate = static_cast<int>(read_u32(in));
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.ignore(chunk_size - 16);
      if (format != 1) throw DataError("wav is not PCM: " + path);
      if (channels != 1) throw DataError("wav is not mono: " + path);
      if (bits != 16) throw DataError("wav is not 16-bit: " + path);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav data chunk before fmt: " + path);
      const std::size_t n = chunk_size / 2;
      wav.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        const std::int16_t s = static_cast<std::int16_t>(b[0] | (b[1] << 8));
        wav.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return wav;
    } else {
      in.ignore(chunk_size + (chunk_size & 1));
    }
  }
  throw DataError("wav has no data chunk: " + path);
}

void write_wav(const std::string& path, const WavData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open wav file for writing: " + path);
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(data.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(data.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(data.sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (double s : data.samples) {
    const double clamped = std::min(1.0, std::max(-1.0, s));
    const auto v = static_cast<std::int16_t>(
        std::lround(clamped * 32767.0));
    write_u16(out, static_cast<std::uint16_t>(v));
  }
}

}  // namespace csat
