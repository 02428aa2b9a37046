/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "bandflow/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace bandflow {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
}

void put_tag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform read_wav(const std::string& path, bool allow_downmix) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open wav file: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw DataError("not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint8_t* hdr = buf.data() + pos;
    uint32_t chunk_len = read_u32(hdr + 4);
    size_t body = pos + 8;
    if (body + chunk_len > buf.size()) chunk_len = static_cast<uint32_t>(buf.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = read_u16(buf.data() + body);
      channels = read_u16(buf.data() + body + 2);
      rate = read_u32(buf.data() + body + 4);
      bits = read_u16(buf.data() + body + 14);
      if (format == kFormatExtensible && chunk_len >= 40) {
        format = read_u16(buf.data() + body + 24);  // first two bytes of SubFormat GUID
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word aligned
  }

  if (data == nullptr) throw DataError("wav file has no data chunk: " + path);
  if (channels == 0 || rate == 0) throw DataError("wav file has no fmt chunk: " + path);
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw DataError("unsupported wav encoding (want PCM16 or float32): " + path);
  }
  if (channels > 1 && !allow_downmix) {
    throw DataError("multichannel wav rejected (downmix disabled): " + path);
  }

  const size_t bytes_per_sample = pcm16 ? 2 : 4;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* s = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        int16_t v = static_cast<int16_t>(s[0] | (s[1] << 8));
        acc += static_cast<double>(v) / 32767.0;
      } else {
        uint32_t u = read_u32(s);
        float fv;
        std::memcpy(&fv, &u, sizeof(fv));
        acc += static_cast<double>(fv);
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavFormat format) {
  if (w.sample_rate <= 0) throw DataError("invalid sample rate for wav write");
  const bool pcm16 = format == WavFormat::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint32_t byte_rate = static_cast<uint32_t>(w.sample_rate) * bits / 8;
  const uint32_t data_len = static_cast<uint32_t>(w.samples.size() * bits / 8);

  std::vector<uint8_t> out;
  out.reserve(44 + data_len);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_len);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, byte_rate);
  put_u16(out, static_cast<uint16_t>(bits / 8));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_len);

  for (double x : w.samples) {
    if (pcm16) {
      double clipped = std::clamp(x, -1.0, 1.0);
      long q = std::lround(clipped * 32767.0);
      auto v = static_cast<int16_t>(std::clamp<long>(q, -32768, 32767));
      put_u16(out, static_cast<uint16_t>(v));
    } else {
      auto fv = static_cast<float>(x);
      uint32_t u;
      std::memcpy(&u, &fv, sizeof(u));
      put_u32(out, u);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open wav file for write: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("wav write failed: " + path);
}

}  // namespace bandflow
