// semantics/mouth-frames.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "semantics/mouth-frames.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "base/error.h"
#include "base/random.h"

namespace csfnet {

namespace fs = std::filesystem;

void MouthFrames::Validate() const {
  CSF_CHECK_INPUT(height == kMouthSize && width == kMouthSize,
                  "mouth frames must be 88x88, got ", height, "x", width);
  CSF_CHECK_INPUT(frames >= 0 &&
                      pixels.size() == static_cast<size_t>(frames * height * width),
                  "mouth frame buffer holds ", pixels.size(), " bytes for ",
                  frames, " frames");
}

Tensor MouthFrames::AsTensor() const {
  Tensor t({frames, 1, height, width});
  for (size_t i = 0; i < pixels.size(); ++i) t[i] = pixels[i] / 255.0;
  return t;
}

MouthFrames MouthFrames::Zeros(int64_t frames) {
  MouthFrames m;
  m.frames = frames;
  m.pixels.assign(frames * kMouthSize * kMouthSize, 0);
  return m;
}

int64_t VideoFramesFor(double seconds) {
  return std::llround(seconds * kVideoFps);
}

namespace {

void PutU32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

}  // namespace

void WriteMroi(const std::string& path, const MouthFrames& m) {
  std::ofstream out(path, std::ios::binary);
  CSF_CHECK_INPUT(out.good(), "cannot write ", path);
  out.write("MROI", 4);
  PutU32(out, static_cast<uint32_t>(m.frames));
  PutU32(out, static_cast<uint32_t>(m.height));
  PutU32(out, static_cast<uint32_t>(m.width));
  out.write(reinterpret_cast<const char*>(m.pixels.data()), m.pixels.size());
  CSF_CHECK_INPUT(out.good(), "write failed for ", path);
}

MouthFrames ReadMroi(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CSF_CHECK_INPUT(in.good(), "cannot open ", path);
  char header[16];
  in.read(header, 16);
  CSF_CHECK_INPUT(in.gcount() == 16 && std::memcmp(header, "MROI", 4) == 0,
                  path, ": not an MROI container");
  uint32_t dims[3];
  std::memcpy(dims, header + 4, 12);
  MouthFrames m;
  m.frames = dims[0];
  m.height = dims[1];
  m.width = dims[2];
  m.pixels.resize(m.frames * m.height * m.width);
  in.read(reinterpret_cast<char*>(m.pixels.data()), m.pixels.size());
  CSF_CHECK_INPUT(static_cast<size_t>(in.gcount()) == m.pixels.size(), path,
                  ": truncated payload");
  m.Validate();
  return m;
}

namespace {

std::string FrameName(int64_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05lld.pgm", static_cast<long long>(t));
  return buf;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string PgmToken(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok += c;
  }
  return tok;
}

}  // namespace

void WritePgmDirectory(const std::string& dir, const MouthFrames& m) {
  fs::create_directories(dir);
  for (int64_t t = 0; t < m.frames; ++t) {
    std::ofstream out(fs::path(dir) / FrameName(t), std::ios::binary);
    CSF_CHECK_INPUT(out.good(), "cannot write frame ", t, " in ", dir);
    out << "P5\n" << m.width << " " << m.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(m.frame(t)), m.height * m.width);
  }
}

MouthFrames ReadPgmDirectory(const std::string& dir) {
  MouthFrames m;
  m.frames = 0;
  for (int64_t t = 0;; ++t) {
    const fs::path p = fs::path(dir) / FrameName(t);
    if (!fs::exists(p)) break;
    std::ifstream in(p, std::ios::binary);
    CSF_CHECK_INPUT(PgmToken(in) == "P5", p.string(), ": not a binary PGM");
    const int64_t w = std::stoll(PgmToken(in));
    const int64_t h = std::stoll(PgmToken(in));
    const int64_t maxval = std::stoll(PgmToken(in));
    CSF_CHECK_INPUT(maxval == 255, p.string(), ": only 8-bit PGM is supported");
    if (t == 0) {
      m.width = w;
      m.height = h;
    }
    CSF_CHECK_INPUT(w == m.width && h == m.height, p.string(),
                    ": frame size changes mid-sequence");
    const size_t off = m.pixels.size();
    m.pixels.resize(off + w * h);
    in.read(reinterpret_cast<char*>(m.pixels.data() + off), w * h);
    CSF_CHECK_INPUT(in.gcount() == w * h, p.string(), ": truncated frame");
    ++m.frames;
  }
  CSF_CHECK_INPUT(m.frames > 0, dir, ": no frame_00000.pgm found");
  m.Validate();
  return m;
}

MouthFrames LoadMouthFrames(const std::string& path) {
  return fs::is_directory(path) ? ReadPgmDirectory(path) : ReadMroi(path);
}

int64_t OcclusionStart(int64_t frames, int64_t n_missing, uint64_t rng_seed) {
  CSF_CHECK_INPUT(n_missing >= 0 && n_missing <= frames, "cannot occlude ",
                  n_missing, " of ", frames, " frames");
  Rng rng(rng_seed);
  return rng.UniformInt(0, frames - n_missing);
}

MouthFrames Occlude(const MouthFrames& m, int64_t n_missing, uint64_t rng_seed) {
  m.Validate();
  const int64_t start = OcclusionStart(m.frames, n_missing, rng_seed);
  MouthFrames out = m;
  const int64_t stride = m.height * m.width;
  std::fill(out.pixels.begin() + start * stride,
            out.pixels.begin() + (start + n_missing) * stride, 0);
  return out;
}

}  // namespace csfnet
