// semantics/mouth-frames.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_SEMANTICS_MOUTH_FRAMES_H_
#define CSFNET_SEMANTICS_MOUTH_FRAMES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "base/tensor.h"

namespace csfnet {

inline constexpr int64_t kMouthSize = 88;
inline constexpr int kVideoFps = 25;

// Grayscale mouth-region frames, row-major [T_v, H, W].
struct MouthFrames {
  int64_t frames = 0;
  int64_t height = kMouthSize;
  int64_t width = kMouthSize;
  int fps = kVideoFps;
  std::vector<uint8_t> pixels;

  uint8_t* frame(int64_t t) { return pixels.data() + t * height * width; }
  const uint8_t* frame(int64_t t) const {
    return pixels.data() + t * height * width;
  }
  // Throws InvalidInput unless the frames are 88 x 88 and the buffer size
  // matches.
  void Validate() const;
  // [T_v, 1, H, W] scaled to [0, 1].
  Tensor AsTensor() const;

  static MouthFrames Zeros(int64_t frames);
};

// Frame count of a clip of the given duration at 25 fps.
int64_t VideoFramesFor(double seconds);

// Packed container: "MROI", u32 T_v, u32 H, u32 W (little endian), payload.
void WriteMroi(const std::string& path, const MouthFrames& m);
MouthFrames ReadMroi(const std::string& path);

// Directory of binary PGM frames frame_00000.pgm, frame_00001.pgm, ...
void WritePgmDirectory(const std::string& dir, const MouthFrames& m);
MouthFrames ReadPgmDirectory(const std::string& dir);

// Dispatches on whether `path` is a directory.
MouthFrames LoadMouthFrames(const std::string& path);

// Copy with n_missing consecutive frames zeroed; the start is drawn
// uniformly from [0, T_v - n_missing] by a generator seeded with rng_seed.
MouthFrames Occlude(const MouthFrames& m, int64_t n_missing, uint64_t rng_seed);
int64_t OcclusionStart(int64_t frames, int64_t n_missing, uint64_t rng_seed);

}  // namespace csfnet

#endif  // CSFNET_SEMANTICS_MOUTH_FRAMES_H_
