// tests/encoder-test.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>

#include <gtest/gtest.h>

#include "base/error.h"
#include "encoder/audio-encoder.h"
#include "grad-check.h"
#include "test-util.h"

namespace csfnet {
namespace {

using testing::CheckGradients;
using testing::Probe;
using testing::RandomVar;

TEST(AudioEncoderTest, DefaultShape) {
  Rng rng(1);
  AudioEncoder enc(192, &rng);
  NoGradGuard guard;
  Var y = enc.Forward(Var(rng.NormalTensor({2, 251, 257})));
  EXPECT_EQ(y.shape(), Shape({192, 251, 257}));
  EXPECT_TRUE(y.value().AllFinite());
  // Four branches of C/4 each.
  int64_t convs = 0;
  for (const auto& p : enc.Parameters())
    if (p.name.find("weight") != std::string::npos) {
      EXPECT_EQ(p.var.dim(0), 48);
      ++convs;
    }
  EXPECT_EQ(convs, 4);
}

TEST(AudioEncoderTest, RejectsBadChannels) {
  Rng rng(2);
  EXPECT_THROW(AudioEncoder(18, &rng), ConfigError);
  AudioEncoder enc(8, &rng);
  EXPECT_THROW(enc.Forward(Var(Tensor({3, 8, 8}))), InvalidInput);
}

TEST(AudioEncoderTest, ZeroInputIsConstantInInterior) {
  Rng rng(3);
  AudioEncoder enc(16, &rng);
  NoGradGuard guard;
  const int64_t t = 12, f = 13;
  Tensor y = enc.Forward(Var(Tensor({2, t, f}))).value();
  // Group norm statistics are global, so the interior, where every branch
  // sees only zero padding-free input, is a constant per channel.
  for (int64_t c = 0; c < 16; ++c)
    for (int64_t i = 3; i < t - 3; ++i)
      for (int64_t j = 3; j < f - 3; ++j)
        EXPECT_DOUBLE_EQ(y.at({c, i, j}), y.at({c, 3, 3}));
}

TEST(AudioEncoderTest, TimeShiftEquivariance) {
  Rng rng(4);
  AudioEncoder enc(8, &rng);
  NoGradGuard guard;
  // Input supported away from the borders so group-norm statistics match.
  const int64_t t = 20, f = 11, k = 3;
  Tensor x({2, t, f});
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t i = 4; i < 10; ++i)
      for (int64_t j = 0; j < f; ++j) x.at({c, i, j}) = rng.Normal(0.0, 1.0);
  Tensor xs({2, t, f});
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t i = 0; i + k < t; ++i)
      for (int64_t j = 0; j < f; ++j) xs.at({c, i + k, j}) = x.at({c, i, j});
  Tensor y = enc.Forward(Var(x)).value();
  Tensor ys = enc.Forward(Var(xs)).value();
  for (int64_t c = 0; c < 8; ++c)
    for (int64_t i = 0; i < 12; ++i)
      for (int64_t j = 0; j < f; ++j)
        EXPECT_NEAR(ys.at({c, i + k, j}), y.at({c, i, j}), 1e-10);
}

TEST(AudioEncoderTest, Gradients) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(10 + seed);
    AudioEncoder enc(8, &rng);
    Var x = RandomVar(&rng, {2, 7, 9});
    std::vector<testing::NamedVar> wrt{{"input", x}};
    for (auto& p : enc.Parameters()) wrt.push_back({p.name, p.var});
    auto r = CheckGradients([&] { return Probe(enc.Forward(x)); }, wrt);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  }
}

}  // namespace
}  // namespace csfnet
