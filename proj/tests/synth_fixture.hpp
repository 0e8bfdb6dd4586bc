#pragma once

#include <filesystem>

#include "dgd/io.hpp"
#include "dgd/synth.hpp"

namespace dgd::test {

/// A small two-blob dataset plus a checkpoint holding the generator scene at
/// t = 0 and an untrained (identity) deformation network.
struct SynthFixture {
  SynthTruth truth;
  std::filesystem::path data;
  std::filesystem::path ckpt;

  SynthFixture(const std::filesystem::path& dir, std::size_t per_cluster = 64, int size = 64) {
    SynthConfig cfg;
    cfg.gaussians_per_cluster = per_cluster;
    cfg.width = cfg.height = size;
    cfg.focal = 140.0 * size / 128.0;
    cfg.train_frames = 6;
    cfg.test_frames = 2;
    cfg.seed = 3;
    truth = make_two_blob(cfg);
    data = dir / "data";
    write_synth_dataset(data, truth);
    DeformationConfig dc;
    dc.depth = 2;
    dc.width = 16;
    ckpt = dir / "model.dgdc";
    save_checkpoint(ckpt, truth.scene.cast<float>(), DeformationField<float>(dc, 1), 0);
  }
};

}  // namespace dgd::test
