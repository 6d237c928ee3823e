#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tsdeconv {

/// One generated multivariate series before preprocessing. Raw labels are
/// 1 = normal, 2 = abnormal.
struct SynthSample {
  Eigen::MatrixXd values;  // channels x length
  int raw_label = 1;
  bool is_train = true;
};

/// Two-channel quasi-periodic pulse trains, 200 samples (100 train / 100
/// test, 133 normal / 67 abnormal), lengths 39..153. Abnormal samples have
/// irregular rhythm, ectopic inverted beats, and heavier noise.
std::vector<SynthSample> synth_ecg_like(std::uint64_t seed);

/// Six-channel process traces, 1194 samples (896 train / 298 test, 1067
/// normal / 127 abnormal), lengths 104..199. Abnormal samples carry localized
/// spikes, level shifts, or oscillation bursts on one or two channels.
std::vector<SynthSample> synth_wafer_like(std::uint64_t seed);

/// Dispatch by profile name ("ecg" or "wafer").
std::vector<SynthSample> synth_profile(const std::string& profile, std::uint64_t seed);

/// Writes samples in the native dataset layout: sample_%04d.txt files (rows =
/// time steps, columns = channels) plus the labels.tsv manifest.
void write_native_dataset(const std::vector<SynthSample>& samples,
                          const std::filesystem::path& dir);

}  // namespace tsdeconv
