#include "tsdeconv/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "tsdeconv/errors.hpp"
#include "tsdeconv/rng.hpp"

namespace tsdeconv {

namespace {

double bump(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

// Quasi-periodic two-channel pulse train. Normal rhythm is regular; abnormal
// rhythm has strong beat-to-beat jitter, ectopic inverted beats, and noisier
// channels.
Eigen::MatrixXd make_heartbeat(Rng& rng, int length, bool abnormal) {
  Eigen::MatrixXd x(2, length);
  const double period = rng.uniform(22.0, 28.0);
  const double interval_jitter = abnormal ? 4.5 : 0.5;
  const double noise = abnormal ? 0.22 : 0.10;
  const double ectopic_prob = abnormal ? 0.28 : 0.0;

  std::vector<double> centers;
  std::vector<double> amps;
  std::vector<bool> ectopic;
  double pos = rng.uniform(0.0, period);
  while (pos < length + period) {
    centers.push_back(pos + rng.normal(0.0, interval_jitter));
    amps.push_back(rng.normal(1.0, abnormal ? 0.25 : 0.07));
    ectopic.push_back(rng.uniform() < ectopic_prob);
    pos += period;
  }

  const double wander_freq = rng.uniform(0.5, 1.5);
  const double wander_phase = rng.uniform(0.0, 6.283185307179586);
  for (int t = 0; t < length; ++t) {
    double ch0 = 0.0, ch1 = 0.0;
    for (std::size_t b = 0; b < centers.size(); ++b) {
      const double c = centers[b];
      if (std::fabs(t - c) > 16.0) continue;
      if (ectopic[b]) {
        // Wide inverted complex, lead polarity flipped.
        ch0 += -0.9 * amps[b] * bump(t, c, 3.2);
        ch1 += 0.7 * amps[b] * bump(t, c + 1.5, 3.8);
      } else {
        const double spike = amps[b] * bump(t, c, 1.3);
        const double twave = 0.42 * amps[b] * bump(t, c + 5.0, 2.8);
        ch0 += spike + twave;
        ch1 += 0.6 * amps[b] * bump(t, c + 1.0, 1.6) + 0.5 * twave;
      }
    }
    const double wander =
        0.15 * std::sin(6.283185307179586 * wander_freq * t / length + wander_phase);
    x(0, t) = ch0 + wander + rng.normal(0.0, noise);
    x(1, t) = ch1 + 0.6 * wander + rng.normal(0.0, noise);
  }
  return x;
}

// Smooth interpolation through per-channel key points (fractions of the
// length), mimicking staged process traces.
double profile_value(const std::vector<std::pair<double, double>>& keys, double frac) {
  if (frac <= keys.front().first) return keys.front().second;
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (frac <= keys[k].first) {
      const double span = keys[k].first - keys[k - 1].first;
      double u = span > 0.0 ? (frac - keys[k - 1].first) / span : 1.0;
      u = u * u * (3.0 - 2.0 * u);  // smoothstep
      return keys[k - 1].second + u * (keys[k].second - keys[k - 1].second);
    }
  }
  return keys.back().second;
}

Eigen::MatrixXd make_process_trace(Rng& rng, int length, bool abnormal) {
  constexpr int kChannels = 6;
  // Channel recipes: (time fraction, level) key points.
  std::vector<std::vector<std::pair<double, double>>> recipes = {
      {{0.0, 0.2}, {0.12, 1.0}, {0.45, 1.0}, {0.55, 1.6}, {0.85, 1.6}, {0.95, 0.2}},
      {{0.0, 0.0}, {0.10, 0.0}, {0.22, 2.0}, {0.60, 2.0}, {0.70, 0.8}, {1.0, 0.8}},
      {{0.0, 1.5}, {0.30, 1.5}, {0.40, 0.4}, {0.75, 0.4}, {0.85, 1.2}, {1.0, 1.2}},
      {{0.0, 0.5}, {0.25, 1.8}, {0.50, 1.1}, {0.80, 1.1}, {0.92, 0.3}, {1.0, 0.3}},
      {{0.0, 0.8}, {0.18, 0.8}, {0.35, 1.9}, {0.65, 1.9}, {0.78, 1.3}, {1.0, 0.4}},
      {{0.0, 0.1}, {0.15, 0.9}, {0.42, 0.9}, {0.58, 1.7}, {0.88, 1.7}, {1.0, 0.1}},
  };

  if (abnormal) {
    // Faulty runs deviate systematically: one of three recipe fault modes,
    // jittered per sample, on top of the usual run-to-run variation.
    const int mode = static_cast<int>(rng.below(3));
    if (mode == 0) {
      const double delay = rng.uniform(0.05, 0.09);
      recipes[1][2].first += delay;   // late ramp on channel 1
      recipes[1][2].second = rng.uniform(1.5, 1.7);
      recipes[1][3].second = recipes[1][2].second;
      recipes[4][2].second += rng.uniform(-0.45, -0.3);  // starved supply line
    } else if (mode == 1) {
      const double lift = rng.uniform(0.35, 0.55);
      recipes[2][3].second += lift;   // channel 2 dip fails to reach depth
      recipes[2][2].second += lift * 0.8;
      recipes[5][3].first -= rng.uniform(0.05, 0.08);  // early step on channel 5
    } else {
      recipes[0][3].second = rng.uniform(1.95, 2.2);   // channel 0 overshoot
      recipes[0][4].second = rng.uniform(1.25, 1.45);  // then sag
      recipes[3][1].second -= rng.uniform(0.35, 0.55); // weak first peak
    }
  }

  Eigen::MatrixXd x(kChannels, length);
  const double stretch = rng.normal(1.0, 0.015);
  const double noise = abnormal ? 0.08 : 0.05;
  for (int c = 0; c < kChannels; ++c) {
    const double gain = rng.normal(1.0, 0.04);
    const double offset = rng.normal(0.0, 0.03);
    for (int t = 0; t < length; ++t) {
      const double frac = std::min(1.0, stretch * t / (length - 1.0));
      x(c, t) = gain * profile_value(recipes[static_cast<std::size_t>(c)], frac) + offset +
                rng.normal(0.0, noise);
    }
  }

  if (abnormal) {
    // Localized events ride on top of the recipe fault.
    const int n_events = 1 + static_cast<int>(rng.below(2));
    for (int k = 0; k < n_events; ++k) {
      const int c = static_cast<int>(rng.below(kChannels));
      const int kind = static_cast<int>(rng.below(3));
      const int t0 = 10 + static_cast<int>(rng.below(static_cast<std::uint64_t>(length - 30)));
      if (kind == 0) {
        const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(1.0, 1.8);
        const double width = rng.uniform(2.0, 6.0);
        for (int t = 0; t < length; ++t) x(c, t) += amp * bump(t, t0, width);
      } else if (kind == 1) {
        const double delta = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 0.9);
        const int span = 15 + static_cast<int>(rng.below(static_cast<std::uint64_t>(length / 4)));
        for (int t = t0; t < std::min(length, t0 + span); ++t) x(c, t) += delta;
      } else {
        const double p = rng.uniform(3.0, 7.0);
        const double amp = rng.uniform(0.5, 0.8);
        const int span = 15 + static_cast<int>(rng.below(static_cast<std::uint64_t>(length / 4)));
        for (int t = t0; t < std::min(length, t0 + span); ++t) {
          x(c, t) += amp * std::sin(6.283185307179586 * (t - t0) / p);
        }
      }
    }
  }
  return x;
}

struct Slot {
  bool is_train;
  bool abnormal;
};

std::vector<SynthSample> generate(std::uint64_t seed, const std::vector<Slot>& slots, int min_len,
                                  int max_len, bool ecg) {
  std::vector<SynthSample> samples;
  samples.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Rng rng(mix_seed(seed, i + (ecg ? 0x0ECC0000ULL : 0x0AFE0000ULL)));
    // The first slot carries the maximum length so padding is deterministic.
    const int length =
        i == 0 ? max_len
               : min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    SynthSample s;
    s.is_train = slots[i].is_train;
    s.raw_label = slots[i].abnormal ? 2 : 1;
    s.values = ecg ? make_heartbeat(rng, length, slots[i].abnormal)
                   : make_process_trace(rng, length, slots[i].abnormal);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Slot> make_slots(int train_normal, int train_abnormal, int test_normal,
                             int test_abnormal, std::uint64_t seed) {
  std::vector<Slot> slots;
  for (int i = 0; i < train_normal; ++i) slots.push_back({true, false});
  for (int i = 0; i < train_abnormal; ++i) slots.push_back({true, true});
  for (int i = 0; i < test_normal; ++i) slots.push_back({false, false});
  for (int i = 0; i < test_abnormal; ++i) slots.push_back({false, true});
  // Interleave deterministically, keeping slot 0 a training sample.
  Rng rng(mix_seed(seed, 0x510f5));
  std::vector<Slot> train, test;
  for (const Slot& s : slots) (s.is_train ? train : test).push_back(s);
  rng.shuffle(train);
  rng.shuffle(test);
  std::vector<Slot> out = train;
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

}  // namespace

std::vector<SynthSample> synth_ecg_like(std::uint64_t seed) {
  return generate(seed, make_slots(67, 33, 66, 34, seed), 39, 153, true);
}

std::vector<SynthSample> synth_wafer_like(std::uint64_t seed) {
  return generate(seed, make_slots(801, 95, 266, 32, seed), 104, 199, false);
}

std::vector<SynthSample> synth_profile(const std::string& profile, std::uint64_t seed) {
  if (profile == "ecg") return synth_ecg_like(seed);
  if (profile == "wafer") return synth_wafer_like(seed);
  throw std::invalid_argument("unknown profile '" + profile + "' (expected ecg or wafer)");
}

void write_native_dataset(const std::vector<SynthSample>& samples,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "labels.tsv");
  if (!manifest) throw FormatError("cannot write manifest in " + dir.string());
  char name[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "sample_%04zu.txt", i);
    std::ofstream out(dir / name);
    if (!out) throw FormatError("cannot write sample file in " + dir.string());
    const Eigen::MatrixXd& v = samples[i].values;
    for (Eigen::Index t = 0; t < v.cols(); ++t) {
      for (Eigen::Index c = 0; c < v.rows(); ++c) {
        if (c) out << ' ';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.10g", v(c, t));
        out << buf;
      }
      out << '\n';
    }
    manifest << name << '\t' << samples[i].raw_label << '\t'
             << (samples[i].is_train ? "train" : "test") << '\n';
  }
  if (!manifest) throw FormatError("manifest write failed in " + dir.string());
}

}  // namespace tsdeconv
