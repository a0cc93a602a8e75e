#include "fedsense/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fedsense {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Wrap an angle difference into (-pi, pi].
double wrap_phase(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

double angle(const IqSymbol& s) { return std::atan2(s.q, s.i); }

double power(const IqSymbol& s) { return s.i * s.i + s.q * s.q; }

}  // namespace

std::vector<IqSymbol> generate_symbols(Modulation mod, const BitSeq& bits) {
  std::vector<IqSymbol> out;
  if (mod == Modulation::kBpsk) {
    out.reserve(kBitsPerSample);
    for (std::uint8_t b : bits) {
      out.push_back({b ? -1.0 : 1.0, 0.0});
    }
  } else {
    out.reserve(kBitsPerSample / 2);
    for (int k = 0; k < kBitsPerSample; k += 2) {
      double i = bits[k] ? -kInvSqrt2 : kInvSqrt2;
      double q = bits[k + 1] ? -kInvSqrt2 : kInvSqrt2;
      out.push_back({i, q});
    }
  }
  return out;
}

std::vector<IqSymbol> expand_to_samples(std::span<const IqSymbol> symbols, Modulation mod) {
  if (mod == Modulation::kBpsk) {
    if (symbols.size() != kBitsPerSample) {
      throw std::invalid_argument("BPSK transmissions carry 16 symbols");
    }
    return {symbols.begin(), symbols.end()};
  }
  if (symbols.size() != kBitsPerSample / 2) {
    throw std::invalid_argument("QPSK transmissions carry 8 symbols");
  }
  std::vector<IqSymbol> samples;
  samples.reserve(kBitsPerSample);
  for (const IqSymbol& s : symbols) {
    samples.push_back(s);
    samples.push_back(s);
  }
  return samples;
}

ChannelRealization realize_channel(Vec2 sensor_position, const ChannelParams& channel,
                                   Rng& rng) {
  double d = distance(sensor_position, channel.transmitter_position);
  if (d == 0.0) {
    throw std::invalid_argument("sensor coincides with transmitter: path loss undefined");
  }
  ChannelRealization real;
  real.gain = std::pow(channel.reference_distance / d, channel.path_loss_exponent / 2.0);
  real.phase = rng.uniform(-channel.phase_offset_range, channel.phase_offset_range);
  real.phase_drift = rng.uniform(-channel.phase_drift_range, channel.phase_drift_range);
  double snr_db = channel.reference_snr_db -
                  10.0 * channel.path_loss_exponent *
                      std::log10(d / channel.reference_distance);
  double snr = std::pow(10.0, snr_db / 10.0);
  // Per-symbol signal power after the gain is gain^2 (unit-power constellations),
  // so the total complex noise variance is gain^2 / snr, split evenly per axis.
  double noise_var = real.gain * real.gain / snr;
  real.noise_std = std::sqrt(noise_var / 2.0);
  return real;
}

std::vector<IqSymbol> apply_channel(std::span<const IqSymbol> symbols,
                                    const ChannelRealization& real, Rng& rng) {
  std::vector<IqSymbol> out;
  out.reserve(symbols.size());
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    double rotation = real.phase + real.phase_drift * static_cast<double>(k);
    double c = std::cos(rotation);
    double s = std::sin(rotation);
    const IqSymbol& sym = symbols[k];
    double i = real.gain * (sym.i * c - sym.q * s);
    double q = real.gain * (sym.i * s + sym.q * c);
    if (real.noise_std > 0.0) {
      i += rng.gaussian(0.0, real.noise_std);
      q += rng.gaussian(0.0, real.noise_std);
    }
    out.push_back({i, q});
  }
  return out;
}

std::vector<IqSymbol> apply_channel(std::span<const IqSymbol> symbols,
                                    Vec2 sensor_position, const ChannelParams& channel,
                                    Rng& rng) {
  ChannelRealization real = realize_channel(sensor_position, channel, rng);
  return apply_channel(symbols, real, rng);
}

std::array<double, kFeatureCount> extract_features(std::span<const IqSymbol> samples,
                                                   Modulation mod) {
  if (samples.size() != kBitsPerSample) {
    throw std::invalid_argument(mod == Modulation::kBpsk
                                    ? "BPSK feature extraction expects 16 samples"
                                    : "QPSK feature extraction expects 16 samples "
                                      "(8 symbols sampled twice)");
  }
  std::array<double, kFeatureCount> out{};
  double prev_angle = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    double a = angle(samples[k]);
    out[2 * k] = wrap_phase(k == 0 ? a : a - prev_angle);
    out[2 * k + 1] = power(samples[k]);
    prev_angle = a;
  }
  return out;
}

std::vector<FeatureSample> generate_sensor_dataset(Vec2 sensor_position,
                                                   const ChannelParams& channel,
                                                   int n_samples, double target_fraction,
                                                   Rng& rng) {
  if (n_samples <= 0) {
    throw std::invalid_argument("n_samples must be positive");
  }
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw std::invalid_argument("target_fraction must be in (0, 1)");
  }

  ChannelRealization real = realize_channel(sensor_position, channel, rng);

  int n_target = static_cast<int>(std::lround(n_samples * target_fraction));
  std::vector<int> labels(static_cast<std::size_t>(n_samples), 0);
  std::fill_n(labels.begin(), n_target, 1);
  rng.shuffle(labels);

  std::vector<FeatureSample> dataset;
  dataset.reserve(labels.size());
  for (int label : labels) {
    Modulation mod = label ? Modulation::kQpsk : Modulation::kBpsk;
    BitSeq bits;
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    std::vector<IqSymbol> tx = expand_to_samples(generate_symbols(mod, bits), mod);
    std::vector<IqSymbol> rx = apply_channel(tx, real, rng);
    dataset.push_back({extract_features(rx, mod), label});
  }
  return dataset;
}

void write_dataset_csv(const std::filesystem::path& path,
                       std::span<const FeatureSample> samples) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  for (int j = 0; j < kFeatureCount; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "feat_%02d,", j);
    out << buf;
  }
  out << "label\n";
  out.precision(17);
  for (const FeatureSample& s : samples) {
    for (double f : s.features) out << f << ',';
    out << s.label << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

std::vector<FeatureSample> read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty dataset file " + path.string());
  }
  std::vector<FeatureSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FeatureSample s;
    std::istringstream row(line);
    std::string cell;
    for (int j = 0; j < kFeatureCount; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw std::runtime_error("short row in " + path.string());
      }
      s.features[static_cast<std::size_t>(j)] = std::stod(cell);
    }
    if (!std::getline(row, cell, ',')) {
      throw std::runtime_error("missing label in " + path.string());
    }
    s.label = std::stoi(cell);
    samples.push_back(s);
  }
  return samples;
}

}  // namespace fedsense
