#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedsense/rng.hpp"
#include "fedsense/vec2.hpp"

namespace fedsense {

inline constexpr int kFeatureCount = 32;
inline constexpr int kBitsPerSample = 16;

struct IqSymbol {
  double i = 0.0;
  double q = 0.0;
};

enum class Modulation {
  kBpsk,  // "other" class, label 0
  kQpsk,  // target class, label 1
};

/// Location-dependent channel: free-space style path loss, AWGN, a fixed
/// per-sensor phase rotation, and a fixed per-sensor carrier frequency
/// offset (a constant extra rotation per sample interval). SNR at
/// reference_distance is reference_snr_db and falls off with
/// 10*exponent*log10(d/d_ref).
struct ChannelParams {
  Vec2 transmitter_position{0.0, 0.0};
  double path_loss_exponent = 2.0;
  double reference_snr_db = 25.0;
  double reference_distance = 100.0;
  double phase_offset_range = 3.14159265358979323846;  // radians
  double phase_drift_range = 1.0;                      // radians per sample interval

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct FeatureSample {
  std::array<double, kFeatureCount> features{};
  int label = 0;  // 1 = QPSK (target), 0 = BPSK
};

using BitSeq = std::array<std::uint8_t, kBitsPerSample>;

/// One realization of the channel at a sensor location: amplitude gain,
/// a phase rotation plus per-sample drift held constant for the sensor,
/// and per-axis noise std.
struct ChannelRealization {
  double gain = 1.0;
  double phase = 0.0;
  double phase_drift = 0.0;  // extra rotation applied per sample index
  double noise_std = 0.0;
};

/// Map 16 bits to constellation symbols with unit average power.
/// BPSK: one bit per symbol, {(+1,0), (-1,0)}. QPSK: two bits per symbol,
/// Gray-mapped, bit pair (b0,b1) -> ((1-2*b0)/sqrt2, (1-2*b1)/sqrt2).
std::vector<IqSymbol> generate_symbols(Modulation mod, const BitSeq& bits);

/// The receiver samples once per bit interval, so a QPSK symbol (2 bits)
/// appears in two consecutive samples. BPSK passes through; QPSK symbols
/// are each repeated once, giving 16 samples either way.
std::vector<IqSymbol> expand_to_samples(std::span<const IqSymbol> symbols, Modulation mod);

/// Compute the link budget at sensor_position and draw the sensor's fixed
/// phase offset and frequency offset from rng. Throws std::invalid_argument
/// when the sensor sits on the transmitter (path loss undefined).
ChannelRealization realize_channel(Vec2 sensor_position, const ChannelParams& channel,
                                   Rng& rng);

/// Scale, rotate (sample k by phase + k*phase_drift) and add complex
/// Gaussian noise drawn independently per sample.
std::vector<IqSymbol> apply_channel(std::span<const IqSymbol> symbols,
                                    const ChannelRealization& real, Rng& rng);

/// Convenience form matching one transmission capture: draws the sensor
/// offsets once, then applies the channel.
std::vector<IqSymbol> apply_channel(std::span<const IqSymbol> symbols,
                                    Vec2 sensor_position, const ChannelParams& channel,
                                    Rng& rng);

/// Per-sample (phase shift, power) pairs over the 16 bit-interval samples,
/// 32 values total, interleaved. For QPSK the two samples per symbol give
/// two (phase shift, power) sets per 2 bits. Phase shifts are relative to
/// the previous sample (the first uses its absolute angle) and wrapped to
/// (-pi, pi]. Throws std::invalid_argument unless exactly 16 samples are
/// passed.
std::array<double, kFeatureCount> extract_features(std::span<const IqSymbol> samples,
                                                   Modulation mod);

/// n_samples labeled feature vectors for one sensor. Exactly
/// round(n_samples*target_fraction) samples are QPSK; label order is
/// shuffled; bits are uniform; the phase offset is drawn once and shared by
/// all samples of the sensor. Deterministic given the rng seed.
std::vector<FeatureSample> generate_sensor_dataset(Vec2 sensor_position,
                                                   const ChannelParams& channel,
                                                   int n_samples, double target_fraction,
                                                   Rng& rng);

// CSV form: header feat_00..feat_31,label then one row per sample.
void write_dataset_csv(const std::filesystem::path& path,
                       std::span<const FeatureSample> samples);
std::vector<FeatureSample> read_dataset_csv(const std::filesystem::path& path);

}  // namespace fedsense
