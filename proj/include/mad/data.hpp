#pragma once

#include "mad/core.hpp"

#include <cstdint>
#include <filesystem>

namespace mad {

/// i.i.d. standard-normal values, balanced round-robin labels (series i has class i mod
/// classes) and uniform weights. n must be divisible by classes.
TimeSeriesDataset gen_gaussian(int n, int length, int dim, int classes, std::uint64_t seed);

/// Class prototype: a Gaussian bump centred at T(c+1)/(classes+1) with width T/10, feature f
/// scaled by (1 + 0.1 f).
Series class_prototype(int class_id, int classes, int length, int dim);

/// Rotates rows forward: out[t] = x[(t - shift) mod T].
Series circular_shift(const Series& x, int shift);

struct ShiftedPair {
  TimeSeriesDataset source;
  /// Labelled for evaluation only; trainers must not read target labels.
  TimeSeriesDataset target;
};

/// Source: prototypes plus Gaussian noise. Target: prototypes circularly shifted by the
/// per-class offset plus noise. Labels are round-robin in both domains.
ShiftedPair gen_shifted_pair(int n, int length, int dim, int classes, const std::vector<int>& shifts,
                             double noise_sigma, std::uint64_t seed);

/// Long-form CSV: header `series_id,label,t,f0,...,f{q-1}` (label optional). Values are
/// written with 17 significant digits so load(save(d)) reproduces d bitwise.
void save_dataset(const TimeSeriesDataset& dataset, const std::filesystem::path& path);
/// Weights sidecar: header `series_id,weight`.
void save_weights(const TimeSeriesDataset& dataset, const std::filesystem::path& path);

/// Reads the long-form CSV. Weights come from the optional sidecar, else uniform.
TimeSeriesDataset load_dataset(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& weights_path = std::nullopt);

}  // namespace mad
