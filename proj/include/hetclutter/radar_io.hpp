#pragma once

// Pulse-by-range IQ recordings: the IQCUBE01 container, overlapped temporal
// windowing into N-sample snapshots, and CUT/secondary assembly.
//
// IQCUBE01 layout (all little-endian):
//   8 bytes   magic "IQCUBE01"
//   u64       P (pulses)
//   u64       B (range bins)
//   u32       metadata length L
//   L bytes   UTF-8 JSON object of string values
//   P·B × (f32 I, f32 Q), pulse-major

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hetclutter/linalg.hpp"

namespace hetclutter {

struct IqCube {
  std::uint64_t pulses = 0;
  std::uint64_t range_bins = 0;
  std::vector<std::complex<float>> samples;  // pulse-major
  std::map<std::string, std::string> metadata;

  IqCube() = default;
  IqCube(std::uint64_t p, std::uint64_t b);

  std::complex<float>& at(std::uint64_t pulse, std::uint64_t bin) { return samples[pulse * range_bins + bin]; }
  const std::complex<float>& at(std::uint64_t pulse, std::uint64_t bin) const {
    return samples[pulse * range_bins + bin];
  }
};

inline constexpr char kIqMagic[8] = {'I', 'Q', 'C', 'U', 'B', 'E', '0', '1'};

std::vector<std::uint8_t> encode_iq(const IqCube& cube);
IqCube decode_iq(const std::vector<std::uint8_t>& bytes);

void save_iq(const std::filesystem::path& path, const IqCube& cube);
IqCube load_iq(const std::filesystem::path& path);

struct SnapshotSet {
  int window = 0;  // N
  int stride = 0;
  std::vector<std::uint64_t> starts;
  /// bins[b][w] is window w of range bin b.
  std::vector<std::vector<CVector>> bins;

  std::size_t window_count() const { return starts.size(); }
};

/// floor((P − N) / (N − overlap)) + 1 windows per bin.
std::uint64_t window_count(std::uint64_t pulses, int n, int overlap);

SnapshotSet window_cpi(const IqCube& cube, int n, int overlap);

/// Secondary bins around `cut_bin`: `guard` bins skipped on each side, then
/// the nearest bins split evenly with any odd one on the low side. When one
/// side runs into the edge the other side supplies the rest.
std::vector<std::size_t> secondary_bins(std::size_t range_bins, std::size_t cut_bin, int k, int guard);

struct CutSecondary {
  CVector z;
  CMatrix Z;
};

/// One (z, Z) pair per window index.
std::vector<CutSecondary> build_cut_secondary(const SnapshotSet& snapshots, std::size_t cut_bin, int k, int guard);

}  // namespace hetclutter
