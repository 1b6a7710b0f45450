#include "hetclutter/radar_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "hetclutter/error.hpp"

namespace hetclutter {

namespace {

constexpr std::size_t kHeaderBytes = 8 + 8 + 8 + 4;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

}  // namespace

IqCube::IqCube(std::uint64_t p, std::uint64_t b) : pulses(p), range_bins(b), samples(p * b) {}

std::vector<std::uint8_t> encode_iq(const IqCube& cube) {
  if (cube.samples.size() != cube.pulses * cube.range_bins) {
    throw Error(ErrorCode::DimensionMismatch, "sample count does not equal P*B");
  }
  const std::string meta = nlohmann::json(cube.metadata).dump();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + meta.size() + 8 * cube.samples.size());
  out.insert(out.end(), std::begin(kIqMagic), std::end(kIqMagic));
  put_le<std::uint64_t>(out, cube.pulses);
  put_le<std::uint64_t>(out, cube.range_bins);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  for (const auto& s : cube.samples) {
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(s.real()));
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(s.imag()));
  }
  return out;
}

IqCube decode_iq(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kIqMagic, 8) != 0) {
    throw Error(ErrorCode::MalformedHeader, "missing IQCUBE01 magic");
  }
  const std::uint8_t* p = bytes.data();
  IqCube cube;
  cube.pulses = get_le<std::uint64_t>(p + 8);
  cube.range_bins = get_le<std::uint64_t>(p + 16);
  const std::uint32_t meta_len = get_le<std::uint32_t>(p + 24);
  if (cube.pulses < 1 || cube.range_bins < 1) throw Error(ErrorCode::MalformedHeader, "P and B must be >= 1");
  if (bytes.size() - kHeaderBytes < meta_len) throw Error(ErrorCode::TruncatedPayload, "metadata cut short");

  const std::string meta(reinterpret_cast<const char*>(p + kHeaderBytes), meta_len);
  try {
    const auto parsed = nlohmann::json::parse(meta.empty() ? std::string("{}") : meta);
    cube.metadata = parsed.get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("metadata: ") + e.what());
  }

  const std::size_t offset = kHeaderBytes + meta_len;
  const std::uint64_t available = (bytes.size() - offset) / 8;
  if (cube.range_bins > available || cube.pulses > available / cube.range_bins) {
    throw Error(ErrorCode::TruncatedPayload, "header declares more samples than the payload holds");
  }
  const std::uint64_t count = cube.pulses * cube.range_bins;
  if (bytes.size() != offset + 8 * count) {
    throw Error(ErrorCode::MalformedHeader, "trailing bytes after the sample payload");
  }
  cube.samples.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float re = std::bit_cast<float>(get_le<std::uint32_t>(p + offset + 8 * i));
    const float im = std::bit_cast<float>(get_le<std::uint32_t>(p + offset + 8 * i + 4));
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw Error(ErrorCode::NonFiniteSample, "sample " + std::to_string(i));
    }
    cube.samples[i] = {re, im};
  }
  return cube;
}

void save_iq(const std::filesystem::path& path, const IqCube& cube) {
  const auto bytes = encode_iq(cube);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

IqCube load_iq(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_iq(bytes);
}

std::uint64_t window_count(std::uint64_t pulses, int n, int overlap) {
  if (!(overlap >= 0 && overlap < n) || static_cast<std::uint64_t>(n) > pulses) {
    throw Error(ErrorCode::InvalidWindow, "need 0 <= overlap < N <= P");
  }
  const std::uint64_t stride = static_cast<std::uint64_t>(n - overlap);
  return (pulses - n) / stride + 1;
}

SnapshotSet window_cpi(const IqCube& cube, int n, int overlap) {
  const std::uint64_t count = window_count(cube.pulses, n, overlap);
  SnapshotSet set;
  set.window = n;
  set.stride = n - overlap;
  set.starts.resize(count);
  for (std::uint64_t w = 0; w < count; ++w) set.starts[w] = w * set.stride;
  set.bins.assign(cube.range_bins, std::vector<CVector>(count));
  for (std::uint64_t b = 0; b < cube.range_bins; ++b) {
    for (std::uint64_t w = 0; w < count; ++w) {
      CVector x(n);
      for (int i = 0; i < n; ++i) {
        const auto s = cube.at(set.starts[w] + i, b);
        x(i) = cdouble(s.real(), s.imag());
      }
      set.bins[b][w] = std::move(x);
    }
  }
  return set;
}

std::vector<std::size_t> secondary_bins(std::size_t range_bins, std::size_t cut_bin, int k, int guard) {
  if (k < 1 || guard < 0) throw Error(ErrorCode::InvalidArgument, "need K >= 1 and guard >= 0");
  if (cut_bin >= range_bins) throw Error(ErrorCode::InsufficientBins, "cut bin out of range");
  if (static_cast<std::size_t>(k) + 2 * static_cast<std::size_t>(guard) + 1 > range_bins) {
    throw Error(ErrorCode::InsufficientBins, "K + 2*guard + 1 exceeds the number of range bins");
  }
  const long cut = static_cast<long>(cut_bin);
  const long g = guard;
  // Candidates on each side, nearest first.
  std::vector<std::size_t> low, high;
  for (long b = cut - g - 1; b >= 0; --b) low.push_back(static_cast<std::size_t>(b));
  for (long b = cut + g + 1; b < static_cast<long>(range_bins); ++b) high.push_back(static_cast<std::size_t>(b));
  if (low.size() + high.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::InsufficientBins, "not enough non-guard bins around the cut");
  }
  std::size_t take_low = (static_cast<std::size_t>(k) + 1) / 2;
  std::size_t take_high = static_cast<std::size_t>(k) - take_low;
  if (take_low > low.size()) {
    take_high += take_low - low.size();
    take_low = low.size();
  }
  if (take_high > high.size()) {
    take_low += take_high - high.size();
    take_high = high.size();
  }
  std::vector<std::size_t> out(low.begin(), low.begin() + take_low);
  std::reverse(out.begin(), out.end());
  out.insert(out.end(), high.begin(), high.begin() + take_high);
  return out;
}

std::vector<CutSecondary> build_cut_secondary(const SnapshotSet& snapshots, std::size_t cut_bin, int k, int guard) {
  const auto bins = secondary_bins(snapshots.bins.size(), cut_bin, k, guard);
  std::vector<CutSecondary> out(snapshots.window_count());
  for (std::size_t w = 0; w < out.size(); ++w) {
    out[w].z = snapshots.bins[cut_bin][w];
    out[w].Z.resize(snapshots.window, k);
    for (int j = 0; j < k; ++j) out[w].Z.col(j) = snapshots.bins[bins[j]][w];
  }
  return out;
}

}  // namespace hetclutter
