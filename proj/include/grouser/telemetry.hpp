#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "grouser/error.hpp"
#include "grouser/sensor_frame.hpp"
#include "grouser/testbed.hpp"

namespace grouser {

// Wire frame, little-endian, 26 bytes:
//   0  sync      A5 5A
//   2  version   u8 (1)
//   3  t_us      u64
//  11  motor     i32
//  15  cam       u16 (≤ 4095)
//  17  linear    i32
//  21  current   u16 (mA)
//  23  flags     u8
//  24  crc16     u16, CRC-16/CCITT-FALSE over bytes 0..23
inline constexpr std::size_t kWireFrameSize = 26;
inline constexpr std::uint8_t kSyncByte0 = 0xA5;
inline constexpr std::uint8_t kSyncByte1 = 0x5A;
inline constexpr std::uint8_t kWireVersion = 1;

using WireFrame = std::array<std::uint8_t, kWireFrameSize>;

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) noexcept;

/// Throws Encode when a field does not fit the wire layout.
WireFrame encode_frame(const SensorFrame& frame);

/// Decodes exactly one frame. Checks in order: length and sync (Sync),
/// checksum (Corrupt), version (Version), cam range (Range).
SensorFrame decode_frame(std::span<const std::uint8_t> bytes);

struct DecodeEvent {
  std::optional<SensorFrame> frame;
  std::optional<ErrorCode> error;
  std::size_t offset = 0;  // stream offset of the sync that produced this event
};

/// Incremental stream parser. Bytes before a sync marker are skipped; at a
/// sync it emits either a frame or an error, and after an error rescans from
/// the byte following that sync.
class FrameStreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next event, or nullopt if more bytes are needed.
  std::optional<DecodeEvent> next();
  /// Flushes a trailing partial frame as a Sync error (truncated).
  std::optional<DecodeEvent> finish();
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::deque<std::uint8_t> buffer_;
  std::size_t consumed_ = 0;
};

/// Decodes a complete byte sequence into events.
std::vector<DecodeEvent> decode_stream(std::span<const std::uint8_t> bytes);

// Trial log: JSON lines. Line 1 {"record":"header","schema":1,"config":{...}},
// then one {"record":"frame",...} per frame, then {"record":"summary",...}.
inline constexpr int kTrialLogSchema = 1;

void write_trial_log(const TrialRecord& record, std::ostream& out);
void write_trial_log(const TrialRecord& record, const std::filesystem::path& path);
TrialRecord read_trial_log(std::istream& in);
TrialRecord read_trial_log(const std::filesystem::path& path);

}  // namespace grouser
